#pragma once

#include "gesmatch/database.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <vector>

namespace gesmatch {

inline constexpr double kUnreachable = std::numeric_limits<double>::infinity();

struct Occurrence {
    std::size_t clip = 0;
    std::size_t step = 0;

    friend bool operator==(const Occurrence&, const Occurrence&) = default;
};

/// Which database occurrences a step may draw from. Default-constructed masks
/// allow everything.
class OccurrenceMask {
public:
    OccurrenceMask() = default;

    /// Occurrences whose code is disallowed are masked out.
    static OccurrenceMask from_codes(const GestureDatabase& db, const std::vector<bool>& allowed_codes);

    void resize(const GestureDatabase& db, bool value);
    void set(std::size_t clip, std::size_t step, bool allowed);
    bool allowed(std::size_t clip, std::size_t step) const;
    bool empty() const { return allowed_.empty(); }

private:
    std::vector<std::vector<bool>> allowed_;
};

/// Per-code minimum distance and the occurrence attaining it. Codes without
/// an unmasked occurrence keep kUnreachable and no occurrence.
struct Precandidates {
    std::vector<double> distance;
    std::vector<std::optional<Occurrence>> best;
};

/// Euclidean distance between the de-normalized window of `previous` and the
/// window of every code.
std::vector<double> pose_precandidate(std::uint32_t previous, const Codebook& cb);

Precandidates audio_precandidate(std::span<const std::uint32_t> query_window, const GestureDatabase& db,
                                 const OccurrenceMask* mask = nullptr, bool normalized = false);

/// Distance is 1 - cosine similarity.
Precandidates text_precandidate(const Eigen::Ref<const Eigen::VectorXd>& query, const GestureDatabase& db,
                                const OccurrenceMask* mask = nullptr);

/// Ascending rank position / (n - 1); tied values share the lowest position
/// of their group, so unreachable entries rank last. n == 1 gives 0.
std::vector<double> relrank(std::span<const double> values);

/// relrank of negated counts: frequent codes rank first.
std::vector<double> frequency_rank(std::span<const std::size_t> counts);

struct RankedChoice {
    std::uint32_t code = 0;
    double fused = 0.0;
};

/// k-th (1-based) smallest pose_rank + speech_rank + weight * freq_rank among
/// codes whose speech distance is finite; ties go to the lower code.
RankedChoice select_candidate(std::span<const double> pose_rank, std::span<const double> speech_rank,
                              std::span<const double> freq_rank, std::span<const double> speech_distance,
                              double weight, std::size_t k);

struct CandidatePair {
    RankedChoice audio;
    RankedChoice text;
};

CandidatePair select_candidates(std::span<const double> pose_rank, std::span<const double> audio_rank,
                                std::span<const double> text_rank, std::span<const double> freq_rank,
                                std::span<const double> audio_distance, std::span<const double> text_distance,
                                double weight, std::size_t k);

enum class Source { Audio, Text };

const char* source_name(Source s);

struct StepTrace {
    std::vector<double> pose_distance;
    std::vector<double> audio_distance;
    std::vector<double> text_distance;
    std::vector<double> audio_fused;
    std::vector<double> text_fused;
    RankedChoice audio;
    RankedChoice text;
    Occurrence audio_occurrence;
    Occurrence text_occurrence;
    double audio_phase_score = 0.0;
    double text_phase_score = 0.0;
    bool masked = false;
    Source source = Source::Audio;
    std::uint32_t chosen = 0;
};

struct MatchQuery {
    TokenSequence audio;
    EmbeddingSequence text;
    std::size_t steps = 0;
    std::uint32_t initial_code = 0;
    Eigen::MatrixXd initial_phase; // n_phase x 2M
    std::vector<bool> step_mask;     // empty, or per step: apply allowed_codes here
    std::vector<bool> allowed_codes; // empty, or per code
    std::size_t k = 1;
    double freq_weight = 0.05;
    bool normalized_levenshtein = false;
};

struct MatchResult {
    std::vector<std::uint32_t> codes;
    std::vector<Source> sources;
    std::vector<StepTrace> traces;
    MotionSequence decoded;
};

/// Code with the most occurrences; ties go to the lower code.
std::uint32_t most_frequent_code(const GestureDatabase& db);
std::uint32_t random_code(const GestureDatabase& db, std::uint64_t seed);

/// Stored phase window of the first occurrence of `code`, or zeros when the
/// code never occurs.
Eigen::MatrixXd initial_phase_for(const GestureDatabase& db, std::uint32_t code);

/// Per query step: pose, audio and text precandidates, rank fusion into an
/// audio and a text candidate, and phase-continuity selection between them
/// (ties go to audio).
MatchResult search(const GestureDatabase& db, const MatchQuery& query);

MotionSequence decode_codes(const GestureDatabase& db, std::span<const std::uint32_t> codes);

/// Every occurrence of `from` replaced by `to`; motion is decoded again.
MatchResult replace_code(const MatchResult& result, std::uint32_t from, std::uint32_t to, const GestureDatabase& db);

/// Allowed-code mask from a predicate over each code's decoded window and its
/// forward kinematics (root at the origin). Throws DataError when no code
/// passes.
std::vector<bool> constrain_codes(const GestureDatabase& db,
                                  const std::function<bool(std::uint32_t, const PositionSequence&)>& predicate);

/// Mean height (+Y) of `joint` over the decoded window.
double mean_joint_height(const PositionSequence& p, std::size_t joint);

/// Codes whose mean wrist height over the window exceeds `threshold`.
std::vector<bool> wrist_above(const GestureDatabase& db, const std::string& joint, double threshold);

} // namespace gesmatch
