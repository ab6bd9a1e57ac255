#pragma once

#include "gesmatch/codebook.hpp"
#include "gesmatch/motion_io.hpp"
#include "gesmatch/phase.hpp"
#include "gesmatch/seqsim.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

namespace gesmatch {

inline constexpr const char* kDatabaseFormat = "gesmatch-db/1";

struct WordTiming {
    std::string word;
    double start = 0.0; // seconds
    double end = 0.0;
};

/// Reads "word start end" lines; blank lines and '#' comments are skipped.
std::vector<WordTiming> parse_word_timings(const std::string& text, const std::string& origin = "timings");
std::string format_word_timings(std::span<const WordTiming> words);

struct ClipSpan {
    std::size_t start_frame = 0;
    std::size_t end_frame = 0; // exclusive, start + whole code steps
    std::size_t first_word = 0;
    std::size_t word_count = 0;
};

/// Splits a recording at every inter-word gap strictly longer than
/// `gap_seconds`. Each clip covers its words' frames widened to whole code
/// steps. No words gives one clip over the whole motion.
std::vector<ClipSpan> split_clips(std::size_t frames, double fps, std::size_t frames_per_code,
                                  std::span<const WordTiming> words, double gap_seconds = 0.5);

struct DatabaseSettings {
    double fps = 60.0;
    std::size_t n_phase = 8;
    std::size_t n_stride = 3;
    double window_seconds = 0.5;     // audio search window, full width
    std::size_t phase_window_frames = 61;
    double clip_gap_seconds = 0.5;
    std::uint32_t vocabulary = 102400;
};

struct ClipRecord {
    std::string id;
    std::string source;          // recording the clip was cut from
    std::size_t start_frame = 0; // within the source recording
    std::vector<std::uint32_t> codes;
    std::vector<std::vector<std::uint32_t>> audio_windows; // per step
    Eigen::MatrixXf text;                                  // steps x E
    Eigen::MatrixXf phases;                                // (steps * n_phase) x 2M
    std::vector<WordTiming> words;

    std::size_t steps() const { return codes.size(); }
};

struct GestureDatabase {
    DatabaseSettings settings;
    Codebook codebook;
    LatentBasis basis;
    std::shared_ptr<const Skeleton> skeleton;
    std::vector<std::string> joint_names; // names of codebook.joints
    std::size_t embedding_dim = 0;
    std::vector<ClipRecord> clips;
    std::vector<std::size_t> code_frequency; // per code, over all clips

    std::size_t phase_width() const { return 2 * basis.channels(); }
    Eigen::MatrixXd phase_window(std::size_t clip, std::size_t step) const;
    std::size_t occurrence_count() const;

    /// Throws DataError when per-step arrays, codes or frequencies disagree.
    void validate() const;
};

/// One recording with its aligned speech streams.
struct SessionInput {
    std::string id;
    MotionSequence motion;
    TokenSequence audio;
    EmbeddingSequence text;
    std::vector<WordTiming> words;
};

struct Model {
    double fps = 60.0;
    Codebook codebook;
    LatentBasis basis;
    std::shared_ptr<const Skeleton> skeleton;
    std::vector<std::string> joint_names;
};

GestureDatabase build_database(std::span<const SessionInput> sessions, const Model& model,
                               const DatabaseSettings& settings);

std::vector<std::size_t> count_codes(const std::vector<ClipRecord>& clips, std::size_t codebook_size);

/// Token window of a step; empty when the step lies past the stream.
std::vector<std::uint32_t> step_audio_window(const TokenSequence& audio, std::size_t step, double window_seconds,
                                             std::size_t frames_per_code, double fps);

// --- Persistence --------------------------------------------------------------

// A model directory holds model.json, codebook.f32, latent_basis.f32 and
// skeleton.bvh. A database directory holds the same files plus manifest.json
// and a clips/ directory of raw little-endian arrays per clip.

void save_model(const Model& model, const std::filesystem::path& dir);
Model load_model(const std::filesystem::path& dir);

void save_database(const GestureDatabase& db, const std::filesystem::path& dir);
GestureDatabase load_database(const std::filesystem::path& dir);

} // namespace gesmatch
