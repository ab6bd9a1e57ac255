#pragma once

#include "gesmatch/database.hpp"
#include "gesmatch/motion_io.hpp"
#include "gesmatch/seqsim.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

namespace gesmatch::cli {

inline constexpr const char* kEngineVersion = "0.1.0";

/// Engine settings. The config file is plain text: one `key = value` per
/// line, '#' starts a comment. Unknown keys are errors.
struct EngineConfig {
    double fps = 60.0;
    std::size_t frames_per_code = 8; // d
    std::size_t codebook_size = 512; // C_b
    std::size_t phase_channels = 8;  // M
    std::size_t n_phase = 8;
    std::size_t n_stride = 3;
    double window_seconds = 0.5;
    std::size_t k = 1;
    double freq_weight = 0.05;
    std::uint64_t seed = 1234;
    std::vector<std::string> joints = default_upper_body_joints();
    double hist_bin_width = 0.5;
    double hist_max = 50.0;
    std::size_t phase_window_frames = 61;
    double clip_gap_seconds = 0.5;
    std::uint32_t vocabulary = 102400;
    std::size_t diversity_pairs = 1000;
    double beat_sigma = 0.1;

    /// Throws UsageError for unknown keys or unparsable values.
    void set(const std::string& key, const std::string& value);
    /// Throws UsageError unless every value is in range.
    void validate() const;
    /// Every key in a fixed order, in the config file syntax.
    std::string canonical() const;
    /// FNV-1a of canonical().
    std::uint64_t hash() const;
    DatabaseSettings database_settings() const;
};

EngineConfig parse_config(const std::string& text, const std::string& origin = "config");
EngineConfig load_config(const std::filesystem::path& file);

std::string hex64(std::uint64_t v);

// --- Synthetic corpus ---------------------------------------------------------

struct SynthOptions {
    std::size_t sessions = 4;
    double seconds = 30.0;
    double fps = 60.0;
    std::size_t gesture_kinds = 6;
    std::size_t embedding_dim = 16;
    double token_rate = 50.0;
    double embedding_rate = 7.5;
    std::uint32_t vocabulary = 102400;
    std::uint64_t seed = 7;
};

struct SynthSession {
    std::string id;
    MotionSequence motion;
    TokenSequence audio;
    EmbeddingSequence text;
    std::vector<WordTiming> words;
    std::vector<double> beats;
};

/// Upper-body skeleton carrying the default feature joint names.
std::shared_ptr<const Skeleton> synth_skeleton();

/// Sessions made of alternating gesture segments and pauses. Each gesture
/// kind has its own oscillation pattern, token distribution and embedding
/// direction, so speech and motion are correlated.
std::vector<SynthSession> synth_corpus(const SynthOptions& opts);

/// Writes <id>.bvh, <id>.tok, <id>.emb (with sidecars), <id>.words and
/// <id>.beats into `dir`.
void write_session(const SynthSession& s, const std::filesystem::path& dir);

// --- Entry point --------------------------------------------------------------

/// Runs one command line in-process. Returns 0 on success, 1 on usage errors
/// and 2 on data errors; errors are printed to `err` as
/// "error: <kind>: <message>".
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace gesmatch::cli
