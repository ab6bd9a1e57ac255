#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace gesmatch {

/// Quantized audio tokens: combined group-product ids, one per model step.
struct TokenSequence {
    std::vector<std::uint32_t> tokens;
    double rate = 50.0; // tokens per second
    std::uint32_t vocabulary = 102400;

    void validate() const;
};

/// Text feature rows sampled at `rate` rows per second.
struct EmbeddingSequence {
    Eigen::MatrixXf vectors; // rows x dim
    double rate = 7.5;

    std::size_t rows() const { return static_cast<std::size_t>(vectors.rows()); }
    std::size_t dim() const { return static_cast<std::size_t>(vectors.cols()); }
    void validate() const;
};

/// Unit-cost edit distance; O(|a||b|) time, O(min(|a|,|b|)) space.
std::size_t levenshtein(std::span<const std::uint32_t> a, std::span<const std::uint32_t> b);

/// Levenshtein divided by the longer length; 0 for two empty sequences.
double normalized_levenshtein(std::span<const std::uint32_t> a, std::span<const std::uint32_t> b);

struct Cosine {
    double value = 0.0;
    bool degenerate = false; // one of the vectors was zero
};

Cosine cosine_similarity(std::span<const double> u, std::span<const double> v);
Cosine cosine_similarity(const Eigen::Ref<const Eigen::VectorXd>& u, const Eigen::Ref<const Eigen::VectorXd>& v);

/// Half-open item range [begin, end) of a stream, after clipping.
struct WindowBounds {
    std::size_t begin = 0;
    std::size_t end = 0;
    bool clipped = false;

    std::size_t size() const { return end - begin; }
};

/// Center time of a code step in seconds: (step + 1/2) * d / fps.
double step_center_seconds(std::size_t code_step, std::size_t frames_per_code, double fps);

/// Items of a stream sampled at `rate` covering [c - h, c + h] around the
/// center of `code_step`. The full window has round(2 h rate) items starting
/// at round((c - h) rate); it is clipped at the stream ends.
/// Throws UsageError when the step's center lies past the stream.
WindowBounds window_at(std::size_t stream_length, double rate, std::size_t code_step, double half_width_seconds,
                       std::size_t frames_per_code, double fps);

std::span<const std::uint32_t> token_window(const TokenSequence& seq, std::size_t code_step, double half_width_seconds,
                                            std::size_t frames_per_code, double fps, WindowBounds* bounds = nullptr);

/// Row of the embedding stream at the center of `code_step`, clamped to the
/// last row.
std::size_t embedding_row_at(const EmbeddingSequence& seq, std::size_t code_step, std::size_t frames_per_code,
                             double fps);

} // namespace gesmatch
