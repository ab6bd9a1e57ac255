#include "gesmatch/seqsim.hpp"

#include "gesmatch/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace gesmatch {

void TokenSequence::validate() const
{
    if (!(rate > 0.0)) {
        throw DataError("token rate must be positive");
    }
    for (std::uint32_t t : tokens) {
        if (t >= vocabulary) {
            throw DataError("token id " + std::to_string(t) + " exceeds vocabulary " + std::to_string(vocabulary));
        }
    }
}

void EmbeddingSequence::validate() const
{
    if (!(rate > 0.0)) {
        throw DataError("embedding rate must be positive");
    }
    if (!vectors.allFinite()) {
        throw DataError("embedding stream has non-finite values");
    }
}

std::size_t levenshtein(std::span<const std::uint32_t> a, std::span<const std::uint32_t> b)
{
    if (a.size() < b.size()) {
        std::swap(a, b);
    }
    // b is the shorter sequence; one row of |b| + 1 cells.
    std::vector<std::size_t> row(b.size() + 1);
    std::iota(row.begin(), row.end(), std::size_t{0});
    for (std::size_t i = 0; i < a.size(); ++i) {
        std::size_t diagonal = row[0];
        row[0] = i + 1;
        for (std::size_t j = 0; j < b.size(); ++j) {
            const std::size_t above = row[j + 1];
            const std::size_t substitute = diagonal + (a[i] == b[j] ? 0 : 1);
            row[j + 1] = std::min({above + 1, row[j] + 1, substitute});
            diagonal = above;
        }
    }
    return row[b.size()];
}

double normalized_levenshtein(std::span<const std::uint32_t> a, std::span<const std::uint32_t> b)
{
    const std::size_t longest = std::max(a.size(), b.size());
    return longest == 0 ? 0.0 : static_cast<double>(levenshtein(a, b)) / static_cast<double>(longest);
}

Cosine cosine_similarity(std::span<const double> u, std::span<const double> v)
{
    if (u.size() != v.size()) {
        throw DataError("cosine similarity of vectors with different dimensions");
    }
    double dot = 0.0;
    double uu = 0.0;
    double vv = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        dot += u[i] * v[i];
        uu += u[i] * u[i];
        vv += v[i] * v[i];
    }
    if (uu == 0.0 || vv == 0.0) {
        return {0.0, true};
    }
    return {std::clamp(dot / (std::sqrt(uu) * std::sqrt(vv)), -1.0, 1.0), false};
}

Cosine cosine_similarity(const Eigen::Ref<const Eigen::VectorXd>& u, const Eigen::Ref<const Eigen::VectorXd>& v)
{
    return cosine_similarity(std::span<const double>(u.data(), static_cast<std::size_t>(u.size())),
                             std::span<const double>(v.data(), static_cast<std::size_t>(v.size())));
}

double step_center_seconds(std::size_t code_step, std::size_t frames_per_code, double fps)
{
    return (static_cast<double>(code_step) + 0.5) * static_cast<double>(frames_per_code) / fps;
}

WindowBounds window_at(std::size_t stream_length, double rate, std::size_t code_step, double half_width_seconds,
                       std::size_t frames_per_code, double fps)
{
    const double center = step_center_seconds(code_step, frames_per_code, fps);
    if (center * rate >= static_cast<double>(stream_length)) {
        throw UsageError("code step " + std::to_string(code_step) + " lies past the end of a stream of " +
                         std::to_string(stream_length) + " items");
    }
    const auto length = static_cast<long long>(std::llround(2.0 * half_width_seconds * rate));
    const long long start = std::llround((center - half_width_seconds) * rate);
    const long long stop = start + length;
    WindowBounds w;
    w.begin = static_cast<std::size_t>(std::clamp<long long>(start, 0, static_cast<long long>(stream_length)));
    w.end = static_cast<std::size_t>(std::clamp<long long>(stop, 0, static_cast<long long>(stream_length)));
    w.clipped = start < 0 || stop > static_cast<long long>(stream_length);
    return w;
}

std::span<const std::uint32_t> token_window(const TokenSequence& seq, std::size_t code_step, double half_width_seconds,
                                            std::size_t frames_per_code, double fps, WindowBounds* bounds)
{
    WindowBounds w = window_at(seq.tokens.size(), seq.rate, code_step, half_width_seconds, frames_per_code, fps);
    if (bounds) {
        *bounds = w;
    }
    return std::span<const std::uint32_t>(seq.tokens).subspan(w.begin, w.size());
}

std::size_t embedding_row_at(const EmbeddingSequence& seq, std::size_t code_step, std::size_t frames_per_code,
                             double fps)
{
    if (seq.rows() == 0) {
        throw DataError("empty embedding stream");
    }
    const double center = step_center_seconds(code_step, frames_per_code, fps);
    const auto row = static_cast<std::size_t>(std::floor(center * seq.rate));
    return std::min(row, seq.rows() - 1);
}

} // namespace gesmatch
