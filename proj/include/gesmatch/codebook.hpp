#pragma once

#include "gesmatch/motion_io.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <vector>

namespace gesmatch {

/// Gesture codebook over non-overlapping d-frame windows of normalized
/// rotation features. Row i of `centers` is code i.
struct Codebook {
    Eigen::MatrixXd centers;            // C_b x (d * frame_width)
    std::size_t window = 8;             // d, frames per code
    FeatureNorm norm;                   // per-frame channel statistics
    std::vector<std::size_t> joints;    // skeleton joints the features cover

    std::size_t size() const { return static_cast<std::size_t>(centers.rows()); }
    std::size_t frame_width() const { return joints.size() * 9; }
    std::size_t code_width() const { return static_cast<std::size_t>(centers.cols()); }

    /// Throws DataError unless dimensions agree and all centers are finite.
    void validate() const;
};

struct CodeSequence {
    std::vector<std::uint32_t> codes;
    std::size_t window = 8;
    double source_fps = 60.0;
};

/// floor(T / d) windows, one per row; trailing frames are dropped.
Eigen::MatrixXd segment_windows(const Eigen::MatrixXd& features, std::size_t window);

struct KMeansReport {
    std::vector<double> error_history; // sum of squared distances after each round
    std::size_t iterations = 0;
    bool converged = false;
    std::size_t reseeded = 0;
};

/// Lloyd's k-means with k-means++ seeding. Empty clusters are re-seeded from
/// the point farthest from its center. Stops when assignments are stable or
/// after `max_rounds`.
Eigen::MatrixXd kmeans(const Eigen::MatrixXd& points, std::size_t clusters, std::uint64_t seed,
                       KMeansReport* report = nullptr, std::size_t max_rounds = 100);

Codebook fit_codebook(const Eigen::MatrixXd& windows, std::size_t codes, std::size_t window, FeatureNorm norm,
                      std::vector<std::size_t> joints, std::uint64_t seed, KMeansReport* report = nullptr);

/// Nearest center per window; ties go to the lowest code index.
CodeSequence encode(const Eigen::MatrixXd& windows, const Codebook& cb, double source_fps = 60.0);

/// Nearest center of one window.
std::uint32_t nearest_code(const Eigen::Ref<const Eigen::RowVectorXd>& window, const Codebook& cb);

/// Concatenated centroid windows in normalized feature space: (T' * d) x frame_width.
Eigen::MatrixXd decode_features(std::span<const std::uint32_t> codes, const Codebook& cb);

/// Centroid window of one code in raw (de-normalized) feature space, flattened.
Eigen::RowVectorXd decoded_window(std::uint32_t code, const Codebook& cb);

/// Decoded motion on the given skeleton. Joints outside the codebook's subset
/// keep the identity rotation and the root stays at the origin. Every block
/// is projected back onto the rotation group.
MotionSequence decode(const CodeSequence& cs, const Codebook& cb, std::shared_ptr<const Skeleton> skeleton);

struct VqLosses {
    double l1 = 0.0;           // mean |G_hat - G|
    double velocity = 0.0;     // mean |G_hat' - G'|
    double acceleration = 0.0; // mean |G_hat'' - G''|
    double reconstruction = 0.0;
    double commitment = 0.0;   // mean squared |g - g_q| per window element
    double total = 0.0;        // reconstruction + (1 + beta) * commitment
};

/// Diagnostic VQ loss terms in normalized feature space. `features` are the
/// normalized frames that produced `cs`.
VqLosses vq_losses(const Eigen::MatrixXd& features, const CodeSequence& cs, const Codebook& cb, double alpha1,
                   double alpha2, double beta);

struct CodeHistogram {
    std::map<std::uint32_t, std::size_t> counts;

    std::size_t total() const;
    /// (code, count) by descending count, ties by ascending code.
    std::vector<std::pair<std::uint32_t, std::size_t>> ranked() const;
};

CodeHistogram code_histogram(std::span<const CodeSequence> clips);

} // namespace gesmatch
