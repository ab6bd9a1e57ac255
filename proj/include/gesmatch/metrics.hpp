#pragma once

#include "gesmatch/motion_io.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <span>
#include <vector>

namespace gesmatch::metrics {

struct HistogramBins {
    double width = 0.5; // units per second
    double max = 50.0;  // speeds above land in the last bin

    std::size_t count() const;
};

struct SpeedHistogram {
    std::vector<double> edges; // count + 1 monotone edges
    std::vector<double> mass;  // sums to 1

    bool same_edges(const SpeedHistogram& other) const;
};

/// Normalized histogram of the given speeds.
SpeedHistogram speed_histogram(std::span<const double> speeds, const HistogramBins& bins);

/// Per-frame speeds of one joint, |p_{t+1} - p_t| * fps.
std::vector<double> joint_speeds(const PositionSequence& p, std::size_t joint);

/// sqrt(1 - sum sqrt(h1 * h2)). Throws DataError on mismatched edges.
double hellinger(const SpeedHistogram& h1, const SpeedHistogram& h2);

/// Per-joint speed histograms pooled over all sequences of each set, compared
/// joint by joint and averaged over joints.
double hellinger_average(std::span<const PositionSequence> reference, std::span<const PositionSequence> generated,
                         const HistogramBins& bins);

struct GaussianSummary {
    Eigen::VectorXd mean;
    Eigen::MatrixXd covariance;
};

/// Sample mean and covariance (n - 1 denominator) of the rows. With fewer
/// than dim + 1 rows the covariance gets `ridge` added to its diagonal.
GaussianSummary fit_gaussian(const Eigen::MatrixXd& samples, double ridge = 1e-6);

/// |mu1 - mu2|^2 + Tr(S1 + S2 - 2 (S1 S2)^{1/2}), with the square-root trace
/// taken from the symmetric form S1^{1/2} S2 S1^{1/2}.
double frechet_distance(const GaussianSummary& a, const GaussianSummary& b);

/// Frechet distance between Gaussians fitted to raw pose rows.
double fgd_raw(const Eigen::MatrixXd& real, const Eigen::MatrixXd& generated);

/// First canonical correlation, with `ridge` added to both covariances.
double cca_first(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, double ridge = 1e-6);

/// Mean of cca_first over paired sequences.
double cca_per_sequence(std::span<const Eigen::MatrixXd> xs, std::span<const Eigen::MatrixXd> ys,
                        double ridge = 1e-6);

struct Spread {
    double mean = 0.0;
    double stddev = 0.0;
};

Spread mean_and_spread(std::span<const double> values);

/// Mean norm of the order-k difference over frames and joints.
double mean_derivative_norm(const PositionSequence& p, int order);
double average_jerk(const PositionSequence& p);
double average_acceleration(const PositionSequence& p);

/// Mean Euclidean distance over `pairs` seeded random pairs of distinct rows.
double diversity(const Eigen::MatrixXd& features, std::size_t pairs, std::uint64_t seed);

/// Mean pose (all joints flattened) of one sequence.
Eigen::RowVectorXd mean_pose(const PositionSequence& p);

/// Times of strict local minima of the mean joint speed.
std::vector<double> gesture_beats(const PositionSequence& p);

struct BeatAlign {
    double score = 0.0;
    bool no_gesture_beats = false;
};

/// Mean over audio beats of exp(-min_g (t_a - t_g)^2 / (2 sigma^2)).
BeatAlign beat_align(std::span<const double> audio_beats, std::span<const double> gesture_beats, double sigma = 0.1);

} // namespace gesmatch::metrics
