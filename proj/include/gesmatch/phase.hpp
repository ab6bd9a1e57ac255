#pragma once

#include "gesmatch/motion_io.hpp"

#include <Eigen/Core>

#include <optional>
#include <span>
#include <vector>

namespace gesmatch {

/// Per-frame latent motion curves, one column per phase channel.
struct LatentCurves {
    Eigen::MatrixXd values; // frames x M
    double fps = 60.0;

    std::size_t frames() const { return static_cast<std::size_t>(values.rows()); }
    std::size_t channels() const { return static_cast<std::size_t>(values.cols()); }
};

/// Linear map from rotational velocity features to latent channels: z-score
/// followed by projection on the leading principal components.
struct LatentBasis {
    Eigen::VectorXd mean;
    Eigen::VectorXd scale;
    Eigen::MatrixXd components; // features x M, unit columns, descending variance
    Eigen::VectorXd variances;  // M eigenvalues

    std::size_t channels() const { return static_cast<std::size_t>(components.cols()); }
    std::size_t features() const { return static_cast<std::size_t>(components.rows()); }
};

/// Rotational velocity of the selected joints: frame t holds
/// (x_t - x_{t-1}) * fps; frame 0 repeats frame 1.
Eigen::MatrixXd rotational_velocity(const MotionSequence& m, std::span<const std::size_t> joints);

LatentBasis fit_latent_basis(std::span<const Eigen::MatrixXd> velocities, std::size_t channels);

LatentCurves build_latent_curves(const MotionSequence& m, std::span<const std::size_t> joints,
                                 const LatentBasis& basis);

struct PeriodicParams {
    double amplitude = 0.0;
    double frequency = 0.0; // Hz
    double offset = 0.0;
    double shift = 0.0;     // cycles, in [-1/2, 1/2)
    bool defined = true;    // false when the window carries no AC energy
};

/// Sample times of a window of `samples` points spanning `seconds`, centered
/// on sample floor(samples / 2): t_n = (n - floor(samples / 2)) * seconds / samples.
std::vector<double> centered_times(std::size_t samples, double seconds);

/// Amplitude, frequency, offset and phase shift of one channel window from
/// its power spectrum. The shift is the phase of the dominant bin, taken at
/// sample `reference` (default floor(T / 2)) and expressed so that
/// reconstruct_curve over the matching time grid returns the sinusoid.
PeriodicParams periodic_params(std::span<const double> window, double seconds,
                               std::optional<std::size_t> reference = std::nullopt);

/// A * sin(2 pi (F t - S)) + B at each time.
std::vector<double> reconstruct_curve(const PeriodicParams& p, std::span<const double> times);

struct PhaseManifold {
    Eigen::MatrixXd values;    // frames x 2M, (A sin 2piS, A cos 2piS) per channel
    Eigen::MatrixXd amplitude; // frames x M
    Eigen::MatrixXd frequency; // frames x M

    std::size_t frames() const { return static_cast<std::size_t>(values.rows()); }
};

/// Phase manifold over a centered sliding window of `window_frames` (odd)
/// frames. Windows are clipped at the sequence ends; the phase is always
/// read at the window's own frame.
PhaseManifold phase_manifold(const LatentCurves& curves, std::size_t window_frames);

struct Continuity {
    double score = 0.0;
    bool degenerate = false;
};

/// 1 - cos(u, v) where, with P the last n_phase rows of `previous` and Q the
/// first n_phase rows of `candidate`:
///   u = P[n_stride:] ++ Q[:n_stride]
///   v = P[n_phase - n_stride:] ++ Q[:n_phase - n_stride]
/// Zero vectors give a degenerate score of 0.
Continuity continuity_distance(const Eigen::Ref<const Eigen::MatrixXd>& previous,
                               const Eigen::Ref<const Eigen::MatrixXd>& candidate, std::size_t n_phase,
                               std::size_t n_stride);

} // namespace gesmatch
