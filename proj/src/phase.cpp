#include "gesmatch/phase.hpp"

#include "gesmatch/error.hpp"
#include "gesmatch/seqsim.hpp"

#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/FFT>

#include <cmath>
#include <complex>
#include <numbers>

namespace gesmatch {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double wrap_half(double cycles)
{
    return cycles - std::floor(cycles + 0.5);
}

} // namespace

Eigen::MatrixXd rotational_velocity(const MotionSequence& m, std::span<const std::size_t> joints)
{
    if (m.frames() < 2) {
        throw DataError("rotational velocity needs at least 2 frames");
    }
    const Eigen::MatrixXd x = rotation_features(m, joints);
    Eigen::MatrixXd v(x.rows(), x.cols());
    v.bottomRows(x.rows() - 1) = (x.bottomRows(x.rows() - 1) - x.topRows(x.rows() - 1)) * m.fps;
    v.row(0) = v.row(1);
    return v;
}

LatentBasis fit_latent_basis(std::span<const Eigen::MatrixXd> velocities, std::size_t channels)
{
    if (velocities.empty()) {
        throw DataError("no velocity data to fit the latent basis");
    }
    const Eigen::Index width = velocities.front().cols();
    Eigen::Index rows = 0;
    for (const auto& v : velocities) {
        if (v.cols() != width) {
            throw DataError("velocity feature widths disagree");
        }
        rows += v.rows();
    }
    if (channels == 0 || static_cast<Eigen::Index>(channels) > width) {
        throw UsageError("phase channel count must be in [1, " + std::to_string(width) + "]");
    }
    Eigen::MatrixXd all(rows, width);
    Eigen::Index at = 0;
    for (const auto& v : velocities) {
        all.middleRows(at, v.rows()) = v;
        at += v.rows();
    }
    FeatureNorm norm = FeatureNorm::fit(all);
    const Eigen::MatrixXd z = norm.apply(all);
    const Eigen::MatrixXd cov = (z.transpose() * z) / static_cast<double>(std::max<Eigen::Index>(rows - 1, 1));

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
    LatentBasis b;
    b.mean = norm.mean;
    b.scale = norm.std;
    b.components.resize(width, static_cast<Eigen::Index>(channels));
    b.variances.resize(static_cast<Eigen::Index>(channels));
    for (std::size_t c = 0; c < channels; ++c) {
        // Eigen sorts eigenvalues ascending.
        const Eigen::Index src = width - 1 - static_cast<Eigen::Index>(c);
        Eigen::VectorXd col = eig.eigenvectors().col(src);
        Eigen::Index pivot = 0;
        col.cwiseAbs().maxCoeff(&pivot);
        if (col[pivot] < 0.0) {
            col = -col;
        }
        b.components.col(static_cast<Eigen::Index>(c)) = col;
        b.variances[static_cast<Eigen::Index>(c)] = eig.eigenvalues()[src];
    }
    return b;
}

LatentCurves build_latent_curves(const MotionSequence& m, std::span<const std::size_t> joints,
                                 const LatentBasis& basis)
{
    const Eigen::MatrixXd v = rotational_velocity(m, joints);
    if (static_cast<std::size_t>(v.cols()) != basis.features()) {
        throw DataError("latent basis expects " + std::to_string(basis.features()) + " velocity features, got " +
                        std::to_string(v.cols()));
    }
    Eigen::MatrixXd z = v.rowwise() - basis.mean.transpose();
    z.array().rowwise() /= basis.scale.transpose().array();
    return LatentCurves{z * basis.components, m.fps};
}

std::vector<double> centered_times(std::size_t samples, double seconds)
{
    std::vector<double> t(samples);
    const double step = seconds / static_cast<double>(samples);
    const auto center = static_cast<double>(samples / 2);
    for (std::size_t n = 0; n < samples; ++n) {
        t[n] = (static_cast<double>(n) - center) * step;
    }
    return t;
}

PeriodicParams periodic_params(std::span<const double> window, double seconds, std::optional<std::size_t> reference)
{
    const std::size_t n = window.size();
    if (n < 2) {
        throw DataError("periodic parameters need at least 2 samples");
    }
    if (!(seconds > 0.0)) {
        throw UsageError("window duration must be positive");
    }
    const std::size_t ref = reference.value_or(n / 2);
    const std::size_t k_max = n / 2;
    const double t = static_cast<double>(n);

    Eigen::FFT<double> fft;
    std::vector<double> in(window.begin(), window.end());
    std::vector<std::complex<double>> c;
    fft.fwd(c, in);

    PeriodicParams p;
    p.offset = c[0].real() / t;

    double power_sum = 0.0;
    double weighted = 0.0;
    for (std::size_t j = 1; j <= k_max; ++j) {
        const double power = 2.0 / t * std::norm(c[j]);
        power_sum += power;
        weighted += (static_cast<double>(j) / seconds) * power;
    }
    p.amplitude = std::sqrt(2.0 / t * power_sum);

    bool constant = true;
    for (double v : window) {
        if (v != window[0]) {
            constant = false;
            break;
        }
    }
    if (constant || p.amplitude <= 1e-12 * (1.0 + std::abs(p.offset))) {
        p.amplitude = 0.0;
        p.frequency = 0.0;
        p.shift = 0.0;
        p.defined = false;
        return p;
    }

    p.frequency = weighted / power_sum;
    auto dominant = static_cast<std::size_t>(std::llround(p.frequency * seconds));
    dominant = std::clamp<std::size_t>(dominant, 1, k_max);
    const double turn = kTwoPi * static_cast<double>(dominant) * static_cast<double>(ref) / t;
    const std::complex<double> at_ref = c[dominant] * std::polar(1.0, turn);
    // A cosine with phase phi equals a sine with phase phi + pi/2.
    p.shift = wrap_half(-std::arg(at_ref) / kTwoPi - 0.25);
    return p;
}

std::vector<double> reconstruct_curve(const PeriodicParams& p, std::span<const double> times)
{
    std::vector<double> out(times.size());
    for (std::size_t i = 0; i < times.size(); ++i) {
        out[i] = p.amplitude * std::sin(kTwoPi * (p.frequency * times[i] - p.shift)) + p.offset;
    }
    return out;
}

PhaseManifold phase_manifold(const LatentCurves& curves, std::size_t window_frames)
{
    const std::size_t frames = curves.frames();
    const std::size_t channels = curves.channels();
    if (window_frames == 0 || window_frames % 2 == 0) {
        throw UsageError("phase window must be an odd number of frames");
    }
    if (window_frames > frames) {
        throw DataError("phase window of " + std::to_string(window_frames) + " frames exceeds sequence of " +
                        std::to_string(frames));
    }
    const std::size_t half = window_frames / 2;
    PhaseManifold pm;
    pm.values.resize(static_cast<Eigen::Index>(frames), static_cast<Eigen::Index>(2 * channels));
    pm.amplitude.resize(static_cast<Eigen::Index>(frames), static_cast<Eigen::Index>(channels));
    pm.frequency.resize(static_cast<Eigen::Index>(frames), static_cast<Eigen::Index>(channels));

    std::vector<double> column;
    for (std::size_t f = 0; f < frames; ++f) {
        const std::size_t lo = f >= half ? f - half : 0;
        const std::size_t hi = std::min(frames, f + half + 1);
        const std::size_t len = hi - lo;
        const double seconds = static_cast<double>(len) / curves.fps;
        for (std::size_t c = 0; c < channels; ++c) {
            PeriodicParams p;
            if (len >= 2) {
                column.resize(len);
                for (std::size_t i = 0; i < len; ++i) {
                    column[i] = curves.values(static_cast<Eigen::Index>(lo + i), static_cast<Eigen::Index>(c));
                }
                p = periodic_params(column, seconds, f - lo);
            } else {
                p.amplitude = 0.0;
                p.defined = false;
            }
            const auto row = static_cast<Eigen::Index>(f);
            const auto col = static_cast<Eigen::Index>(c);
            pm.values(row, 2 * col) = p.amplitude * std::sin(kTwoPi * p.shift);
            pm.values(row, 2 * col + 1) = p.amplitude * std::cos(kTwoPi * p.shift);
            pm.amplitude(row, col) = p.amplitude;
            pm.frequency(row, col) = p.frequency;
        }
    }
    return pm;
}

Continuity continuity_distance(const Eigen::Ref<const Eigen::MatrixXd>& previous,
                               const Eigen::Ref<const Eigen::MatrixXd>& candidate, std::size_t n_phase,
                               std::size_t n_stride)
{
    const auto np = static_cast<Eigen::Index>(n_phase);
    const auto ns = static_cast<Eigen::Index>(n_stride);
    if (n_stride >= n_phase) {
        throw UsageError("phase stride must be smaller than the phase window");
    }
    if (previous.rows() < np || candidate.rows() < np) {
        throw DataError("continuity needs " + std::to_string(n_phase) + " phase frames on each side");
    }
    if (previous.cols() != candidate.cols()) {
        throw DataError("phase manifolds have different widths");
    }
    const Eigen::MatrixXd tail = previous.bottomRows(np);
    const Eigen::MatrixXd head = candidate.topRows(np);
    const Eigen::Index width = tail.cols();

    Eigen::MatrixXd u(np, width);
    u.topRows(np - ns) = tail.bottomRows(np - ns);
    u.bottomRows(ns) = head.topRows(ns);
    Eigen::MatrixXd v(np, width);
    v.topRows(ns) = tail.bottomRows(ns);
    v.bottomRows(np - ns) = head.topRows(np - ns);

    const Eigen::VectorXd uf = u.reshaped<Eigen::RowMajor>();
    const Eigen::VectorXd vf = v.reshaped<Eigen::RowMajor>();
    Cosine c = cosine_similarity(uf, vf);
    if (c.degenerate) {
        return {0.0, true};
    }
    return {1.0 - c.value, false};
}

} // namespace gesmatch
