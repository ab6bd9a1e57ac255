#include "gesmatch/metrics.hpp"

#include "gesmatch/error.hpp"
#include "gesmatch/random.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>

namespace gesmatch::metrics {

std::size_t HistogramBins::count() const
{
    if (!(width > 0.0) || !(max > 0.0)) {
        throw UsageError("histogram bins need positive width and range");
    }
    return static_cast<std::size_t>(std::ceil(max / width - 1e-9));
}

bool SpeedHistogram::same_edges(const SpeedHistogram& other) const
{
    return edges == other.edges;
}

SpeedHistogram speed_histogram(std::span<const double> speeds, const HistogramBins& bins)
{
    const std::size_t n = bins.count();
    SpeedHistogram h;
    h.edges.resize(n + 1);
    for (std::size_t i = 0; i <= n; ++i) {
        h.edges[i] = static_cast<double>(i) * bins.width;
    }
    h.mass.assign(n, 0.0);
    if (speeds.empty()) {
        return h;
    }
    for (double s : speeds) {
        auto bin = static_cast<std::size_t>(std::max(0.0, std::floor(s / bins.width)));
        h.mass[std::min(bin, n - 1)] += 1.0;
    }
    for (double& m : h.mass) {
        m /= static_cast<double>(speeds.size());
    }
    return h;
}

std::vector<double> joint_speeds(const PositionSequence& p, std::size_t joint)
{
    std::vector<double> out;
    for (std::size_t t = 0; t + 1 < p.frames(); ++t) {
        out.push_back((p.at(t + 1, joint) - p.at(t, joint)).norm() * p.fps);
    }
    return out;
}

double hellinger(const SpeedHistogram& h1, const SpeedHistogram& h2)
{
    if (!h1.same_edges(h2)) {
        throw DataError("histograms have different bin edges");
    }
    // Same value as sqrt(1 - sum sqrt(h1 h2)) for unit-mass histograms, but
    // exactly zero for identical ones.
    double s = 0.0;
    for (std::size_t i = 0; i < h1.mass.size(); ++i) {
        const double d = std::sqrt(h1.mass[i]) - std::sqrt(h2.mass[i]);
        s += d * d;
    }
    return std::sqrt(0.5 * s);
}

double hellinger_average(std::span<const PositionSequence> reference, std::span<const PositionSequence> generated,
                         const HistogramBins& bins)
{
    if (reference.empty() || generated.empty()) {
        throw DataError("hellinger average needs sequences on both sides");
    }
    const std::size_t joints = reference.front().joints;
    for (const auto* set : {&reference, &generated}) {
        for (const auto& p : *set) {
            if (p.joints != joints) {
                throw DataError("sequences have different joint counts");
            }
        }
    }
    auto pooled = [&](std::span<const PositionSequence> set, std::size_t j) {
        std::vector<double> speeds;
        for (const auto& p : set) {
            auto s = joint_speeds(p, j);
            speeds.insert(speeds.end(), s.begin(), s.end());
        }
        return speed_histogram(speeds, bins);
    };
    double total = 0.0;
    for (std::size_t j = 0; j < joints; ++j) {
        total += hellinger(pooled(reference, j), pooled(generated, j));
    }
    return total / static_cast<double>(joints);
}

GaussianSummary fit_gaussian(const Eigen::MatrixXd& samples, double ridge)
{
    if (!samples.allFinite()) {
        throw DataError("non-finite samples");
    }
    if (samples.rows() < 1) {
        throw DataError("no samples");
    }
    GaussianSummary g;
    g.mean = samples.colwise().mean().transpose();
    const Eigen::MatrixXd centered = samples.rowwise() - g.mean.transpose();
    const double denom = static_cast<double>(std::max<Eigen::Index>(samples.rows() - 1, 1));
    g.covariance = (centered.transpose() * centered) / denom;
    g.covariance = 0.5 * (g.covariance + g.covariance.transpose());
    if (samples.rows() < samples.cols() + 1) {
        g.covariance.diagonal().array() += ridge;
    }
    return g;
}

namespace {

Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& m)
{
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (m + m.transpose()));
    const Eigen::VectorXd roots = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return eig.eigenvectors() * roots.asDiagonal() * eig.eigenvectors().transpose();
}

Eigen::MatrixXd inverse_sqrt(const Eigen::MatrixXd& m)
{
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (m + m.transpose()));
    Eigen::VectorXd d = eig.eigenvalues();
    for (Eigen::Index i = 0; i < d.size(); ++i) {
        d[i] = d[i] > 0.0 ? 1.0 / std::sqrt(d[i]) : 0.0;
    }
    return eig.eigenvectors() * d.asDiagonal() * eig.eigenvectors().transpose();
}

} // namespace

double frechet_distance(const GaussianSummary& a, const GaussianSummary& b)
{
    if (a.mean.size() != b.mean.size()) {
        throw DataError("gaussians have different dimensions");
    }
    const Eigen::MatrixXd root_a = psd_sqrt(a.covariance);
    const Eigen::MatrixXd inner = root_a * b.covariance * root_a;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (inner + inner.transpose()), Eigen::EigenvaluesOnly);
    const double cross = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();
    const double value = (a.mean - b.mean).squaredNorm() + a.covariance.trace() + b.covariance.trace() - 2.0 * cross;
    return std::max(0.0, value);
}

double fgd_raw(const Eigen::MatrixXd& real, const Eigen::MatrixXd& generated)
{
    if (real.cols() != generated.cols()) {
        throw DataError("pose dimensions differ: " + std::to_string(real.cols()) + " vs " +
                        std::to_string(generated.cols()));
    }
    return frechet_distance(fit_gaussian(real), fit_gaussian(generated));
}

double cca_first(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, double ridge)
{
    if (x.rows() != y.rows()) {
        throw DataError("CCA needs paired rows");
    }
    if (x.rows() < 2) {
        throw DataError("CCA needs at least 2 rows");
    }
    if (!x.allFinite() || !y.allFinite()) {
        throw DataError("non-finite CCA input");
    }
    const double denom = static_cast<double>(x.rows() - 1);
    const Eigen::MatrixXd xc = x.rowwise() - x.colwise().mean();
    const Eigen::MatrixXd yc = y.rowwise() - y.colwise().mean();
    Eigen::MatrixXd cxx = xc.transpose() * xc / denom;
    Eigen::MatrixXd cyy = yc.transpose() * yc / denom;
    const Eigen::MatrixXd cxy = xc.transpose() * yc / denom;
    cxx.diagonal().array() += ridge;
    cyy.diagonal().array() += ridge;
    const Eigen::MatrixXd whitened = inverse_sqrt(cxx) * cxy * inverse_sqrt(cyy);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(whitened);
    if (svd.singularValues().size() == 0) {
        return 0.0;
    }
    return std::clamp(svd.singularValues()[0], 0.0, 1.0);
}

double cca_per_sequence(std::span<const Eigen::MatrixXd> xs, std::span<const Eigen::MatrixXd> ys, double ridge)
{
    if (xs.size() != ys.size() || xs.empty()) {
        throw DataError("per-sequence CCA needs the same non-zero number of sequences on both sides");
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sum += cca_first(xs[i], ys[i], ridge);
    }
    return sum / static_cast<double>(xs.size());
}

Spread mean_and_spread(std::span<const double> values)
{
    Spread s;
    if (values.empty()) {
        return s;
    }
    for (double v : values) {
        s.mean += v;
    }
    s.mean /= static_cast<double>(values.size());
    double var = 0.0;
    for (double v : values) {
        var += (v - s.mean) * (v - s.mean);
    }
    s.stddev = std::sqrt(var / static_cast<double>(values.size()));
    return s;
}

double mean_derivative_norm(const PositionSequence& p, int order)
{
    if (p.frames() <= 3) {
        throw DataError("jerk and acceleration need more than 3 frames");
    }
    const PositionSequence d = finite_difference(p, order);
    double sum = 0.0;
    for (std::size_t t = 0; t < d.frames(); ++t) {
        for (std::size_t j = 0; j < d.joints; ++j) {
            sum += d.at(t, j).norm();
        }
    }
    return sum / static_cast<double>(d.frames() * d.joints);
}

double average_jerk(const PositionSequence& p)
{
    return mean_derivative_norm(p, 3);
}

double average_acceleration(const PositionSequence& p)
{
    return mean_derivative_norm(p, 2);
}

double diversity(const Eigen::MatrixXd& features, std::size_t pairs, std::uint64_t seed)
{
    const auto n = static_cast<std::uint64_t>(features.rows());
    if (n < 2) {
        throw DataError("diversity needs at least 2 clips");
    }
    if (pairs == 0) {
        throw UsageError("diversity needs at least one pair");
    }
    Rng rng(seed);
    double sum = 0.0;
    for (std::size_t i = 0; i < pairs; ++i) {
        const std::uint64_t a = rng.below(n);
        std::uint64_t b = rng.below(n - 1);
        if (b >= a) {
            ++b;
        }
        sum += (features.row(static_cast<Eigen::Index>(a)) - features.row(static_cast<Eigen::Index>(b))).norm();
    }
    return sum / static_cast<double>(pairs);
}

Eigen::RowVectorXd mean_pose(const PositionSequence& p)
{
    return p.positions.colwise().mean();
}

std::vector<double> gesture_beats(const PositionSequence& p)
{
    std::vector<double> beats;
    if (p.frames() < 4 || p.joints == 0) {
        return beats;
    }
    const PositionSequence v = finite_difference(p, 1);
    std::vector<double> speed(v.frames(), 0.0);
    for (std::size_t t = 0; t < v.frames(); ++t) {
        for (std::size_t j = 0; j < v.joints; ++j) {
            speed[t] += v.at(t, j).norm();
        }
        speed[t] /= static_cast<double>(v.joints);
    }
    // Speed sample t sits halfway between frames t and t + 1.
    for (std::size_t t = 1; t + 1 < speed.size(); ++t) {
        if (speed[t] < speed[t - 1] && speed[t] < speed[t + 1]) {
            beats.push_back((static_cast<double>(t) + 0.5) / p.fps);
        }
    }
    return beats;
}

BeatAlign beat_align(std::span<const double> audio_beats, std::span<const double> gesture_beats, double sigma)
{
    if (audio_beats.empty()) {
        throw DataError("beat align needs at least one audio beat");
    }
    if (!(sigma > 0.0)) {
        throw UsageError("beat align sigma must be positive");
    }
    if (gesture_beats.empty()) {
        return {0.0, true};
    }
    double sum = 0.0;
    for (double a : audio_beats) {
        double nearest = std::numeric_limits<double>::infinity();
        for (double g : gesture_beats) {
            nearest = std::min(nearest, (a - g) * (a - g));
        }
        sum += std::exp(-nearest / (2.0 * sigma * sigma));
    }
    return {sum / static_cast<double>(audio_beats.size()), false};
}

} // namespace gesmatch::metrics
