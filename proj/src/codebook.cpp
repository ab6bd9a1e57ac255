#include "gesmatch/codebook.hpp"

#include "gesmatch/error.hpp"
#include "gesmatch/random.hpp"

#include <algorithm>
#include <limits>

namespace gesmatch {
namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename A, typename B>
double squared_distance(const A& a, const B& b)
{
    return (a - b).squaredNorm();
}

// Index of the nearest center and its squared distance; ties go low.
template <typename P>
std::pair<std::size_t, double> nearest(const P& p, const RowMatrix& centers)
{
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (Eigen::Index c = 0; c < centers.rows(); ++c) {
        double d = squared_distance(p, centers.row(c));
        if (d < best_d) {
            best_d = d;
            best = static_cast<std::size_t>(c);
        }
    }
    return {best, best_d};
}

RowMatrix kmeans_plus_plus(const RowMatrix& points, std::size_t k, Rng& rng)
{
    const auto n = static_cast<std::size_t>(points.rows());
    RowMatrix centers(static_cast<Eigen::Index>(k), points.cols());
    std::size_t first = static_cast<std::size_t>(rng.below(n));
    centers.row(0) = points.row(static_cast<Eigen::Index>(first));

    std::vector<double> d2(n);
    for (std::size_t i = 0; i < n; ++i) {
        d2[i] = squared_distance(points.row(static_cast<Eigen::Index>(i)), centers.row(0));
    }
    for (std::size_t c = 1; c < k; ++c) {
        double total = 0.0;
        for (double v : d2) {
            total += v;
        }
        std::size_t pick = 0;
        if (total > 0.0) {
            double target = rng.uniform() * total;
            double acc = 0.0;
            pick = n - 1;
            for (std::size_t i = 0; i < n; ++i) {
                acc += d2[i];
                if (d2[i] > 0.0 && acc > target) {
                    pick = i;
                    break;
                }
            }
            while (d2[pick] == 0.0 && pick > 0) {
                --pick;
            }
        } else {
            pick = static_cast<std::size_t>(rng.below(n));
        }
        centers.row(static_cast<Eigen::Index>(c)) = points.row(static_cast<Eigen::Index>(pick));
        for (std::size_t i = 0; i < n; ++i) {
            d2[i] = std::min(d2[i], squared_distance(points.row(static_cast<Eigen::Index>(i)), centers.row(static_cast<Eigen::Index>(c))));
        }
    }
    return centers;
}

double quantization_error(const RowMatrix& points, const RowMatrix& centers)
{
    double e = 0.0;
    for (Eigen::Index i = 0; i < points.rows(); ++i) {
        e += nearest(points.row(i), centers).second;
    }
    return e;
}

} // namespace

void Codebook::validate() const
{
    if (centers.rows() < 1) {
        throw DataError("codebook has no codes");
    }
    if (window == 0 || code_width() != window * frame_width()) {
        throw DataError("codebook width " + std::to_string(code_width()) + " != d * joints * 9 = " +
                        std::to_string(window * frame_width()));
    }
    if (static_cast<std::size_t>(norm.mean.size()) != frame_width() ||
        static_cast<std::size_t>(norm.std.size()) != frame_width()) {
        throw DataError("codebook normalization width does not match its joints");
    }
    if (!centers.allFinite()) {
        throw DataError("codebook has non-finite centers");
    }
}

Eigen::MatrixXd segment_windows(const Eigen::MatrixXd& features, std::size_t window)
{
    const auto frames = static_cast<std::size_t>(features.rows());
    if (window == 0) {
        throw UsageError("window length must be positive");
    }
    if (frames < window) {
        throw DataError("sequence of " + std::to_string(frames) + " frames is shorter than one window of " +
                        std::to_string(window));
    }
    const std::size_t count = frames / window;
    const auto width = features.cols();
    Eigen::MatrixXd out(static_cast<Eigen::Index>(count), static_cast<Eigen::Index>(window) * width);
    for (std::size_t w = 0; w < count; ++w) {
        for (std::size_t f = 0; f < window; ++f) {
            out.block(static_cast<Eigen::Index>(w), static_cast<Eigen::Index>(f) * width, 1, width) =
                features.row(static_cast<Eigen::Index>(w * window + f));
        }
    }
    return out;
}

Eigen::MatrixXd kmeans(const Eigen::MatrixXd& input, std::size_t clusters, std::uint64_t seed, KMeansReport* report,
                       std::size_t max_rounds)
{
    const RowMatrix points = input;
    const auto n = static_cast<std::size_t>(points.rows());
    if (clusters == 0) {
        throw UsageError("codebook size must be positive");
    }
    if (n < clusters) {
        throw DataError("need at least " + std::to_string(clusters) + " windows to fit the codebook, got " +
                        std::to_string(n));
    }
    Rng rng(seed);
    RowMatrix centers = kmeans_plus_plus(points, clusters, rng);

    KMeansReport local;
    KMeansReport& rep = report ? *report : local;
    rep = KMeansReport{};
    rep.error_history.push_back(quantization_error(points, centers));

    std::vector<std::size_t> assign(n, std::numeric_limits<std::size_t>::max());
    std::vector<double> dist(n, 0.0);
    std::vector<std::size_t> counts(clusters);
    for (std::size_t round = 0; round < max_rounds; ++round) {
        bool changed = false;
        for (std::size_t i = 0; i < n; ++i) {
            auto [c, d] = nearest(points.row(static_cast<Eigen::Index>(i)), centers);
            if (c != assign[i]) {
                changed = true;
                assign[i] = c;
            }
            dist[i] = d;
        }
        if (!changed) {
            rep.converged = true;
            break;
        }
        ++rep.iterations;

        RowMatrix sums = RowMatrix::Zero(centers.rows(), centers.cols());
        std::fill(counts.begin(), counts.end(), 0);
        for (std::size_t i = 0; i < n; ++i) {
            sums.row(static_cast<Eigen::Index>(assign[i])) += points.row(static_cast<Eigen::Index>(i));
            ++counts[assign[i]];
        }
        for (std::size_t c = 0; c < clusters; ++c) {
            if (counts[c] > 0) {
                centers.row(static_cast<Eigen::Index>(c)) = sums.row(static_cast<Eigen::Index>(c)) / static_cast<double>(counts[c]);
            }
        }
        for (std::size_t i = 0; i < n; ++i) {
            dist[i] = squared_distance(points.row(static_cast<Eigen::Index>(i)), centers.row(static_cast<Eigen::Index>(assign[i])));
        }
        for (std::size_t c = 0; c < clusters; ++c) {
            if (counts[c] != 0) {
                continue;
            }
            std::size_t far = 0;
            for (std::size_t i = 1; i < n; ++i) {
                if (dist[i] > dist[far]) {
                    far = i;
                }
            }
            centers.row(static_cast<Eigen::Index>(c)) = points.row(static_cast<Eigen::Index>(far));
            dist[far] = 0.0;
            ++rep.reseeded;
        }
        rep.error_history.push_back(quantization_error(points, centers));
    }
    return Eigen::MatrixXd(centers);
}

Codebook fit_codebook(const Eigen::MatrixXd& windows, std::size_t codes, std::size_t window, FeatureNorm norm,
                      std::vector<std::size_t> joints, std::uint64_t seed, KMeansReport* report)
{
    Codebook cb;
    cb.centers = kmeans(windows, codes, seed, report);
    cb.window = window;
    cb.norm = std::move(norm);
    cb.joints = std::move(joints);
    cb.validate();
    return cb;
}

std::uint32_t nearest_code(const Eigen::Ref<const Eigen::RowVectorXd>& window, const Codebook& cb)
{
    if (static_cast<std::size_t>(window.size()) != cb.code_width()) {
        throw DataError("window width " + std::to_string(window.size()) + " does not match code width " +
                        std::to_string(cb.code_width()));
    }
    const RowMatrix centers = cb.centers;
    return static_cast<std::uint32_t>(nearest(window, centers).first);
}

CodeSequence encode(const Eigen::MatrixXd& windows, const Codebook& cb, double source_fps)
{
    if (static_cast<std::size_t>(windows.cols()) != cb.code_width()) {
        throw DataError("window width " + std::to_string(windows.cols()) + " does not match code width " +
                        std::to_string(cb.code_width()));
    }
    CodeSequence cs;
    cs.window = cb.window;
    cs.source_fps = source_fps;
    cs.codes.reserve(static_cast<std::size_t>(windows.rows()));
    const RowMatrix centers = cb.centers;
    const RowMatrix rows = windows;
    for (Eigen::Index i = 0; i < rows.rows(); ++i) {
        cs.codes.push_back(static_cast<std::uint32_t>(nearest(rows.row(i), centers).first));
    }
    return cs;
}

Eigen::MatrixXd decode_features(std::span<const std::uint32_t> codes, const Codebook& cb)
{
    const auto d = static_cast<Eigen::Index>(cb.window);
    const auto width = static_cast<Eigen::Index>(cb.frame_width());
    Eigen::MatrixXd out(static_cast<Eigen::Index>(codes.size()) * d, width);
    for (std::size_t s = 0; s < codes.size(); ++s) {
        if (codes[s] >= cb.size()) {
            throw DataError("code " + std::to_string(codes[s]) + " is outside the codebook of " +
                            std::to_string(cb.size()));
        }
        for (Eigen::Index f = 0; f < d; ++f) {
            out.row(static_cast<Eigen::Index>(s) * d + f) = cb.centers.block(codes[s], f * width, 1, width);
        }
    }
    return out;
}

Eigen::RowVectorXd decoded_window(std::uint32_t code, const Codebook& cb)
{
    const std::uint32_t one[1] = {code};
    Eigen::MatrixXd raw = cb.norm.invert(decode_features(one, cb));
    Eigen::RowVectorXd flat(raw.size());
    for (Eigen::Index f = 0; f < raw.rows(); ++f) {
        flat.segment(f * raw.cols(), raw.cols()) = raw.row(f);
    }
    return flat;
}

MotionSequence decode(const CodeSequence& cs, const Codebook& cb, std::shared_ptr<const Skeleton> skeleton)
{
    Eigen::MatrixXd raw = cb.norm.invert(decode_features(cs.codes, cb));
    for (std::size_t j : cb.joints) {
        if (j >= skeleton->joint_count()) {
            throw DataError("codebook joint index exceeds skeleton");
        }
    }
    MotionSequence m = MotionSequence::identity(std::move(skeleton), static_cast<std::size_t>(raw.rows()), cs.source_fps);
    for (Eigen::Index t = 0; t < raw.rows(); ++t) {
        for (std::size_t i = 0; i < cb.joints.size(); ++i) {
            Eigen::Matrix3d r;
            for (int a = 0; a < 3; ++a) {
                for (int b = 0; b < 3; ++b) {
                    r(a, b) = raw(t, static_cast<Eigen::Index>(i * 9) + a * 3 + b);
                }
            }
            m.set_rotation(static_cast<std::size_t>(t), cb.joints[i], nearest_rotation(r));
        }
    }
    return m;
}

VqLosses vq_losses(const Eigen::MatrixXd& features, const CodeSequence& cs, const Codebook& cb, double alpha1,
                   double alpha2, double beta)
{
    VqLosses out;
    const Eigen::MatrixXd recon = decode_features(cs.codes, cb);
    const Eigen::MatrixXd truth = features.topRows(recon.rows());
    if (truth.rows() != recon.rows() || truth.cols() != recon.cols()) {
        throw DataError("features do not cover the code sequence");
    }
    if (recon.size() == 0) {
        return out;
    }
    const Eigen::MatrixXd diff = recon - truth;
    out.l1 = diff.cwiseAbs().mean();
    if (diff.rows() >= 2) {
        const Eigen::MatrixXd vel = diff.bottomRows(diff.rows() - 1) - diff.topRows(diff.rows() - 1);
        out.velocity = vel.cwiseAbs().mean();
        if (vel.rows() >= 2) {
            const Eigen::MatrixXd acc = vel.bottomRows(vel.rows() - 1) - vel.topRows(vel.rows() - 1);
            out.acceleration = acc.cwiseAbs().mean();
        }
    }
    out.reconstruction = out.l1 + alpha1 * out.velocity + alpha2 * out.acceleration;
    out.commitment = diff.squaredNorm() / static_cast<double>(diff.size());
    out.total = out.reconstruction + (1.0 + beta) * out.commitment;
    return out;
}

std::size_t CodeHistogram::total() const
{
    std::size_t t = 0;
    for (const auto& [code, n] : counts) {
        t += n;
    }
    return t;
}

std::vector<std::pair<std::uint32_t, std::size_t>> CodeHistogram::ranked() const
{
    std::vector<std::pair<std::uint32_t, std::size_t>> out(counts.begin(), counts.end());
    std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
    return out;
}

CodeHistogram code_histogram(std::span<const CodeSequence> clips)
{
    CodeHistogram h;
    for (const auto& c : clips) {
        for (std::uint32_t code : c.codes) {
            ++h.counts[code];
        }
    }
    return h;
}

} // namespace gesmatch
