#include "fixtures.hpp"
#include "gesmatch/codebook.hpp"
#include "gesmatch/error.hpp"

#include <doctest.h>

#include <algorithm>
#include <limits>

using namespace gesmatch;

namespace {

// Codebook over one joint (frame width 9) with identity normalization.
Codebook plain_codebook(const Eigen::MatrixXd& centers)
{
    Codebook cb;
    cb.centers = centers;
    cb.window = static_cast<std::size_t>(centers.cols() / 9);
    cb.joints = {0};
    cb.norm.mean = Eigen::VectorXd::Zero(9);
    cb.norm.std = Eigen::VectorXd::Ones(9);
    cb.norm.clamped.assign(9, false);
    cb.validate();
    return cb;
}

Eigen::MatrixXd random_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols)
{
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < m.size(); ++i) {
        m.data()[i] = rng.normal();
    }
    return m;
}

std::size_t brute_nearest(const Eigen::RowVectorXd& w, const Eigen::MatrixXd& centers)
{
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (Eigen::Index c = 0; c < centers.rows(); ++c) {
        double d = 0.0;
        for (Eigen::Index k = 0; k < centers.cols(); ++k) {
            d += (w[k] - centers(c, k)) * (w[k] - centers(c, k));
        }
        if (d < best_d) {
            best_d = d;
            best = static_cast<std::size_t>(c);
        }
    }
    return best;
}

double squared_error(const Eigen::MatrixXd& windows, const Eigen::MatrixXd& centers, std::span<const std::uint32_t> codes)
{
    double e = 0.0;
    for (Eigen::Index i = 0; i < windows.rows(); ++i) {
        e += (windows.row(i) - centers.row(codes[static_cast<std::size_t>(i)])).squaredNorm();
    }
    return e;
}

} // namespace

TEST_CASE("segment_windows")
{
    Eigen::MatrixXd f(240, 2);
    for (Eigen::Index t = 0; t < 240; ++t) {
        f(t, 0) = static_cast<double>(t);
        f(t, 1) = -static_cast<double>(t);
    }
    const Eigen::MatrixXd w = segment_windows(f, 8);
    CHECK(w.rows() == 30);
    CHECK(w.cols() == 16);
    CHECK(w(1, 0) == 8.0);
    CHECK(w(1, 3) == -9.0);
    CHECK(w(29, 14) == 239.0);

    CHECK(segment_windows(f.topRows(9), 8).rows() == 1);
    CHECK_THROWS_AS(segment_windows(f.topRows(7), 8), DataError);
}

TEST_CASE("k-means on simple layouts")
{
    SUBCASE("two separated clusters land on their means")
    {
        Rng rng(1);
        Eigen::MatrixXd pts(40, 3);
        for (Eigen::Index i = 0; i < 40; ++i) {
            const double base = i < 20 ? -50.0 : 50.0;
            for (Eigen::Index k = 0; k < 3; ++k) {
                pts(i, k) = base + rng.normal();
            }
        }
        const Eigen::RowVectorXd m0 = pts.topRows(20).colwise().mean();
        const Eigen::RowVectorXd m1 = pts.bottomRows(20).colwise().mean();
        const Eigen::MatrixXd c = kmeans(pts, 2, 99);
        const bool first_low = c(0, 0) < 0.0;
        CHECK((c.row(first_low ? 0 : 1) - m0).norm() < 1e-6);
        CHECK((c.row(first_low ? 1 : 0) - m1).norm() < 1e-6);
    }
    SUBCASE("identical points, one cluster")
    {
        Eigen::MatrixXd pts = Eigen::MatrixXd::Constant(5, 4, 2.5);
        const Eigen::MatrixXd c = kmeans(pts, 1, 3);
        CHECK(c == Eigen::MatrixXd::Constant(1, 4, 2.5));
    }
    SUBCASE("one cluster per point gives zero error")
    {
        Rng rng(2);
        const Eigen::MatrixXd pts = random_matrix(rng, 12, 3);
        KMeansReport rep;
        kmeans(pts, 12, 4, &rep);
        CHECK(rep.error_history.back() == 0.0);
    }
    SUBCASE("too few points")
    {
        CHECK_THROWS_AS(kmeans(Eigen::MatrixXd::Zero(3, 2), 4, 1), DataError);
        CHECK_THROWS_AS(kmeans(Eigen::MatrixXd::Zero(3, 2), 0, 1), UsageError);
    }
}

TEST_CASE("quantization error never increases across rounds")
{
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const Eigen::MatrixXd pts = fixture::clustered_points(32, 8, 6, seed);
        for (std::size_t k : {3u, 8u, 20u}) {
            KMeansReport rep;
            kmeans(pts, k, seed, &rep);
            REQUIRE(rep.error_history.size() >= 2);
            for (std::size_t i = 1; i < rep.error_history.size(); ++i) {
                CHECK(rep.error_history[i] <= rep.error_history[i - 1] * (1.0 + 1e-12));
            }
        }
    }
}

TEST_CASE("fitting is deterministic per seed")
{
    const Eigen::MatrixXd pts = fixture::clustered_points(10, 12, 9, 77);
    const Eigen::MatrixXd a = kmeans(pts, 7, 5);
    const Eigen::MatrixXd b = kmeans(pts, 7, 5);
    CHECK(a == b);
}

TEST_CASE("reconstruction error falls with codebook size")
{
    const Eigen::MatrixXd pts = fixture::clustered_points(32, 6, 18, 4);
    double previous = std::numeric_limits<double>::infinity();
    for (std::size_t k : {2u, 4u, 8u, 16u, 32u}) {
        const Codebook cb = plain_codebook(kmeans(pts, k, 21));
        const CodeSequence cs = encode(pts, cb);
        const double err = squared_error(pts, cb.centers, cs.codes);
        CHECK(err <= previous);
        previous = err;
    }
}

TEST_CASE("encode picks the nearest center")
{
    Rng rng(8);
    const Codebook cb = plain_codebook(random_matrix(rng, 10, 18));

    SUBCASE("exact center")
    {
        CHECK(nearest_code(cb.centers.row(7), cb) == 7);
    }
    SUBCASE("ties go to the lower index")
    {
        Codebook tie = cb;
        Eigen::RowVectorXd mid = Eigen::RowVectorXd::Zero(18);
        tie.centers.setConstant(100.0);
        tie.centers.row(2).setZero();
        tie.centers.row(5).setZero();
        tie.centers(2, 0) = 1.0;
        tie.centers(5, 0) = -1.0;
        CHECK(nearest_code(mid, tie) == 2);
    }
    SUBCASE("agrees with an exhaustive scan")
    {
        const Eigen::MatrixXd windows = random_matrix(rng, 1000, 18);
        const CodeSequence cs = encode(windows, cb);
        REQUIRE(cs.codes.size() == 1000);
        for (Eigen::Index i = 0; i < windows.rows(); ++i) {
            CHECK(cs.codes[static_cast<std::size_t>(i)] == brute_nearest(windows.row(i), cb.centers));
        }
    }
    SUBCASE("dimension mismatch")
    {
        CHECK_THROWS_AS(encode(Eigen::MatrixXd::Zero(2, 9), cb), DataError);
    }
}

TEST_CASE("decode")
{
    Rng rng(12);
    SUBCASE("windows built from centers round trip")
    {
        const Codebook cb = plain_codebook(random_matrix(rng, 6, 27));
        const std::vector<std::uint32_t> codes{4, 0, 0, 5, 2};
        const Eigen::MatrixXd frames = decode_features(codes, cb);
        CHECK(frames.rows() == 15);
        const Eigen::MatrixXd windows = segment_windows(frames, 3);
        CHECK(encode(windows, cb).codes == codes);
        CHECK((decode_features(encode(windows, cb).codes, cb) - frames).cwiseAbs().maxCoeff() < 1e-5);
    }
    SUBCASE("repeated code gives a repeated window")
    {
        const Codebook cb = plain_codebook(random_matrix(rng, 3, 18));
        const std::vector<std::uint32_t> codes{1, 1, 1};
        const Eigen::MatrixXd frames = decode_features(codes, cb);
        REQUIRE(frames.rows() == 6);
        CHECK(frames.middleRows(0, 2) == frames.middleRows(2, 2));
        CHECK(frames.middleRows(0, 2) == frames.middleRows(4, 2));
    }
    SUBCASE("encode is the best assignment among all of them")
    {
        const Codebook cb = plain_codebook(random_matrix(rng, 4, 9));
        const Eigen::MatrixXd windows = random_matrix(rng, 3, 9);
        const double chosen = squared_error(windows, cb.centers, encode(windows, cb).codes);
        for (std::uint32_t a = 0; a < 4; ++a) {
            for (std::uint32_t b = 0; b < 4; ++b) {
                for (std::uint32_t c = 0; c < 4; ++c) {
                    const std::uint32_t codes[3] = {a, b, c};
                    CHECK(chosen <= squared_error(windows, cb.centers, codes));
                }
            }
        }
    }
    SUBCASE("decoded blocks are rotations")
    {
        Codebook cb = plain_codebook(random_matrix(rng, 2, 18));
        cb.norm.mean.setConstant(0.3);
        cb.norm.std.setConstant(0.2);
        CodeSequence cs;
        cs.codes = {0, 1};
        cs.window = 2;
        const MotionSequence m = decode(cs, cb, fixture::single_joint_skeleton());
        REQUIRE(m.frames() == 4);
        for (std::size_t t = 0; t < 4; ++t) {
            const Eigen::Matrix3d r = m.rotation(t, 0);
            CHECK((r.transpose() * r - Eigen::Matrix3d::Identity()).norm() < 1e-9);
            CHECK(r.determinant() == doctest::Approx(1.0));
        }
    }
    SUBCASE("rotation centers decode exactly")
    {
        Eigen::MatrixXd centers(1, 9);
        const Eigen::Matrix3d r = Eigen::AngleAxisd(0.7, Eigen::Vector3d(1, 2, 3).normalized()).toRotationMatrix();
        for (int a = 0; a < 3; ++a) {
            for (int b = 0; b < 3; ++b) {
                centers(0, a * 3 + b) = r(a, b);
            }
        }
        CodeSequence cs;
        cs.codes = {0};
        cs.window = 1;
        const MotionSequence m = decode(cs, plain_codebook(centers), fixture::single_joint_skeleton());
        CHECK((m.rotation(0, 0) - r).norm() < 1e-5);
    }
    SUBCASE("index out of range")
    {
        const Codebook cb = plain_codebook(random_matrix(rng, 2, 9));
        const std::vector<std::uint32_t> codes{2};
        CHECK_THROWS_AS(decode_features(codes, cb), DataError);
    }
}

TEST_CASE("VQ diagnostic losses")
{
    SUBCASE("hand-computed two-frame case")
    {
        const Codebook cb = plain_codebook(Eigen::MatrixXd::Zero(1, 18));
        Eigen::MatrixXd f(2, 9);
        f.row(0).setConstant(1.0);
        f.row(1).setConstant(3.0);
        CodeSequence cs;
        cs.codes = {0};
        cs.window = 2;
        const VqLosses l = vq_losses(f, cs, cb, 0.5, 7.0, 0.25);
        CHECK(l.l1 == doctest::Approx(2.0));
        CHECK(l.velocity == doctest::Approx(2.0));
        CHECK(l.acceleration == 0.0);
        CHECK(l.reconstruction == doctest::Approx(3.0));
        CHECK(l.commitment == doctest::Approx(5.0));
        CHECK(l.total == doctest::Approx(9.25));

        const VqLosses plain = vq_losses(f, cs, cb, 0.0, 0.0, 0.25);
        CHECK(plain.reconstruction == plain.l1);
    }
    SUBCASE("exactly decodable features")
    {
        Rng rng(4);
        const Codebook cb = plain_codebook(random_matrix(rng, 3, 18));
        CodeSequence cs;
        cs.codes = {2, 0, 1, 1};
        cs.window = 2;
        const VqLosses l = vq_losses(decode_features(cs.codes, cb), cs, cb, 1.0, 1.0, 0.25);
        CHECK(l.l1 == 0.0);
        CHECK(l.velocity == 0.0);
        CHECK(l.acceleration == 0.0);
        CHECK(l.total == 0.0);
    }
}

TEST_CASE("code histogram")
{
    CodeSequence one;
    one.codes = {3, 3, 5};
    const CodeHistogram h = code_histogram(std::span<const CodeSequence>(&one, 1));
    CHECK(h.counts.size() == 2);
    CHECK(h.counts.at(3) == 2);
    CHECK(h.counts.at(5) == 1);
    CHECK(h.total() == 3);

    CHECK(code_histogram({}).counts.empty());

    Rng rng(6);
    std::vector<CodeSequence> clips(5);
    std::size_t total = 0;
    for (auto& c : clips) {
        for (int i = 0; i < 30; ++i) {
            c.codes.push_back(rng.below(3) == 0 ? 7u : static_cast<std::uint32_t>(rng.below(20)));
        }
        total += c.codes.size();
    }
    const CodeHistogram planted = code_histogram(clips);
    CHECK(planted.total() == total);
    const auto ranked = planted.ranked();
    CHECK(ranked.front().first == 7);
    for (std::size_t i = 1; i < ranked.size(); ++i) {
        CHECK(ranked[i - 1].second >= ranked[i].second);
        if (ranked[i - 1].second == ranked[i].second) {
            CHECK(ranked[i - 1].first < ranked[i].first);
        }
    }
}
