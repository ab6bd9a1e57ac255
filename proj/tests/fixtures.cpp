#include "fixtures.hpp"

#include <algorithm>
#include <numeric>

namespace fixture {

using namespace gesmatch;
namespace fs = std::filesystem;

std::string quarter_turn_bvh()
{
    return "HIERARCHY\n"
           "ROOT Hips\n"
           "{\n"
           "  OFFSET 0 0 0\n"
           "  CHANNELS 6 Xposition Yposition Zposition Zrotation Xrotation Yrotation\n"
           "  JOINT Arm\n"
           "  {\n"
           "    OFFSET 1 0 0\n"
           "    CHANNELS 3 Zrotation Xrotation Yrotation\n"
           "    End Site\n"
           "    {\n"
           "      OFFSET 1 0 0\n"
           "    }\n"
           "  }\n"
           "}\n"
           "MOTION\n"
           "Frames: 1\n"
           "Frame Time: 0.0166667\n"
           "0 0 0 0 0 0 90 0 0\n";
}

std::string small_bvh()
{
    return "HIERARCHY\n"
           "ROOT Hips\n"
           "{\n"
           "  OFFSET 0 90 0\n"
           "  CHANNELS 6 Xposition Yposition Zposition Zrotation Xrotation Yrotation\n"
           "  JOINT Spine\n"
           "  {\n"
           "    OFFSET 0 10 0.5\n"
           "    CHANNELS 3 Zrotation Xrotation Yrotation\n"
           "    JOINT Head\n"
           "    {\n"
           "      OFFSET 0 15 0\n"
           "      CHANNELS 3 Yrotation Xrotation Zrotation\n"
           "      End Site\n"
           "      {\n"
           "        OFFSET 0 8 0\n"
           "      }\n"
           "    }\n"
           "    JOINT LeftArm\n"
           "    {\n"
           "      OFFSET 6 12 0\n"
           "      CHANNELS 3 Xrotation Yrotation Zrotation\n"
           "      JOINT LeftHand\n"
           "      {\n"
           "        OFFSET 25 0 -1\n"
           "        CHANNELS 3 Zrotation Yrotation Xrotation\n"
           "        End Site\n"
           "        {\n"
           "          OFFSET 7 0 0\n"
           "        }\n"
           "      }\n"
           "    }\n"
           "  }\n"
           "}\n"
           "MOTION\n"
           "Frames: 3\n"
           "Frame Time: 0.0333333333\n"
           "1.5 90 -2 10 -20 30 5 15 -25 40 -35 12.5 -70 20 33 91 -45 2.25\n"
           "1.25 91 -2.5 -170 80 -10 0 0 0 179 -89 45 12 -33 66 -120 60 7\n"
           "0 92.5 0 0 0 0 33 44 55 -66 77 -88 99 -11 22 -30 45 -60\n";
}

std::shared_ptr<const Skeleton> single_joint_skeleton()
{
    auto s = std::make_shared<Skeleton>();
    s->joint_names = {"Root"};
    s->parents = {-1};
    s->offsets = {Eigen::Vector3d::Zero()};
    s->channels = {{Channel::Zrotation, Channel::Xrotation, Channel::Yrotation}};
    s->end_sites = {Eigen::Vector3d(0, 1, 0)};
    return s;
}

namespace {

float ternary(Rng& rng)
{
    return static_cast<float>(static_cast<int>(rng.below(3)) - 1);
}

GestureDatabase empty_db(std::size_t codes, std::size_t window, std::size_t embedding_dim, Rng& rng, bool spread)
{
    GestureDatabase db;
    db.skeleton = single_joint_skeleton();
    db.joint_names = {"Root"};
    db.codebook.window = window;
    db.codebook.joints = {0};
    const Eigen::Index fw = 9;
    db.codebook.norm.mean = Eigen::VectorXd::Zero(fw);
    db.codebook.norm.std = Eigen::VectorXd::Ones(fw);
    db.codebook.norm.clamped.assign(static_cast<std::size_t>(fw), false);
    if (spread) {
        for (Eigen::Index i = 0; i < fw; ++i) {
            db.codebook.norm.mean[i] = rng.normal();
            db.codebook.norm.std[i] = 0.5 + 1.5 * rng.uniform();
        }
    }
    db.codebook.centers.resize(static_cast<Eigen::Index>(codes), fw * static_cast<Eigen::Index>(window));
    for (Eigen::Index i = 0; i < db.codebook.centers.size(); ++i) {
        db.codebook.centers.data()[i] = rng.normal();
    }
    db.basis.mean = Eigen::VectorXd::Zero(fw);
    db.basis.scale = Eigen::VectorXd::Ones(fw);
    db.basis.components = Eigen::MatrixXd::Zero(fw, 1);
    db.basis.components(0, 0) = 1.0;
    db.basis.variances = Eigen::VectorXd::Ones(1);
    db.embedding_dim = embedding_dim;
    return db;
}

} // namespace

Toy random_toy(Rng& rng, const ToyOptions& opts)
{
    const std::size_t codes = 1 + rng.below(opts.max_codes);
    Toy toy;
    toy.db = empty_db(codes, 1, 2, rng, true);
    GestureDatabase& db = toy.db;
    db.settings.fps = 4.0;
    db.settings.n_phase = 3;
    db.settings.n_stride = 1;
    db.settings.window_seconds = 0.5;
    db.settings.vocabulary = opts.vocabulary;

    const std::size_t clips = 1 + rng.below(opts.max_clips);
    for (std::size_t c = 0; c < clips; ++c) {
        ClipRecord clip;
        clip.id = "toy#" + std::to_string(c);
        clip.source = "toy";
        const std::size_t steps = 1 + rng.below(opts.max_steps);
        clip.text.resize(static_cast<Eigen::Index>(steps), 2);
        clip.phases.resize(static_cast<Eigen::Index>(steps * 3), 2);
        for (std::size_t s = 0; s < steps; ++s) {
            clip.codes.push_back(static_cast<std::uint32_t>(rng.below(codes)));
            std::vector<std::uint32_t> w(rng.below(5));
            for (auto& t : w) {
                t = static_cast<std::uint32_t>(rng.below(opts.vocabulary));
            }
            clip.audio_windows.push_back(w);
            clip.text(static_cast<Eigen::Index>(s), 0) = ternary(rng);
            clip.text(static_cast<Eigen::Index>(s), 1) = ternary(rng);
        }
        for (Eigen::Index i = 0; i < clip.phases.size(); ++i) {
            clip.phases.data()[i] = ternary(rng);
        }
        db.clips.push_back(std::move(clip));
    }
    db.code_frequency = count_codes(db.clips, codes);
    db.validate();

    MatchQuery& q = toy.query;
    q.steps = 1 + rng.below(opts.max_steps);
    q.audio.rate = 8.0;
    q.audio.vocabulary = opts.vocabulary;
    q.audio.tokens.resize(2 * q.steps + rng.below(3));
    for (auto& t : q.audio.tokens) {
        t = static_cast<std::uint32_t>(rng.below(opts.vocabulary));
    }
    q.text.rate = 4.0;
    q.text.vectors.resize(static_cast<Eigen::Index>(q.steps + rng.below(2)), 2);
    for (Eigen::Index i = 0; i < q.text.vectors.size(); ++i) {
        q.text.vectors.data()[i] = ternary(rng);
    }
    q.initial_code = static_cast<std::uint32_t>(rng.below(codes));
    q.initial_phase.resize(3, 2);
    for (Eigen::Index i = 0; i < q.initial_phase.size(); ++i) {
        q.initial_phase.data()[i] = ternary(rng);
    }
    q.k = rng.below(4) == 0 ? 2 : 1;
    const double weights[3] = {0.0, 0.05, 0.5};
    q.freq_weight = weights[rng.below(3)];
    if (rng.below(3) == 0) {
        q.allowed_codes.resize(codes);
        for (std::size_t c = 0; c < codes; ++c) {
            q.allowed_codes[c] = rng.below(3) != 0;
        }
        if (rng.below(2) == 0) {
            q.step_mask.resize(q.steps);
            for (std::size_t s = 0; s < q.steps; ++s) {
                q.step_mask[s] = rng.below(2) == 0;
            }
        }
    }
    return toy;
}

oracle::StepQuery step_windows(const GestureDatabase& db, const MatchQuery& q)
{
    oracle::StepQuery out;
    for (std::size_t s = 0; s < q.steps; ++s) {
        out.audio.push_back(
            step_audio_window(q.audio, s, db.settings.window_seconds, db.codebook.window, db.settings.fps));
        const std::size_t row = embedding_row_at(q.text, s, db.codebook.window, db.settings.fps);
        out.text.push_back(q.text.vectors.row(static_cast<Eigen::Index>(row)).transpose().cast<double>());
    }
    return out;
}

oracle::SearchSettings oracle_settings(const MatchQuery& q)
{
    oracle::SearchSettings s;
    s.initial_code = q.initial_code;
    s.initial_phase = q.initial_phase;
    s.step_mask = q.step_mask;
    s.allowed_codes = q.allowed_codes;
    s.k = q.k;
    s.freq_weight = q.freq_weight;
    return s;
}

Toy self_retrieval_toy(std::size_t steps, std::uint64_t seed)
{
    Rng rng(seed);
    const std::size_t codes = steps + 2;
    Toy toy;
    toy.db = empty_db(codes, 2, steps + 2, rng, false);
    GestureDatabase& db = toy.db;
    db.codebook.centers.setZero();
    for (std::size_t c = 0; c < codes; ++c) {
        db.codebook.centers(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(c)) = 5.0;
    }
    // 0.5 s steps and 0.5 s windows: step s reads tokens [4s, 4s + 4).
    db.settings.fps = 4.0;
    db.settings.n_phase = 3;
    db.settings.n_stride = 1;
    db.settings.window_seconds = 0.5;

    MatchQuery& q = toy.query;
    q.steps = steps;
    q.audio.rate = 8.0;
    q.text.rate = 2.0;
    q.text.vectors = Eigen::MatrixXf::Zero(static_cast<Eigen::Index>(steps), static_cast<Eigen::Index>(steps + 2));
    for (std::size_t s = 0; s < steps; ++s) {
        const auto own = static_cast<std::uint32_t>(10 + s);
        const auto parity = static_cast<std::uint32_t>(1 + s % 2);
        q.audio.tokens.insert(q.audio.tokens.end(), {own, own, parity, parity});
        q.text.vectors(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(s)) = 1.0f;
        q.text.vectors(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(steps + s % 2)) = 2.0f;
    }

    std::vector<std::uint32_t> order(steps);
    std::iota(order.begin(), order.end(), 0u);
    for (std::size_t i = steps; i > 1; --i) {
        std::swap(order[i - 1], order[rng.below(i)]);
    }
    ClipRecord clip;
    clip.id = "self#0";
    clip.source = "self";
    clip.codes = order;
    clip.text.resize(static_cast<Eigen::Index>(steps), static_cast<Eigen::Index>(steps + 2));
    clip.phases.resize(static_cast<Eigen::Index>(steps * 3), 2);
    const oracle::StepQuery cut = step_windows(db, q);
    for (std::size_t s = 0; s < steps; ++s) {
        clip.audio_windows.push_back(cut.audio[s]);
        clip.text.row(static_cast<Eigen::Index>(s)) = cut.text[s].transpose().cast<float>();
    }
    for (Eigen::Index i = 0; i < clip.phases.size(); ++i) {
        clip.phases.data()[i] = static_cast<float>(rng.normal());
    }
    db.clips.push_back(std::move(clip));
    db.code_frequency = count_codes(db.clips, codes);
    db.validate();

    q.initial_code = db.clips[0].codes[0];
    q.initial_phase = Eigen::MatrixXd::Zero(3, 2);
    q.k = 1;
    q.freq_weight = 0.0;
    return toy;
}

Toy scaling_toy(std::size_t clips, std::size_t codes, std::uint64_t seed)
{
    Rng rng(seed);
    constexpr std::size_t steps = 40;
    constexpr std::size_t dim = 16;
    constexpr std::uint32_t vocab = 50;
    Toy toy;
    toy.db = empty_db(codes, 8, dim, rng, false);
    GestureDatabase& db = toy.db;
    db.settings.vocabulary = vocab;
    for (std::size_t c = 0; c < clips; ++c) {
        ClipRecord clip;
        clip.id = "scale#" + std::to_string(c);
        clip.source = "scale";
        clip.text.resize(static_cast<Eigen::Index>(steps), static_cast<Eigen::Index>(dim));
        clip.phases.resize(static_cast<Eigen::Index>(steps * db.settings.n_phase), 2);
        for (std::size_t s = 0; s < steps; ++s) {
            clip.codes.push_back(static_cast<std::uint32_t>(rng.below(codes)));
            std::vector<std::uint32_t> w(25);
            for (auto& t : w) {
                t = static_cast<std::uint32_t>(rng.below(vocab));
            }
            clip.audio_windows.push_back(w);
        }
        for (Eigen::Index i = 0; i < clip.text.size(); ++i) {
            clip.text.data()[i] = static_cast<float>(rng.normal());
        }
        for (Eigen::Index i = 0; i < clip.phases.size(); ++i) {
            clip.phases.data()[i] = static_cast<float>(rng.normal());
        }
        db.clips.push_back(std::move(clip));
    }
    db.code_frequency = count_codes(db.clips, codes);
    db.validate();

    MatchQuery& q = toy.query;
    q.steps = 16;
    q.audio.rate = 50.0;
    q.audio.vocabulary = vocab;
    q.audio.tokens.resize(120);
    for (auto& t : q.audio.tokens) {
        t = static_cast<std::uint32_t>(rng.below(vocab));
    }
    q.text.rate = 7.5;
    q.text.vectors.resize(20, static_cast<Eigen::Index>(dim));
    for (Eigen::Index i = 0; i < q.text.vectors.size(); ++i) {
        q.text.vectors.data()[i] = static_cast<float>(rng.normal());
    }
    q.initial_code = 0;
    q.initial_phase = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(db.settings.n_phase), 2);
    return toy;
}

Eigen::MatrixXd clustered_points(std::size_t clusters, std::size_t per_cluster, std::size_t dim, std::uint64_t seed)
{
    Rng rng(seed);
    Eigen::MatrixXd centers(static_cast<Eigen::Index>(clusters), static_cast<Eigen::Index>(dim));
    for (Eigen::Index i = 0; i < centers.size(); ++i) {
        centers.data()[i] = 100.0 * rng.normal();
    }
    Eigen::MatrixXd out(static_cast<Eigen::Index>(clusters * per_cluster), static_cast<Eigen::Index>(dim));
    for (std::size_t c = 0; c < clusters; ++c) {
        for (std::size_t p = 0; p < per_cluster; ++p) {
            const auto row = static_cast<Eigen::Index>(c * per_cluster + p);
            for (Eigen::Index k = 0; k < out.cols(); ++k) {
                out(row, k) = centers(static_cast<Eigen::Index>(c), k) + 0.1 * rng.normal();
            }
        }
    }
    return out;
}

std::vector<cli::SynthSession> small_corpus(std::size_t sessions, double seconds, std::uint64_t seed)
{
    cli::SynthOptions opts;
    opts.sessions = sessions;
    opts.seconds = seconds;
    opts.seed = seed;
    return cli::synth_corpus(opts);
}

std::vector<SessionInput> session_inputs(const std::vector<cli::SynthSession>& corpus)
{
    std::vector<SessionInput> out;
    for (const auto& s : corpus) {
        out.push_back({s.id, s.motion, s.audio, s.text, s.words});
    }
    return out;
}

Model small_model(const std::vector<cli::SynthSession>& corpus, std::size_t codes, std::size_t frames_per_code,
                  std::size_t phase_channels)
{
    const auto& skeleton = corpus.front().motion.skeleton;
    const auto joints = select_joints(*skeleton, default_upper_body_joints());
    std::vector<Eigen::MatrixXd> features;
    std::vector<Eigen::MatrixXd> velocities;
    Eigen::Index rows = 0;
    for (const auto& s : corpus) {
        const MotionSequence canonical = canonicalize_root(s.motion).motion;
        features.push_back(rotation_features(canonical, joints));
        velocities.push_back(rotational_velocity(canonical, joints));
        rows += features.back().rows();
    }
    Eigen::MatrixXd stacked(rows, features.front().cols());
    rows = 0;
    for (const auto& f : features) {
        stacked.middleRows(rows, f.rows()) = f;
        rows += f.rows();
    }
    const FeatureNorm norm = FeatureNorm::fit(stacked);
    std::vector<Eigen::MatrixXd> windows;
    rows = 0;
    for (const auto& f : features) {
        windows.push_back(segment_windows(norm.apply(f), frames_per_code));
        rows += windows.back().rows();
    }
    Eigen::MatrixXd all(rows, windows.front().cols());
    rows = 0;
    for (const auto& w : windows) {
        all.middleRows(rows, w.rows()) = w;
        rows += w.rows();
    }
    Model m;
    m.fps = corpus.front().motion.fps;
    m.codebook = fit_codebook(all, codes, frames_per_code, norm, joints, 1234);
    m.basis = fit_latent_basis(velocities, phase_channels);
    m.skeleton = skeleton;
    for (std::size_t j : joints) {
        m.joint_names.push_back(skeleton->joint_names[j]);
    }
    return m;
}

fs::path temp_dir(const std::string& name)
{
    const fs::path dir = fs::temp_directory_path() / ("gesmatch_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

} // namespace fixture
