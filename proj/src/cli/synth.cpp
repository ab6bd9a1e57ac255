#include "gesmatch/cli.hpp"

#include "gesmatch/binary_io.hpp"
#include "gesmatch/error.hpp"
#include "gesmatch/random.hpp"
#include "gesmatch/stream_io.hpp"

#include <array>
#include <cmath>

namespace gesmatch::cli {

namespace fs = std::filesystem;

namespace {

constexpr double kPi = 3.14159265358979323846;

const std::vector<Channel> kRootChannels = {Channel::Xposition, Channel::Yposition, Channel::Zposition,
                                            Channel::Zrotation, Channel::Xrotation, Channel::Yrotation};
const std::vector<Channel> kJointChannels = {Channel::Zrotation, Channel::Xrotation, Channel::Yrotation};

struct GestureKind {
    double frequency = 1.0; // Hz
    // Per joint, per Euler channel (Z, X, Y): amplitude and phase in degrees/radians.
    std::vector<std::array<double, 3>> amplitude;
    std::vector<std::array<double, 3>> phase;
    std::vector<std::array<double, 3>> bias;
    std::vector<std::uint32_t> tokens;
    Eigen::VectorXf direction;
};

struct Segment {
    double start = 0.0;
    double end = 0.0;
    int kind = -1; // -1 is a pause
};

double envelope(double t, const Segment& s)
{
    constexpr double ramp = 0.15;
    const double in = std::clamp((t - s.start) / ramp, 0.0, 1.0);
    const double out = std::clamp((s.end - t) / ramp, 0.0, 1.0);
    const double e = std::min(in, out);
    return 0.5 - 0.5 * std::cos(kPi * e);
}

} // namespace

std::shared_ptr<const Skeleton> synth_skeleton()
{
    auto s = std::make_shared<Skeleton>();
    auto add = [&](const std::string& name, int parent, Eigen::Vector3d offset) {
        s->joint_names.push_back(name);
        s->parents.push_back(parent);
        s->offsets.push_back(offset);
        s->channels.push_back(parent < 0 ? kRootChannels : kJointChannels);
        s->end_sites.push_back(std::nullopt);
        return static_cast<int>(s->joint_names.size()) - 1;
    };
    const int hips = add("Hips", -1, {0, 0, 0});
    const int spine = add("Spine", hips, {0, 10, 0});
    const int spine1 = add("Spine1", spine, {0, 10, 0});
    const int spine2 = add("Spine2", spine1, {0, 10, 0});
    const int spine3 = add("Spine3", spine2, {0, 10, 0});
    const int neck = add("Neck", spine3, {0, 10, 0});
    const int neck1 = add("Neck1", neck, {0, 5, 0});
    const int head = add("Head", neck1, {0, 5, 0});
    s->end_sites[static_cast<std::size_t>(head)] = Eigen::Vector3d(0, 10, 0);
    for (const double side : {-1.0, 1.0}) {
        const std::string prefix = side < 0 ? "Right" : "Left";
        const int shoulder = add(prefix + "Shoulder", spine3, {5 * side, 8, 0});
        const int arm = add(prefix + "Arm", shoulder, {12 * side, 0, 0});
        const int fore = add(prefix + "ForeArm", arm, {25 * side, 0, 0});
        const int hand = add(prefix + "Hand", fore, {22 * side, 0, 0});
        s->end_sites[static_cast<std::size_t>(hand)] = Eigen::Vector3d(8 * side, 0, 0);
    }
    s->validate();
    return s;
}

std::vector<SynthSession> synth_corpus(const SynthOptions& opts)
{
    if (opts.sessions == 0 || !(opts.seconds > 0.0) || !(opts.fps > 0.0) || opts.gesture_kinds == 0 ||
        opts.embedding_dim == 0 || !(opts.token_rate > 0.0) || !(opts.embedding_rate > 0.0)) {
        throw UsageError("synthetic corpus options must be positive");
    }
    if (opts.vocabulary < 16 * (opts.gesture_kinds + 1)) {
        throw UsageError("vocabulary is too small for the synthetic token scheme");
    }
    const auto skeleton = synth_skeleton();
    const std::size_t joints = skeleton->joint_count();
    Rng rng(opts.seed);

    std::vector<GestureKind> kinds(opts.gesture_kinds);
    const std::uint64_t token_stride = opts.vocabulary / (opts.gesture_kinds + 1);
    for (std::size_t k = 0; k < kinds.size(); ++k) {
        GestureKind& g = kinds[k];
        g.frequency = 0.8 + 2.2 * rng.uniform();
        g.amplitude.resize(joints);
        g.phase.resize(joints);
        g.bias.resize(joints);
        for (std::size_t j = 1; j < joints; ++j) {
            const bool arm = skeleton->joint_names[j].find("Arm") != std::string::npos ||
                             skeleton->joint_names[j].find("Hand") != std::string::npos;
            const double scale = arm ? 35.0 : 6.0;
            for (int a = 0; a < 3; ++a) {
                g.amplitude[j][static_cast<std::size_t>(a)] = scale * rng.uniform();
                g.phase[j][static_cast<std::size_t>(a)] = 2.0 * kPi * rng.uniform();
                g.bias[j][static_cast<std::size_t>(a)] = (arm ? 30.0 : 4.0) * (2.0 * rng.uniform() - 1.0);
            }
        }
        for (int i = 0; i < 12; ++i) {
            g.tokens.push_back(static_cast<std::uint32_t>((k + 1) * token_stride + rng.below(token_stride)));
        }
        g.direction = Eigen::VectorXf(static_cast<Eigen::Index>(opts.embedding_dim));
        for (Eigen::Index i = 0; i < g.direction.size(); ++i) {
            g.direction[i] = static_cast<float>(rng.normal());
        }
        g.direction.normalize();
    }

    std::vector<SynthSession> out;
    for (std::size_t si = 0; si < opts.sessions; ++si) {
        SynthSession session;
        char id[32];
        std::snprintf(id, sizeof id, "session_%03zu", si);
        session.id = id;

        std::vector<Segment> segments;
        double t = 0.0;
        while (t < opts.seconds) {
            Segment g{t, std::min(opts.seconds, t + 1.0 + 1.5 * rng.uniform()),
                      static_cast<int>(rng.below(kinds.size()))};
            segments.push_back(g);
            t = g.end;
            if (t >= opts.seconds) {
                break;
            }
            Segment pause{t, std::min(opts.seconds, t + 0.3 + 0.7 * rng.uniform()), -1};
            segments.push_back(pause);
            t = pause.end;
        }
        auto segment_at = [&](double time) -> const Segment& {
            for (const auto& s : segments) {
                if (time < s.end) {
                    return s;
                }
            }
            return segments.back();
        };

        const double yaw = 60.0 * rng.uniform() - 30.0;
        const auto frames = static_cast<std::size_t>(std::floor(opts.seconds * opts.fps));
        session.motion = MotionSequence::identity(skeleton, frames, opts.fps);
        for (std::size_t f = 0; f < frames; ++f) {
            const double time = static_cast<double>(f) / opts.fps;
            session.motion.root_positions.row(static_cast<Eigen::Index>(f)) =
                Eigen::RowVector3d(2.0 * std::sin(0.3 * time), 100.0, 1.5 * std::cos(0.2 * time));
            const double root[3] = {0.0, 0.0, yaw};
            session.motion.set_rotation(f, 0, euler_to_matrix(std::span(kRootChannels).subspan(3), root));
            const Segment& seg = segment_at(time);
            const double e = seg.kind >= 0 ? envelope(time, seg) : 0.0;
            for (std::size_t j = 1; j < joints; ++j) {
                double angles[3] = {0.0, 0.0, 0.0};
                if (seg.kind >= 0) {
                    const GestureKind& g = kinds[static_cast<std::size_t>(seg.kind)];
                    for (std::size_t a = 0; a < 3; ++a) {
                        angles[a] = e * (g.bias[j][a] + g.amplitude[j][a] *
                                                           std::sin(2.0 * kPi * g.frequency * (time - seg.start) +
                                                                    g.phase[j][a]));
                    }
                }
                // Slow idle sway keeps pauses from being perfectly still.
                angles[0] += 1.5 * std::sin(0.7 * time + static_cast<double>(j));
                session.motion.set_rotation(f, j, euler_to_matrix(kJointChannels, angles));
            }
        }

        for (const Segment& s : segments) {
            if (s.kind < 0) {
                continue;
            }
            for (double w = s.start + 0.05; w + 0.25 <= s.end; w += 0.3) {
                session.words.push_back({"w" + std::to_string(s.kind), w, w + 0.25});
                session.beats.push_back(w);
            }
        }

        session.audio.rate = opts.token_rate;
        session.audio.vocabulary = opts.vocabulary;
        const auto token_count = static_cast<std::size_t>(std::llround(opts.seconds * opts.token_rate));
        for (std::size_t i = 0; i < token_count; ++i) {
            const Segment& seg = segment_at(static_cast<double>(i) / opts.token_rate);
            if (seg.kind >= 0) {
                const auto& pool = kinds[static_cast<std::size_t>(seg.kind)].tokens;
                session.audio.tokens.push_back(pool[rng.below(pool.size())]);
            } else {
                session.audio.tokens.push_back(static_cast<std::uint32_t>(rng.below(8)));
            }
        }

        session.text.rate = opts.embedding_rate;
        const auto rows = static_cast<std::size_t>(std::ceil(opts.seconds * opts.embedding_rate));
        session.text.vectors.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(opts.embedding_dim));
        for (std::size_t r = 0; r < rows; ++r) {
            const Segment& seg = segment_at(static_cast<double>(r) / opts.embedding_rate);
            for (std::size_t c = 0; c < opts.embedding_dim; ++c) {
                const double base = seg.kind >= 0 ? kinds[static_cast<std::size_t>(seg.kind)].direction[
                                                        static_cast<Eigen::Index>(c)]
                                                  : (c == 0 ? 1.0 : 0.0);
                session.text.vectors(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
                    static_cast<float>(base + 0.05 * rng.normal());
            }
        }
        out.push_back(std::move(session));
    }
    return out;
}

void write_session(const SynthSession& s, const fs::path& dir)
{
    fs::create_directories(dir);
    save_bvh((dir / (s.id + ".bvh")).string(), s.motion);
    write_tokens(dir / (s.id + ".tok"), s.audio);
    write_embeddings(dir / (s.id + ".emb"), s.text);
    binary::write_text(dir / (s.id + ".words"), format_word_timings(s.words));
    write_beats(dir / (s.id + ".beats"), s.beats);
}

} // namespace gesmatch::cli
