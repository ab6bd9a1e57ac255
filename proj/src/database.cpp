#include "gesmatch/database.hpp"

#include "gesmatch/binary_io.hpp"
#include "gesmatch/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace gesmatch {

namespace fs = std::filesystem;
using nlohmann::json;

std::vector<WordTiming> parse_word_timings(const std::string& text, const std::string& origin)
{
    std::vector<WordTiming> out;
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        auto first = line.find_first_not_of(" \t");
        if (first == std::string::npos || line[first] == '#') {
            continue;
        }
        std::istringstream fields(line);
        WordTiming w;
        if (!(fields >> w.word >> w.start >> w.end) || w.end < w.start) {
            throw DataError(origin + " line " + std::to_string(line_no) + ": expected 'word start end'");
        }
        if (!out.empty() && w.start < out.back().start) {
            throw DataError(origin + " line " + std::to_string(line_no) + ": timings are not monotone");
        }
        out.push_back(std::move(w));
    }
    return out;
}

std::string format_word_timings(std::span<const WordTiming> words)
{
    std::string out;
    char buf[64];
    for (const auto& w : words) {
        std::snprintf(buf, sizeof buf, " %.6f %.6f\n", w.start, w.end);
        out += w.word;
        out += buf;
    }
    return out;
}

std::vector<ClipSpan> split_clips(std::size_t frames, double fps, std::size_t frames_per_code,
                                  std::span<const WordTiming> words, double gap_seconds)
{
    const std::size_t usable = frames / frames_per_code * frames_per_code;
    std::vector<ClipSpan> out;
    if (words.empty()) {
        if (usable > 0) {
            out.push_back({0, usable, 0, 0});
        }
        return out;
    }
    for (std::size_t i = 1; i < words.size(); ++i) {
        if (words[i].start < words[i - 1].start) {
            throw DataError("word timings are not monotone");
        }
    }
    auto emit = [&](std::size_t first, std::size_t last) {
        const double d = static_cast<double>(frames_per_code);
        const double start_steps = std::floor(words[first].start * fps / d);
        const double end_steps = std::ceil(words[last].end * fps / d);
        const auto start = static_cast<std::size_t>(std::max(0.0, start_steps)) * frames_per_code;
        const std::size_t end = std::min(static_cast<std::size_t>(std::max(0.0, end_steps)) * frames_per_code, usable);
        if (end > start) {
            out.push_back({start, end, first, last - first + 1});
        }
    };
    std::size_t first = 0;
    for (std::size_t i = 1; i < words.size(); ++i) {
        if (words[i].start - words[i - 1].end > gap_seconds) {
            emit(first, i - 1);
            first = i;
        }
    }
    emit(first, words.size() - 1);
    return out;
}

Eigen::MatrixXd GestureDatabase::phase_window(std::size_t clip, std::size_t step) const
{
    const auto np = static_cast<Eigen::Index>(settings.n_phase);
    return clips.at(clip).phases.middleRows(static_cast<Eigen::Index>(step) * np, np).cast<double>();
}

std::size_t GestureDatabase::occurrence_count() const
{
    std::size_t n = 0;
    for (const auto& c : clips) {
        n += c.steps();
    }
    return n;
}

void GestureDatabase::validate() const
{
    codebook.validate();
    if (code_frequency.size() != codebook.size()) {
        throw DataError("code frequency table does not match the codebook size");
    }
    if (count_codes(clips, codebook.size()) != code_frequency) {
        throw DataError("code frequency table is inconsistent with the clips");
    }
    if (settings.n_stride >= settings.n_phase) {
        throw DataError("n_stride must be smaller than n_phase");
    }
    for (const auto& c : clips) {
        const auto steps = static_cast<Eigen::Index>(c.steps());
        if (c.audio_windows.size() != c.steps() || c.text.rows() != steps ||
            c.phases.rows() != steps * static_cast<Eigen::Index>(settings.n_phase)) {
            throw DataError("clip '" + c.id + "': per-step arrays disagree with its code count");
        }
        if (c.text.cols() != static_cast<Eigen::Index>(embedding_dim)) {
            throw DataError("clip '" + c.id + "': embedding dimension mismatch");
        }
        if (c.phases.cols() != static_cast<Eigen::Index>(phase_width())) {
            throw DataError("clip '" + c.id + "': phase width mismatch");
        }
        for (std::uint32_t code : c.codes) {
            if (code >= codebook.size()) {
                throw DataError("clip '" + c.id + "' references code " + std::to_string(code) +
                                " outside the codebook");
            }
        }
    }
}

std::vector<std::size_t> count_codes(const std::vector<ClipRecord>& clips, std::size_t codebook_size)
{
    std::vector<std::size_t> counts(codebook_size, 0);
    for (const auto& c : clips) {
        for (std::uint32_t code : c.codes) {
            if (code < codebook_size) {
                ++counts[code];
            }
        }
    }
    return counts;
}

std::vector<std::uint32_t> step_audio_window(const TokenSequence& audio, std::size_t step, double window_seconds,
                                             std::size_t frames_per_code, double fps)
{
    const double center = step_center_seconds(step, frames_per_code, fps);
    if (center * audio.rate >= static_cast<double>(audio.tokens.size())) {
        return {};
    }
    auto w = token_window(audio, step, window_seconds / 2.0, frames_per_code, fps);
    return {w.begin(), w.end()};
}

GestureDatabase build_database(std::span<const SessionInput> sessions, const Model& model,
                               const DatabaseSettings& settings)
{
    if (settings.n_stride >= settings.n_phase) {
        throw UsageError("n_stride must be smaller than n_phase");
    }
    GestureDatabase db;
    db.settings = settings;
    db.codebook = model.codebook;
    db.basis = model.basis;
    db.skeleton = model.skeleton;
    db.joint_names = model.joint_names;
    const std::size_t d = model.codebook.window;
    bool have_dim = false;

    for (const auto& session : sessions) {
        const auto where = [&](const std::string& what) { return DataError(session.id + ": " + what); };
        if (std::abs(session.motion.fps - settings.fps) > 1e-4 * settings.fps) {
            throw where("motion fps " + std::to_string(session.motion.fps) + " does not match " +
                        std::to_string(settings.fps));
        }
        std::vector<std::size_t> joints;
        for (const auto& name : model.joint_names) {
            int j = session.motion.skeleton->find(name);
            if (j < 0) {
                throw where("skeleton lacks joint '" + name + "'");
            }
            joints.push_back(static_cast<std::size_t>(j));
        }
        try {
            session.audio.validate();
            session.text.validate();
        } catch (const DataError& e) {
            throw where(e.what());
        }
        if (session.text.rows() == 0) {
            throw where("empty embedding stream");
        }
        if (!have_dim) {
            db.embedding_dim = session.text.dim();
            have_dim = true;
        } else if (session.text.dim() != db.embedding_dim) {
            throw where("embedding dimension " + std::to_string(session.text.dim()) + " differs from " +
                        std::to_string(db.embedding_dim));
        }
        const std::size_t frames = session.motion.frames();
        if (frames < settings.n_phase || frames < 2) {
            throw where("recording is shorter than the phase window");
        }

        const CanonicalMotion canonical = canonicalize_root(session.motion);
        const Eigen::MatrixXd features = model.codebook.norm.apply(rotation_features(canonical.motion, joints));
        const LatentCurves curves = build_latent_curves(canonical.motion, joints, model.basis);
        std::size_t phase_frames = std::min(settings.phase_window_frames, frames);
        if (phase_frames % 2 == 0) {
            --phase_frames;
        }
        const PhaseManifold manifold = phase_manifold(curves, phase_frames);

        const auto spans = split_clips(frames, settings.fps, d, session.words, settings.clip_gap_seconds);
        for (std::size_t ci = 0; ci < spans.size(); ++ci) {
            const ClipSpan& span = spans[ci];
            ClipRecord clip;
            clip.id = session.id + "#" + std::to_string(ci);
            clip.source = session.id;
            clip.start_frame = span.start_frame;
            clip.words.assign(session.words.begin() + static_cast<std::ptrdiff_t>(span.first_word),
                              session.words.begin() + static_cast<std::ptrdiff_t>(span.first_word + span.word_count));

            const Eigen::MatrixXd windows = segment_windows(
                features.middleRows(static_cast<Eigen::Index>(span.start_frame),
                                    static_cast<Eigen::Index>(span.end_frame - span.start_frame)),
                d);
            clip.codes = encode(windows, model.codebook, settings.fps).codes;

            const std::size_t steps = clip.codes.size();
            const auto np = static_cast<Eigen::Index>(settings.n_phase);
            clip.text.resize(static_cast<Eigen::Index>(steps), static_cast<Eigen::Index>(db.embedding_dim));
            clip.phases.resize(static_cast<Eigen::Index>(steps) * np, manifold.values.cols());
            for (std::size_t s = 0; s < steps; ++s) {
                const std::size_t global = span.start_frame / d + s;
                clip.audio_windows.push_back(
                    step_audio_window(session.audio, global, settings.window_seconds, d, settings.fps));
                clip.text.row(static_cast<Eigen::Index>(s)) =
                    session.text.vectors.row(static_cast<Eigen::Index>(embedding_row_at(session.text, global, d, settings.fps)));
                const std::size_t begin = std::min(global * d, frames - settings.n_phase);
                clip.phases.middleRows(static_cast<Eigen::Index>(s) * np, np) =
                    manifold.values.middleRows(static_cast<Eigen::Index>(begin), np).cast<float>();
            }
            db.clips.push_back(std::move(clip));
        }
    }
    db.code_frequency = count_codes(db.clips, db.codebook.size());
    db.validate();
    return db;
}

// --- Persistence --------------------------------------------------------------

namespace {

std::vector<float> to_f32_row_major(const Eigen::MatrixXd& m)
{
    std::vector<float> out;
    out.reserve(static_cast<std::size_t>(m.size()));
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            out.push_back(static_cast<float>(m(r, c)));
        }
    }
    return out;
}

std::vector<float> to_f32_row_major(const Eigen::MatrixXf& m)
{
    std::vector<float> out;
    out.reserve(static_cast<std::size_t>(m.size()));
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            out.push_back(m(r, c));
        }
    }
    return out;
}

Eigen::MatrixXf from_f32_row_major(const std::vector<float>& v, std::size_t rows, std::size_t cols,
                                   const fs::path& origin)
{
    if (v.size() != rows * cols) {
        throw DataError(origin.string() + ": expected " + std::to_string(rows) + "x" + std::to_string(cols) +
                        " floats, found " + std::to_string(v.size()));
    }
    Eigen::MatrixXf m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
            m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = v[r * cols + c];
        }
    }
    return m;
}

std::vector<double> to_vector(const Eigen::VectorXd& v)
{
    return {v.data(), v.data() + v.size()};
}

Eigen::VectorXd to_eigen(const std::vector<double>& v)
{
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

json model_json(const Model& model)
{
    json j;
    j["fps"] = model.fps;
    j["frames_per_code"] = model.codebook.window;
    j["codebook_size"] = model.codebook.size();
    j["code_width"] = model.codebook.code_width();
    j["phase_channels"] = model.basis.channels();
    j["velocity_features"] = model.basis.features();
    j["joints"] = model.joint_names;
    j["feature_mean"] = to_vector(model.codebook.norm.mean);
    j["feature_std"] = to_vector(model.codebook.norm.std);
    j["feature_clamped"] = model.codebook.norm.clamped;
    j["files"] = {{"codebook", "codebook.f32"}, {"latent_basis", "latent_basis.f32"}, {"skeleton", "skeleton.bvh"}};
    return j;
}

void write_model_files(const Model& model, const fs::path& dir)
{
    binary::write_f32(dir / "codebook.f32", to_f32_row_major(model.codebook.centers));

    const LatentBasis& b = model.basis;
    std::vector<float> basis;
    for (double v : to_vector(b.mean)) {
        basis.push_back(static_cast<float>(v));
    }
    for (double v : to_vector(b.scale)) {
        basis.push_back(static_cast<float>(v));
    }
    for (float v : to_f32_row_major(b.components)) {
        basis.push_back(v);
    }
    for (double v : to_vector(b.variances)) {
        basis.push_back(static_cast<float>(v));
    }
    binary::write_f32(dir / "latent_basis.f32", basis);

    MotionSequence rest = MotionSequence::identity(model.skeleton, 1, model.fps);
    const int root = model.skeleton->root();
    rest.root_positions.row(0) = model.skeleton->offsets[static_cast<std::size_t>(root)].transpose();
    binary::write_text(dir / "skeleton.bvh", emit_bvh(rest));
}

Model read_model(const json& j, const fs::path& dir)
{
    Model model;
    model.fps = j.at("fps").get<double>();
    const auto d = j.at("frames_per_code").get<std::size_t>();
    const auto codes = j.at("codebook_size").get<std::size_t>();
    const auto width = j.at("code_width").get<std::size_t>();
    const auto channels = j.at("phase_channels").get<std::size_t>();
    const auto vel = j.at("velocity_features").get<std::size_t>();
    model.joint_names = j.at("joints").get<std::vector<std::string>>();

    model.skeleton = std::make_shared<const Skeleton>(*load_bvh((dir / "skeleton.bvh").string()).skeleton);
    std::vector<std::size_t> joints;
    for (const auto& name : model.joint_names) {
        int idx = model.skeleton->find(name);
        if (idx < 0) {
            throw DataError(dir.string() + ": skeleton lacks joint '" + name + "'");
        }
        joints.push_back(static_cast<std::size_t>(idx));
    }

    Codebook cb;
    cb.window = d;
    cb.joints = std::move(joints);
    cb.norm.mean = to_eigen(j.at("feature_mean").get<std::vector<double>>());
    cb.norm.std = to_eigen(j.at("feature_std").get<std::vector<double>>());
    cb.norm.clamped = j.at("feature_clamped").get<std::vector<bool>>();
    cb.centers = from_f32_row_major(binary::read_f32(dir / "codebook.f32"), codes, width, dir / "codebook.f32").cast<double>();
    cb.validate();
    model.codebook = std::move(cb);

    const auto raw = binary::read_f32(dir / "latent_basis.f32");
    if (raw.size() != 2 * vel + vel * channels + channels) {
        throw DataError((dir / "latent_basis.f32").string() + ": unexpected size");
    }
    LatentBasis b;
    b.mean.resize(static_cast<Eigen::Index>(vel));
    b.scale.resize(static_cast<Eigen::Index>(vel));
    b.variances.resize(static_cast<Eigen::Index>(channels));
    std::size_t at = 0;
    for (std::size_t i = 0; i < vel; ++i) {
        b.mean[static_cast<Eigen::Index>(i)] = raw[at++];
    }
    for (std::size_t i = 0; i < vel; ++i) {
        b.scale[static_cast<Eigen::Index>(i)] = raw[at++];
    }
    b.components.resize(static_cast<Eigen::Index>(vel), static_cast<Eigen::Index>(channels));
    for (std::size_t r = 0; r < vel; ++r) {
        for (std::size_t c = 0; c < channels; ++c) {
            b.components(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = raw[at++];
        }
    }
    for (std::size_t i = 0; i < channels; ++i) {
        b.variances[static_cast<Eigen::Index>(i)] = raw[at++];
    }
    model.basis = std::move(b);
    return model;
}

json parse_json_file(const fs::path& path)
{
    try {
        return json::parse(binary::read_text(path));
    } catch (const json::exception& e) {
        throw DataError(path.string() + ": " + e.what());
    }
}

std::string clip_stem(std::size_t index)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "clip_%05zu", index);
    return buf;
}

} // namespace

void save_model(const Model& model, const fs::path& dir)
{
    fs::create_directories(dir);
    write_model_files(model, dir);
    binary::write_text(dir / "model.json", model_json(model).dump(2) + "\n");
}

Model load_model(const fs::path& dir)
{
    try {
        return read_model(parse_json_file(dir / "model.json"), dir);
    } catch (const json::exception& e) {
        throw DataError((dir / "model.json").string() + ": " + e.what());
    }
}

void save_database(const GestureDatabase& db, const fs::path& dir)
{
    db.validate();
    fs::create_directories(dir / "clips");

    Model model{db.settings.fps, db.codebook, db.basis, db.skeleton, db.joint_names};
    write_model_files(model, dir);

    json manifest;
    manifest["format"] = kDatabaseFormat;
    manifest["model"] = model_json(model);
    manifest["fps"] = db.settings.fps;
    manifest["frames_per_code"] = db.codebook.window;
    manifest["codebook_size"] = db.codebook.size();
    manifest["phase_channels"] = db.basis.channels();
    manifest["n_phase"] = db.settings.n_phase;
    manifest["n_stride"] = db.settings.n_stride;
    manifest["window_seconds"] = db.settings.window_seconds;
    manifest["phase_window_frames"] = db.settings.phase_window_frames;
    manifest["clip_gap_seconds"] = db.settings.clip_gap_seconds;
    manifest["vocabulary"] = db.settings.vocabulary;
    manifest["embedding_dim"] = db.embedding_dim;
    manifest["code_frequency"] = db.code_frequency;

    json clips = json::array();
    for (std::size_t i = 0; i < db.clips.size(); ++i) {
        const ClipRecord& c = db.clips[i];
        const std::string stem = clip_stem(i);
        std::vector<std::uint32_t> tokens;
        std::vector<std::uint32_t> offsets{0};
        for (const auto& w : c.audio_windows) {
            tokens.insert(tokens.end(), w.begin(), w.end());
            offsets.push_back(static_cast<std::uint32_t>(tokens.size()));
        }
        binary::write_u32(dir / "clips" / (stem + ".codes.u32"), c.codes);
        binary::write_u32(dir / "clips" / (stem + ".tokens.u32"), tokens);
        binary::write_u32(dir / "clips" / (stem + ".token_offsets.u32"), offsets);
        binary::write_f32(dir / "clips" / (stem + ".text.f32"), to_f32_row_major(c.text));
        binary::write_f32(dir / "clips" / (stem + ".phase.f32"), to_f32_row_major(c.phases));

        json words = json::array();
        for (const auto& w : c.words) {
            words.push_back({w.word, w.start, w.end});
        }
        clips.push_back({{"id", c.id},
                         {"source", c.source},
                         {"start_frame", c.start_frame},
                         {"steps", c.steps()},
                         {"stem", "clips/" + stem},
                         {"words", words}});
    }
    manifest["clips"] = clips;
    binary::write_text(dir / "manifest.json", manifest.dump(2) + "\n");
}

GestureDatabase load_database(const fs::path& dir)
{
    const json manifest = parse_json_file(dir / "manifest.json");
    try {
        if (manifest.at("format").get<std::string>() != kDatabaseFormat) {
            throw DataError((dir / "manifest.json").string() + ": unsupported format '" +
                            manifest.at("format").get<std::string>() + "'");
        }
        Model model = read_model(manifest.at("model"), dir);
        GestureDatabase db;
        db.codebook = std::move(model.codebook);
        db.basis = std::move(model.basis);
        db.skeleton = std::move(model.skeleton);
        db.joint_names = std::move(model.joint_names);
        db.settings.fps = manifest.at("fps").get<double>();
        db.settings.n_phase = manifest.at("n_phase").get<std::size_t>();
        db.settings.n_stride = manifest.at("n_stride").get<std::size_t>();
        db.settings.window_seconds = manifest.at("window_seconds").get<double>();
        db.settings.phase_window_frames = manifest.at("phase_window_frames").get<std::size_t>();
        db.settings.clip_gap_seconds = manifest.at("clip_gap_seconds").get<double>();
        db.settings.vocabulary = manifest.at("vocabulary").get<std::uint32_t>();
        db.embedding_dim = manifest.at("embedding_dim").get<std::size_t>();
        db.code_frequency = manifest.at("code_frequency").get<std::vector<std::size_t>>();

        const std::size_t width = db.phase_width();
        for (const auto& jc : manifest.at("clips")) {
            ClipRecord c;
            c.id = jc.at("id").get<std::string>();
            c.source = jc.at("source").get<std::string>();
            c.start_frame = jc.at("start_frame").get<std::size_t>();
            const auto steps = jc.at("steps").get<std::size_t>();
            const fs::path stem = dir / jc.at("stem").get<std::string>();
            const auto with = [&](const char* ext) { return fs::path(stem.string() + ext); };

            c.codes = binary::read_u32(with(".codes.u32"));
            const auto tokens = binary::read_u32(with(".tokens.u32"));
            const auto offsets = binary::read_u32(with(".token_offsets.u32"));
            if (c.codes.size() != steps || offsets.size() != steps + 1 || offsets.back() != tokens.size()) {
                throw DataError(stem.string() + ": code or token arrays disagree with the manifest");
            }
            for (std::size_t s = 0; s < steps; ++s) {
                if (offsets[s] > offsets[s + 1]) {
                    throw DataError(stem.string() + ": token offsets are not monotone");
                }
                c.audio_windows.emplace_back(tokens.begin() + offsets[s], tokens.begin() + offsets[s + 1]);
            }
            c.text = from_f32_row_major(binary::read_f32(with(".text.f32")), steps, db.embedding_dim, with(".text.f32"));
            c.phases = from_f32_row_major(binary::read_f32(with(".phase.f32")), steps * db.settings.n_phase, width,
                                          with(".phase.f32"));
            for (const auto& w : jc.at("words")) {
                c.words.push_back({w.at(0).get<std::string>(), w.at(1).get<double>(), w.at(2).get<double>()});
            }
            db.clips.push_back(std::move(c));
        }
        db.validate();
        return db;
    } catch (const json::exception& e) {
        throw DataError((dir / "manifest.json").string() + ": " + e.what());
    }
}

} // namespace gesmatch
