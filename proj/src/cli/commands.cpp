#include "gesmatch/cli.hpp"

#include "gesmatch/binary_io.hpp"
#include "gesmatch/codebook.hpp"
#include "gesmatch/error.hpp"
#include "gesmatch/matcher.hpp"
#include "gesmatch/metrics.hpp"
#include "gesmatch/phase.hpp"
#include "gesmatch/stream_io.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <optional>
#include <ostream>
#include <sstream>

namespace gesmatch::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string num(double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

std::vector<fs::path> list_files(const fs::path& dir, const std::string& ext)
{
    if (!fs::is_directory(dir)) {
        throw DataError(dir.string() + ": not a directory");
    }
    std::vector<fs::path> out;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ext) {
            out.push_back(entry.path());
        }
    }
    std::sort(out.begin(), out.end());
    if (out.empty()) {
        throw DataError(dir.string() + ": no " + ext + " files");
    }
    return out;
}

MotionSequence load_motion(const fs::path& file, double fps)
{
    MotionSequence m;
    try {
        m = load_bvh(file.string());
    } catch (const DataError& e) {
        throw DataError(file.string() + ": " + e.what());
    }
    if (std::abs(m.fps - fps) > 1e-4 * fps) {
        throw DataError(file.string() + ": motion fps " + num(m.fps) + " does not match " + num(fps));
    }
    return m;
}

std::vector<std::size_t> resolve_joints(const Skeleton& s, std::span<const std::string> names, const fs::path& file)
{
    std::vector<std::size_t> out;
    for (const auto& name : names) {
        const int j = s.find(name);
        if (j < 0) {
            throw DataError(file.string() + ": skeleton lacks joint '" + name + "'");
        }
        out.push_back(static_cast<std::size_t>(j));
    }
    return out;
}

std::vector<std::string> joint_names_of(const Skeleton& s, std::span<const std::size_t> joints)
{
    std::vector<std::string> out;
    for (std::size_t j : joints) {
        out.push_back(s.joint_names[j]);
    }
    return out;
}

void print_top_codes(std::ostream& out, std::span<const std::size_t> frequency, std::size_t limit = 15)
{
    std::vector<std::pair<std::uint32_t, std::size_t>> ranked;
    std::size_t total = 0;
    for (std::size_t c = 0; c < frequency.size(); ++c) {
        total += frequency[c];
        if (frequency[c] > 0) {
            ranked.emplace_back(static_cast<std::uint32_t>(c), frequency[c]);
        }
    }
    std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
    out << "codes used: " << ranked.size() << " of " << frequency.size() << "\n";
    out << "rank code count share\n";
    for (std::size_t i = 0; i < std::min(limit, ranked.size()); ++i) {
        const double share = total ? static_cast<double>(ranked[i].second) / static_cast<double>(total) : 0.0;
        char buf[96];
        std::snprintf(buf, sizeof buf, "%4zu %4u %5zu %.4f\n", i + 1, ranked[i].first, ranked[i].second, share);
        out << buf;
    }
}

void write_json(const fs::path& file, const json& j)
{
    binary::write_text(file, j.dump(2) + "\n");
}

// --- synth -------------------------------------------------------------------

struct SynthArgs {
    std::string out;
    SynthOptions opts;
};

void cmd_synth(const SynthArgs& a, const EngineConfig& cfg, std::ostream& out)
{
    SynthOptions opts = a.opts;
    opts.fps = cfg.fps;
    opts.vocabulary = cfg.vocabulary;
    const auto sessions = synth_corpus(opts);
    for (const auto& s : sessions) {
        write_session(s, a.out);
    }
    out << "wrote " << sessions.size() << " sessions of " << num(opts.seconds) << " s to " << a.out << "\n";
}

// --- fit ---------------------------------------------------------------------

struct FitArgs {
    std::string motion;
    std::string out;
};

void cmd_fit(const FitArgs& a, const EngineConfig& cfg, std::ostream& out)
{
    const auto files = list_files(a.motion, ".bvh");
    std::vector<MotionSequence> motions;
    for (const auto& f : files) {
        motions.push_back(load_motion(f, cfg.fps));
    }
    const Skeleton& first = *motions.front().skeleton;
    const std::vector<std::size_t> model_joints = select_joints(first, cfg.joints);
    const std::vector<std::string> names = joint_names_of(first, model_joints);

    std::vector<Eigen::MatrixXd> features;
    std::vector<Eigen::MatrixXd> velocities;
    Eigen::Index total_frames = 0;
    for (std::size_t i = 0; i < motions.size(); ++i) {
        const auto joints = resolve_joints(*motions[i].skeleton, names, files[i]);
        const CanonicalMotion canonical = canonicalize_root(motions[i]);
        features.push_back(rotation_features(canonical.motion, joints));
        velocities.push_back(rotational_velocity(canonical.motion, joints));
        total_frames += features.back().rows();
    }
    Eigen::MatrixXd stacked(total_frames, features.front().cols());
    Eigen::Index row = 0;
    for (const auto& f : features) {
        stacked.middleRows(row, f.rows()) = f;
        row += f.rows();
    }
    const FeatureNorm norm = FeatureNorm::fit(stacked);

    std::vector<Eigen::MatrixXd> window_sets;
    Eigen::Index window_count = 0;
    for (std::size_t i = 0; i < features.size(); ++i) {
        if (static_cast<std::size_t>(features[i].rows()) < cfg.frames_per_code) {
            throw DataError(files[i].string() + ": shorter than one code window");
        }
        window_sets.push_back(segment_windows(norm.apply(features[i]), cfg.frames_per_code));
        window_count += window_sets.back().rows();
    }
    Eigen::MatrixXd windows(window_count, window_sets.front().cols());
    row = 0;
    for (const auto& w : window_sets) {
        windows.middleRows(row, w.rows()) = w;
        row += w.rows();
    }

    KMeansReport report;
    Model model;
    model.fps = cfg.fps;
    model.codebook =
        fit_codebook(windows, cfg.codebook_size, cfg.frames_per_code, norm, model_joints, cfg.seed, &report);
    model.basis = fit_latent_basis(velocities, cfg.phase_channels);
    model.skeleton = motions.front().skeleton;
    model.joint_names = names;
    save_model(model, a.out);

    const double final_error = report.error_history.empty() ? 0.0 : report.error_history.back();
    json r;
    r["engine_version"] = kEngineVersion;
    r["config_hash"] = hex64(cfg.hash());
    r["seed"] = cfg.seed;
    r["files"] = files.size();
    r["frames"] = total_frames;
    r["windows"] = window_count;
    r["codes"] = cfg.codebook_size;
    r["rounds"] = report.iterations;
    r["converged"] = report.converged;
    r["reseeded"] = report.reseeded;
    r["error_history"] = report.error_history;
    r["clamped_channels"] = std::count(norm.clamped.begin(), norm.clamped.end(), true);
    write_json(fs::path(a.out) / "fit_report.json", r);

    out << "files " << files.size() << ", frames " << total_frames << ", windows " << window_count << "\n";
    out << "codebook " << cfg.codebook_size << " x " << model.codebook.code_width() << ", rounds " << report.iterations
        << (report.converged ? " (converged)" : " (round limit)") << ", reseeded " << report.reseeded << "\n";
    out << "quantization error " << num(final_error) << " total, "
        << num(final_error / static_cast<double>(window_count)) << " per window\n";
    out << "latent channels " << model.basis.channels() << "\n";
}

// --- build-db ------------------------------------------------------------------

struct BuildArgs {
    std::string model;
    std::string data;
    std::string out;
};

SessionInput load_session(const fs::path& bvh, double fps)
{
    SessionInput s;
    s.id = bvh.stem().string();
    s.motion = load_motion(bvh, fps);
    fs::path stem = bvh;
    stem.replace_extension();
    s.audio = read_tokens(with_suffix(stem, ".tok"));
    s.text = read_embeddings(with_suffix(stem, ".emb"));
    const fs::path words = with_suffix(stem, ".words");
    if (fs::exists(words)) {
        s.words = parse_word_timings(binary::read_text(words), words.string());
    }
    return s;
}

void cmd_build_db(const BuildArgs& a, const EngineConfig& cfg, std::ostream& out)
{
    const Model model = load_model(a.model);
    DatabaseSettings settings = cfg.database_settings();
    settings.fps = model.fps;
    std::vector<SessionInput> sessions;
    for (const auto& f : list_files(a.data, ".bvh")) {
        sessions.push_back(load_session(f, model.fps));
        if (sessions.back().audio.vocabulary > settings.vocabulary) {
            throw DataError(f.string() + ": token vocabulary exceeds " + std::to_string(settings.vocabulary));
        }
    }
    const GestureDatabase db = build_database(sessions, model, settings);
    save_database(db, a.out);
    out << "sessions " << sessions.size() << ", clips " << db.clips.size() << ", steps " << db.occurrence_count()
        << "\n";
    print_top_codes(out, db.code_frequency);
}

// --- match ---------------------------------------------------------------------

struct MatchArgs {
    std::string db;
    std::string query;
    std::string out;
    std::optional<std::size_t> steps;
    std::optional<std::size_t> k;
    std::optional<double> freq_weight;
    std::optional<std::uint64_t> seed;
    std::string mask;
    std::string init = "frequent";
    std::optional<std::uint32_t> init_code;
    std::string replace;
    std::string constraint;
    bool normalized = false;
};

std::vector<bool> read_mask(const fs::path& file)
{
    std::istringstream in(binary::read_text(file));
    std::vector<bool> mask;
    std::string tok;
    while (in >> tok) {
        if (tok == "1") {
            mask.push_back(true);
        } else if (tok == "0") {
            mask.push_back(false);
        } else {
            throw DataError(file.string() + ": mask entries must be 0 or 1, found '" + tok + "'");
        }
    }
    return mask;
}

std::uint32_t parse_code(const std::string& s, const std::string& what)
{
    if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos || s.size() > 9) {
        throw UsageError(what + ": '" + s + "' is not a code index");
    }
    return static_cast<std::uint32_t>(std::stoul(s));
}

struct Constraint {
    std::string joint = "LeftHand";
    double threshold = 0.0;
};

Constraint parse_constraint(const std::string& spec)
{
    const std::string prefix = "wrist-above:";
    if (spec.rfind(prefix, 0) != 0) {
        throw UsageError("--constraint must be wrist-above:R or wrist-above:JOINT:R");
    }
    Constraint c;
    std::string rest = spec.substr(prefix.size());
    if (const auto colon = rest.rfind(':'); colon != std::string::npos) {
        c.joint = rest.substr(0, colon);
        rest = rest.substr(colon + 1);
    }
    std::size_t used = 0;
    try {
        c.threshold = std::stod(rest, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != rest.size() || !std::isfinite(c.threshold) || c.joint.empty()) {
        throw UsageError("--constraint: '" + spec + "' has no valid threshold");
    }
    return c;
}

void cmd_match(const MatchArgs& a, const EngineConfig& cfg, std::ostream& out, std::ostream& err)
{
    if (a.init != "frequent" && a.init != "random") {
        throw UsageError("--init must be 'frequent' or 'random'");
    }
    std::optional<std::pair<std::uint32_t, std::uint32_t>> replace;
    if (!a.replace.empty()) {
        const auto colon = a.replace.find(':');
        if (colon == std::string::npos) {
            throw UsageError("--replace must be FROM:TO");
        }
        replace.emplace(parse_code(a.replace.substr(0, colon), "--replace"),
                        parse_code(a.replace.substr(colon + 1), "--replace"));
    }
    std::optional<Constraint> constraint;
    if (!a.constraint.empty()) {
        constraint = parse_constraint(a.constraint);
    }

    const GestureDatabase db = load_database(a.db);
    const double fps = db.settings.fps;
    const std::size_t d = db.codebook.window;

    MatchQuery q;
    q.audio = read_tokens(with_suffix(a.query, ".tok"));
    q.text = read_embeddings(with_suffix(a.query, ".emb"));
    if (a.steps) {
        q.steps = *a.steps;
    } else {
        const double seconds = static_cast<double>(q.audio.tokens.size()) / q.audio.rate;
        q.steps = static_cast<std::size_t>(std::floor(seconds * fps / static_cast<double>(d) + 1e-9));
        if (q.steps == 0) {
            throw DataError(a.query + ": query is shorter than one code step");
        }
    }
    q.k = a.k.value_or(cfg.k);
    q.freq_weight = a.freq_weight.value_or(cfg.freq_weight);
    q.normalized_levenshtein = a.normalized;
    const std::uint64_t seed = a.seed.value_or(cfg.seed);
    if (a.init_code) {
        if (*a.init_code >= db.codebook.size()) {
            throw UsageError("--init-code must be below " + std::to_string(db.codebook.size()));
        }
        q.initial_code = *a.init_code;
    } else {
        q.initial_code = a.init == "random" ? random_code(db, seed) : most_frequent_code(db);
    }
    q.initial_phase = initial_phase_for(db, q.initial_code);
    if (!a.mask.empty()) {
        q.step_mask = read_mask(a.mask);
        if (q.step_mask.size() != q.steps) {
            throw UsageError("mask has " + std::to_string(q.step_mask.size()) + " entries for " +
                             std::to_string(q.steps) + " query steps");
        }
        if (!constraint) {
            err << "warning: --mask has no effect without --constraint\n";
        }
    }
    std::size_t allowed_count = db.codebook.size();
    if (constraint) {
        q.allowed_codes = wrist_above(db, constraint->joint, constraint->threshold);
        allowed_count = static_cast<std::size_t>(std::count(q.allowed_codes.begin(), q.allowed_codes.end(), true));
    }

    MatchResult result = search(db, q);
    const std::vector<std::uint32_t> searched = result.codes;
    bool replaced = false;
    if (replace) {
        replaced = std::find(result.codes.begin(), result.codes.end(), replace->first) != result.codes.end();
        if (!replaced) {
            err << "warning: code " << replace->first << " does not occur in the result; output unchanged\n";
        }
        result = replace_code(result, replace->first, replace->second, db);
    }

    fs::create_directories(a.out);
    const fs::path dir = a.out;
    std::string codes_text;
    for (auto c : result.codes) {
        codes_text += std::to_string(c) + "\n";
    }
    binary::write_text(dir / "codes.txt", codes_text);

    std::string csv = "step,source,chosen,masked,pose_distance,pose_rank,"
                      "audio_code,audio_distance,audio_rank,audio_fused,audio_clip,audio_step,audio_phase,"
                      "text_code,text_distance,text_rank,text_fused,text_clip,text_step,text_phase\n";
    for (std::size_t s = 0; s < result.traces.size(); ++s) {
        const StepTrace& t = result.traces[s];
        const auto pose_rank = relrank(t.pose_distance);
        const auto audio_rank = relrank(t.audio_distance);
        const auto text_rank = relrank(t.text_distance);
        csv += std::to_string(s) + "," + source_name(t.source) + "," + std::to_string(t.chosen) + "," +
               (t.masked ? "1" : "0") + "," + num(t.pose_distance[t.chosen]) + "," + num(pose_rank[t.chosen]) + ",";
        csv += std::to_string(t.audio.code) + "," + num(t.audio_distance[t.audio.code]) + "," +
               num(audio_rank[t.audio.code]) + "," + num(t.audio.fused) + "," + db.clips[t.audio_occurrence.clip].id +
               "," + std::to_string(t.audio_occurrence.step) + "," + num(t.audio_phase_score) + ",";
        csv += std::to_string(t.text.code) + "," + num(t.text_distance[t.text.code]) + "," +
               num(text_rank[t.text.code]) + "," + num(t.text.fused) + "," + db.clips[t.text_occurrence.clip].id + "," +
               std::to_string(t.text_occurrence.step) + "," + num(t.text_phase_score) + "\n";
    }
    binary::write_text(dir / "trace.csv", csv);
    save_bvh((dir / "result.bvh").string(), result.decoded);

    json r;
    r["engine_version"] = kEngineVersion;
    r["config_hash"] = hex64(cfg.hash());
    r["seed"] = seed;
    r["init"] = a.init_code ? "code" : a.init;
    r["initial_code"] = q.initial_code;
    r["steps"] = q.steps;
    r["k"] = q.k;
    r["freq_weight"] = q.freq_weight;
    r["normalized_levenshtein"] = q.normalized_levenshtein;
    r["codes"] = result.codes;
    r["searched_codes"] = searched;
    std::vector<std::string> sources;
    for (auto s : result.sources) {
        sources.emplace_back(source_name(s));
    }
    r["sources"] = sources;
    if (replace) {
        r["replace"] = {{"from", replace->first}, {"to", replace->second}, {"applied", replaced}};
    }
    if (constraint) {
        r["constraint"] = {{"kind", "wrist-above"},
                           {"joint", constraint->joint},
                           {"threshold", constraint->threshold},
                           {"allowed_codes", allowed_count}};
    }
    write_json(dir / "result.json", r);

    const auto audio_steps = std::count(result.sources.begin(), result.sources.end(), Source::Audio);
    out << "steps " << q.steps << ", audio " << audio_steps << ", text "
        << static_cast<std::ptrdiff_t>(q.steps) - audio_steps << "\n";
    out << "wrote " << (dir / "codes.txt").string() << ", trace.csv, result.bvh, result.json\n";
}

// --- metrics -------------------------------------------------------------------

struct MetricsArgs {
    std::string ref;
    std::string gen;
    std::string out;
    std::string beats;
    bool beat_align = false;
    std::optional<std::uint64_t> seed;
};

struct Clip {
    fs::path file;
    PositionSequence positions;
};

PositionSequence select_positions(const PositionSequence& p, std::span<const std::size_t> joints)
{
    PositionSequence out;
    out.fps = p.fps;
    out.joints = joints.size();
    out.positions.resize(p.positions.rows(), static_cast<Eigen::Index>(joints.size() * 3));
    for (std::size_t i = 0; i < joints.size(); ++i) {
        out.positions.middleCols(static_cast<Eigen::Index>(i * 3), 3) =
            p.positions.middleCols(static_cast<Eigen::Index>(joints[i] * 3), 3);
    }
    return out;
}

std::vector<Clip> load_clips(const std::vector<fs::path>& files, double fps, std::span<const std::string> names)
{
    std::vector<Clip> out;
    for (const auto& f : files) {
        const MotionSequence m = load_motion(f, fps);
        const auto joints = resolve_joints(*m.skeleton, names, f);
        out.push_back({f, select_positions(forward_kinematics(*m.skeleton, m), joints)});
    }
    return out;
}

Eigen::MatrixXd stack_rows(std::span<const Clip> clips, std::optional<std::vector<Eigen::Index>> lengths = {})
{
    Eigen::Index rows = 0;
    for (std::size_t i = 0; i < clips.size(); ++i) {
        rows += lengths ? (*lengths)[i] : clips[i].positions.positions.rows();
    }
    Eigen::MatrixXd out(rows, clips.front().positions.positions.cols());
    Eigen::Index r = 0;
    for (std::size_t i = 0; i < clips.size(); ++i) {
        const Eigen::Index n = lengths ? (*lengths)[i] : clips[i].positions.positions.rows();
        out.middleRows(r, n) = clips[i].positions.positions.topRows(n);
        r += n;
    }
    return out;
}

void cmd_metrics(const MetricsArgs& a, const EngineConfig& cfg, std::ostream& out)
{
    if (a.beat_align && a.beats.empty()) {
        throw UsageError("--beat-align needs --beats DIR");
    }
    const auto ref_files = list_files(a.ref, ".bvh");
    const auto gen_files = list_files(a.gen, ".bvh");
    std::vector<fs::path> beat_files;
    if (a.beat_align) {
        for (const auto& g : gen_files) {
            fs::path b = fs::path(a.beats) / g.filename();
            b.replace_extension(".beats");
            if (!fs::exists(b)) {
                throw DataError("missing beats file " + b.string() + " for " + g.string());
            }
            beat_files.push_back(b);
        }
    }

    const MotionSequence probe = load_motion(ref_files.front(), cfg.fps);
    const std::vector<std::string> names = joint_names_of(*probe.skeleton, select_joints(*probe.skeleton, cfg.joints));
    const std::vector<Clip> ref = load_clips(ref_files, cfg.fps, names);
    const std::vector<Clip> gen = load_clips(gen_files, cfg.fps, names);
    const std::uint64_t seed = a.seed.value_or(cfg.seed);

    json report;
    report["engine_version"] = kEngineVersion;
    report["config_hash"] = hex64(cfg.hash());
    report["seeds"] = {{"diversity", seed}};
    report["joints"] = names;
    report["reference_clips"] = ref.size();
    report["generated_clips"] = gen.size();
    json metrics = json::object();
    std::string csv = "metric,value,stddev,status,note\n";
    auto record = [&](const std::string& name, double value, std::optional<double> spread, const std::string& note) {
        json m = {{"value", value}, {"status", "ok"}};
        if (spread) {
            m["stddev"] = *spread;
        }
        if (!note.empty()) {
            m["note"] = note;
        }
        metrics[name] = m;
        csv += name + "," + num(value) + "," + (spread ? num(*spread) : "") + ",ok," + note + "\n";
        out << name << " = " << num(value) << (spread ? " +- " + num(*spread) : "") << "\n";
    };
    auto unavailable = [&](const std::string& name, const std::string& note) {
        metrics[name] = {{"value", nullptr}, {"status", "unavailable"}, {"note", note}};
        csv += name + ",,,unavailable," + note + "\n";
        out << name << " unavailable: " << note << "\n";
    };

    std::vector<PositionSequence> ref_pos;
    std::vector<PositionSequence> gen_pos;
    for (const auto& c : ref) {
        ref_pos.push_back(c.positions);
    }
    for (const auto& c : gen) {
        gen_pos.push_back(c.positions);
    }
    const metrics::HistogramBins bins{cfg.hist_bin_width, cfg.hist_max};
    record("hellinger_average", metrics::hellinger_average(ref_pos, gen_pos, bins), std::nullopt,
           "per-joint speed histograms pooled over frames, averaged over joints");
    record("fgd_raw", metrics::fgd_raw(stack_rows(ref), stack_rows(gen)), std::nullopt, "");
    unavailable("fgd_feature", "needs a trained feature extractor");

    if (ref.size() == gen.size()) {
        std::vector<Eigen::Index> lengths;
        std::vector<Eigen::MatrixXd> xs;
        std::vector<Eigen::MatrixXd> ys;
        for (std::size_t i = 0; i < ref.size(); ++i) {
            lengths.push_back(std::min(ref[i].positions.positions.rows(), gen[i].positions.positions.rows()));
            xs.push_back(ref[i].positions.positions.topRows(lengths.back()));
            ys.push_back(gen[i].positions.positions.topRows(lengths.back()));
        }
        record("cca_global", metrics::cca_first(stack_rows(ref, lengths), stack_rows(gen, lengths)), std::nullopt,
               "clips paired by sorted file name, truncated to the shorter");
        record("cca_per_sequence", metrics::cca_per_sequence(xs, ys), std::nullopt, "");
    } else {
        unavailable("cca_global", "reference and generated clip counts differ");
        unavailable("cca_per_sequence", "reference and generated clip counts differ");
    }

    for (const auto& [label, set] : {std::pair{"generated", &gen_pos}, std::pair{"reference", &ref_pos}}) {
        std::vector<double> jerk;
        std::vector<double> acc;
        for (const auto& p : *set) {
            jerk.push_back(metrics::average_jerk(p));
            acc.push_back(metrics::average_acceleration(p));
        }
        const auto j = metrics::mean_and_spread(jerk);
        const auto ac = metrics::mean_and_spread(acc);
        record(std::string("jerk_") + label, j.mean, j.stddev, "");
        record(std::string("acceleration_") + label, ac.mean, ac.stddev, "");
    }

    if (gen.size() >= 2) {
        Eigen::MatrixXd means(static_cast<Eigen::Index>(gen.size()), gen.front().positions.positions.cols());
        for (std::size_t i = 0; i < gen.size(); ++i) {
            means.row(static_cast<Eigen::Index>(i)) = metrics::mean_pose(gen[i].positions);
        }
        record("diversity", metrics::diversity(means, cfg.diversity_pairs, seed), std::nullopt, "");
    } else {
        unavailable("diversity", "needs at least 2 generated clips");
    }

    if (a.beat_align) {
        std::vector<double> scores;
        std::size_t flagged = 0;
        for (std::size_t i = 0; i < gen.size(); ++i) {
            const auto audio = read_beats(beat_files[i]);
            const auto gesture = metrics::gesture_beats(gen[i].positions);
            const auto ba = metrics::beat_align(audio, gesture, cfg.beat_sigma);
            scores.push_back(ba.score);
            flagged += ba.no_gesture_beats ? 1 : 0;
        }
        const auto s = metrics::mean_and_spread(scores);
        record("beat_align", s.mean, s.stddev,
               flagged ? std::to_string(flagged) + " clips without gesture beats scored 0" : "");
    }

    report["metrics"] = metrics;
    fs::create_directories(a.out);
    write_json(fs::path(a.out) / "report.json", report);
    binary::write_text(fs::path(a.out) / "report.csv", csv);
}

// --- inspect -------------------------------------------------------------------

void cmd_inspect(const std::string& target, std::ostream& out)
{
    const fs::path p = target;
    if (fs::is_directory(p) && fs::exists(p / "manifest.json")) {
        const GestureDatabase db = load_database(p);
        out << "database " << kDatabaseFormat << "\n";
        out << "fps " << num(db.settings.fps) << ", d " << db.codebook.window << ", codes " << db.codebook.size()
            << ", phase channels " << db.basis.channels() << ", n_phase " << db.settings.n_phase << ", n_stride "
            << db.settings.n_stride << ", embedding dim " << db.embedding_dim << "\n";
        out << "clips " << db.clips.size() << ", steps " << db.occurrence_count() << "\n";
        print_top_codes(out, db.code_frequency);
    } else if (fs::is_directory(p) && fs::exists(p / "model.json")) {
        const Model m = load_model(p);
        out << "model: fps " << num(m.fps) << ", d " << m.codebook.window << ", codes " << m.codebook.size()
            << ", joints " << m.joint_names.size() << ", phase channels " << m.basis.channels() << "\n";
    } else if (p.extension() == ".bvh") {
        const MotionSequence m = load_bvh(p.string());
        out << "bvh: joints " << m.joints() << ", frames " << m.frames() << ", fps " << num(m.fps) << "\n";
    } else if (p.extension() == ".tok") {
        const TokenSequence t = read_tokens(p);
        out << "tokens: count " << t.tokens.size() << ", rate " << num(t.rate) << ", vocabulary " << t.vocabulary
            << "\n";
    } else if (p.extension() == ".emb") {
        const EmbeddingSequence e = read_embeddings(p);
        out << "embeddings: rows " << e.rows() << ", dim " << e.dim() << ", rate " << num(e.rate) << "\n";
    } else {
        throw UsageError("cannot inspect '" + target + "': expected a database or model directory, .bvh, .tok or .emb");
    }
}

} // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Motion-matching gesture engine", "gesmatch"};
    app.require_subcommand(1);
    app.fallthrough();
    std::string config_path;
    std::vector<std::string> overrides;
    app.add_option("--config", config_path, "Config file of key = value lines");
    app.add_option("--set", overrides, "Config override key=value (repeatable)");

    SynthArgs synth;
    auto* synth_cmd = app.add_subcommand("synth", "Write a synthetic corpus");
    synth_cmd->add_option("--out", synth.out, "Output directory")->required();
    synth_cmd->add_option("--sessions", synth.opts.sessions, "Number of recordings");
    synth_cmd->add_option("--seconds", synth.opts.seconds, "Length of each recording");
    synth_cmd->add_option("--kinds", synth.opts.gesture_kinds, "Number of gesture kinds");
    synth_cmd->add_option("--dim", synth.opts.embedding_dim, "Embedding dimension");
    synth_cmd->add_option("--seed", synth.opts.seed, "Generator seed");

    FitArgs fit;
    auto* fit_cmd = app.add_subcommand("fit", "Fit the codebook and latent basis");
    fit_cmd->add_option("--motion", fit.motion, "Directory of .bvh files")->required();
    fit_cmd->add_option("--out", fit.out, "Model directory")->required();

    BuildArgs build;
    auto* build_cmd = app.add_subcommand("build-db", "Build the clip database");
    build_cmd->add_option("--model", build.model, "Model directory")->required();
    build_cmd->add_option("--data", build.data, "Directory of .bvh/.tok/.emb/.words sessions")->required();
    build_cmd->add_option("--out", build.out, "Database directory")->required();

    MatchArgs match;
    auto* match_cmd = app.add_subcommand("match", "Search the database for a speech query");
    match_cmd->add_option("--db", match.db, "Database directory")->required();
    match_cmd->add_option("--query", match.query, "Query stem: STEM.tok and STEM.emb")->required();
    match_cmd->add_option("--out", match.out, "Result directory")->required();
    match_cmd->add_option("--steps", match.steps, "Code steps to generate (default: query length)");
    match_cmd->add_option("--k", match.k, "Take the k-th best fused candidate");
    match_cmd->add_option("--freq-weight", match.freq_weight, "Weight of the code frequency rank");
    match_cmd->add_option("--seed", match.seed, "Seed for --init random");
    match_cmd->add_option("--mask", match.mask, "File of per-step 0/1 flags");
    match_cmd->add_option("--init", match.init, "Initial code: frequent or random");
    match_cmd->add_option("--init-code", match.init_code, "Initial code index (overrides --init)");
    match_cmd->add_option("--replace", match.replace, "Replace code FROM with TO after the search");
    match_cmd->add_option("--constraint", match.constraint, "wrist-above:R or wrist-above:JOINT:R");
    match_cmd->add_flag("--normalized", match.normalized, "Length-normalized Levenshtein distance");

    MetricsArgs met;
    auto* metrics_cmd = app.add_subcommand("metrics", "Evaluate generated motion against reference motion");
    metrics_cmd->add_option("--ref", met.ref, "Reference .bvh directory")->required();
    metrics_cmd->add_option("--gen", met.gen, "Generated .bvh directory")->required();
    metrics_cmd->add_option("--out", met.out, "Report directory")->required();
    metrics_cmd->add_option("--beats", met.beats, "Directory of <name>.beats audio beat files");
    metrics_cmd->add_flag("--beat-align", met.beat_align, "Compute the beat align score");
    metrics_cmd->add_option("--seed", met.seed, "Seed for diversity pairs");

    std::string inspect_target;
    auto* inspect_cmd = app.add_subcommand("inspect", "Summarize a database, model or stream file");
    inspect_cmd->add_option("path", inspect_target, "Path to inspect")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        err << "error: usage: " << e.what() << "\n";
        return 1;
    }

    try {
        EngineConfig cfg = config_path.empty() ? EngineConfig{} : load_config(config_path);
        for (const auto& kv : overrides) {
            const auto eq = kv.find('=');
            if (eq == std::string::npos) {
                throw UsageError("--set expects key=value, got '" + kv + "'");
            }
            cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
        }
        cfg.validate();

        if (*synth_cmd) {
            cmd_synth(synth, cfg, out);
        } else if (*fit_cmd) {
            cmd_fit(fit, cfg, out);
        } else if (*build_cmd) {
            cmd_build_db(build, cfg, out);
        } else if (*match_cmd) {
            cmd_match(match, cfg, out, err);
        } else if (*metrics_cmd) {
            cmd_metrics(met, cfg, out);
        } else if (*inspect_cmd) {
            cmd_inspect(inspect_target, out);
        }
    } catch (const UsageError& e) {
        err << "error: usage: " << e.what() << "\n";
        return 1;
    } catch (const DataError& e) {
        err << "error: data: " << e.what() << "\n";
        return 2;
    } catch (const std::filesystem::filesystem_error& e) {
        err << "error: data: " << e.what() << "\n";
        return 2;
    } catch (const nlohmann::json::exception& e) {
        err << "error: data: " << e.what() << "\n";
        return 2;
    }
    return 0;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    std::vector<const char*> argv;
    argv.push_back("gesmatch");
    for (const auto& a : args) {
        argv.push_back(a.c_str());
    }
    return run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
}

} // namespace gesmatch::cli
