#include "gesmatch/matcher.hpp"

#include "gesmatch/error.hpp"
#include "gesmatch/random.hpp"

#include <algorithm>
#include <numeric>

namespace gesmatch {

OccurrenceMask OccurrenceMask::from_codes(const GestureDatabase& db, const std::vector<bool>& allowed_codes)
{
    if (allowed_codes.size() != db.codebook.size()) {
        throw UsageError("code mask has " + std::to_string(allowed_codes.size()) + " entries, codebook has " +
                         std::to_string(db.codebook.size()));
    }
    OccurrenceMask m;
    m.allowed_.resize(db.clips.size());
    for (std::size_t c = 0; c < db.clips.size(); ++c) {
        const auto& codes = db.clips[c].codes;
        m.allowed_[c].resize(codes.size());
        for (std::size_t s = 0; s < codes.size(); ++s) {
            m.allowed_[c][s] = allowed_codes[codes[s]];
        }
    }
    return m;
}

void OccurrenceMask::resize(const GestureDatabase& db, bool value)
{
    allowed_.resize(db.clips.size());
    for (std::size_t c = 0; c < db.clips.size(); ++c) {
        allowed_[c].assign(db.clips[c].steps(), value);
    }
}

void OccurrenceMask::set(std::size_t clip, std::size_t step, bool allowed)
{
    allowed_.at(clip).at(step) = allowed;
}

bool OccurrenceMask::allowed(std::size_t clip, std::size_t step) const
{
    if (allowed_.empty()) {
        return true;
    }
    return allowed_[clip][step];
}

namespace {

Eigen::MatrixXd decoded_windows(const Codebook& cb)
{
    Eigen::MatrixXd out(static_cast<Eigen::Index>(cb.size()), static_cast<Eigen::Index>(cb.code_width()));
    for (std::size_t c = 0; c < cb.size(); ++c) {
        out.row(static_cast<Eigen::Index>(c)) = decoded_window(static_cast<std::uint32_t>(c), cb);
    }
    return out;
}

std::vector<double> distances_from(const Eigen::MatrixXd& windows, std::uint32_t previous)
{
    std::vector<double> out(static_cast<std::size_t>(windows.rows()));
    const Eigen::RowVectorXd ref = windows.row(previous);
    for (Eigen::Index c = 0; c < windows.rows(); ++c) {
        out[static_cast<std::size_t>(c)] = (windows.row(c) - ref).norm();
    }
    return out;
}

template <typename Distance>
Precandidates scan(const GestureDatabase& db, const OccurrenceMask* mask, Distance&& distance)
{
    Precandidates p;
    p.distance.assign(db.codebook.size(), kUnreachable);
    p.best.assign(db.codebook.size(), std::nullopt);
    for (std::size_t c = 0; c < db.clips.size(); ++c) {
        const ClipRecord& clip = db.clips[c];
        for (std::size_t s = 0; s < clip.steps(); ++s) {
            if (mask && !mask->allowed(c, s)) {
                continue;
            }
            const std::uint32_t code = clip.codes[s];
            const double d = distance(clip, s);
            if (d < p.distance[code]) {
                p.distance[code] = d;
                p.best[code] = Occurrence{c, s};
            }
        }
    }
    return p;
}

} // namespace

std::vector<double> pose_precandidate(std::uint32_t previous, const Codebook& cb)
{
    if (previous >= cb.size()) {
        throw DataError("previous code " + std::to_string(previous) + " is outside the codebook");
    }
    return distances_from(decoded_windows(cb), previous);
}

Precandidates audio_precandidate(std::span<const std::uint32_t> query_window, const GestureDatabase& db,
                                 const OccurrenceMask* mask, bool normalized)
{
    return scan(db, mask, [&](const ClipRecord& clip, std::size_t s) {
        const auto& stored = clip.audio_windows[s];
        return normalized ? normalized_levenshtein(query_window, stored)
                          : static_cast<double>(levenshtein(query_window, stored));
    });
}

Precandidates text_precandidate(const Eigen::Ref<const Eigen::VectorXd>& query, const GestureDatabase& db,
                                const OccurrenceMask* mask)
{
    if (static_cast<std::size_t>(query.size()) != db.embedding_dim) {
        throw DataError("query embedding has dimension " + std::to_string(query.size()) + ", database has " +
                        std::to_string(db.embedding_dim));
    }
    Eigen::VectorXd stored(query.size());
    return scan(db, mask, [&](const ClipRecord& clip, std::size_t s) {
        stored = clip.text.row(static_cast<Eigen::Index>(s)).transpose().cast<double>();
        return 1.0 - cosine_similarity(query, stored).value;
    });
}

std::vector<double> relrank(std::span<const double> values)
{
    const std::size_t n = values.size();
    std::vector<double> out(n, 0.0);
    if (n <= 1) {
        return out;
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    const auto denom = static_cast<double>(n - 1);
    std::size_t group_start = 0;
    for (std::size_t pos = 0; pos < n; ++pos) {
        if (pos > 0 && values[order[pos]] != values[order[pos - 1]]) {
            group_start = pos;
        }
        out[order[pos]] = static_cast<double>(group_start) / denom;
    }
    return out;
}

std::vector<double> frequency_rank(std::span<const std::size_t> counts)
{
    std::vector<double> negated(counts.size());
    std::transform(counts.begin(), counts.end(), negated.begin(),
                   [](std::size_t c) { return -static_cast<double>(c); });
    return relrank(negated);
}

RankedChoice select_candidate(std::span<const double> pose_rank, std::span<const double> speech_rank,
                              std::span<const double> freq_rank, std::span<const double> speech_distance,
                              double weight, std::size_t k)
{
    const std::size_t n = pose_rank.size();
    if (speech_rank.size() != n || speech_distance.size() != n || (weight != 0.0 && freq_rank.size() != n)) {
        throw UsageError("rank arrays differ in length");
    }
    if (k == 0) {
        throw UsageError("k must be at least 1");
    }
    std::vector<RankedChoice> pool;
    for (std::size_t c = 0; c < n; ++c) {
        if (speech_distance[c] == kUnreachable) {
            continue;
        }
        double fused = pose_rank[c] + speech_rank[c];
        if (weight != 0.0) {
            fused += weight * freq_rank[c];
        }
        pool.push_back({static_cast<std::uint32_t>(c), fused});
    }
    if (pool.empty()) {
        throw DataError("every code is masked or absent at this step");
    }
    if (k > pool.size()) {
        throw UsageError("k = " + std::to_string(k) + " exceeds the " + std::to_string(pool.size()) +
                         " selectable codes");
    }
    std::nth_element(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(k - 1), pool.end(),
                     [](const RankedChoice& a, const RankedChoice& b) {
                         return a.fused < b.fused || (a.fused == b.fused && a.code < b.code);
                     });
    return pool[k - 1];
}

CandidatePair select_candidates(std::span<const double> pose_rank, std::span<const double> audio_rank,
                                std::span<const double> text_rank, std::span<const double> freq_rank,
                                std::span<const double> audio_distance, std::span<const double> text_distance,
                                double weight, std::size_t k)
{
    return {select_candidate(pose_rank, audio_rank, freq_rank, audio_distance, weight, k),
            select_candidate(pose_rank, text_rank, freq_rank, text_distance, weight, k)};
}

const char* source_name(Source s)
{
    return s == Source::Audio ? "audio" : "text";
}

std::uint32_t most_frequent_code(const GestureDatabase& db)
{
    std::uint32_t best = 0;
    for (std::size_t c = 1; c < db.code_frequency.size(); ++c) {
        if (db.code_frequency[c] > db.code_frequency[best]) {
            best = static_cast<std::uint32_t>(c);
        }
    }
    return best;
}

std::uint32_t random_code(const GestureDatabase& db, std::uint64_t seed)
{
    Rng rng(seed);
    return static_cast<std::uint32_t>(rng.below(db.codebook.size()));
}

Eigen::MatrixXd initial_phase_for(const GestureDatabase& db, std::uint32_t code)
{
    for (std::size_t c = 0; c < db.clips.size(); ++c) {
        const auto& codes = db.clips[c].codes;
        for (std::size_t s = 0; s < codes.size(); ++s) {
            if (codes[s] == code) {
                return db.phase_window(c, s);
            }
        }
    }
    return Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(db.settings.n_phase),
                                 static_cast<Eigen::Index>(db.phase_width()));
}

MotionSequence decode_codes(const GestureDatabase& db, std::span<const std::uint32_t> codes)
{
    CodeSequence cs;
    cs.codes.assign(codes.begin(), codes.end());
    cs.window = db.codebook.window;
    cs.source_fps = db.settings.fps;
    return decode(cs, db.codebook, db.skeleton);
}

MatchResult search(const GestureDatabase& db, const MatchQuery& query)
{
    const std::size_t codes = db.codebook.size();
    if (db.clips.empty() || db.occurrence_count() == 0) {
        throw DataError("the database is empty");
    }
    if (query.steps == 0) {
        throw UsageError("query has no steps");
    }
    if (query.k == 0) {
        throw UsageError("k must be at least 1");
    }
    if (query.initial_code >= codes) {
        throw UsageError("initial code " + std::to_string(query.initial_code) + " is outside the codebook");
    }
    if (query.initial_phase.rows() != static_cast<Eigen::Index>(db.settings.n_phase) ||
        query.initial_phase.cols() != static_cast<Eigen::Index>(db.phase_width())) {
        throw DataError("initial phase must be " + std::to_string(db.settings.n_phase) + " x " +
                        std::to_string(db.phase_width()));
    }
    if (!query.step_mask.empty() && query.step_mask.size() != query.steps) {
        throw UsageError("mask has " + std::to_string(query.step_mask.size()) + " entries for " +
                         std::to_string(query.steps) + " query steps");
    }
    if (!query.allowed_codes.empty() && query.allowed_codes.size() != codes) {
        throw UsageError("code constraint has " + std::to_string(query.allowed_codes.size()) + " entries, codebook has " +
                         std::to_string(codes));
    }
    if (query.text.dim() != db.embedding_dim) {
        throw DataError("query embeddings have dimension " + std::to_string(query.text.dim()) + ", database has " +
                        std::to_string(db.embedding_dim));
    }

    const std::size_t d = db.codebook.window;
    const double fps = db.settings.fps;
    const Eigen::MatrixXd windows = decoded_windows(db.codebook);
    const std::vector<double> freq = frequency_rank(db.code_frequency);

    OccurrenceMask constraint;
    if (!query.allowed_codes.empty()) {
        constraint = OccurrenceMask::from_codes(db, query.allowed_codes);
    }

    MatchResult result;
    std::uint32_t previous = query.initial_code;
    Eigen::MatrixXd previous_phase = query.initial_phase;

    for (std::size_t s = 0; s < query.steps; ++s) {
        StepTrace trace;
        trace.masked = !constraint.empty() && (query.step_mask.empty() || query.step_mask[s]);
        const OccurrenceMask* mask = trace.masked ? &constraint : nullptr;

        const std::vector<std::uint32_t> audio_window =
            step_audio_window(query.audio, s, db.settings.window_seconds, d, fps);
        const Eigen::VectorXd text_vector =
            query.text.vectors.row(static_cast<Eigen::Index>(embedding_row_at(query.text, s, d, fps))).transpose().cast<double>();

        trace.pose_distance = distances_from(windows, previous);
        Precandidates audio = audio_precandidate(audio_window, db, mask, query.normalized_levenshtein);
        Precandidates text = text_precandidate(text_vector, db, mask);
        trace.audio_distance = audio.distance;
        trace.text_distance = text.distance;

        const std::vector<double> pose_rank = relrank(trace.pose_distance);
        const std::vector<double> audio_rank = relrank(audio.distance);
        const std::vector<double> text_rank = relrank(text.distance);
        trace.audio_fused.resize(codes);
        trace.text_fused.resize(codes);
        for (std::size_t c = 0; c < codes; ++c) {
            trace.audio_fused[c] = pose_rank[c] + audio_rank[c] + query.freq_weight * freq[c];
            trace.text_fused[c] = pose_rank[c] + text_rank[c] + query.freq_weight * freq[c];
        }

        CandidatePair pair = select_candidates(pose_rank, audio_rank, text_rank, freq, audio.distance, text.distance,
                                               query.freq_weight, query.k);
        trace.audio = pair.audio;
        trace.text = pair.text;
        trace.audio_occurrence = *audio.best[pair.audio.code];
        trace.text_occurrence = *text.best[pair.text.code];

        const Eigen::MatrixXd audio_phase = db.phase_window(trace.audio_occurrence.clip, trace.audio_occurrence.step);
        const Eigen::MatrixXd text_phase = db.phase_window(trace.text_occurrence.clip, trace.text_occurrence.step);
        trace.audio_phase_score =
            continuity_distance(previous_phase, audio_phase, db.settings.n_phase, db.settings.n_stride).score;
        trace.text_phase_score =
            continuity_distance(previous_phase, text_phase, db.settings.n_phase, db.settings.n_stride).score;

        if (trace.audio_phase_score <= trace.text_phase_score) {
            trace.source = Source::Audio;
            trace.chosen = pair.audio.code;
            previous_phase = audio_phase;
        } else {
            trace.source = Source::Text;
            trace.chosen = pair.text.code;
            previous_phase = text_phase;
        }
        previous = trace.chosen;
        result.codes.push_back(trace.chosen);
        result.sources.push_back(trace.source);
        result.traces.push_back(std::move(trace));
    }
    result.decoded = decode_codes(db, result.codes);
    return result;
}

MatchResult replace_code(const MatchResult& result, std::uint32_t from, std::uint32_t to, const GestureDatabase& db)
{
    if (from >= db.codebook.size() || to >= db.codebook.size()) {
        throw UsageError("replacement codes must be below " + std::to_string(db.codebook.size()));
    }
    MatchResult out = result;
    bool changed = false;
    for (auto& c : out.codes) {
        if (c == from && from != to) {
            c = to;
            changed = true;
        }
    }
    if (changed || out.decoded.frames() == 0) {
        out.decoded = decode_codes(db, out.codes);
    }
    return out;
}

double mean_joint_height(const PositionSequence& p, std::size_t joint)
{
    double sum = 0.0;
    for (std::size_t t = 0; t < p.frames(); ++t) {
        sum += p.at(t, joint).y();
    }
    return p.frames() > 0 ? sum / static_cast<double>(p.frames()) : 0.0;
}

std::vector<bool> constrain_codes(const GestureDatabase& db,
                                  const std::function<bool(std::uint32_t, const PositionSequence&)>& predicate)
{
    std::vector<bool> allowed(db.codebook.size(), false);
    bool any = false;
    for (std::size_t c = 0; c < db.codebook.size(); ++c) {
        const std::uint32_t code[1] = {static_cast<std::uint32_t>(c)};
        const MotionSequence m = decode_codes(db, code);
        const PositionSequence p = forward_kinematics(*db.skeleton, m);
        allowed[c] = predicate(static_cast<std::uint32_t>(c), p);
        any = any || allowed[c];
    }
    if (!any) {
        throw DataError("the constraint rejects every code");
    }
    return allowed;
}

std::vector<bool> wrist_above(const GestureDatabase& db, const std::string& joint, double threshold)
{
    const int j = db.skeleton->find(joint);
    if (j < 0) {
        throw DataError("skeleton has no joint '" + joint + "'");
    }
    return constrain_codes(db, [&](std::uint32_t, const PositionSequence& p) {
        return mean_joint_height(p, static_cast<std::size_t>(j)) > threshold;
    });
}

} // namespace gesmatch
