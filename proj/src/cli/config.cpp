#include "gesmatch/cli.hpp"

#include "gesmatch/binary_io.hpp"
#include "gesmatch/error.hpp"

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace gesmatch::cli {

namespace {

std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) {
        return "";
    }
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& value)
{
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(value, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != value.size() || !std::isfinite(v)) {
        throw UsageError("config key '" + key + "': '" + value + "' is not a number");
    }
    return v;
}

std::uint64_t to_unsigned(const std::string& key, const std::string& value)
{
    if (value.empty() || value.find_first_not_of("0123456789") != std::string::npos) {
        throw UsageError("config key '" + key + "': '" + value + "' is not a non-negative integer");
    }
    try {
        return std::stoull(value);
    } catch (const std::exception&) {
        throw UsageError("config key '" + key + "': '" + value + "' is out of range");
    }
}

std::string fmt(double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

} // namespace

void EngineConfig::set(const std::string& key, const std::string& raw)
{
    const std::string value = trim(raw);
    if (key == "fps") {
        fps = to_double(key, value);
    } else if (key == "frames_per_code") {
        frames_per_code = to_unsigned(key, value);
    } else if (key == "codebook_size") {
        codebook_size = to_unsigned(key, value);
    } else if (key == "phase_channels") {
        phase_channels = to_unsigned(key, value);
    } else if (key == "n_phase") {
        n_phase = to_unsigned(key, value);
    } else if (key == "n_stride") {
        n_stride = to_unsigned(key, value);
    } else if (key == "window_seconds") {
        window_seconds = to_double(key, value);
    } else if (key == "k") {
        k = to_unsigned(key, value);
    } else if (key == "freq_weight") {
        freq_weight = to_double(key, value);
    } else if (key == "seed") {
        seed = to_unsigned(key, value);
    } else if (key == "joints") {
        joints.clear();
        std::stringstream ss(value);
        std::string name;
        while (std::getline(ss, name, ',')) {
            name = trim(name);
            if (!name.empty()) {
                joints.push_back(name);
            }
        }
    } else if (key == "hist_bin_width") {
        hist_bin_width = to_double(key, value);
    } else if (key == "hist_max") {
        hist_max = to_double(key, value);
    } else if (key == "phase_window_frames") {
        phase_window_frames = to_unsigned(key, value);
    } else if (key == "clip_gap_seconds") {
        clip_gap_seconds = to_double(key, value);
    } else if (key == "vocabulary") {
        const std::uint64_t v = to_unsigned(key, value);
        if (v > UINT32_MAX) {
            throw UsageError("config key 'vocabulary' is out of range");
        }
        vocabulary = static_cast<std::uint32_t>(v);
    } else if (key == "diversity_pairs") {
        diversity_pairs = to_unsigned(key, value);
    } else if (key == "beat_sigma") {
        beat_sigma = to_double(key, value);
    } else {
        throw UsageError("unknown config key '" + key + "'");
    }
}

void EngineConfig::validate() const
{
    auto positive = [](bool ok, const char* key) {
        if (!ok) {
            throw UsageError(std::string("config key '") + key + "' must be positive");
        }
    };
    positive(fps > 0.0, "fps");
    positive(frames_per_code > 0, "frames_per_code");
    positive(codebook_size > 0, "codebook_size");
    positive(phase_channels > 0, "phase_channels");
    positive(n_phase > 0, "n_phase");
    positive(window_seconds > 0.0, "window_seconds");
    positive(k > 0, "k");
    positive(hist_bin_width > 0.0, "hist_bin_width");
    positive(hist_max > 0.0, "hist_max");
    positive(phase_window_frames > 0, "phase_window_frames");
    positive(clip_gap_seconds > 0.0, "clip_gap_seconds");
    positive(vocabulary > 0, "vocabulary");
    positive(diversity_pairs > 0, "diversity_pairs");
    positive(beat_sigma > 0.0, "beat_sigma");
    if (n_stride >= n_phase) {
        throw UsageError("config: n_stride must be smaller than n_phase");
    }
    if (freq_weight < 0.0) {
        throw UsageError("config: freq_weight must be non-negative");
    }
    if (joints.empty()) {
        throw UsageError("config: joints must name at least one joint");
    }
}

std::string EngineConfig::canonical() const
{
    std::string joined;
    for (std::size_t i = 0; i < joints.size(); ++i) {
        joined += (i ? "," : "") + joints[i];
    }
    std::string out;
    auto line = [&](const char* key, const std::string& value) { out += std::string(key) + " = " + value + "\n"; };
    line("fps", fmt(fps));
    line("frames_per_code", std::to_string(frames_per_code));
    line("codebook_size", std::to_string(codebook_size));
    line("phase_channels", std::to_string(phase_channels));
    line("n_phase", std::to_string(n_phase));
    line("n_stride", std::to_string(n_stride));
    line("window_seconds", fmt(window_seconds));
    line("k", std::to_string(k));
    line("freq_weight", fmt(freq_weight));
    line("seed", std::to_string(seed));
    line("joints", joined);
    line("hist_bin_width", fmt(hist_bin_width));
    line("hist_max", fmt(hist_max));
    line("phase_window_frames", std::to_string(phase_window_frames));
    line("clip_gap_seconds", fmt(clip_gap_seconds));
    line("vocabulary", std::to_string(vocabulary));
    line("diversity_pairs", std::to_string(diversity_pairs));
    line("beat_sigma", fmt(beat_sigma));
    return out;
}

std::uint64_t EngineConfig::hash() const
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : canonical()) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

DatabaseSettings EngineConfig::database_settings() const
{
    DatabaseSettings s;
    s.fps = fps;
    s.n_phase = n_phase;
    s.n_stride = n_stride;
    s.window_seconds = window_seconds;
    s.phase_window_frames = phase_window_frames;
    s.clip_gap_seconds = clip_gap_seconds;
    s.vocabulary = vocabulary;
    return s;
}

EngineConfig parse_config(const std::string& text, const std::string& origin)
{
    EngineConfig cfg;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) {
            line.erase(hash);
        }
        line = trim(line);
        if (line.empty()) {
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw UsageError(origin + " line " + std::to_string(lineno) + ": expected key = value");
        }
        try {
            cfg.set(trim(line.substr(0, eq)), line.substr(eq + 1));
        } catch (const UsageError& e) {
            throw UsageError(origin + " line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return cfg;
}

EngineConfig load_config(const std::filesystem::path& file)
{
    std::string text;
    try {
        text = binary::read_text(file);
    } catch (const DataError& e) {
        throw UsageError(e.what());
    }
    return parse_config(text, file.string());
}

std::string hex64(std::uint64_t v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%016" PRIx64, v);
    return buf;
}

} // namespace gesmatch::cli
