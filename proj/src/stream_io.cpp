#include "gesmatch/stream_io.hpp"

#include "gesmatch/binary_io.hpp"
#include "gesmatch/error.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <sstream>

namespace gesmatch {

namespace fs = std::filesystem;
using nlohmann::json;

fs::path with_suffix(const fs::path& file, const std::string& suffix)
{
    fs::path out = file;
    out += suffix;
    return out;
}

namespace {

json read_sidecar(const fs::path& file)
{
    const fs::path sidecar = with_suffix(file, ".json");
    try {
        return json::parse(binary::read_text(sidecar));
    } catch (const json::exception& e) {
        throw DataError(sidecar.string() + ": " + e.what());
    }
}

template <typename T>
T field(const json& j, const char* key, const fs::path& file)
{
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw DataError(with_suffix(file, ".json").string() + ": missing or invalid '" + key + "'");
    }
}

} // namespace

void write_tokens(const fs::path& file, const TokenSequence& seq)
{
    seq.validate();
    binary::write_u32(file, seq.tokens);
    json j;
    j["rate"] = seq.rate;
    j["count"] = seq.tokens.size();
    j["vocabulary"] = seq.vocabulary;
    binary::write_text(with_suffix(file, ".json"), j.dump(2) + "\n");
}

TokenSequence read_tokens(const fs::path& file)
{
    const json j = read_sidecar(file);
    TokenSequence seq;
    seq.rate = field<double>(j, "rate", file);
    seq.vocabulary = field<std::uint32_t>(j, "vocabulary", file);
    const auto count = field<std::size_t>(j, "count", file);
    seq.tokens = binary::read_u32(file);
    if (seq.tokens.size() != count) {
        throw DataError(file.string() + ": sidecar declares " + std::to_string(count) + " tokens, file holds " +
                        std::to_string(seq.tokens.size()));
    }
    try {
        seq.validate();
    } catch (const DataError& e) {
        throw DataError(file.string() + ": " + e.what());
    }
    return seq;
}

void write_embeddings(const fs::path& file, const EmbeddingSequence& seq)
{
    seq.validate();
    std::vector<float> flat;
    flat.reserve(static_cast<std::size_t>(seq.vectors.size()));
    for (Eigen::Index r = 0; r < seq.vectors.rows(); ++r) {
        for (Eigen::Index c = 0; c < seq.vectors.cols(); ++c) {
            flat.push_back(seq.vectors(r, c));
        }
    }
    binary::write_f32(file, flat);
    json j;
    j["rows"] = seq.rows();
    j["dim"] = seq.dim();
    j["rate"] = seq.rate;
    binary::write_text(with_suffix(file, ".json"), j.dump(2) + "\n");
}

EmbeddingSequence read_embeddings(const fs::path& file)
{
    const json j = read_sidecar(file);
    const auto rows = field<std::size_t>(j, "rows", file);
    const auto dim = field<std::size_t>(j, "dim", file);
    EmbeddingSequence seq;
    seq.rate = field<double>(j, "rate", file);
    const std::vector<float> flat = binary::read_f32(file);
    if (flat.size() != rows * dim) {
        throw DataError(file.string() + ": sidecar declares " + std::to_string(rows) + "x" + std::to_string(dim) +
                        ", file holds " + std::to_string(flat.size()) + " floats");
    }
    seq.vectors.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(dim));
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < dim; ++c) {
            seq.vectors(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = flat[r * dim + c];
        }
    }
    try {
        seq.validate();
    } catch (const DataError& e) {
        throw DataError(file.string() + ": " + e.what());
    }
    return seq;
}

void write_beats(const fs::path& file, std::span<const double> beats)
{
    std::string text;
    char buf[64];
    for (double b : beats) {
        std::snprintf(buf, sizeof buf, "%.6f\n", b);
        text += buf;
    }
    binary::write_text(file, text);
}

std::vector<double> read_beats(const fs::path& file)
{
    std::istringstream in(binary::read_text(file));
    std::vector<double> beats;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') {
            continue;
        }
        std::istringstream fields(line);
        double t = 0.0;
        std::string rest;
        if (!(fields >> t) || (fields >> rest) || !std::isfinite(t)) {
            throw DataError(file.string() + " line " + std::to_string(lineno) + ": expected one time in seconds");
        }
        if (!beats.empty() && t < beats.back()) {
            throw DataError(file.string() + " line " + std::to_string(lineno) + ": beat times must ascend");
        }
        beats.push_back(t);
    }
    return beats;
}

} // namespace gesmatch
