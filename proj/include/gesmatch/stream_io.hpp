#pragma once

#include "gesmatch/seqsim.hpp"

#include <filesystem>
#include <span>
#include <vector>

namespace gesmatch {

// Token streams: <stem>.tok holds little-endian u32 ids, <stem>.tok.json holds
// {"rate", "count", "vocabulary"}.
// Embedding streams: <stem>.emb holds little-endian f32 rows (row-major),
// <stem>.emb.json holds {"rows", "dim", "rate"}.
// Beat files: one time in seconds per line, ascending.

void write_tokens(const std::filesystem::path& file, const TokenSequence& seq);
TokenSequence read_tokens(const std::filesystem::path& file);

void write_embeddings(const std::filesystem::path& file, const EmbeddingSequence& seq);
EmbeddingSequence read_embeddings(const std::filesystem::path& file);

void write_beats(const std::filesystem::path& file, std::span<const double> beats);
std::vector<double> read_beats(const std::filesystem::path& file);

/// `file` with `suffix` appended to its full name.
std::filesystem::path with_suffix(const std::filesystem::path& file, const std::string& suffix);

} // namespace gesmatch
