#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

// Raw little-endian array files shared by the codebook, token, embedding,
// and phase formats.
namespace gesmatch::binary {

void write_u32(const std::filesystem::path& path, std::span<const std::uint32_t> values);
void write_f32(const std::filesystem::path& path, std::span<const float> values);

std::vector<std::uint32_t> read_u32(const std::filesystem::path& path);
std::vector<float> read_f32(const std::filesystem::path& path);

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

} // namespace gesmatch::binary
