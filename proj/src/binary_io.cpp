#include "gesmatch/binary_io.hpp"

#include "gesmatch/error.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

namespace gesmatch::binary {
namespace {

static_assert(sizeof(float) == 4);

template <typename T>
void write_raw(const std::filesystem::path& path, std::span<const T> values)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw DataError("cannot open " + path.string() + " for writing");
    }
    std::vector<unsigned char> bytes(values.size() * 4);
    for (std::size_t i = 0; i < values.size(); ++i) {
        std::uint32_t word = std::bit_cast<std::uint32_t>(values[i]);
        for (int b = 0; b < 4; ++b) {
            bytes[i * 4 + b] = static_cast<unsigned char>((word >> (8 * b)) & 0xFFu);
        }
    }
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        throw DataError("write failed: " + path.string());
    }
}

template <typename T>
std::vector<T> read_raw(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError("cannot open " + path.string());
    }
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (bytes.size() % 4 != 0) {
        throw DataError(path.string() + ": size " + std::to_string(bytes.size()) + " is not a multiple of 4");
    }
    std::vector<T> values(bytes.size() / 4);
    for (std::size_t i = 0; i < values.size(); ++i) {
        std::uint32_t word = 0;
        for (int b = 0; b < 4; ++b) {
            word |= static_cast<std::uint32_t>(bytes[i * 4 + b]) << (8 * b);
        }
        values[i] = std::bit_cast<T>(word);
    }
    return values;
}

} // namespace

void write_u32(const std::filesystem::path& path, std::span<const std::uint32_t> values)
{
    write_raw(path, values);
}

void write_f32(const std::filesystem::path& path, std::span<const float> values)
{
    write_raw(path, values);
}

std::vector<std::uint32_t> read_u32(const std::filesystem::path& path)
{
    return read_raw<std::uint32_t>(path);
}

std::vector<float> read_f32(const std::filesystem::path& path)
{
    return read_raw<float>(path);
}

std::string read_text(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError("cannot open " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const std::filesystem::path& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw DataError("cannot open " + path.string() + " for writing");
    }
    out << text;
}

} // namespace gesmatch::binary
