#include "orthoerase/avde.hpp"

#include <bit>
#include <cstring>
#include <string>

#include "orthoerase/errors.hpp"
#include "orthoerase/io_util.hpp"

namespace orthoerase::avde {

namespace {

constexpr char kMagic[4] = {'A', 'V', 'D', 'E'};

void append_u32_le(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) {
        out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
    }
}

std::uint32_t read_u32_le(const std::string& in, std::size_t off) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
        v |= static_cast<std::uint32_t>(
                 static_cast<unsigned char>(in[off + static_cast<std::size_t>(i)]))
             << (8 * i);
    }
    return v;
}

}  // namespace

void write_matrix(const std::filesystem::path& path, const linalg::Mat& m) {
    std::string bytes;
    bytes.reserve(16 + m.data.size() * 8);
    bytes.append(kMagic, 4);
    append_u32_le(bytes, kFormatVersion);
    append_u32_le(bytes, static_cast<std::uint32_t>(m.rows));
    append_u32_le(bytes, static_cast<std::uint32_t>(m.cols));
    for (double x : m.data) {
        std::uint64_t bits = std::bit_cast<std::uint64_t>(x);
        for (int i = 0; i < 8; ++i) {
            bytes.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
        }
    }
    io::atomic_write(path, bytes);
}

linalg::Mat read_matrix(const std::filesystem::path& path) {
    const std::string bytes = io::read_file(path);
    if (bytes.size() < 16 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
        throw FormatError("not an AVDE file: " + path.string());
    }
    const std::uint32_t version = read_u32_le(bytes, 4);
    if (version != kFormatVersion) {
        throw FormatError("unsupported AVDE version " +
                          std::to_string(version) + ": " + path.string());
    }
    const std::uint32_t rows = read_u32_le(bytes, 8);
    const std::uint32_t cols = read_u32_le(bytes, 12);
    const std::size_t expected =
        16 + static_cast<std::size_t>(rows) * cols * 8;
    if (bytes.size() != expected) {
        throw FormatError("truncated AVDE payload: " + path.string());
    }
    linalg::Mat m(rows, cols);
    for (std::size_t k = 0; k < m.data.size(); ++k) {
        std::uint64_t bits = 0;
        for (int i = 0; i < 8; ++i) {
            bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(
                        bytes[16 + k * 8 + static_cast<std::size_t>(i)]))
                    << (8 * i);
        }
        m.data[k] = std::bit_cast<double>(bits);
    }
    return m;
}

}  // namespace orthoerase::avde
