#include "orthoerase/netpbm.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "orthoerase/io_util.hpp"

namespace orthoerase::netpbm {

namespace {

std::string encode(const char* magic, std::size_t width, std::size_t height,
                   std::size_t samples_per_pixel,
                   const std::vector<std::uint8_t>& payload) {
    if (payload.size() != width * height * samples_per_pixel) {
        throw std::invalid_argument("netpbm: payload size mismatch");
    }
    std::string out = magic;
    out += '\n';
    out += std::to_string(width);
    out += ' ';
    out += std::to_string(height);
    out += "\n255\n";
    out.append(reinterpret_cast<const char*>(payload.data()), payload.size());
    return out;
}

}  // namespace

std::string encode_pgm(std::size_t width, std::size_t height,
                       const std::vector<std::uint8_t>& pixels) {
    return encode("P5", width, height, 1, pixels);
}

void write_pgm(const std::filesystem::path& path, std::size_t width,
               std::size_t height, const std::vector<std::uint8_t>& pixels) {
    io::atomic_write(path, encode_pgm(width, height, pixels));
}

std::string encode_ppm(std::size_t width, std::size_t height,
                       const std::vector<std::uint8_t>& rgb) {
    return encode("P6", width, height, 3, rgb);
}

void write_ppm(const std::filesystem::path& path, std::size_t width,
               std::size_t height, const std::vector<std::uint8_t>& rgb) {
    io::atomic_write(path, encode_ppm(width, height, rgb));
}

std::vector<std::uint8_t> normalize_bytes(const std::vector<double>& values) {
    std::vector<std::uint8_t> out(values.size(), 0);
    if (values.empty()) return out;
    const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
    const double lo = *lo_it;
    const double hi = *hi_it;
    if (hi <= lo) return out;  // constant image maps to black
    const double scale = 255.0 / (hi - lo);
    for (std::size_t i = 0; i < values.size(); ++i) {
        out[i] = static_cast<std::uint8_t>(
            std::lround((values[i] - lo) * scale));
    }
    return out;
}

}  // namespace orthoerase::netpbm
