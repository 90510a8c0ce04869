#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace orthoerase::netpbm {

// Binary P5, maxval 255; pixels row-major top to bottom.
std::string encode_pgm(std::size_t width, std::size_t height,
                       const std::vector<std::uint8_t>& pixels);
void write_pgm(const std::filesystem::path& path, std::size_t width,
               std::size_t height, const std::vector<std::uint8_t>& pixels);

// Binary P6, maxval 255; interleaved RGB, row-major.
std::string encode_ppm(std::size_t width, std::size_t height,
                       const std::vector<std::uint8_t>& rgb);
void write_ppm(const std::filesystem::path& path, std::size_t width,
               std::size_t height, const std::vector<std::uint8_t>& rgb);

// Min-max normalization of arbitrary values onto [0, 255]. A constant input
// maps to all zeros.
std::vector<std::uint8_t> normalize_bytes(const std::vector<double>& values);

}  // namespace orthoerase::netpbm
