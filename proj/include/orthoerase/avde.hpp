#pragma once

#include <filesystem>

#include "orthoerase/linalg.hpp"

namespace orthoerase::avde {

// Matrix container used for embedding, feature and erased-component dumps:
//   magic "AVDE" | format-version u32 | rows u32 | cols u32 | payload
// with all integers and the row-major binary64 payload little-endian.
// Round trips are bit-exact.

inline constexpr std::uint32_t kFormatVersion = 1;

void write_matrix(const std::filesystem::path& path, const linalg::Mat& m);
linalg::Mat read_matrix(const std::filesystem::path& path);

}  // namespace orthoerase::avde
