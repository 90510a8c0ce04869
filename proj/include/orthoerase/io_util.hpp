#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace orthoerase::io {

// Writes to a sibling temp file and renames over the target, so readers
// never observe a partially written file.
void atomic_write(const std::filesystem::path& path, std::string_view bytes);

std::string read_file(const std::filesystem::path& path);

}  // namespace orthoerase::io
