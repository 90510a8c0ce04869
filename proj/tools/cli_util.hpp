#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "orthoerase/pipeline.hpp"

namespace orthoerase::cli {

// Flat `key = value` config file. Blank lines and '#' comments are allowed;
// unknown keys are rejected. Keys: s, p, epsilon, token_length, d, d_c,
// d_z, hw, layers, steps, seed, adaptive.
void apply_config_file(const std::filesystem::path& path,
                       pipeline::PipelineConfig& cfg);

// ORTHOERASE_SEED, the lowest-precedence seed source.
void apply_env_seed(pipeline::PipelineConfig& cfg);

std::uint64_t parse_u64(const std::string& text, const std::string& what);
double parse_double(const std::string& text, const std::string& what);
std::size_t parse_count(const std::string& text, const std::string& what);
bool parse_bool(const std::string& text, const std::string& what);

// Comma-separated doubles; an empty string yields an empty list.
std::vector<double> parse_double_list(const std::string& text,
                                      const std::string& what);

}  // namespace orthoerase::cli
