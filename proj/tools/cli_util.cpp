#include "cli_util.hpp"

#include <cstdlib>
#include <fstream>

#include "orthoerase/errors.hpp"

namespace orthoerase::cli {

namespace {

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r");
    return s.substr(begin, end - begin + 1);
}

}  // namespace

std::uint64_t parse_u64(const std::string& text, const std::string& what) {
    try {
        std::size_t used = 0;
        const unsigned long long v = std::stoull(text, &used);
        if (used != text.size()) throw std::invalid_argument(text);
        return v;
    } catch (const std::exception&) {
        throw ConfigError(what + ": not an unsigned integer: \"" + text +
                          "\"");
    }
}

double parse_double(const std::string& text, const std::string& what) {
    try {
        std::size_t used = 0;
        const double v = std::stod(text, &used);
        if (used != text.size()) throw std::invalid_argument(text);
        return v;
    } catch (const std::exception&) {
        throw ConfigError(what + ": not a number: \"" + text + "\"");
    }
}

std::size_t parse_count(const std::string& text, const std::string& what) {
    const std::uint64_t v = parse_u64(text, what);
    if (v == 0) throw ConfigError(what + ": must be >= 1");
    return static_cast<std::size_t>(v);
}

bool parse_bool(const std::string& text, const std::string& what) {
    if (text == "true" || text == "1") return true;
    if (text == "false" || text == "0") return false;
    throw ConfigError(what + ": not a boolean: \"" + text + "\"");
}

std::vector<double> parse_double_list(const std::string& text,
                                      const std::string& what) {
    std::vector<double> values;
    std::size_t begin = 0;
    const std::string trimmed = trim(text);
    if (trimmed.empty()) return values;
    while (begin <= trimmed.size()) {
        const std::size_t comma = trimmed.find(',', begin);
        const std::string piece =
            trim(trimmed.substr(begin, comma == std::string::npos
                                           ? std::string::npos
                                           : comma - begin));
        if (!piece.empty()) values.push_back(parse_double(piece, what));
        if (comma == std::string::npos) break;
        begin = comma + 1;
    }
    return values;
}

void apply_config_file(const std::filesystem::path& path,
                       pipeline::PipelineConfig& cfg) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file: " + path.string());

    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        const std::string stripped = trim(line);
        if (stripped.empty()) continue;

        const std::size_t eq = stripped.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(path.string() + ":" + std::to_string(lineno) +
                              ": expected key = value");
        }
        const std::string key = trim(stripped.substr(0, eq));
        const std::string value = trim(stripped.substr(eq + 1));
        const std::string where = path.string() + ": " + key;

        if (key == "s") {
            cfg.shift.s = parse_double(value, where);
        } else if (key == "p") {
            cfg.shift.p = parse_double(value, where);
        } else if (key == "epsilon") {
            cfg.shift.epsilon = parse_double(value, where);
        } else if (key == "token_length") {
            cfg.l = parse_count(value, where);
        } else if (key == "d") {
            cfg.d = parse_count(value, where);
        } else if (key == "d_c") {
            cfg.d_c = parse_count(value, where);
        } else if (key == "d_z") {
            cfg.d_z = parse_count(value, where);
        } else if (key == "hw") {
            cfg.hw = parse_count(value, where);
        } else if (key == "layers") {
            cfg.layers = parse_count(value, where);
        } else if (key == "steps") {
            cfg.steps = parse_count(value, where);
        } else if (key == "seed") {
            cfg.seed = parse_u64(value, where);
        } else if (key == "adaptive") {
            cfg.adaptive = parse_bool(value, where);
        } else {
            throw ConfigError(path.string() + ":" + std::to_string(lineno) +
                              ": unknown key \"" + key + "\"");
        }
    }
}

void apply_env_seed(pipeline::PipelineConfig& cfg) {
    if (const char* env = std::getenv("ORTHOERASE_SEED")) {
        cfg.seed = parse_u64(env, "ORTHOERASE_SEED");
    }
}

}  // namespace orthoerase::cli
