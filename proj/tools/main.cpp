#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "cli_util.hpp"
#include "orthoerase/avde.hpp"
#include "orthoerase/checks.hpp"
#include "orthoerase/errors.hpp"
#include "orthoerase/io_util.hpp"
#include "orthoerase/netpbm.hpp"
#include "orthoerase/pipeline.hpp"

namespace fs = std::filesystem;
using namespace orthoerase;

namespace {

std::string fmt17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

struct EraseArgs {
    std::string prompt;
    std::vector<std::string> targets;
    std::string out_dir;
    bool noop = false;
};

int cmd_erase(const EraseArgs& args, const pipeline::PipelineConfig& cfg) {
    if (args.targets.empty() && !args.noop) {
        throw ConfigError("erase: need at least one --target (or --noop)");
    }

    const fs::path out(args.out_dir);
    if (!fs::is_directory(out)) {
        std::error_code ec;
        fs::create_directory(out, ec);
        if (ec || !fs::is_directory(out)) {
            throw IoError("cannot create output directory: " + out.string());
        }
    }

    const pipeline::RunResult result =
        pipeline::run(args.prompt, args.targets, cfg);
    pipeline::write_report_csv(result.report, out / "report.csv");
    pipeline::write_run_dumps(result, out);

    std::cout << "n=" << args.targets.size()
              << " cs_drop=" << fmt17(result.report.cs_before -
                                      result.report.cs_after)
              << " fid=" << fmt17(result.report.fid) << "\n";
    return 0;
}

struct VizArgs {
    std::string report_dir;
    std::string out_dir;
    bool features = false;
};

struct DumpName {
    std::size_t step = 0;
    std::size_t layer = 0;
    std::string file;
};

std::optional<std::size_t> parse_index(const std::string& s) {
    if (s.empty() || s.size() > 18 ||
        !std::all_of(s.begin(), s.end(),
                     [](unsigned char c) { return std::isdigit(c); })) {
        return std::nullopt;
    }
    return static_cast<std::size_t>(std::stoull(s));
}

// components_s<step>_l<layer>.avde
std::optional<DumpName> parse_component_name(const std::string& name) {
    const std::string prefix = "components_s";
    const std::string suffix = ".avde";
    if (name.rfind(prefix, 0) != 0 || name.size() <= suffix.size() ||
        name.compare(name.size() - suffix.size(), suffix.size(), suffix) != 0) {
        return std::nullopt;
    }
    const std::string middle =
        name.substr(prefix.size(), name.size() - prefix.size() - suffix.size());
    const std::size_t sep = middle.find("_l");
    if (sep == std::string::npos) return std::nullopt;
    const auto step = parse_index(middle.substr(0, sep));
    const auto layer = parse_index(middle.substr(sep + 2));
    if (!step || !layer) return std::nullopt;
    return DumpName{*step, *layer, name};
}

int cmd_viz(const VizArgs& args) {
    const fs::path dir(args.report_dir);
    if (!fs::is_directory(dir)) {
        throw IoError("not a report directory: " + dir.string());
    }
    const fs::path out_dir =
        args.out_dir.empty() ? dir : fs::path(args.out_dir);
    if (!fs::is_directory(out_dir)) {
        std::error_code ec;
        fs::create_directory(out_dir, ec);
        if (ec || !fs::is_directory(out_dir)) {
            throw IoError("cannot create output directory: " +
                          out_dir.string());
        }
    }

    std::vector<DumpName> dumps;
    std::size_t max_step = 0;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        if (const auto dump = parse_component_name(entry.path().filename())) {
            dumps.push_back(*dump);
            max_step = std::max(max_step, dump->step);
        }
    }
    std::sort(dumps.begin(), dumps.end(),
              [](const DumpName& a, const DumpName& b) {
                  return a.step != b.step ? a.step < b.step : a.layer < b.layer;
              });

    for (const DumpName& dump : dumps) {
        const linalg::Mat m = avde::read_matrix(dir / dump.file);
        // Width runs over tokens, height over channels.
        const std::size_t w = m.rows;
        const std::size_t h = m.cols;
        std::vector<double> heat(w * h);
        for (std::size_t c = 0; c < h; ++c) {
            for (std::size_t j = 0; j < w; ++j) {
                heat[c * w + j] = std::abs(m(j, c));
            }
        }
        const fs::path out = out_dir / (dump.file.substr(0, dump.file.size() -
                                                             5) +
                                        ".pgm");
        netpbm::write_pgm(out, w, h, netpbm::normalize_bytes(heat));
    }

    if (args.features) {
        for (std::size_t s = 0; s <= max_step; ++s) {
            const fs::path before_path =
                dir / ("features_before_s" + std::to_string(s) + ".avde");
            const fs::path after_path =
                dir / ("features_after_s" + std::to_string(s) + ".avde");
            if (!fs::exists(before_path) || !fs::exists(after_path)) continue;
            const linalg::Mat before = avde::read_matrix(before_path);
            const linalg::Mat after = avde::read_matrix(after_path);
            if (before.rows != after.rows || before.cols != after.cols) {
                throw FormatError("feature dumps disagree in shape at step " +
                                  std::to_string(s));
            }
            // Side by side, shared scale, white separator column.
            std::vector<double> joint = before.data;
            joint.insert(joint.end(), after.data.begin(), after.data.end());
            const std::vector<std::uint8_t> bytes =
                netpbm::normalize_bytes(joint);
            const std::size_t hw = before.rows;
            const std::size_t dz = before.cols;
            const std::size_t w = 2 * dz + 1;
            std::vector<std::uint8_t> rgb(w * hw * 3, 0);
            for (std::size_t r = 0; r < hw; ++r) {
                for (std::size_t c = 0; c < dz; ++c) {
                    const std::uint8_t left = bytes[r * dz + c];
                    const std::uint8_t right = bytes[hw * dz + r * dz + c];
                    for (int ch = 0; ch < 3; ++ch) {
                        rgb[(r * w + c) * 3 + static_cast<std::size_t>(ch)] =
                            left;
                        rgb[(r * w + dz + 1 + c) * 3 +
                            static_cast<std::size_t>(ch)] = right;
                    }
                }
                for (int ch = 0; ch < 3; ++ch) {
                    rgb[(r * w + dz) * 3 + static_cast<std::size_t>(ch)] = 255;
                }
            }
            netpbm::write_ppm(out_dir / ("features_s" + std::to_string(s) +
                                         ".ppm"),
                              w, hw, rgb);
        }
    }
    return 0;
}

int cmd_check(std::size_t trials, std::uint64_t seed, bool inject_fault) {
    if (trials == 0) {
        std::cout << "warning: 0 trials requested, all properties pass "
                     "vacuously\n";
        return 0;
    }
    const std::vector<checks::PropertyResult> results =
        checks::run_property_suite(trials, seed, inject_fault);
    bool all_passed = true;
    for (const checks::PropertyResult& r : results) {
        if (r.passed) {
            std::cout << "PASS " << r.name << " trials=" << r.trials << "\n";
        } else {
            all_passed = false;
            std::cout << "FAIL " << r.name << " seed=" << r.failing_seed
                      << " " << r.detail << "\n";
        }
    }
    return all_passed ? 0 : 4;
}

struct SweepArgs {
    std::string target;
    std::string prompt;
    std::vector<double> s_values;
    std::vector<double> p_values;
    std::vector<double> epsilon_values;
    std::string out_file;
};

int cmd_sweep(const SweepArgs& args, const pipeline::PipelineConfig& cfg) {
    if (args.s_values.empty() || args.p_values.empty() ||
        args.epsilon_values.empty()) {
        throw ConfigError("sweep: empty hyperparameter grid");
    }
    for (double s : args.s_values) {
        if (!(s > 0.0)) throw ConfigError("sweep: s must be > 0");
    }
    for (double p : args.p_values) {
        if (!(p > 0.0)) throw ConfigError("sweep: p must be > 0");
    }
    for (double e : args.epsilon_values) {
        if (!(e > 0.0 && e < 1.0)) {
            throw ConfigError("sweep: epsilon must be in (0, 1)");
        }
    }

    std::string csv = "s,p,epsilon,cs_drop_target,fid_nontarget\n";
    std::size_t points = 0;
    for (double s : args.s_values) {
        for (double p : args.p_values) {
            for (double eps : args.epsilon_values) {
                pipeline::PipelineConfig point = cfg;
                point.shift.s = s;
                point.shift.p = p;
                point.shift.epsilon = eps;
                const pipeline::RunResult on_target =
                    pipeline::run(args.target, {args.target}, point);
                const pipeline::RunResult on_related =
                    pipeline::run(args.prompt, {args.target}, point);
                csv += fmt17(s) + "," + fmt17(p) + "," + fmt17(eps) + "," +
                       fmt17(on_target.report.cs_before -
                             on_target.report.cs_after) +
                       "," + fmt17(on_related.report.fid) + "\n";
                ++points;
            }
        }
    }
    io::atomic_write(args.out_file, csv);
    std::cout << "points=" << points << " out=" << args.out_file << "\n";
    return 0;
}

int run_guarded(const std::function<int()>& body) {
    try {
        return body();
    } catch (const LinearlyDependentConcepts& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const FormatError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Concept erasure by orthogonal value decomposition in a "
                 "synthetic cross-attention pipeline"};
    app.require_subcommand(1);

    pipeline::PipelineConfig cfg;

    // erase
    EraseArgs erase_args;
    std::string erase_config, erase_seed, erase_s, erase_p, erase_eps;
    int erase_adaptive = -1;
    CLI::App* erase = app.add_subcommand("erase", "run an erasure scenario");
    erase->add_option("prompt", erase_args.prompt, "prompt text")->required();
    erase->add_option("--target", erase_args.targets,
                      "target concept to erase (repeatable)");
    erase->add_option("--out", erase_args.out_dir, "output directory")
        ->required();
    erase->add_flag("--noop", erase_args.noop, "allow an empty target list");
    erase->add_option("--config", erase_config, "key = value config file");
    erase->add_option("--seed", erase_seed, "pipeline seed");
    erase->add_option("--s", erase_s, "shift scale s");
    erase->add_option("--p", erase_p, "shift steepness p");
    erase->add_option("--epsilon", erase_eps, "cosine threshold epsilon");
    erase->add_flag("--adaptive,!--no-adaptive",
                    [&erase_adaptive](std::int64_t count) {
                        erase_adaptive = count > 0 ? 1 : 0;
                    },
                    "toggle the adaptive shift factor");

    // viz
    VizArgs viz_args;
    CLI::App* viz = app.add_subcommand(
        "viz", "render erased-component heatmaps from a report directory");
    viz->add_option("report_dir", viz_args.report_dir,
                    "directory produced by erase")
        ->required();
    viz->add_option("--out", viz_args.out_dir,
                    "image output directory (default: report dir)");
    viz->add_flag("--features", viz_args.features,
                  "also render before/after feature maps");

    // check
    std::string check_trials = "200", check_seed;
    bool inject_fault = false;
    CLI::App* check =
        app.add_subcommand("check", "run the randomized invariant suite");
    check->add_option("--trials", check_trials, "trials per property");
    check->add_option("--seed", check_seed, "suite seed");
#ifdef ORTHOERASE_TEST_HOOKS
    check->add_flag("--inject-fault", inject_fault,
                    "force one property failure (harness self-test)");
#endif

    // sweep
    SweepArgs sweep_args;
    std::string sweep_config, sweep_seed, sweep_s, sweep_p, sweep_eps;
    int sweep_adaptive = -1;
    CLI::App* sweep = app.add_subcommand(
        "sweep", "grid-run the shift hyperparameters on a target and a "
                 "related non-target prompt");
    sweep->add_option("--target", sweep_args.target, "target concept")
        ->default_val("snoopy dog");
    sweep->add_option("--prompt", sweep_args.prompt,
                      "related non-target prompt")
        ->default_val("mickey dog");
    sweep->add_option("--s", sweep_s, "comma-separated s values");
    sweep->add_option("--p", sweep_p, "comma-separated p values");
    sweep->add_option("--epsilon", sweep_eps,
                      "comma-separated epsilon values");
    sweep->add_option("--out", sweep_args.out_file, "output CSV path")
        ->default_val("sweep.csv");
    sweep->add_option("--config", sweep_config, "key = value config file");
    sweep->add_option("--seed", sweep_seed, "pipeline seed");
    sweep->add_flag("--adaptive,!--no-adaptive",
                    [&sweep_adaptive](std::int64_t count) {
                        sweep_adaptive = count > 0 ? 1 : 0;
                    },
                    "toggle the adaptive shift factor");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    return run_guarded([&]() -> int {
        // Precedence: defaults < ORTHOERASE_SEED < config file < flags.
        cli::apply_env_seed(cfg);

        if (erase->parsed()) {
            if (!erase_config.empty()) cli::apply_config_file(erase_config, cfg);
            if (!erase_seed.empty()) {
                cfg.seed = cli::parse_u64(erase_seed, "--seed");
            }
            if (!erase_s.empty()) cfg.shift.s = cli::parse_double(erase_s, "--s");
            if (!erase_p.empty()) cfg.shift.p = cli::parse_double(erase_p, "--p");
            if (!erase_eps.empty()) {
                cfg.shift.epsilon = cli::parse_double(erase_eps, "--epsilon");
            }
            if (erase_adaptive >= 0) cfg.adaptive = erase_adaptive == 1;
            cfg.validate();
            return cmd_erase(erase_args, cfg);
        }
        if (viz->parsed()) {
            return cmd_viz(viz_args);
        }
        if (check->parsed()) {
            std::uint64_t seed = 0;
            if (const char* env = std::getenv("ORTHOERASE_SEED")) {
                seed = cli::parse_u64(env, "ORTHOERASE_SEED");
            }
            if (!check_seed.empty()) {
                seed = cli::parse_u64(check_seed, "--seed");
            }
            const std::uint64_t trials =
                cli::parse_u64(check_trials, "--trials");
            return cmd_check(static_cast<std::size_t>(trials), seed,
                             inject_fault);
        }
        if (sweep->parsed()) {
            if (!sweep_config.empty()) cli::apply_config_file(sweep_config, cfg);
            if (!sweep_seed.empty()) {
                cfg.seed = cli::parse_u64(sweep_seed, "--seed");
            }
            if (sweep_adaptive >= 0) cfg.adaptive = sweep_adaptive == 1;
            sweep_args.s_values = sweep->count("--s")
                                      ? cli::parse_double_list(sweep_s, "--s")
                                      : std::vector<double>{cfg.shift.s};
            sweep_args.p_values = sweep->count("--p")
                                      ? cli::parse_double_list(sweep_p, "--p")
                                      : std::vector<double>{cfg.shift.p};
            sweep_args.epsilon_values =
                sweep->count("--epsilon")
                    ? cli::parse_double_list(sweep_eps, "--epsilon")
                    : std::vector<double>{cfg.shift.epsilon};
            cfg.validate();
            return cmd_sweep(sweep_args, cfg);
        }
        return 2;
    });
}
