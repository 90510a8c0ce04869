#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <sys/wait.h>
#include <unistd.h>

#include "orthoerase/avde.hpp"
#include "orthoerase/io_util.hpp"
#include "orthoerase/linalg.hpp"

namespace fs = std::filesystem;

namespace {

struct CliResult {
    int exit_code = -1;
    std::string output;  // stdout + stderr
};

CliResult run_cli(const std::string& args, const std::string& env = "") {
    const std::string cmd =
        env + (env.empty() ? "" : " ") + "'" ORTHOERASE_CLI_PATH "' " + args +
        " 2>&1";
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    CliResult result;
    char buf[512];
    while (fgets(buf, sizeof(buf), pipe)) result.output += buf;
    const int status = pclose(pipe);
    result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return result;
}

CliResult run_testhooks_cli(const std::string& args) {
    const std::string cmd =
        "'" ORTHOERASE_CLI_TESTHOOKS_PATH "' " + args + " 2>&1";
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    CliResult result;
    char buf[512];
    while (fgets(buf, sizeof(buf), pipe)) result.output += buf;
    const int status = pclose(pipe);
    result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return result;
}

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& tag) {
        path = fs::temp_directory_path() /
               ("orthoerase_cli_" + tag + "_" + std::to_string(::getpid()));
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
};

// Small dimensions keep the CLI tests quick.
fs::path write_small_config(const fs::path& dir) {
    const fs::path cfg = dir / "small.cfg";
    orthoerase::io::atomic_write(cfg,
                                 "# desk-scale test dimensions\n"
                                 "token_length = 12\n"
                                 "d = 16\n"
                                 "d_c = 16\n"
                                 "d_z = 8\n"
                                 "hw = 9\n"
                                 "layers = 2\n"
                                 "steps = 3\n");
    return cfg;
}

std::string quoted(const fs::path& p) { return "'" + p.string() + "'"; }

}  // namespace

TEST_CASE("erase happy path writes a report and prints the summary") {
    TempDir tmp("erase");
    const fs::path cfg = write_small_config(tmp.path);
    const auto res = run_cli("erase snoopy --target snoopy --out " +
                             quoted(tmp.path / "r") + " --config " +
                             quoted(cfg));
    CHECK(res.exit_code == 0);
    CHECK(res.output.rfind("n=1 cs_drop=", 0) == 0);
    CHECK(res.output.find(" fid=") != std::string::npos);
    CHECK(res.output.find('\n') == res.output.size() - 1);  // one line

    CHECK(fs::exists(tmp.path / "r" / "report.csv"));
    CHECK(fs::exists(tmp.path / "r" / "components_s0_l0.avde"));
    CHECK(fs::exists(tmp.path / "r" / "components_s2_l1.avde"));
    CHECK(fs::exists(tmp.path / "r" / "features_before_s0.avde"));
    CHECK(fs::exists(tmp.path / "r" / "features_after_s2.avde"));

    const std::string csv =
        orthoerase::io::read_file(tmp.path / "r" / "report.csv");
    CHECK(csv.rfind("prompt,n_targets,step,layer,token,component_norm,"
                    "cs_before,cs_after,fid\n",
                    0) == 0);
    // header + steps * layers * tokens rows
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + 3 * 2 * 12);
}

TEST_CASE("duplicate targets exit with code 3") {
    TempDir tmp("dup");
    const fs::path cfg = write_small_config(tmp.path);
    const auto res = run_cli("erase snoopy --target snoopy --target snoopy "
                             "--out " +
                             quoted(tmp.path / "r") + " --config " +
                             quoted(cfg));
    CHECK(res.exit_code == 3);
}

TEST_CASE("missing output parent exits 1 and names the path") {
    TempDir tmp("noparent");
    const fs::path cfg = write_small_config(tmp.path);
    const fs::path bad = tmp.path / "no" / "such" / "dir";
    const auto res = run_cli("erase snoopy --target snoopy --out " +
                             quoted(bad) + " --config " + quoted(cfg));
    CHECK(res.exit_code == 1);
    CHECK(res.output.find(bad.string()) != std::string::npos);
}

TEST_CASE("erase without targets needs --noop") {
    TempDir tmp("noop");
    const fs::path cfg = write_small_config(tmp.path);
    const auto bare = run_cli("erase snoopy --out " +
                              quoted(tmp.path / "r2") + " --config " +
                              quoted(cfg));
    CHECK(bare.exit_code == 2);

    const auto noop = run_cli("erase snoopy --noop --out " +
                              quoted(tmp.path / "r") + " --config " +
                              quoted(cfg));
    CHECK(noop.exit_code == 0);
    CHECK(noop.output.rfind("n=0 cs_drop=0 fid=0", 0) == 0);
}

TEST_CASE("repeated erase runs are byte-identical") {
    TempDir tmp("repeat");
    const fs::path cfg = write_small_config(tmp.path);
    const std::string args = "erase \"van gogh\" --target \"van gogh\" "
                             "--target mickey --config " +
                             quoted(cfg);
    CHECK(run_cli(args + " --out " + quoted(tmp.path / "a")).exit_code == 0);
    CHECK(run_cli(args + " --out " + quoted(tmp.path / "b")).exit_code == 0);

    for (const auto& entry : fs::directory_iterator(tmp.path / "a")) {
        const fs::path other = tmp.path / "b" / entry.path().filename();
        REQUIRE(fs::exists(other));
        CHECK(orthoerase::io::read_file(entry.path()) ==
              orthoerase::io::read_file(other));
    }
}

TEST_CASE("config precedence: env < file < flag") {
    TempDir tmp("prec");
    const fs::path cfg = write_small_config(tmp.path);
    const fs::path seeded_cfg = tmp.path / "seeded.cfg";
    orthoerase::io::atomic_write(
        seeded_cfg, orthoerase::io::read_file(cfg) + "seed = 1\n");

    auto summary = [&](const std::string& extra, const std::string& env) {
        TempDir inner("prec_run");
        const auto res = run_cli("erase snoopy --target snoopy --out " +
                                     quoted(inner.path / "r") + " " + extra,
                                 env);
        REQUIRE(res.exit_code == 0);
        return res.output;
    };

    const std::string with_seed1 =
        summary("--config " + quoted(cfg) + " --seed 1", "");
    const std::string with_seed2 =
        summary("--config " + quoted(cfg) + " --seed 2", "");
    CHECK(with_seed1 != with_seed2);

    // file seed beats the environment seed
    CHECK(summary("--config " + quoted(seeded_cfg), "ORTHOERASE_SEED=2") ==
          with_seed1);
    // flag beats the file seed
    CHECK(summary("--config " + quoted(seeded_cfg) + " --seed 2", "") ==
          with_seed2);
    // environment seed applies when nothing else sets one
    CHECK(summary("--config " + quoted(cfg), "ORTHOERASE_SEED=2") ==
          with_seed2);
}

TEST_CASE("unknown config keys are rejected") {
    TempDir tmp("badcfg");
    const fs::path cfg = tmp.path / "bad.cfg";
    orthoerase::io::atomic_write(cfg, "token_length = 12\nbogus = 1\n");
    const auto res = run_cli("erase snoopy --target snoopy --out " +
                             quoted(tmp.path / "r") + " --config " +
                             quoted(cfg));
    CHECK(res.exit_code == 2);
    CHECK(res.output.find("bogus") != std::string::npos);
}

TEST_CASE("config file can toggle adaptive mode") {
    TempDir tmp("cfgadapt");
    const fs::path base = write_small_config(tmp.path);
    const fs::path off_cfg = tmp.path / "off.cfg";
    orthoerase::io::atomic_write(
        off_cfg, orthoerase::io::read_file(base) + "adaptive = false\n");

    const auto via_file = run_cli("erase snoopy --target snoopy --out " +
                                  quoted(tmp.path / "a") + " --config " +
                                  quoted(off_cfg));
    const auto via_flag = run_cli("erase snoopy --target snoopy "
                                  "--no-adaptive --out " +
                                  quoted(tmp.path / "b") + " --config " +
                                  quoted(base));
    REQUIRE(via_file.exit_code == 0);
    REQUIRE(via_flag.exit_code == 0);
    CHECK(via_file.output == via_flag.output);
}

TEST_CASE("viz renders PGM heatmaps from a report directory") {
    TempDir tmp("viz");
    const fs::path cfg = write_small_config(tmp.path);
    REQUIRE(run_cli("erase snoopy --noop --out " + quoted(tmp.path / "r") +
                    " --config " + quoted(cfg))
                .exit_code == 0);

    const auto res =
        run_cli("viz " + quoted(tmp.path / "r") + " --features");
    CHECK(res.exit_code == 0);

    const fs::path pgm = tmp.path / "r" / "components_s0_l0.pgm";
    REQUIRE(fs::exists(pgm));
    const std::string bytes = orthoerase::io::read_file(pgm);
    const std::string header = "P5\n12 16\n255\n";  // l wide, d high
    REQUIRE(bytes.size() == header.size() + 12 * 16);
    CHECK(bytes.substr(0, header.size()) == header);
    // all-zero components render as uniform black
    for (std::size_t i = header.size(); i < bytes.size(); ++i) {
        CHECK(bytes[i] == 0);
    }

    const fs::path ppm = tmp.path / "r" / "features_s0.ppm";
    REQUIRE(fs::exists(ppm));
    const std::string ppm_bytes = orthoerase::io::read_file(ppm);
    CHECK(ppm_bytes.substr(0, 3) == "P6\n");

    // malformed dump -> exit 2
    orthoerase::io::atomic_write(tmp.path / "r" / "components_s9_l9.avde",
                                 "AVDEgarbage");
    CHECK(run_cli("viz " + quoted(tmp.path / "r")).exit_code == 2);
}

TEST_CASE("viz lights exactly the nonzero token's line") {
    TempDir tmp("vizline");
    // hand-made dump: 5 tokens x 4 channels, only token 2 nonzero
    orthoerase::linalg::Mat dump(5, 4);
    for (std::size_t c = 0; c < 4; ++c) dump(2, c) = 1.0 + double(c);
    orthoerase::avde::write_matrix(tmp.path / "components_s0_l0.avde", dump);

    REQUIRE(run_cli("viz " + quoted(tmp.path)).exit_code == 0);
    const std::string bytes =
        orthoerase::io::read_file(tmp.path / "components_s0_l0.pgm");
    const std::string header = "P5\n5 4\n255\n";
    REQUIRE(bytes.size() == header.size() + 20);
    CHECK(bytes.substr(0, header.size()) == header);
    for (std::size_t y = 0; y < 4; ++y) {
        for (std::size_t x = 0; x < 5; ++x) {
            const auto px = static_cast<unsigned char>(
                bytes[header.size() + y * 5 + x]);
            if (x == 2) {
                CHECK(px > 0);
            } else {
                CHECK(px == 0);
            }
        }
    }
    // the largest |component| saturates the scale
    CHECK(static_cast<unsigned char>(bytes[header.size() + 3 * 5 + 2]) == 255);
}

TEST_CASE("sweep fid column is non-decreasing as epsilon drops") {
    TempDir tmp("sweepmono");
    const fs::path out = tmp.path / "sweep.csv";
    // default desk-scale dimensions; the related prompt shares a token with
    // the target, so lowering the threshold engages erasure on it
    const auto res = run_cli(
        "sweep --epsilon 0.93,0.8,0.7,0.6 --seed 0 --out " + quoted(out));
    REQUIRE(res.exit_code == 0);
    std::ifstream csv(out);
    std::string line;
    std::getline(csv, line);  // header
    double prev = -1.0;
    std::size_t rows = 0;
    while (std::getline(csv, line)) {
        const auto last_comma = line.rfind(',');
        const double fid = std::stod(line.substr(last_comma + 1));
        CHECK(fid >= prev);
        prev = fid;
        ++rows;
    }
    CHECK(rows == 4);
}

TEST_CASE("the adaptive toggle changes the outcome") {
    TempDir tmp("adapt");
    const fs::path cfg = write_small_config(tmp.path);
    const auto on = run_cli("erase snoopy --target snoopy --adaptive --out " +
                            quoted(tmp.path / "on") + " --config " +
                            quoted(cfg));
    const auto off = run_cli("erase snoopy --target snoopy --no-adaptive "
                             "--out " +
                             quoted(tmp.path / "off") + " --config " +
                             quoted(cfg));
    REQUIRE(on.exit_code == 0);
    REQUIRE(off.exit_code == 0);
    CHECK(on.output != off.output);
}

TEST_CASE("check passes by default and honors --trials 0") {
    const auto res = run_cli("check --trials 25 --seed 7");
    CHECK(res.exit_code == 0);
    CHECK(res.output.find("PASS oracle-equivalence") != std::string::npos);
    CHECK(res.output.find("FAIL") == std::string::npos);

    const auto vacuous = run_cli("check --trials 0");
    CHECK(vacuous.exit_code == 0);
    CHECK(vacuous.output.find("warning") != std::string::npos);
}

TEST_CASE("the injected fault trips the check harness") {
    const auto res = run_testhooks_cli("check --trials 5 --inject-fault");
    CHECK(res.exit_code == 4);
    CHECK(res.output.find("FAIL") != std::string::npos);
    CHECK(res.output.find("seed=") != std::string::npos);
}

TEST_CASE("sweep writes one row per grid point") {
    TempDir tmp("sweep");
    const fs::path cfg = write_small_config(tmp.path);
    const fs::path out = tmp.path / "sweep.csv";

    const auto res = run_cli("sweep --config " + quoted(cfg) + " --out " +
                             quoted(out));
    CHECK(res.exit_code == 0);
    const std::string csv = orthoerase::io::read_file(out);
    CHECK(csv.rfind("s,p,epsilon,cs_drop_target,fid_nontarget\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 2);  // header + 1 row

    const auto grid = run_cli("sweep --config " + quoted(cfg) +
                              " --epsilon 0.93,0.8 --s 1,2 --out " +
                              quoted(out));
    CHECK(grid.exit_code == 0);
    const std::string grid_csv = orthoerase::io::read_file(out);
    CHECK(std::count(grid_csv.begin(), grid_csv.end(), '\n') == 5);
}

TEST_CASE("sweep rejects bad grids at parse time") {
    TempDir tmp("sweepbad");
    const fs::path cfg = write_small_config(tmp.path);
    CHECK(run_cli("sweep --config " + quoted(cfg) + " --s 0").exit_code == 2);
    CHECK(run_cli("sweep --config " + quoted(cfg) + " --s ''").exit_code == 2);
    CHECK(run_cli("sweep --config " + quoted(cfg) + " --epsilon 1.5")
              .exit_code == 2);
}
