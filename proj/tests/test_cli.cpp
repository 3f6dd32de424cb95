#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <string>

#include "ilab/serialize.hpp"

using namespace ilab;
namespace fs = std::filesystem;

namespace {

std::string binary() {
    const char* p = std::getenv("ILAB_BIN");
    REQUIRE_MESSAGE(p != nullptr, "ILAB_BIN must point at the CLI binary");
    return p;
}

struct CmdResult {
    int exit_code = -1;
    std::string out;
    std::string err;
};

CmdResult run_cmd(const std::string& args, const fs::path& dir) {
    const fs::path out = dir / "stdout.txt", err = dir / "stderr.txt";
    const std::string cmd = binary() + " " + args + " > " + out.string() + " 2> " + err.string();
    const int raw = std::system(cmd.c_str());
    CmdResult r;
    r.exit_code = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    r.out = fs::exists(out) ? read_file(out) : "";
    r.err = fs::exists(err) ? read_file(err) : "";
    return r;
}

fs::path fresh_dir(const std::string& tag) {
    const fs::path d = fs::temp_directory_path() / ("ilab_cli_" + tag);
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

json realizable_config(const fs::path& out_dir) {
    return json{{"env", {{"name", "one_step"}, {"params", {{"slip", 0.1}}}}},
                {"algorithm", {{"name", "bc"}, {"policy_class", "singleton"}}},
                {"mode", {{"kind", "exact"}}},
                {"horizons", {4, 6, 8, 10}},
                {"seeds", {0}},
                {"output_dir", out_dir.string()}};
}

json goldilocks_cov_config(const fs::path& out_dir) {
    return json{{"env", {{"name", "one_step"}, {"params", {{"slip", 0.015}, {"aux_rate", 0.03}}}}},
                {"algorithm", {{"name", "alice_cov"}, {"training", "forward"}}},
                {"mode", {{"kind", "exact"}}},
                {"horizons", {5, 10, 20}},
                {"seeds", {0}},
                {"output_dir", out_dir.string()}};
}

void write_config(const fs::path& path, const json& j) { atomic_write(path, j.dump(2) + "\n"); }

}  // namespace

TEST_CASE("list-envs names every registered environment") {
    const fs::path dir = fresh_dir("list");
    const CmdResult r = run_cmd("list-envs", dir);
    CHECK(r.exit_code == 0);
    for (const char* name : {"one_step", "k_step", "unrecoverable", "latching"})
        CHECK(r.out.find(name) != std::string::npos);
    fs::remove_all(dir);
}

TEST_CASE("run writes artifacts; realizable regret is zero") {
    const fs::path dir = fresh_dir("run");
    write_config(dir / "cfg.json", realizable_config(dir / "out"));
    const CmdResult r = run_cmd("run --config " + (dir / "cfg.json").string(), dir);
    CHECK(r.exit_code == 0);
    REQUIRE(fs::exists(dir / "out" / "sweep.csv"));
    REQUIRE(fs::exists(dir / "out" / "manifest.json"));
    CHECK(fs::exists(dir / "out" / "trainreport_T4_seed0.csv"));
    CHECK(fs::exists(dir / "out" / "policy_T4_seed0.json"));
    const SweepResult sweep = sweep_from_csv(read_file(dir / "out" / "sweep.csv"));
    REQUIRE(sweep.rows.size() == 4);
    for (const SweepRow& row : sweep.rows) {
        CHECK(row.error.empty());
        CHECK(std::abs(row.regret) <= 1e-9);
    }
    const json manifest = json::parse(read_file(dir / "out" / "manifest.json"));
    CHECK(manifest.contains("config_hash"));
    CHECK(manifest.at("row_errors") == 0);
    fs::remove_all(dir);
}

TEST_CASE("exact reruns are byte-identical") {
    const fs::path dir = fresh_dir("repeat");
    write_config(dir / "cfg.json", goldilocks_cov_config(dir / "out1"));
    CHECK(run_cmd("run --config " + (dir / "cfg.json").string(), dir).exit_code == 0);
    const CmdResult second =
        run_cmd("run --config " + (dir / "cfg.json").string() + " --out " + (dir / "out2").string(),
                dir);
    CHECK(second.exit_code == 0);
    CHECK(read_file(dir / "out1" / "sweep.csv") == read_file(dir / "out2" / "sweep.csv"));
    CHECK(read_file(dir / "out1" / "trainreport_T10_seed0.csv") ==
          read_file(dir / "out2" / "trainreport_T10_seed0.csv"));
    CHECK(read_file(dir / "out1" / "policy_T20_seed0.json") ==
          read_file(dir / "out2" / "policy_T20_seed0.json"));
    json m1 = json::parse(read_file(dir / "out1" / "manifest.json"));
    json m2 = json::parse(read_file(dir / "out2" / "manifest.json"));
    m1.erase("timestamp_ms");
    m2.erase("timestamp_ms");
    m1.at("config").erase("output_dir");
    m2.at("config").erase("output_dir");
    CHECK(m1 == m2);
    fs::remove_all(dir);
}

TEST_CASE("config errors exit with code 2 and name the field") {
    const fs::path dir = fresh_dir("badcfg");
    json bad = realizable_config(dir / "out");
    bad["env"]["name"] = "not_an_env";
    write_config(dir / "cfg.json", bad);
    const CmdResult r = run_cmd("run --config " + (dir / "cfg.json").string(), dir);
    CHECK(r.exit_code == 2);
    CHECK(r.err.find("env.name") != std::string::npos);

    atomic_write(dir / "broken.json", "{ not json");
    const CmdResult rp = run_cmd("run --config " + (dir / "broken.json").string(), dir);
    CHECK(rp.exit_code == 2);
    CHECK(rp.err.find("parse error") != std::string::npos);

    json bad_field = realizable_config(dir / "out");
    bad_field["algorithm"]["training"] = "backwards";
    write_config(dir / "cfg2.json", bad_field);
    const CmdResult rf = run_cmd("run --config " + (dir / "cfg2.json").string(), dir);
    CHECK(rf.exit_code == 2);
    CHECK(rf.err.find("algorithm.training") != std::string::npos);
    fs::remove_all(dir);
}

TEST_CASE("verify-bounds holds on a goldilocks run and detects tampering") {
    const fs::path dir = fresh_dir("verify");
    write_config(dir / "cfg.json", goldilocks_cov_config(dir / "out"));
    CHECK(run_cmd("run --config " + (dir / "cfg.json").string(), dir).exit_code == 0);

    const CmdResult ok = run_cmd("verify-bounds --config " + (dir / "cfg.json").string() +
                                     " --check-csv " + (dir / "out" / "sweep.csv").string(),
                                 dir);
    CHECK(ok.exit_code == 0);
    CHECK(ok.out.find("alice_cov") != std::string::npos);
    CHECK(ok.out.find("false") == std::string::npos);

    // flip one digit somewhere in the data rows
    std::string broken = read_file(dir / "out" / "sweep.csv");
    const auto digit = broken.find_first_of("123456789", broken.find('\n'));
    REQUIRE(digit != std::string::npos);
    broken[digit] = broken[digit] == '9' ? '8' : '9';
    atomic_write(dir / "out" / "sweep.csv", broken);
    const CmdResult bad = run_cmd("verify-bounds --config " + (dir / "cfg.json").string() +
                                      " --check-csv " + (dir / "out" / "sweep.csv").string(),
                                  dir);
    CHECK(bad.exit_code == 1);
    fs::remove_all(dir);
}

TEST_CASE("runtime failures exit with code 1") {
    const fs::path dir = fresh_dir("rowerr");
    json cfg = json{{"env", {{"name", "latching"}, {"params", {{"signal_noise", 0.3}, {"slip", 0.2}}}}},
                    {"algorithm", {{"name", "alice_cov"}, {"training", "forward"}}},
                    {"mode", {{"kind", "exact"}}},
                    {"horizons", {6}},
                    {"seeds", {0}},
                    {"output_dir", (dir / "out").string()}};
    write_config(dir / "cfg.json", cfg);
    const CmdResult r = run_cmd("run --config " + (dir / "cfg.json").string(), dir);
    CHECK(r.exit_code == 1);
    const SweepResult sweep = sweep_from_csv(read_file(dir / "out" / "sweep.csv"));
    REQUIRE(sweep.rows.size() == 1);
    CHECK_FALSE(sweep.rows[0].error.empty());
    fs::remove_all(dir);
}

TEST_CASE("sampled mode writes demos and one row per seed") {
    const fs::path dir = fresh_dir("sampled");
    json cfg = json{{"env", {{"name", "one_step"}, {"params", {{"slip", 0.1}}}}},
                    {"algorithm", {{"name", "bc"}, {"policy_class", "singleton"}}},
                    {"mode", {{"kind", "sampled"}, {"n_demos", 60}, {"n_rollouts", 40}}},
                    {"horizons", {5, 8}},
                    {"seeds", {0, 1}},
                    {"output_dir", (dir / "out").string()}};
    write_config(dir / "cfg.json", cfg);
    const CmdResult r = run_cmd("run --config " + (dir / "cfg.json").string(), dir);
    CHECK(r.exit_code == 0);
    const SweepResult sweep = sweep_from_csv(read_file(dir / "out" / "sweep.csv"));
    CHECK(sweep.rows.size() == 4);  // two horizons x two seeds
    CHECK(fs::exists(dir / "out" / "demos_T5_seed1.csv"));
    CHECK(fs::exists(dir / "out" / "demo_manifest_T8_seed0.json"));
    const json manifest = json::parse(read_file(dir / "out" / "demo_manifest_T8_seed0.json"));
    CHECK(manifest.at("mode") == "sampled");
    CHECK(manifest.at("n") == 60);
    fs::remove_all(dir);
}

TEST_CASE("export-plotdata filters positive regret and fits the slope") {
    const fs::path dir = fresh_dir("plot");
    SweepResult s;
    for (int T : {10, 20, 40, 80, 160, 320}) {
        SweepRow r;
        r.env = "synthetic";
        r.algo = "algo";
        r.T = T;
        r.regret = 0.01 * T * T;
        s.rows.push_back(r);
    }
    SweepRow zero;
    zero.env = "synthetic";
    zero.algo = "algo";
    zero.T = 640;
    zero.regret = 0.0;
    s.rows.push_back(zero);
    atomic_write(dir / "sweep.csv", sweep_to_csv(s));
    const CmdResult r = run_cmd("export-plotdata --sweep " + (dir / "sweep.csv").string() +
                                    " --out " + (dir / "plot").string(),
                                dir);
    CHECK(r.exit_code == 0);
    const std::string plot = read_file(dir / "plot" / "plotdata.csv");
    // header plus the six positive-regret rows
    CHECK(std::count(plot.begin(), plot.end(), '\n') == 7);
    const std::string fits = read_file(dir / "plot" / "fits.csv");
    const auto line_start = fits.find("synthetic,algo,");
    REQUIRE(line_start != std::string::npos);
    const double beta = std::strtod(fits.c_str() + line_start + 15, nullptr);
    CHECK(std::abs(beta - 2.0) <= 1e-6);
    fs::remove_all(dir);
}
