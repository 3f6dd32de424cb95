#include "ilab/cli.hpp"

#include <chrono>
#include <filesystem>
#include <iostream>

#include <CLI11.hpp>

namespace ilab::cli {

namespace fs = std::filesystem;

namespace {

[[noreturn]] void field_error(const std::string& field, const std::string& why) {
    throw std::invalid_argument("config field '" + field + "': " + why);
}

AlgorithmSpec algorithm_from_json(const json& j) {
    AlgorithmSpec spec;
    if (!j.contains("name")) field_error("algorithm.name", "missing");
    try {
        spec.kind = algorithm_from_string(j.at("name").get<std::string>());
    } catch (const std::exception& e) {
        field_error("algorithm.name", e.what());
    }
    if (j.contains("training")) {
        const std::string t = j.at("training").get<std::string>();
        if (t == "forward")
            spec.training = Training::forward;
        else if (t == "iterative")
            spec.training = Training::iterative;
        else
            field_error("algorithm.training", "must be 'forward' or 'iterative', got '" + t + "'");
    }
    if (j.contains("fclass")) {
        spec.fclass = j.at("fclass").get<std::string>();
        if (spec.fclass != "full" && spec.fclass != "constant")
            field_error("algorithm.fclass", "must be 'full' or 'constant'");
    }
    if (j.contains("alpha")) {
        spec.alpha = j.at("alpha").get<double>();
        if (spec.alpha < 0.0 || spec.alpha > 1.0) field_error("algorithm.alpha", "must be in [0,1]");
    }
    if (j.contains("clip") && !j.at("clip").is_null()) {
        spec.clip = j.at("clip").get<double>();
        if (*spec.clip <= 0.0) field_error("algorithm.clip", "must be positive");
    }
    if (j.contains("iterations")) {
        spec.iterations = j.at("iterations").get<int>();
        if (spec.iterations < 1) field_error("algorithm.iterations", "must be >= 1");
    }
    if (j.contains("policy_class")) {
        spec.policy_class = j.at("policy_class").get<std::string>();
        if (spec.policy_class != "default" && spec.policy_class != "singleton" &&
            spec.policy_class != "single_cell")
            field_error("algorithm.policy_class", "must be default | singleton | single_cell");
    }
    if (j.contains("ratio_mode")) {
        const std::string r = j.at("ratio_mode").get<std::string>();
        if (r == "per_timestep")
            spec.ratio_mode = RatioMode::per_timestep;
        else if (r == "averaged")
            spec.ratio_mode = RatioMode::averaged;
        else
            field_error("algorithm.ratio_mode", "must be 'per_timestep' or 'averaged'");
    }
    if (j.contains("label")) spec.label = j.at("label").get<std::string>();
    return spec;
}

}  // namespace

ExperimentConfig config_from_json(const json& j) {
    ExperimentConfig cfg;
    cfg.raw = j;
    if (!j.contains("env") || !j.at("env").contains("name")) field_error("env.name", "missing");
    cfg.env_name = j.at("env").at("name").get<std::string>();
    {
        const auto reg = env_registry();
        if (reg.find(cfg.env_name) == reg.end())
            field_error("env.name", "unknown environment '" + cfg.env_name + "'");
        if (j.at("env").contains("params")) {
            cfg.env_params = j.at("env").at("params").get<std::map<std::string, double>>();
            const auto& specs = reg.at(cfg.env_name);
            for (const auto& [k, v] : cfg.env_params) {
                bool known = false;
                for (const auto& s : specs) known |= s.name == k;
                if (!known) field_error("env.params." + k, "unknown parameter");
            }
        }
    }
    if (!j.contains("algorithm")) field_error("algorithm", "missing");
    cfg.algorithm = algorithm_from_json(j.at("algorithm"));
    if (j.contains("mode")) {
        const auto& m = j.at("mode");
        const std::string kind = m.contains("kind") ? m.at("kind").get<std::string>() : "exact";
        if (kind == "exact") {
            cfg.mode = TrainMode::exact;
        } else if (kind == "sampled") {
            cfg.mode = TrainMode::sampled;
            if (m.contains("n_demos")) cfg.sampled.n_demos = m.at("n_demos").get<int>();
            if (m.contains("n_rollouts")) cfg.sampled.n_rollouts = m.at("n_rollouts").get<int>();
            if (m.contains("lambda")) cfg.sampled.lambda = m.at("lambda").get<double>();
            if (cfg.sampled.n_demos < 1) field_error("mode.n_demos", "must be >= 1");
            if (cfg.sampled.n_rollouts < 1) field_error("mode.n_rollouts", "must be >= 1");
        } else {
            field_error("mode.kind", "must be 'exact' or 'sampled'");
        }
    }
    if (!j.contains("horizons") || j.at("horizons").empty()) field_error("horizons", "missing or empty");
    cfg.horizons = j.at("horizons").get<std::vector<int>>();
    for (int T : cfg.horizons)
        if (T < 2) field_error("horizons", "every horizon must be >= 2");
    if (j.contains("seeds")) cfg.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    if (cfg.seeds.empty()) cfg.seeds = {0};
    if (j.contains("output_dir")) cfg.output_dir = j.at("output_dir").get<std::string>();
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    json j;
    try {
        j = json::parse(read_file(path));
    } catch (const json::parse_error& e) {
        throw std::invalid_argument(std::string("config parse error: ") + e.what());
    }
    return config_from_json(j);
}

namespace {

struct RunOutput {
    SweepResult sweep;
    std::vector<std::pair<std::string, std::string>> files;  // name -> content
    int n_errors = 0;
};

RunOutput execute(const ExperimentConfig& cfg) {
    RunOutput out;
    std::vector<std::uint64_t> seeds = cfg.seeds;
    if (cfg.mode == TrainMode::exact) seeds.resize(1);
    SweepConfig scfg;
    scfg.mode = cfg.mode;
    scfg.sampled = cfg.sampled;
    for (int T : cfg.horizons) {
        for (std::uint64_t seed : seeds) {
            SweepRow row;
            row.env = cfg.env_name;
            row.T = T;
            row.seed = seed;
            row.algo = cfg.algorithm.effective_label();
            try {
                EnvBundle env = build_env(cfg.env_name, T, cfg.env_params);
                RunArtifacts run = run_algorithm(env, cfg.algorithm, cfg.mode, seed, cfg.sampled);
                row = row_from_artifacts(run, seed);
                const std::string tag = "T" + std::to_string(T) + "_seed" + std::to_string(seed);
                out.files.emplace_back("trainreport_" + tag + ".csv",
                                       train_report_to_csv(run.report));
                if (cfg.mode == TrainMode::sampled) {
                    out.files.emplace_back("demos_" + tag + ".csv", demo_to_csv(run.demo));
                    out.files.emplace_back("demo_manifest_" + tag + ".json",
                                           demo_manifest(run.demo).dump(2) + "\n");
                }
                json pol = run.report.view().is_sequence()
                               ? json{{"kind", "sequence"},
                                      {"per_step", [&] {
                                           json arr = json::array();
                                           for (const Policy& p : run.report.sequence().per_step)
                                               arr.push_back(policy_to_json(p));
                                           return arr;
                                       }()}}
                               : json{{"kind", "stationary"},
                                      {"policy", policy_to_json(run.report.stationary())}};
                out.files.emplace_back("policy_" + tag + ".json", pol.dump(2) + "\n");
            } catch (const std::exception& e) {
                row.error = e.what();
                ++out.n_errors;
            }
            out.sweep.rows.push_back(std::move(row));
        }
    }
    return out;
}

json make_manifest(const ExperimentConfig& cfg, const RunOutput& out) {
    std::vector<std::uint64_t> seeds = cfg.seeds;
    if (cfg.mode == TrainMode::exact) seeds.resize(1);
    const auto now = std::chrono::system_clock::now().time_since_epoch();
    return json{{"config", cfg.raw},
                {"config_hash", config_hash(cfg.raw)},
                {"seeds", seeds},
                {"horizons", cfg.horizons},
                {"mode", cfg.mode == TrainMode::exact ? "exact" : "sampled"},
                {"rows", out.sweep.rows.size()},
                {"row_errors", out.n_errors},
                {"version", "ilab 0.1.0"},
                {"timestamp_ms",
                 std::chrono::duration_cast<std::chrono::milliseconds>(now).count()}};
}

ExperimentConfig apply_overrides(ExperimentConfig cfg, const RunOverrides& ov) {
    if (ov.seed) cfg.seeds = {*ov.seed};
    if (ov.out) cfg.output_dir = *ov.out;
    if (ov.mode) {
        if (*ov.mode == "exact")
            cfg.mode = TrainMode::exact;
        else if (*ov.mode == "sampled")
            cfg.mode = TrainMode::sampled;
        else
            throw std::invalid_argument("--mode must be 'exact' or 'sampled'");
    }
    return cfg;
}

}  // namespace

int cmd_run(const std::string& config_path, const RunOverrides& overrides) {
    ExperimentConfig cfg;
    try {
        cfg = apply_overrides(load_config(config_path), overrides);
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitUsage;
    }
    const RunOutput out = execute(cfg);
    fs::create_directories(cfg.output_dir);
    atomic_write(fs::path(cfg.output_dir) / "sweep.csv", sweep_to_csv(out.sweep));
    for (const auto& [name, content] : out.files)
        atomic_write(fs::path(cfg.output_dir) / name, content);
    atomic_write(fs::path(cfg.output_dir) / "manifest.json",
                 make_manifest(cfg, out).dump(2) + "\n");
    if (!overrides.quiet) {
        std::cout << "wrote " << out.sweep.rows.size() << " rows to " << cfg.output_dir
                  << "/sweep.csv";
        if (out.n_errors) std::cout << " (" << out.n_errors << " row errors)";
        std::cout << "\n";
    }
    return out.n_errors == 0 ? kExitOk : kExitRuntime;
}

int cmd_verify_bounds(const std::string& config_path, const RunOverrides& overrides,
                      const std::string& check_csv) {
    ExperimentConfig cfg;
    try {
        cfg = apply_overrides(load_config(config_path), overrides);
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitUsage;
    }
    std::vector<std::uint64_t> seeds = cfg.seeds;
    if (cfg.mode == TrainMode::exact) seeds.resize(1);

    if (!check_csv.empty()) {
        const RunOutput out = execute(cfg);
        std::string recomputed = sweep_to_csv(out.sweep);
        std::string stored;
        try {
            stored = read_file(check_csv);
        } catch (const std::exception& e) {
            std::cerr << e.what() << "\n";
            return kExitUsage;
        }
        if (stored != recomputed) {
            std::cerr << "stored sweep CSV does not match a fresh run (tampered or stale)\n";
            return kExitRuntime;
        }
        if (!overrides.quiet) std::cout << "stored sweep CSV matches the recomputed run\n";
    }

    bool all_hold = true;
    if (!overrides.quiet) std::cout << "theorem,T,seed,holds,slack\n";
    for (int T : cfg.horizons) {
        for (std::uint64_t seed : seeds) {
            try {
                EnvBundle env = build_env(cfg.env_name, T, cfg.env_params);
                RunArtifacts run = run_algorithm(env, cfg.algorithm, cfg.mode, seed, cfg.sampled);
                for (BoundTheorem thm : applicable_theorems(cfg.algorithm.kind)) {
                    const BoundCheck chk = verify_bound(thm, run);
                    all_hold &= chk.holds;
                    if (!overrides.quiet)
                        std::cout << to_string(thm) << "," << T << "," << seed << ","
                                  << (chk.holds ? "true" : "false") << "," << fmt_double(chk.slack)
                                  << "\n";
                }
            } catch (const std::exception& e) {
                std::cerr << "run failed (T=" << T << ", seed=" << seed << "): " << e.what()
                          << "\n";
                all_hold = false;
            }
        }
    }
    return all_hold ? kExitOk : kExitRuntime;
}

int cmd_list_envs(bool quiet) {
    const auto reg = env_registry();
    for (const auto& [name, specs] : reg) {
        std::cout << name << "\n";
        if (quiet) continue;
        for (const auto& s : specs)
            std::cout << "  " << s.name << " (default " << s.default_value << "): " << s.doc
                      << "\n";
    }
    return kExitOk;
}

int cmd_export_plotdata(const std::string& sweep_csv_path, const std::string& out_dir, bool quiet) {
    SweepResult sweep;
    try {
        sweep = sweep_from_csv(read_file(sweep_csv_path));
    } catch (const std::exception& e) {
        std::cerr << "cannot read sweep: " << e.what() << "\n";
        return kExitUsage;
    }
    std::ostringstream plot;
    plot << "env,algo,T,log_T,log_regret\n";
    std::vector<std::pair<std::string, std::string>> keys;
    for (const SweepRow& r : sweep.rows) {
        if (!r.error.empty() || r.regret <= 1e-12) continue;
        plot << r.env << "," << r.algo << "," << r.T << ","
             << fmt_double(std::log(static_cast<double>(r.T))) << ","
             << fmt_double(std::log(r.regret)) << "\n";
        if (std::find(keys.begin(), keys.end(), std::make_pair(r.env, r.algo)) == keys.end())
            keys.emplace_back(r.env, r.algo);
    }
    std::vector<ExponentFit> fits;
    std::vector<std::pair<std::string, std::string>> fit_keys;
    for (const auto& [env, algo] : keys) {
        try {
            fits.push_back(fit_scaling_exponent(sweep, algo, env));
            fit_keys.emplace_back(env, algo);
        } catch (const std::exception&) {
            // fewer than 4 positive rows: no fit for this group
        }
    }
    fs::create_directories(out_dir);
    atomic_write(fs::path(out_dir) / "plotdata.csv", plot.str());
    atomic_write(fs::path(out_dir) / "fits.csv", exponent_fits_to_csv(fit_keys, fits));
    if (!quiet)
        std::cout << "wrote plotdata.csv and fits.csv (" << fits.size() << " fits) to " << out_dir
                  << "\n";
    return kExitOk;
}

int main_impl(int argc, char** argv) {
    CLI::App app{"tabular imitation-learning laboratory"};
    app.require_subcommand(1);

    std::string config_path, check_csv, sweep_path, out_dir = "plot";
    RunOverrides ov;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_path, "experiment config (JSON)")->required();
        cmd->add_option("--seed", ov.seed, "override the seed list with one seed");
        cmd->add_option("--out", ov.out, "override output_dir");
        cmd->add_option("--mode", ov.mode, "override mode: exact | sampled");
        cmd->add_flag("--quiet", ov.quiet, "suppress normal output");
    };

    CLI::App* run = app.add_subcommand("run", "run the experiment and write CSV artifacts");
    add_common(run);
    CLI::App* verify =
        app.add_subcommand("verify-bounds", "run and check every applicable regret bound");
    add_common(verify);
    verify->add_option("--check-csv", check_csv,
                       "also recompute and compare a stored sweep.csv");
    CLI::App* list = app.add_subcommand("list-envs", "list environments and parameter schemas");
    bool list_quiet = false;
    list->add_flag("--quiet", list_quiet, "names only");
    CLI::App* plot = app.add_subcommand("export-plotdata", "log-log plot data + exponent fits");
    plot->add_option("--sweep", sweep_path, "sweep.csv produced by run")->required();
    plot->add_option("--out", out_dir, "output directory");
    bool plot_quiet = false;
    plot->add_flag("--quiet", plot_quiet, "suppress normal output");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (run->parsed()) return cmd_run(config_path, ov);
        if (verify->parsed()) return cmd_verify_bounds(config_path, ov, check_csv);
        if (list->parsed()) return cmd_list_envs(list_quiet);
        if (plot->parsed()) return cmd_export_plotdata(sweep_path, out_dir, plot_quiet);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return kExitUsage;
}

}  // namespace ilab::cli
