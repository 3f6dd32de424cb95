#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ilab/serialize.hpp"

namespace ilab::cli {

// Exit codes: 0 success, 1 runtime/bound failure, 2 usage/config error.
constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

struct ExperimentConfig {
    std::string env_name;
    std::map<std::string, double> env_params;
    AlgorithmSpec algorithm;
    TrainMode mode = TrainMode::exact;
    SampledModeConfig sampled;
    std::vector<int> horizons;
    std::vector<std::uint64_t> seeds;
    std::string output_dir = "out";
    json raw;  // the parsed document, for hashing and the manifest
};

// Throws std::invalid_argument naming the offending field.
ExperimentConfig load_config(const std::string& path);
ExperimentConfig config_from_json(const json& j);

struct RunOverrides {
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    std::optional<std::string> mode;
    bool quiet = false;
};

int cmd_run(const std::string& config_path, const RunOverrides& overrides);
int cmd_verify_bounds(const std::string& config_path, const RunOverrides& overrides,
                      const std::string& check_csv = "");
int cmd_list_envs(bool quiet);
int cmd_export_plotdata(const std::string& sweep_csv_path, const std::string& out_dir, bool quiet);

int main_impl(int argc, char** argv);

}  // namespace ilab::cli
