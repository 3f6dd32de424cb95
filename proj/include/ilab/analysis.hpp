#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ilab/learners.hpp"

namespace ilab {

enum class AlgorithmKind { bc, dagger, alice_cov, alice_fail, alice_cov_fail };
enum class Training { forward, iterative };

std::string to_string(AlgorithmKind k);
AlgorithmKind algorithm_from_string(const std::string& s);

struct AlgorithmSpec {
    AlgorithmKind kind = AlgorithmKind::bc;
    Training training = Training::forward;  // ALICE variants only
    std::string fclass = "full";             // full | constant
    double alpha = 1.0;
    std::optional<double> clip;
    int iterations = 8;                      // dagger / iterative
    std::string policy_class = "default";    // default | singleton | single_cell
    RatioMode ratio_mode = RatioMode::per_timestep;
    std::string label;                       // CSV label; derived when empty

    std::string effective_label() const;
};

struct SampledModeConfig {
    int n_demos = 200;
    int n_rollouts = 100;
    double lambda = 0.0;
};

// Everything a bound check needs, exactly as produced by one training run.
struct RunArtifacts {
    EnvBundle bundle;    // with any policy-class override applied
    DemoSource demo;
    FunctionClass fclass;
    AlgorithmSpec spec;
    TrainMode mode = TrainMode::exact;
    TrainReport report;
};

RunArtifacts run_algorithm(const EnvBundle& env, const AlgorithmSpec& spec, TrainMode mode,
                           std::uint64_t seed, const SampledModeConfig& sampled = {});

enum class BoundTheorem {
    bc_quadratic,
    dagger_linear,
    bc_goldilocks,
    alice_cov,
    alice_fail,
    alice_cov_fail,
};

std::string to_string(BoundTheorem t);
BoundTheorem theorem_from_string(const std::string& s);

// Every constant is measured from the run; nothing is assumed.
struct BoundCheck {
    BoundTheorem theorem = BoundTheorem::bc_quadratic;
    bool holds = false;
    double slack = 0.0;  // rhs - regret
    double rhs = 0.0;
    double regret = 0.0;
    double mismatch = 0.0;
    double epsilon = 0.0;
    double gamma = 0.0;
    double density_ratio = 0.0;
    double advantage_bound = 0.0;
    double ibe = 0.0;
};

BoundCheck verify_bound(BoundTheorem theorem, const RunArtifacts& run);

// theorems whose premises the algorithm's output speaks to
std::vector<BoundTheorem> applicable_theorems(AlgorithmKind kind);

struct SweepRow {
    std::string env;
    std::string params;  // compact key=value list
    int T = 0;
    std::string algo;
    std::uint64_t seed = 0;
    double regret = 0.0;
    double mismatch = 0.0;
    double epsilon = 0.0;
    double gamma = 0.0;
    double density_ratio = 0.0;
    double advantage_bound = 0.0;
    double ibe = 0.0;
    std::string bound_thm;
    double bound_rhs = 0.0;
    bool holds = false;
    double slack = 0.0;
    std::string error;  // row-level failure, empty on success
};

struct SweepResult {
    std::vector<SweepRow> rows;
};

struct SweepConfig {
    TrainMode mode = TrainMode::exact;
    SampledModeConfig sampled;
};

// Measured constants and the algorithm's primary bound, as one sweep row.
SweepRow row_from_artifacts(const RunArtifacts& run, std::uint64_t seed);

// One row per (T, algorithm, seed); exact mode collapses seeds to one
// deterministic row. Row failures are recorded, not thrown. Rows are
// independent and may be evaluated in parallel; output order is fixed.
SweepResult horizon_sweep(const std::string& env_name,
                          const std::map<std::string, double>& env_params,
                          const std::vector<int>& T_list,
                          const std::vector<AlgorithmSpec>& algorithms,
                          const std::vector<std::uint64_t>& seeds, const SweepConfig& cfg = {});

struct ExponentFit {
    double beta = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
    std::vector<int> T_range;
    int n_points = 0;
    int n_excluded = 0;
};

// Least-squares slope of log(regret) vs log(T); rows with regret <= 1e-12
// are excluded and counted.
ExponentFit fit_scaling_exponent(const SweepResult& sweep, const std::string& algo,
                                 const std::string& env);

}  // namespace ilab
