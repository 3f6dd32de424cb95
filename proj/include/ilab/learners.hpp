#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "ilab/demos.hpp"
#include "ilab/envs.hpp"
#include "ilab/losses.hpp"

namespace ilab {

// Training is aborted when density ratios are infinite and no clip is set:
// the expert never visits a state the learner reaches.
class HardRegimeError : public std::runtime_error {
public:
    explicit HardRegimeError(const std::string& what) : std::runtime_error(what) {}
};

enum class LossKind { cov, fail, cov_fail };
enum class RatioMode { per_timestep, averaged };
enum class TrainMode { exact, sampled };

// Per-cell accumulated action weights; the reduction target for every
// classification-style loss.
struct WeightedClassificationProblem {
    int num_cells = 0;
    int num_actions = 0;
    std::vector<double> weight;  // [cell*A + a]

    WeightedClassificationProblem() = default;
    WeightedClassificationProblem(int cells, int actions)
        : num_cells(cells), num_actions(actions),
          weight(static_cast<std::size_t>(cells) * actions, 0.0) {}

    void add(int cell, int a, double w) {
        weight[static_cast<std::size_t>(cell) * num_actions + a] += w;
    }
    void add_all(const WeightedClassificationProblem& other);
    // weighted majority per cell, ties to the lowest action index, empty
    // cells to the uniform distribution
    Policy solve(const StateAggregationClass& cls) const;
};

// One next-state matching game: minimize the class IPM between the
// pushforward of learner_dist and expert_next.
struct IpmGameSpec {
    int t = 1;  // 1-based timestep the game came from
    std::vector<double> learner_dist;
    std::vector<double> expert_next;
};

// Union-aggregated per-iteration loss datasets (Alg-style dataset growth).
struct AggregatedLossDataset {
    std::vector<WeightedClassificationProblem> classification;
    std::vector<std::vector<IpmGameSpec>> ipm_games;      // one batch per iteration
    std::vector<std::vector<double>> state_ipm_weights;   // [iter][s*A+a], reweighted
    std::size_t iterations = 0;
};

struct TrainReport {
    std::variant<Policy, PolicySequence> policy;
    double train_loss = 0.0;
    struct Row {
        int iteration = 0;
        double validation = 0.0;
        double loss = 0.0;
    };
    std::vector<Row> per_iteration;
    int chosen_iteration = 0;
    std::string note;

    const Policy& stationary() const { return std::get<Policy>(policy); }
    const PolicySequence& sequence() const { return std::get<PolicySequence>(policy); }
    PolicyView view() const {
        if (std::holds_alternative<Policy>(policy)) return PolicyView(std::get<Policy>(policy));
        return PolicyView(std::get<PolicySequence>(policy));
    }
};

// Behavior cloning: exact minimizer of the 0-1 demonstration loss over
// deterministic class-feasible policies.
TrainReport train_bc(const DemoSource& demo, const StateAggregationClass& cls);

struct MinimaxResult {
    std::vector<double> cell_action_dist;  // [cell*A + a]
    double value = 0.0;
    double gap = 0.0;
    bool certified = false;

    Policy to_policy(const StateAggregationClass& cls, int num_actions) const;
};

// min over class-feasible stochastic policies of the class IPM between the
// pushforward of learner_occ_t and the expert's next-state distribution.
// Fictitious play with iterate averaging plus a deterministic-policy floor;
// gap is the duality-gap certificate at return.
MinimaxResult minimize_ipm_step(const TabularMDP& m, const DemoSource& demo,
                                const std::vector<double>& learner_occ_t,
                                const FunctionClass& fclass, const StateAggregationClass& cls,
                                int t);

// Same solver over a union of games (used by iterative training).
MinimaxResult solve_ipm_games(const TabularMDP& m, const std::vector<const IpmGameSpec*>& games,
                              const FunctionClass& fclass, const StateAggregationClass& cls);

struct ForwardOptions {
    double alpha = 1.0;
    std::optional<double> clip;
};

// One policy per timestep; at each t the roll-in of the already-trained
// prefix supplies the learner state distribution.
TrainReport forward_train(const EnvBundle& bundle, const DemoSource& demo, LossKind loss,
                          const FunctionClass& fclass, const ForwardOptions& opt = {});

struct IterativeOptions {
    double alpha = 1.0;
    std::optional<double> clip;
    RatioMode ratio_mode = RatioMode::per_timestep;
    int n_rollouts = 100;      // simulator rollouts per iteration, sampled mode
    double lambda = 0.0;       // smoothing for empirical occupancies
};

// Stationary-policy training by dataset aggregation; returns the iterate
// with the best validation metric (on-policy mismatch in exact mode,
// held-out demonstration disagreement in sampled mode). When out_dataset is
// given it receives the union-aggregated per-iteration losses.
TrainReport iterative_train(const EnvBundle& bundle, const DemoSource& demo, LossKind loss,
                            const FunctionClass& fclass, int iterations, RandomSource& rng,
                            const IterativeOptions& opt = {},
                            AggregatedLossDataset* out_dataset = nullptr);

// Interactive baseline: roll in the learner, label visited states with the
// expert, aggregate, retrain.
TrainReport train_dagger(const EnvBundle& bundle, const Policy& interactive_expert,
                         const StateAggregationClass& cls, int iterations, RandomSource& rng,
                         TrainMode mode = TrainMode::exact, int n_rollouts = 100);

}  // namespace ilab
