#pragma once

#include <map>
#include <string>
#include <vector>

#include "ilab/mdp.hpp"

namespace ilab {

// One experiment environment: MDP, its expert, and the policy class the
// learner is restricted to. label: easy | goldilocks | hard.
struct EnvBundle {
    std::string name;
    TabularMDP mdp;
    Policy expert;
    StateAggregationClass learner_class;
    std::string label;
    std::map<std::string, double> params;
};

enum class RecoverabilityKind { one_step, k_step, unrecoverable };

// Recoverability family. States: a cost-free main state, a cost-free side
// state reached at rate aux_rate, and a chain of k cost-1 bad states entered
// at rate slip (or by wrong actions). Action 0 is "stay / keep going",
// action 1 is "recover / step along the chain".
//
//   one_step       bad state returns to the main state in one recovery step
//   k_step         recovery walks a k-long chain
//   unrecoverable  the bad state is absorbing; two side states need opposite
//                  recovery actions, so any aggregated policy leaks into it
//
// The default learner class merges the side state with the chain entry
// (one_step / k_step) or the two side states (unrecoverable).
EnvBundle build_recoverability_env(RecoverabilityKind kind, int T, double slip,
                                   double aux_rate = 0.0, int k = 1);

// Traffic-light latching environment. State = (phase, previous action,
// visibility). The expert reads the true phase; the learner class sees only
// (light color, previous action) when visible and the previous action alone
// when masked, so with signal_noise > 0 the previous action dominates the
// masked cells. Cost 1 whenever the previous action disagrees with the light
// of the preceding phase; with a nonzero stall probability (slip) the
// preceding phase is taken as phase-1 regardless, so boundary steps can be
// charged after a stall.
EnvBundle build_latching_env(int T, double signal_noise, double slip = 0.0, int period = 12,
                             int green_len = 10);

// Replace the expert by (1-eta) * expert + eta * uniform and relabel.
EnvBundle smooth_expert(const EnvBundle& bundle, double eta);

// All |A|^num_cells deterministic class-feasible policies.
std::vector<Policy> feasible_policies(const StateAggregationClass& cls, int num_actions);

bool policy_feasible(const Policy& p, const StateAggregationClass& cls, double tol = 1e-12);

// easy: expert representable in the class; hard: some feasible policy meets
// an expert-unvisited state (infinite density ratio); goldilocks otherwise.
std::string label_regime(const TabularMDP& m, const Policy& expert,
                         const StateAggregationClass& cls);

// Registry for the CLI: name -> parameter schema description.
struct EnvParamSpec {
    std::string name;
    double default_value;
    std::string doc;
};
std::map<std::string, std::vector<EnvParamSpec>> env_registry();

// Build by registry name with params (missing keys take defaults).
EnvBundle build_env(const std::string& name, int T, const std::map<std::string, double>& params);

// Latching helpers used by tests and analysis.
int latching_num_cells();
bool latching_cell_is_masked(int cell);
int latching_masked_cell_prev(int cell);  // previous action encoded in a masked cell
StateAggregationClass latching_prev_action_only_class(int period);

}  // namespace ilab
