#pragma once

#include <vector>

#include "ilab/envs.hpp"
#include "ilab/mdp.hpp"

namespace ilab {

// Cached expert data. Exact mode stores the expert's occupancy and rule and
// downstream losses become exact expectations; sampled mode stores rollouts
// with a train/validation split by whole trajectories.
struct DemoSource {
    enum class Mode { sampled, exact };
    Mode mode = Mode::exact;

    // exact mode
    OccupancyProfile occupancy;
    Policy expert_rule;

    // sampled mode
    std::vector<Trajectory> trajectories;
    std::vector<int> train_idx;
    std::vector<int> val_idx;

    int horizon = 0;
    int num_states = 0;
    int num_actions = 0;
    std::uint64_t seed = 0;
};

DemoSource collect_demos(const EnvBundle& bundle, int n, std::uint64_t seed);

DemoSource exact_demo(const EnvBundle& bundle);

// Per-timestep state frequencies from the training trajectories with add-
// lambda smoothing; sampled mode only.
OccupancyProfile empirical_occupancy(const DemoSource& d, double lambda = 0.0);

// Per-timestep (state, action) demonstration weights, one table per t with
// entries summing to 1. Exact mode: rho*_t(s) * expert(a|s); sampled mode:
// training-split frequencies. Layout weight[t][s*A+a].
std::vector<std::vector<double>> demo_weights(const DemoSource& d);

// Expert state occupancy: stored exactly or estimated from the training
// split (with add-lambda smoothing).
OccupancyProfile expert_profile(const DemoSource& d, double lambda = 0.0);

}  // namespace ilab
