#pragma once

#include <optional>
#include <vector>

#include "ilab/demos.hpp"
#include "ilab/mdp.hpp"

namespace ilab {

// Adversary class for the moment-matching losses: functions constant on the
// cells of a partition with values in [0, 1]. The singleton partition is the
// full class (every bounded function). Optionally a different partition per
// timestep.
struct FunctionClass {
    StateAggregationClass partition;
    double lo = 0.0;
    double hi = 1.0;
    std::optional<std::vector<StateAggregationClass>> per_timestep;

    static FunctionClass full(int num_states) {
        FunctionClass f;
        f.partition = singleton_cells(num_states);
        return f;
    }
    static FunctionClass constant(int num_states) {
        FunctionClass f;
        f.partition = single_cell(num_states);
        return f;
    }

    // partition used for F_t (t is 1-based)
    const StateAggregationClass& at(int t) const {
        if (per_timestep) return (*per_timestep)[static_cast<std::size_t>(t) - 1];
        return partition;
    }
};

// Estimated per-timestep density ratios r(s) = (rho_learner / rho_expert)^alpha.
struct RatioEstimate {
    std::vector<std::vector<double>> per_step;  // [t][s]
    double alpha = 1.0;
    std::optional<double> clip;
    // max_t E_{s ~ rho*_t} | r_t(s) - true ratio_t(s) |, measured against the
    // input profiles; 0 when alpha = 1 and no clipping binds
    double gamma_bound = 0.0;
    bool has_infinite = false;

    static RatioEstimate ones(int horizon, int num_states);
};

struct IpmResult {
    double value = 0.0;
    std::vector<double> witness;  // f value per cell
};

RatioEstimate estimate_density_ratio(const OccupancyProfile& learner_occ,
                                     const OccupancyProfile& expert_occ, double alpha = 1.0,
                                     std::optional<double> clip = std::nullopt);

// max_{f in class} <f, next_learner - next_expert>. Closed form: per cell,
// f = hi where the aggregated mass difference is positive, lo otherwise.
IpmResult ipm_distance(const std::vector<double>& next_learner,
                       const std::vector<double>& next_expert,
                       const StateAggregationClass& partition);

// next(s') = sum_s rho(s) sum_a pi(a|s) P(s'|s,a)
std::vector<double> pushforward(const TabularMDP& m, const std::vector<double>& rho,
                                const Policy& pi);

// Reweighted classification loss at timestep t (1-based):
// E_{(s*,a*) ~ D*_t}[ r_t(s*) * P_{a ~ pi(.|s*)}(a != a*) ].
double loss_cov(const Policy& pi, const DemoSource& demo, const RatioEstimate& ratio, int t);
double loss_cov_at(const Policy& pi, const std::vector<double>& demo_weights_t,
                   const std::vector<double>& ratio_t, int num_states, int num_actions);

// Next-state moment mismatch at t: push the learner occupancy through pi and
// compare to the expert's rho*_{t+1}. t = T is 0 by convention.
IpmResult loss_fail(const TabularMDP& m, const Policy& pi, const DemoSource& demo,
                    const std::vector<double>& learner_occ_t, const FunctionClass& fclass, int t);

// Per-demonstrated-state next-state IPM, reweighted:
// E_{(s*,a*) ~ D*_t}[ r_t(s*) * max_f ( E_{a~pi,s'~P} f(s') - E_{s'~P(s*,a*)} f(s') ) ].
double loss_cov_fail(const TabularMDP& m, const Policy& pi, const DemoSource& demo,
                     const RatioEstimate& ratio, const FunctionClass& fclass, int t);
double per_state_ipm(const TabularMDP& m, const Policy& pi, int s, int a_star,
                     const StateAggregationClass& partition);

// Worst-case projection error of the expert backup of any class member back
// onto the class: max_t max_{g in F_{t+1}} min_{f in F_t} ||f - B*_t g||_inf.
// The max over g is attained at a 0/1 vertex and found by vertex enumeration.
double inherent_bellman_error(const TabularMDP& m, const Policy& expert,
                              const FunctionClass& fclass);

}  // namespace ilab
