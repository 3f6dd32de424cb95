#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ilab/rng.hpp"

namespace ilab {

// Policy class constraint: states in the same cell must share one action rule.
struct StateAggregationClass {
    std::vector<int> cell_of;  // state id -> cell id, contiguous 0..num_cells-1
    int num_cells = 0;
};

StateAggregationClass singleton_cells(int num_states);
StateAggregationClass single_cell(int num_states);

// Episodic finite-horizon MDP with state costs in [0,1].
struct TabularMDP {
    int num_states = 0;
    int num_actions = 0;
    int horizon = 0;
    std::vector<double> transition;    // [(s*A + a)*S + s'] row-stochastic
    std::vector<double> cost;          // [s], entries in [0,1]
    std::vector<double> initial_dist;  // [s]

    double p(int s, int a, int s2) const {
        return transition[(static_cast<std::size_t>(s) * num_actions + a) * num_states + s2];
    }
    const double* row(int s, int a) const {
        return transition.data() + (static_cast<std::size_t>(s) * num_actions + a) * num_states;
    }
    double* row_mut(int s, int a) {
        return transition.data() + (static_cast<std::size_t>(s) * num_actions + a) * num_states;
    }
};

// Stationary stochastic policy: one action distribution per state.
struct Policy {
    std::vector<double> action_dist;  // [s*A + a]
    int num_states = 0;
    int num_actions = 0;
    std::optional<StateAggregationClass> class_tag;

    double prob(int s, int a) const {
        return action_dist[static_cast<std::size_t>(s) * num_actions + a];
    }
    const double* row(int s) const {
        return action_dist.data() + static_cast<std::size_t>(s) * num_actions;
    }
    double* row_mut(int s) {
        return action_dist.data() + static_cast<std::size_t>(s) * num_actions;
    }

    static Policy uniform(int num_states, int num_actions);
    static Policy deterministic(const std::vector<int>& action_of, int num_actions);
    // arg max action per state, ties to the lowest index
    std::vector<int> mode() const;
    bool is_deterministic(double tol = 1e-12) const;
};

// One policy per timestep, for forward-trained non-stationary learners.
struct PolicySequence {
    std::vector<Policy> per_step;  // length T
};

// Lightweight view over either a stationary policy or a sequence.
class PolicyView {
public:
    PolicyView(const Policy& p) : stationary_(&p), sequence_(nullptr) {}
    PolicyView(const PolicySequence& q) : stationary_(nullptr), sequence_(&q) {}

    // t is 1-based like trajectory timesteps
    const Policy& at(int t) const {
        return stationary_ ? *stationary_ : sequence_->per_step[static_cast<std::size_t>(t) - 1];
    }
    bool is_sequence() const { return sequence_ != nullptr; }
    int steps() const { return sequence_ ? static_cast<int>(sequence_->per_step.size()) : 0; }

private:
    const Policy* stationary_;
    const PolicySequence* sequence_;
};

struct OccupancyProfile {
    std::vector<std::vector<double>> per_step;  // rho_t, t = 1..T
    std::vector<double> average;                // d_pi = (1/T) sum_t rho_t
};

struct ValueTables {
    int num_states = 0;
    int num_actions = 0;
    int horizon = 0;
    std::vector<double> q;    // [(t-1)*S*A + s*A + a]
    std::vector<double> v;    // [(t-1)*S + s]
    std::vector<double> adv;  // same layout as q

    double q_at(int t, int s, int a) const {
        return q[(static_cast<std::size_t>(t) - 1) * num_states * num_actions + static_cast<std::size_t>(s) * num_actions + a];
    }
    double v_at(int t, int s) const {
        return v[(static_cast<std::size_t>(t) - 1) * num_states + s];
    }
    double adv_at(int t, int s, int a) const {
        return adv[(static_cast<std::size_t>(t) - 1) * num_states * num_actions + static_cast<std::size_t>(s) * num_actions + a];
    }
};

struct Trajectory {
    std::vector<std::array<int, 3>> steps;  // (t, s, a), t = 1..T in order
    std::uint64_t seed_id = 0;
};

// Cost models: the plain state cost stored in the MDP, or the
// policy-dependent expert-mismatch cost (0-1 against a reference policy).
// Mismatch costs live on state-action pairs so Q/advantage tables work.
struct CostModel {
    enum class Kind { environment, expert_mismatch };
    Kind kind = Kind::environment;
    const Policy* reference = nullptr;  // expert, for mismatch mode

    static CostModel environment() { return {}; }
    static CostModel mismatch(const Policy& expert) {
        CostModel c;
        c.kind = Kind::expert_mismatch;
        c.reference = &expert;
        return c;
    }

    // c(s, a): environment mode ignores a; mismatch mode is the chance a
    // reference draw differs from a.
    double at(const TabularMDP& m, int s, int a) const {
        if (kind == Kind::environment) return m.cost[s];
        return 1.0 - reference->prob(s, a);
    }
    // E_{a ~ pi(.|s)}[ c(s, a) ]
    double at_policy(const TabularMDP& m, const Policy& pi, int s) const {
        if (kind == Kind::environment) return m.cost[s];
        double c = 0.0;
        for (int a = 0; a < m.num_actions; ++a) c += pi.prob(s, a) * (1.0 - reference->prob(s, a));
        return c;
    }
};

// ---- operations ----

// Empty iff all invariants hold; entries name the offending index and magnitude.
std::vector<std::string> validate_mdp(const TabularMDP& m);

void check_policy_shape(const TabularMDP& m, const PolicyView& pi);

OccupancyProfile exact_occupancy(const TabularMDP& m, const PolicyView& pi);

Trajectory rollout(const TabularMDP& m, const PolicyView& pi, RandomSource& rng,
                   std::uint64_t seed_id = 0);

std::vector<Trajectory> batch_rollout(const TabularMDP& m, const PolicyView& pi, int n,
                                      std::uint64_t base_seed);

double policy_value(const TabularMDP& m, const PolicyView& pi,
                    const CostModel& cost = CostModel::environment());

ValueTables value_tables(const TabularMDP& m, const PolicyView& pi,
                         const CostModel& cost = CostModel::environment());

// (lhs, rhs): lhs = J(learner) - J(expert); rhs is the advantage-sum route.
std::pair<double, double> performance_difference(const TabularMDP& m, const PolicyView& learner,
                                                 const Policy& expert,
                                                 const CostModel& cost = CostModel::environment());

// E_{s ~ d_learner}[ disagreement(learner, expert)(s) ]; 0-1 for deterministic
// experts, total-variation disagreement otherwise.
double on_policy_mismatch(const TabularMDP& m, const PolicyView& learner, const Policy& expert);

double disagreement(const Policy& a, const Policy& b, int s);

// max_{t,s} rho_t^learner(s) / rho_t^expert(s); 0/0 -> 1, x/0 -> +inf.
double density_ratio_sup(const TabularMDP& m, const PolicyView& learner, const Policy& expert);
double density_ratio_sup(const OccupancyProfile& learner, const OccupancyProfile& expert);

// max_{t,s,a} A^expert_t(s, a)
double advantage_sup(const TabularMDP& m, const Policy& expert,
                     const CostModel& cost = CostModel::environment());

}  // namespace ilab
