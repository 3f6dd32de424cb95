#include "ilab/mdp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "ilab/kernels.hpp"

namespace ilab {

StateAggregationClass singleton_cells(int num_states) {
    StateAggregationClass c;
    c.cell_of.resize(num_states);
    for (int s = 0; s < num_states; ++s) c.cell_of[s] = s;
    c.num_cells = num_states;
    return c;
}

StateAggregationClass single_cell(int num_states) {
    StateAggregationClass c;
    c.cell_of.assign(num_states, 0);
    c.num_cells = 1;
    return c;
}

Policy Policy::uniform(int num_states, int num_actions) {
    Policy p;
    p.num_states = num_states;
    p.num_actions = num_actions;
    p.action_dist.assign(static_cast<std::size_t>(num_states) * num_actions,
                         1.0 / num_actions);
    return p;
}

Policy Policy::deterministic(const std::vector<int>& action_of, int num_actions) {
    Policy p;
    p.num_states = static_cast<int>(action_of.size());
    p.num_actions = num_actions;
    p.action_dist.assign(static_cast<std::size_t>(p.num_states) * num_actions, 0.0);
    for (int s = 0; s < p.num_states; ++s)
        p.action_dist[static_cast<std::size_t>(s) * num_actions + action_of[s]] = 1.0;
    return p;
}

std::vector<int> Policy::mode() const {
    std::vector<int> out(num_states);
    for (int s = 0; s < num_states; ++s) {
        const double* r = row(s);
        int best = 0;
        for (int a = 1; a < num_actions; ++a)
            if (r[a] > r[best]) best = a;
        out[s] = best;
    }
    return out;
}

bool Policy::is_deterministic(double tol) const {
    for (int s = 0; s < num_states; ++s) {
        const double* r = row(s);
        double mx = 0.0;
        for (int a = 0; a < num_actions; ++a) mx = std::max(mx, r[a]);
        if (mx < 1.0 - tol) return false;
    }
    return true;
}

std::vector<std::string> validate_mdp(const TabularMDP& m) {
    std::vector<std::string> out;
    auto add = [&out](const std::string& s) { out.push_back(s); };
    if (m.num_states <= 0 || m.num_actions <= 0 || m.horizon <= 0) {
        add("non-positive dimension: |S|=" + std::to_string(m.num_states) +
            " |A|=" + std::to_string(m.num_actions) + " T=" + std::to_string(m.horizon));
        return out;
    }
    const std::size_t want_p = static_cast<std::size_t>(m.num_states) * m.num_actions * m.num_states;
    if (m.transition.size() != want_p) add("transition tensor has wrong size");
    if (m.cost.size() != static_cast<std::size_t>(m.num_states)) add("cost vector has wrong size");
    if (m.initial_dist.size() != static_cast<std::size_t>(m.num_states))
        add("initial_dist has wrong size");
    if (!out.empty()) return out;

    for (int s = 0; s < m.num_states; ++s) {
        for (int a = 0; a < m.num_actions; ++a) {
            double sum = 0.0;
            for (int s2 = 0; s2 < m.num_states; ++s2) {
                const double v = m.p(s, a, s2);
                if (v < 0.0) {
                    std::ostringstream os;
                    os << "transition(" << s << "," << a << "," << s2 << ") negative: " << v;
                    add(os.str());
                }
                sum += v;
            }
            if (std::abs(sum - 1.0) > 1e-12) {
                std::ostringstream os;
                os << "transition row (s=" << s << ",a=" << a << ") sums to " << sum
                   << " (off by " << sum - 1.0 << ")";
                add(os.str());
            }
        }
    }
    for (int s = 0; s < m.num_states; ++s) {
        if (m.cost[s] < 0.0 || m.cost[s] > 1.0) {
            std::ostringstream os;
            os << "cost(s=" << s << ") = " << m.cost[s] << " outside [0,1]";
            add(os.str());
        }
    }
    double isum = 0.0;
    for (int s = 0; s < m.num_states; ++s) {
        if (m.initial_dist[s] < 0.0) {
            std::ostringstream os;
            os << "initial_dist(s=" << s << ") negative: " << m.initial_dist[s];
            add(os.str());
        }
        isum += m.initial_dist[s];
    }
    if (std::abs(isum - 1.0) > 1e-12) {
        std::ostringstream os;
        os << "initial_dist sums to " << isum << " (off by " << isum - 1.0 << ")";
        add(os.str());
    }
    return out;
}

void check_policy_shape(const TabularMDP& m, const PolicyView& pi) {
    if (pi.is_sequence() && pi.steps() != m.horizon)
        throw std::invalid_argument("policy sequence length != horizon");
    const int steps = pi.is_sequence() ? pi.steps() : 1;
    for (int t = 1; t <= steps; ++t) {
        const Policy& p = pi.at(t);
        if (p.num_states != m.num_states || p.num_actions != m.num_actions)
            throw std::invalid_argument("policy dimensions do not match MDP");
    }
}

OccupancyProfile exact_occupancy(const TabularMDP& m, const PolicyView& pi) {
    check_policy_shape(m, pi);
    OccupancyProfile out;
    out.per_step.resize(m.horizon);
    out.per_step[0] = m.initial_dist;
    for (int t = 1; t < m.horizon; ++t) {
        out.per_step[t].assign(m.num_states, 0.0);
        kernels::occupancy_step(m, pi.at(t), out.per_step[t - 1].data(),
                                out.per_step[t].data());
    }
    out.average.assign(m.num_states, 0.0);
    for (int t = 0; t < m.horizon; ++t)
        for (int s = 0; s < m.num_states; ++s) out.average[s] += out.per_step[t][s];
    for (int s = 0; s < m.num_states; ++s) out.average[s] /= m.horizon;
    return out;
}

Trajectory rollout(const TabularMDP& m, const PolicyView& pi, RandomSource& rng,
                   std::uint64_t seed_id) {
    check_policy_shape(m, pi);
    Trajectory tr;
    tr.seed_id = seed_id;
    tr.steps.reserve(m.horizon);
    int s = rng.sample(m.initial_dist.data(), m.num_states);
    for (int t = 1; t <= m.horizon; ++t) {
        const Policy& pt = pi.at(t);
        int a = rng.sample(pt.row(s), m.num_actions);
        tr.steps.push_back({t, s, a});
        s = rng.sample(m.row(s, a), m.num_states);
    }
    return tr;
}

std::vector<Trajectory> batch_rollout(const TabularMDP& m, const PolicyView& pi, int n,
                                      std::uint64_t base_seed) {
    check_policy_shape(m, pi);
    if (kernels::parallel_enabled() && n >= 256)
        return kernels::batch_rollout_parallel(m, pi, n, base_seed);
    return kernels::batch_rollout_serial(m, pi, n, base_seed);
}

namespace {

// state-action cost table for one (timestep-independent) cost model
std::vector<double> cost_table(const TabularMDP& m, const CostModel& cost) {
    std::vector<double> c(static_cast<std::size_t>(m.num_states) * m.num_actions);
    for (int s = 0; s < m.num_states; ++s)
        for (int a = 0; a < m.num_actions; ++a)
            c[static_cast<std::size_t>(s) * m.num_actions + a] = cost.at(m, s, a);
    return c;
}

}  // namespace

double policy_value(const TabularMDP& m, const PolicyView& pi, const CostModel& cost) {
    const OccupancyProfile occ = exact_occupancy(m, pi);
    double j = 0.0;
    for (int t = 1; t <= m.horizon; ++t) {
        const Policy& pt = pi.at(t);
        const std::vector<double>& rho = occ.per_step[static_cast<std::size_t>(t) - 1];
        for (int s = 0; s < m.num_states; ++s)
            if (rho[s] != 0.0) j += rho[s] * cost.at_policy(m, pt, s);
    }
    return j;
}

ValueTables value_tables(const TabularMDP& m, const PolicyView& pi, const CostModel& cost) {
    check_policy_shape(m, pi);
    const int S = m.num_states, A = m.num_actions, T = m.horizon;
    ValueTables vt;
    vt.num_states = S;
    vt.num_actions = A;
    vt.horizon = T;
    vt.q.assign(static_cast<std::size_t>(T) * S * A, 0.0);
    vt.v.assign(static_cast<std::size_t>(T) * S, 0.0);
    vt.adv.assign(static_cast<std::size_t>(T) * S * A, 0.0);

    const std::vector<double> csa = cost_table(m, cost);
    std::vector<double> v_next(S, 0.0);  // V_{T+1} = 0
    for (int t = T; t >= 1; --t) {
        double* qt = vt.q.data() + static_cast<std::size_t>(t - 1) * S * A;
        double* vtt = vt.v.data() + static_cast<std::size_t>(t - 1) * S;
        double* at = vt.adv.data() + static_cast<std::size_t>(t - 1) * S * A;
        kernels::backup_step(m, csa.data(), v_next.data(), qt);
        const Policy& pt = pi.at(t);
        for (int s = 0; s < S; ++s) {
            double v = 0.0;
            for (int a = 0; a < A; ++a) v += pt.prob(s, a) * qt[static_cast<std::size_t>(s) * A + a];
            vtt[s] = v;
            for (int a = 0; a < A; ++a)
                at[static_cast<std::size_t>(s) * A + a] = qt[static_cast<std::size_t>(s) * A + a] - v;
        }
        std::copy(vtt, vtt + S, v_next.begin());
    }
    return vt;
}

std::pair<double, double> performance_difference(const TabularMDP& m, const PolicyView& learner,
                                                 const Policy& expert, const CostModel& cost) {
    const double lhs = policy_value(m, learner, cost) - policy_value(m, expert, cost);
    const ValueTables vt = value_tables(m, expert, cost);
    const OccupancyProfile occ = exact_occupancy(m, learner);
    double rhs = 0.0;
    for (int t = 1; t <= m.horizon; ++t) {
        const Policy& pt = learner.at(t);
        const std::vector<double>& rho = occ.per_step[static_cast<std::size_t>(t) - 1];
        for (int s = 0; s < m.num_states; ++s) {
            if (rho[s] == 0.0) continue;
            double adv = 0.0;
            for (int a = 0; a < m.num_actions; ++a) adv += pt.prob(s, a) * vt.adv_at(t, s, a);
            rhs += rho[s] * adv;
        }
    }
    return {lhs, rhs};
}

double disagreement(const Policy& a, const Policy& b, int s) {
    double agree = 0.0;
    for (int k = 0; k < a.num_actions; ++k) agree += std::min(a.prob(s, k), b.prob(s, k));
    return 1.0 - agree;
}

double on_policy_mismatch(const TabularMDP& m, const PolicyView& learner, const Policy& expert) {
    const OccupancyProfile occ = exact_occupancy(m, learner);
    double total = 0.0;
    for (int t = 1; t <= m.horizon; ++t) {
        const Policy& pt = learner.at(t);
        const std::vector<double>& rho = occ.per_step[static_cast<std::size_t>(t) - 1];
        for (int s = 0; s < m.num_states; ++s)
            if (rho[s] != 0.0) total += rho[s] * disagreement(pt, expert, s);
    }
    return total / m.horizon;
}

double density_ratio_sup(const OccupancyProfile& learner, const OccupancyProfile& expert) {
    double sup = 0.0;
    for (std::size_t t = 0; t < learner.per_step.size(); ++t) {
        const auto& rl = learner.per_step[t];
        const auto& re = expert.per_step[t];
        for (std::size_t s = 0; s < rl.size(); ++s) {
            double r;
            if (re[s] > 0.0)
                r = rl[s] / re[s];
            else if (rl[s] > 0.0)
                return std::numeric_limits<double>::infinity();
            else
                r = 1.0;
            sup = std::max(sup, r);
        }
    }
    return sup;
}

double density_ratio_sup(const TabularMDP& m, const PolicyView& learner, const Policy& expert) {
    return density_ratio_sup(exact_occupancy(m, learner), exact_occupancy(m, expert));
}

double advantage_sup(const TabularMDP& m, const Policy& expert, const CostModel& cost) {
    const ValueTables vt = value_tables(m, expert, cost);
    double sup = -std::numeric_limits<double>::infinity();
    for (int t = 1; t <= m.horizon; ++t)
        for (int s = 0; s < m.num_states; ++s)
            for (int a = 0; a < m.num_actions; ++a) sup = std::max(sup, vt.adv_at(t, s, a));
    return sup;
}

}  // namespace ilab
