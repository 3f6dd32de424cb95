#include "ilab/losses.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "ilab/kernels.hpp"

namespace ilab {

RatioEstimate RatioEstimate::ones(int horizon, int num_states) {
    RatioEstimate r;
    r.alpha = 0.0;
    r.per_step.assign(horizon, std::vector<double>(num_states, 1.0));
    return r;
}

RatioEstimate estimate_density_ratio(const OccupancyProfile& learner_occ,
                                     const OccupancyProfile& expert_occ, double alpha,
                                     std::optional<double> clip) {
    if (learner_occ.per_step.size() != expert_occ.per_step.size())
        throw std::invalid_argument("estimate_density_ratio: horizon mismatch");
    if (alpha < 0.0 || alpha > 1.0)
        throw std::invalid_argument("estimate_density_ratio: alpha must be in [0, 1]");
    const std::size_t T = learner_occ.per_step.size();
    RatioEstimate out;
    out.alpha = alpha;
    out.clip = clip;
    out.per_step.resize(T);
    double gamma = 0.0;
    for (std::size_t t = 0; t < T; ++t) {
        const auto& rl = learner_occ.per_step[t];
        const auto& re = expert_occ.per_step[t];
        if (rl.size() != re.size())
            throw std::invalid_argument("estimate_density_ratio: state-space mismatch");
        auto& rt = out.per_step[t];
        rt.resize(rl.size());
        double drift = 0.0;
        for (std::size_t s = 0; s < rl.size(); ++s) {
            double true_ratio;
            if (re[s] > 0.0)
                true_ratio = rl[s] / re[s];
            else if (rl[s] > 0.0)
                true_ratio = std::numeric_limits<double>::infinity();
            else
                true_ratio = 1.0;

            double r;
            if (alpha == 0.0)
                r = 1.0;
            else if (std::isinf(true_ratio))
                r = true_ratio;
            else
                r = (alpha == 1.0) ? true_ratio : std::pow(true_ratio, alpha);
            if (clip) r = std::min(r, *clip);
            if (std::isinf(r)) out.has_infinite = true;
            rt[s] = r;
            if (re[s] > 0.0 && !std::isinf(true_ratio) && !std::isinf(r))
                drift += re[s] * std::abs(r - true_ratio);
        }
        gamma = std::max(gamma, drift);
    }
    out.gamma_bound = gamma;
    return out;
}

IpmResult ipm_distance(const std::vector<double>& next_learner,
                       const std::vector<double>& next_expert,
                       const StateAggregationClass& partition) {
    if (next_learner.size() != next_expert.size() ||
        next_learner.size() != partition.cell_of.size())
        throw std::invalid_argument("ipm_distance: size mismatch");
    std::vector<double> diff(partition.num_cells, 0.0);
    for (std::size_t s = 0; s < next_learner.size(); ++s)
        diff[partition.cell_of[s]] += next_learner[s] - next_expert[s];
    IpmResult out;
    out.witness.assign(partition.num_cells, 0.0);
    for (int c = 0; c < partition.num_cells; ++c) {
        if (diff[c] > 0.0) {
            out.witness[c] = 1.0;
            out.value += diff[c];
        }
    }
    return out;
}

std::vector<double> pushforward(const TabularMDP& m, const std::vector<double>& rho,
                                const Policy& pi) {
    std::vector<double> next(m.num_states, 0.0);
    kernels::occupancy_step(m, pi, rho.data(), next.data());
    return next;
}

double loss_cov_at(const Policy& pi, const std::vector<double>& demo_weights_t,
                   const std::vector<double>& ratio_t, int num_states, int num_actions) {
    double loss = 0.0;
    for (int s = 0; s < num_states; ++s) {
        double per_state = 0.0;
        bool any = false;
        for (int a = 0; a < num_actions; ++a) {
            const double w = demo_weights_t[static_cast<std::size_t>(s) * num_actions + a];
            if (w == 0.0) continue;
            any = true;
            per_state += w * (1.0 - pi.prob(s, a));
        }
        if (any) loss += ratio_t[s] * per_state;
    }
    return loss;
}

double loss_cov(const Policy& pi, const DemoSource& demo, const RatioEstimate& ratio, int t) {
    if (t < 1 || t > demo.horizon) throw std::invalid_argument("loss_cov: t out of range");
    const auto w = demo_weights(demo);
    return loss_cov_at(pi, w[static_cast<std::size_t>(t) - 1],
                       ratio.per_step[static_cast<std::size_t>(t) - 1], demo.num_states,
                       demo.num_actions);
}

IpmResult loss_fail(const TabularMDP& m, const Policy& pi, const DemoSource& demo,
                    const std::vector<double>& learner_occ_t, const FunctionClass& fclass, int t) {
    if (t < 1 || t > m.horizon) throw std::invalid_argument("loss_fail: t out of range");
    if (t == m.horizon) {
        IpmResult zero;
        zero.witness.assign(fclass.at(t).num_cells, 0.0);
        return zero;
    }
    const std::vector<double> next = pushforward(m, learner_occ_t, pi);
    const OccupancyProfile expert = expert_profile(demo);
    return ipm_distance(next, expert.per_step[static_cast<std::size_t>(t)], fclass.at(t + 1));
}

double per_state_ipm(const TabularMDP& m, const Policy& pi, int s, int a_star,
                     const StateAggregationClass& partition) {
    std::vector<double> diff(partition.num_cells, 0.0);
    const double* pe = m.row(s, a_star);
    for (int a = 0; a < m.num_actions; ++a) {
        const double pa = pi.prob(s, a);
        if (pa == 0.0) continue;
        const double* pr = m.row(s, a);
        for (int s2 = 0; s2 < m.num_states; ++s2)
            diff[partition.cell_of[s2]] += pa * pr[s2];
    }
    for (int s2 = 0; s2 < m.num_states; ++s2) diff[partition.cell_of[s2]] -= pe[s2];
    double v = 0.0;
    for (int c = 0; c < partition.num_cells; ++c)
        if (diff[c] > 0.0) v += diff[c];
    return v;
}

double loss_cov_fail(const TabularMDP& m, const Policy& pi, const DemoSource& demo,
                     const RatioEstimate& ratio, const FunctionClass& fclass, int t) {
    if (t < 1 || t > m.horizon) throw std::invalid_argument("loss_cov_fail: t out of range");
    if (t == m.horizon) return 0.0;
    const auto w = demo_weights(demo);
    const auto& wt = w[static_cast<std::size_t>(t) - 1];
    const auto& rt = ratio.per_step[static_cast<std::size_t>(t) - 1];
    const StateAggregationClass& part = fclass.at(t + 1);
    double loss = 0.0;
    for (int s = 0; s < m.num_states; ++s) {
        for (int a = 0; a < m.num_actions; ++a) {
            const double ws = wt[static_cast<std::size_t>(s) * m.num_actions + a];
            if (ws == 0.0) continue;
            loss += rt[s] * ws * per_state_ipm(m, pi, s, a, part);
        }
    }
    return loss;
}

namespace {

// B* g(s) = E_{a ~ expert(.|s), s' ~ P(s,a)}[ g(s') ] for g constant on cells
std::vector<double> expert_backup(const TabularMDP& m, const Policy& expert,
                                  const StateAggregationClass& g_part,
                                  const std::vector<double>& g_cells) {
    std::vector<double> g_states(m.num_states);
    for (int s = 0; s < m.num_states; ++s) g_states[s] = g_cells[g_part.cell_of[s]];
    std::vector<double> out(m.num_states, 0.0);
    for (int s = 0; s < m.num_states; ++s) {
        double acc = 0.0;
        for (int a = 0; a < m.num_actions; ++a) {
            const double pa = expert.prob(s, a);
            if (pa == 0.0) continue;
            const double* pr = m.row(s, a);
            for (int s2 = 0; s2 < m.num_states; ++s2) acc += pa * pr[s2] * g_states[s2];
        }
        out[s] = acc;
    }
    return out;
}

// min over class members f of ||f - target||_inf: per cell the best f value
// is the midrange clamped into [lo, hi].
double projection_error(const std::vector<double>& target, const StateAggregationClass& f_part,
                        double lo, double hi) {
    std::vector<double> mn(f_part.num_cells, std::numeric_limits<double>::infinity());
    std::vector<double> mx(f_part.num_cells, -std::numeric_limits<double>::infinity());
    for (std::size_t s = 0; s < target.size(); ++s) {
        const int c = f_part.cell_of[s];
        mn[c] = std::min(mn[c], target[s]);
        mx[c] = std::max(mx[c], target[s]);
    }
    double err = 0.0;
    for (int c = 0; c < f_part.num_cells; ++c) {
        if (mn[c] > mx[c]) continue;  // empty cell
        const double v = std::clamp(0.5 * (mn[c] + mx[c]), lo, hi);
        err = std::max(err, std::max(std::abs(v - mn[c]), std::abs(v - mx[c])));
    }
    return err;
}

double ibe_for_pair(const TabularMDP& m, const Policy& expert, const StateAggregationClass& f_part,
                    const StateAggregationClass& g_part, double lo, double hi) {
    // singleton f cells represent any backup exactly: zero error, no scan
    {
        std::vector<int> count(f_part.num_cells, 0);
        bool singleton = true;
        for (int c : f_part.cell_of) singleton &= ++count[c] <= 1;
        if (singleton) return 0.0;
    }
    if (g_part.num_cells > 20)
        throw std::invalid_argument("inherent_bellman_error: too many cells to enumerate");
    const std::uint64_t vertices = 1ull << g_part.num_cells;
    auto eval = [&](std::uint64_t mask) {
        std::vector<double> g(g_part.num_cells);
        for (int c = 0; c < g_part.num_cells; ++c) g[c] = (mask >> c) & 1 ? hi : lo;
        return projection_error(expert_backup(m, expert, g_part, g), f_part, lo, hi);
    };
    return kernels::scan_max(vertices, eval).first;
}

}  // namespace

double inherent_bellman_error(const TabularMDP& m, const Policy& expert,
                              const FunctionClass& fclass) {
    if (!fclass.per_timestep)
        return ibe_for_pair(m, expert, fclass.partition, fclass.partition, fclass.lo, fclass.hi);
    double worst = 0.0;
    for (int t = 1; t < m.horizon; ++t)
        worst = std::max(worst, ibe_for_pair(m, expert, fclass.at(t), fclass.at(t + 1), fclass.lo,
                                             fclass.hi));
    return worst;
}

}  // namespace ilab
