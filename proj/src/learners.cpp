#include "ilab/learners.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace ilab {

void WeightedClassificationProblem::add_all(const WeightedClassificationProblem& other) {
    for (std::size_t i = 0; i < weight.size(); ++i) weight[i] += other.weight[i];
}

Policy WeightedClassificationProblem::solve(const StateAggregationClass& cls) const {
    const int S = static_cast<int>(cls.cell_of.size());
    Policy p;
    p.num_states = S;
    p.num_actions = num_actions;
    p.action_dist.assign(static_cast<std::size_t>(S) * num_actions, 0.0);
    std::vector<int> best(num_cells, -1);
    for (int c = 0; c < num_cells; ++c) {
        double total = 0.0, mx = -1.0;
        int arg = 0;
        for (int a = 0; a < num_actions; ++a) {
            const double w = weight[static_cast<std::size_t>(c) * num_actions + a];
            total += w;
            if (w > mx) {
                mx = w;
                arg = a;
            }
        }
        best[c] = total > 0.0 ? arg : -1;  // -1: no evidence, stay uniform
    }
    for (int s = 0; s < S; ++s) {
        const int c = cls.cell_of[s];
        double* row = p.row_mut(s);
        if (best[c] < 0)
            for (int a = 0; a < num_actions; ++a) row[a] = 1.0 / num_actions;
        else
            row[best[c]] = 1.0;
    }
    p.class_tag = cls;
    return p;
}

Policy MinimaxResult::to_policy(const StateAggregationClass& cls, int num_actions) const {
    const int S = static_cast<int>(cls.cell_of.size());
    Policy p;
    p.num_states = S;
    p.num_actions = num_actions;
    p.action_dist.resize(static_cast<std::size_t>(S) * num_actions);
    for (int s = 0; s < S; ++s)
        for (int a = 0; a < num_actions; ++a)
            p.action_dist[static_cast<std::size_t>(s) * num_actions + a] =
                cell_action_dist[static_cast<std::size_t>(cls.cell_of[s]) * num_actions + a];
    p.class_tag = cls;
    return p;
}

namespace {

// ---- bilinear matching game ----
//
// Variables: x[c*A+a], one action distribution per policy cell.
// Per game block g: payoff contribution max_{f in [0,1]^F} <f, A_g x - b_g>,
// so the primal objective is the sum of per-f-cell positive parts.

struct GameBlock {
    int num_fcells = 0;
    std::vector<double> A;  // [fc][c*Aact + a], flattened
    std::vector<double> b;  // [fc]
};

GameBlock build_block(const TabularMDP& m, const std::vector<double>& learner_dist,
                      const std::vector<double>& expert_next,
                      const StateAggregationClass& f_part, const StateAggregationClass& cls) {
    const int A = m.num_actions, C = cls.num_cells, F = f_part.num_cells;
    GameBlock blk;
    blk.num_fcells = F;
    blk.A.assign(static_cast<std::size_t>(F) * C * A, 0.0);
    blk.b.assign(F, 0.0);
    for (int s2 = 0; s2 < m.num_states; ++s2) blk.b[f_part.cell_of[s2]] += expert_next[s2];
    for (int s = 0; s < m.num_states; ++s) {
        const double w = learner_dist[s];
        if (w == 0.0) continue;
        const int c = cls.cell_of[s];
        for (int a = 0; a < A; ++a) {
            const double* pr = m.row(s, a);
            const std::size_t col = static_cast<std::size_t>(c) * A + a;
            for (int s2 = 0; s2 < m.num_states; ++s2)
                blk.A[static_cast<std::size_t>(f_part.cell_of[s2]) * C * A + col] += w * pr[s2];
        }
    }
    return blk;
}

double primal_value(const std::vector<GameBlock>& blocks, const std::vector<double>& x, int CA) {
    double total = 0.0;
    for (const GameBlock& blk : blocks) {
        for (int fc = 0; fc < blk.num_fcells; ++fc) {
            const double* row = blk.A.data() + static_cast<std::size_t>(fc) * CA;
            double d = -blk.b[fc];
            for (int i = 0; i < CA; ++i) d += row[i] * x[i];
            if (d > 0.0) total += d;
        }
    }
    return total;
}

// f best response: indicator of positive margins, one vector per block
void best_response_f(const std::vector<GameBlock>& blocks, const std::vector<double>& x, int CA,
                     std::vector<std::vector<double>>& f_out) {
    f_out.resize(blocks.size());
    for (std::size_t g = 0; g < blocks.size(); ++g) {
        const GameBlock& blk = blocks[g];
        f_out[g].assign(blk.num_fcells, 0.0);
        for (int fc = 0; fc < blk.num_fcells; ++fc) {
            const double* row = blk.A.data() + static_cast<std::size_t>(fc) * CA;
            double d = -blk.b[fc];
            for (int i = 0; i < CA; ++i) d += row[i] * x[i];
            if (d > 0.0) f_out[g][fc] = 1.0;
        }
    }
}

// x best response to a fixed f: per policy cell pick the action with the
// smallest linear coefficient (ties to the lowest index). Also returns the
// dual value <min-coefs> - <f, b>.
double best_response_x(const std::vector<GameBlock>& blocks,
                       const std::vector<std::vector<double>>& f, int C, int A,
                       std::vector<double>& x_out) {
    const int CA = C * A;
    std::vector<double> coef(CA, 0.0);
    double offset = 0.0;
    for (std::size_t g = 0; g < blocks.size(); ++g) {
        const GameBlock& blk = blocks[g];
        for (int fc = 0; fc < blk.num_fcells; ++fc) {
            const double fv = f[g][fc];
            if (fv == 0.0) continue;
            offset -= fv * blk.b[fc];
            const double* row = blk.A.data() + static_cast<std::size_t>(fc) * CA;
            for (int i = 0; i < CA; ++i) coef[i] += fv * row[i];
        }
    }
    x_out.assign(CA, 0.0);
    double value = offset;
    for (int c = 0; c < C; ++c) {
        int arg = 0;
        for (int a = 1; a < A; ++a)
            if (coef[c * A + a] < coef[c * A + arg]) arg = a;
        x_out[c * A + arg] = 1.0;
        value += coef[c * A + arg];
    }
    return value;
}

MinimaxResult solve_game(const TabularMDP& m, const std::vector<GameBlock>& blocks,
                         const StateAggregationClass& cls) {
    const int C = cls.num_cells, A = m.num_actions, CA = C * A;
    MinimaxResult res;

    // deterministic floor: enumerate pure feasible policies when cheap
    std::vector<double> best_x(CA, 0.0);
    double best_val = std::numeric_limits<double>::infinity();
    const double pure_count = std::pow(static_cast<double>(A), C);
    if (pure_count <= 4096.0) {
        std::vector<double> x(CA);
        for (std::uint64_t idx = 0; idx < static_cast<std::uint64_t>(pure_count); ++idx) {
            std::fill(x.begin(), x.end(), 0.0);
            std::uint64_t rem = idx;
            for (int c = 0; c < C; ++c) {
                x[c * A + static_cast<int>(rem % A)] = 1.0;
                rem /= A;
            }
            const double v = primal_value(blocks, x, CA);
            if (v < best_val) {
                best_val = v;
                best_x = x;
            }
        }
    } else {
        best_x.assign(CA, 1.0 / A);
        best_val = primal_value(blocks, best_x, CA);
    }

    // fictitious play with iterate averaging
    std::vector<double> x_avg = best_x;
    std::vector<std::vector<double>> f_avg;
    best_response_f(blocks, x_avg, CA, f_avg);
    double dual_best = -std::numeric_limits<double>::infinity();
    std::vector<double> x_br;
    std::vector<std::vector<double>> f_cur;

    const int max_iters = 20000;
    const double tol = 1e-6;
    for (int k = 2; k <= max_iters; ++k) {
        const double dual = best_response_x(blocks, f_avg, C, A, x_br);
        dual_best = std::max(dual_best, dual);
        for (int i = 0; i < CA; ++i) x_avg[i] += (x_br[i] - x_avg[i]) / k;
        best_response_f(blocks, x_avg, CA, f_cur);
        for (std::size_t g = 0; g < f_avg.size(); ++g)
            for (std::size_t fc = 0; fc < f_avg[g].size(); ++fc)
                f_avg[g][fc] += (f_cur[g][fc] - f_avg[g][fc]) / k;
        if (k % 64 == 0 || k == max_iters) {
            const double v = primal_value(blocks, x_avg, CA);
            if (v < best_val) {
                best_val = v;
                best_x = x_avg;
            }
            if (best_val - dual_best <= tol) break;
        }
    }
    res.cell_action_dist = best_x;
    res.value = best_val;
    res.gap = best_val - std::max(dual_best, 0.0);
    res.certified = res.gap <= tol;
    return res;
}

WeightedClassificationProblem cov_problem(const std::vector<double>& demo_w_t,
                                          const std::vector<double>& ratio_t,
                                          const StateAggregationClass& cls, int S, int A) {
    WeightedClassificationProblem wcp(cls.num_cells, A);
    for (int s = 0; s < S; ++s)
        for (int a = 0; a < A; ++a) {
            const double w = demo_w_t[static_cast<std::size_t>(s) * A + a];
            if (w == 0.0) continue;
            wcp.add(cls.cell_of[s], a, w * ratio_t[s]);
        }
    return wcp;
}

void check_ratio_usable(const RatioEstimate& r, const std::string& where) {
    if (r.has_infinite)
        throw HardRegimeError(where +
                              ": infinite density ratio with no clip set; the expert never "
                              "visits a state the learner reaches (hard regime)");
}

// ---- reweighted per-state next-state IPM, minimized per cell ----
//
// For a fixed cell the objective is a sum of per-(s, a*) positive-part terms,
// each piecewise linear in the cell's action distribution. Separable across
// cells. Exact breakpoint scan for two actions, pure actions otherwise.

struct StateIpmTerm {
    double weight = 0.0;
    int s = 0;
    int a_star = 0;
};

double cell_ipm_objective(const TabularMDP& m, const StateAggregationClass& f_part,
                          const std::vector<StateIpmTerm>& terms, const double* action_dist) {
    double total = 0.0;
    std::vector<double> diff(f_part.num_cells);
    for (const StateIpmTerm& term : terms) {
        std::fill(diff.begin(), diff.end(), 0.0);
        for (int a = 0; a < m.num_actions; ++a) {
            const double pa = action_dist[a];
            if (pa == 0.0) continue;
            const double* pr = m.row(term.s, a);
            for (int s2 = 0; s2 < m.num_states; ++s2) diff[f_part.cell_of[s2]] += pa * pr[s2];
        }
        const double* pe = m.row(term.s, term.a_star);
        for (int s2 = 0; s2 < m.num_states; ++s2) diff[f_part.cell_of[s2]] -= pe[s2];
        for (int fc = 0; fc < f_part.num_cells; ++fc)
            if (diff[fc] > 0.0) total += term.weight * diff[fc];
    }
    return total;
}

// returns the minimizing action distribution for one cell
std::vector<double> minimize_cell_ipm(const TabularMDP& m, const StateAggregationClass& f_part,
                                      const std::vector<StateIpmTerm>& terms) {
    const int A = m.num_actions;
    std::vector<double> best(A, 0.0);
    if (terms.empty()) {
        std::fill(best.begin(), best.end(), 1.0 / A);
        return best;
    }
    std::vector<double> cand(A, 0.0);
    double best_val = std::numeric_limits<double>::infinity();
    for (int a = 0; a < A; ++a) {
        std::fill(cand.begin(), cand.end(), 0.0);
        cand[a] = 1.0;
        const double v = cell_ipm_objective(m, f_part, terms, cand.data());
        if (v < best_val) {
            best_val = v;
            best = cand;
        }
    }
    if (A != 2) return best;  // pure scan only beyond two actions

    // exact scan over the breakpoints of the piecewise-linear objective
    std::vector<double> breakpoints;
    std::vector<double> g0(f_part.num_cells), g1(f_part.num_cells), ge(f_part.num_cells);
    for (const StateIpmTerm& term : terms) {
        std::fill(g0.begin(), g0.end(), 0.0);
        std::fill(g1.begin(), g1.end(), 0.0);
        std::fill(ge.begin(), ge.end(), 0.0);
        const double* p0 = m.row(term.s, 0);
        const double* p1 = m.row(term.s, 1);
        const double* pe = m.row(term.s, term.a_star);
        for (int s2 = 0; s2 < m.num_states; ++s2) {
            g0[f_part.cell_of[s2]] += p0[s2];
            g1[f_part.cell_of[s2]] += p1[s2];
            ge[f_part.cell_of[s2]] += pe[s2];
        }
        for (int fc = 0; fc < f_part.num_cells; ++fc) {
            const double slope = g0[fc] - g1[fc];
            if (slope == 0.0) continue;
            const double p = (ge[fc] - g1[fc]) / slope;
            if (p > 0.0 && p < 1.0) breakpoints.push_back(p);
        }
    }
    std::sort(breakpoints.begin(), breakpoints.end());
    for (double p : breakpoints) {
        cand[0] = p;
        cand[1] = 1.0 - p;
        const double v = cell_ipm_objective(m, f_part, terms, cand.data());
        if (v < best_val - 1e-15) {
            best_val = v;
            best = cand;
        }
    }
    return best;
}

// weights[s*A + a*]: accumulated r(s) * demo weight for the (s, a*) pairs
Policy minimize_state_ipm(const TabularMDP& m, const std::vector<double>& weights,
                          const FunctionClass& fclass, const StateAggregationClass& cls, int t,
                          double* achieved) {
    const int A = m.num_actions;
    const StateAggregationClass& f_part = fclass.at(t + 1);
    std::vector<std::vector<StateIpmTerm>> per_cell(cls.num_cells);
    for (int s = 0; s < m.num_states; ++s)
        for (int a = 0; a < A; ++a) {
            const double w = weights[static_cast<std::size_t>(s) * A + a];
            if (w == 0.0) continue;
            per_cell[cls.cell_of[s]].push_back({w, s, a});
        }
    Policy p;
    p.num_states = m.num_states;
    p.num_actions = A;
    p.action_dist.resize(static_cast<std::size_t>(m.num_states) * A);
    double total = 0.0;
    std::vector<std::vector<double>> cell_dist(cls.num_cells);
    for (int c = 0; c < cls.num_cells; ++c) {
        cell_dist[c] = minimize_cell_ipm(m, f_part, per_cell[c]);
        total += cell_ipm_objective(m, f_part, per_cell[c], cell_dist[c].data());
    }
    for (int s = 0; s < m.num_states; ++s)
        for (int a = 0; a < A; ++a)
            p.action_dist[static_cast<std::size_t>(s) * A + a] = cell_dist[cls.cell_of[s]][a];
    p.class_tag = cls;
    if (achieved) *achieved = total;
    return p;
}

double held_out_disagreement(const Policy& p, const DemoSource& demo) {
    const auto& idx = demo.val_idx.empty() ? demo.train_idx : demo.val_idx;
    double total = 0.0;
    std::size_t n = 0;
    for (int i : idx) {
        for (const auto& [t, s, a] : demo.trajectories[i].steps) {
            total += 1.0 - p.prob(s, a);
            ++n;
        }
    }
    return n ? total / static_cast<double>(n) : 0.0;
}

OccupancyProfile occupancy_of(const EnvBundle& bundle, const Policy& p, TrainMode mode,
                              int n_rollouts, double lambda, RandomSource& rng) {
    if (mode == TrainMode::exact) return exact_occupancy(bundle.mdp, PolicyView(p));
    DemoSource tmp;
    tmp.mode = DemoSource::Mode::sampled;
    tmp.horizon = bundle.mdp.horizon;
    tmp.num_states = bundle.mdp.num_states;
    tmp.num_actions = bundle.mdp.num_actions;
    tmp.trajectories = batch_rollout(bundle.mdp, PolicyView(p), n_rollouts, rng.next_u64());
    for (int i = 0; i < n_rollouts; ++i) tmp.train_idx.push_back(i);
    return empirical_occupancy(tmp, lambda);
}

RatioEstimate ratio_for(const OccupancyProfile& learner, const OccupancyProfile& expert,
                        double alpha, std::optional<double> clip, RatioMode mode) {
    if (mode == RatioMode::per_timestep) return estimate_density_ratio(learner, expert, alpha, clip);
    OccupancyProfile la, ea;
    la.per_step.assign(learner.per_step.size(), learner.average);
    la.average = learner.average;
    ea.per_step.assign(expert.per_step.size(), expert.average);
    ea.average = expert.average;
    return estimate_density_ratio(la, ea, alpha, clip);
}

}  // namespace

TrainReport train_bc(const DemoSource& demo, const StateAggregationClass& cls) {
    const auto w = demo_weights(demo);
    WeightedClassificationProblem wcp(cls.num_cells, demo.num_actions);
    for (int t = 0; t < demo.horizon; ++t)
        for (int s = 0; s < demo.num_states; ++s)
            for (int a = 0; a < demo.num_actions; ++a) {
                const double ws = w[t][static_cast<std::size_t>(s) * demo.num_actions + a];
                if (ws != 0.0) wcp.add(cls.cell_of[s], a, ws);
            }
    Policy p = wcp.solve(cls);
    const auto ones = RatioEstimate::ones(demo.horizon, demo.num_states);
    double loss = 0.0;
    for (int t = 1; t <= demo.horizon; ++t)
        loss += loss_cov_at(p, w[static_cast<std::size_t>(t) - 1],
                            ones.per_step[static_cast<std::size_t>(t) - 1], demo.num_states,
                            demo.num_actions);
    loss /= demo.horizon;

    TrainReport rep;
    rep.policy = std::move(p);
    rep.train_loss = loss;
    double validation = loss;
    if (demo.mode == DemoSource::Mode::sampled)
        validation = held_out_disagreement(rep.stationary(), demo);
    rep.per_iteration = {{1, validation, loss}};
    rep.chosen_iteration = 0;
    return rep;
}

MinimaxResult minimize_ipm_step(const TabularMDP& m, const DemoSource& demo,
                                const std::vector<double>& learner_occ_t,
                                const FunctionClass& fclass, const StateAggregationClass& cls,
                                int t) {
    if (t < 1 || t > m.horizon) throw std::invalid_argument("minimize_ipm_step: t out of range");
    MinimaxResult res;
    if (t == m.horizon) {  // no next state: every policy scores zero
        res.cell_action_dist.assign(static_cast<std::size_t>(cls.num_cells) * m.num_actions,
                                    1.0 / m.num_actions);
        res.certified = true;
        return res;
    }
    const OccupancyProfile expert = expert_profile(demo);
    std::vector<GameBlock> blocks;
    blocks.push_back(build_block(m, learner_occ_t, expert.per_step[static_cast<std::size_t>(t)],
                                 fclass.at(t + 1), cls));
    return solve_game(m, blocks, cls);
}

MinimaxResult solve_ipm_games(const TabularMDP& m, const std::vector<const IpmGameSpec*>& games,
                              const FunctionClass& fclass, const StateAggregationClass& cls) {
    std::vector<GameBlock> blocks;
    blocks.reserve(games.size());
    for (const IpmGameSpec* g : games)
        blocks.push_back(build_block(m, g->learner_dist, g->expert_next, fclass.at(g->t + 1), cls));
    return solve_game(m, blocks, cls);
}

TrainReport forward_train(const EnvBundle& bundle, const DemoSource& demo, LossKind loss,
                          const FunctionClass& fclass, const ForwardOptions& opt) {
    const TabularMDP& m = bundle.mdp;
    const StateAggregationClass& cls = bundle.learner_class;
    const int T = m.horizon, S = m.num_states, A = m.num_actions;
    const auto demo_w = demo_weights(demo);
    const OccupancyProfile expert_occ = expert_profile(demo);

    PolicySequence seq;
    seq.per_step.reserve(T);
    std::vector<double> rho = m.initial_dist;
    double max_loss = 0.0;
    std::ostringstream note;

    for (int t = 1; t <= T; ++t) {
        Policy pt;
        double achieved = 0.0;
        if (loss == LossKind::cov || t == T) {
            std::vector<double> ratio_t(S, 1.0);
            if (loss == LossKind::cov) {
                OccupancyProfile lo, eo;
                lo.per_step = {rho};
                eo.per_step = {expert_occ.per_step[static_cast<std::size_t>(t) - 1]};
                RatioEstimate r = estimate_density_ratio(lo, eo, opt.alpha, opt.clip);
                check_ratio_usable(r, "forward_train(cov)");
                ratio_t = r.per_step[0];
            }
            pt = cov_problem(demo_w[static_cast<std::size_t>(t) - 1], ratio_t, cls, S, A).solve(cls);
            achieved = (loss == LossKind::cov)
                           ? loss_cov_at(pt, demo_w[static_cast<std::size_t>(t) - 1], ratio_t, S, A)
                           : 0.0;  // step-T moment losses are identically zero
        } else if (loss == LossKind::fail) {
            MinimaxResult r = minimize_ipm_step(m, demo, rho, fclass, cls, t);
            if (!r.certified) note << "t=" << t << " minimax gap " << r.gap << "; ";
            pt = r.to_policy(cls, A);
            achieved = r.value;
        } else {
            OccupancyProfile lo, eo;
            lo.per_step = {rho};
            eo.per_step = {expert_occ.per_step[static_cast<std::size_t>(t) - 1]};
            RatioEstimate r = estimate_density_ratio(lo, eo, opt.alpha, opt.clip);
            check_ratio_usable(r, "forward_train(cov_fail)");
            std::vector<double> weights(static_cast<std::size_t>(S) * A, 0.0);
            for (int s = 0; s < S; ++s)
                for (int a = 0; a < A; ++a) {
                    const double w = demo_w[static_cast<std::size_t>(t) - 1]
                                           [static_cast<std::size_t>(s) * A + a];
                    if (w != 0.0) weights[static_cast<std::size_t>(s) * A + a] = w * r.per_step[0][s];
                }
            pt = minimize_state_ipm(m, weights, fclass, cls, t, &achieved);
        }
        max_loss = std::max(max_loss, achieved);
        std::vector<double> next(S, 0.0);
        if (t < T) next = pushforward(m, rho, pt);
        seq.per_step.push_back(std::move(pt));
        if (t < T) rho = std::move(next);
    }

    TrainReport rep;
    rep.policy = std::move(seq);
    rep.train_loss = max_loss;
    const double mismatch = on_policy_mismatch(m, rep.view(), bundle.expert);
    rep.per_iteration = {{0, mismatch, max_loss}};
    rep.chosen_iteration = 0;
    rep.note = note.str();
    return rep;
}

TrainReport iterative_train(const EnvBundle& bundle, const DemoSource& demo, LossKind loss,
                            const FunctionClass& fclass, int iterations, RandomSource& rng,
                            const IterativeOptions& opt, AggregatedLossDataset* out_dataset) {
    if (iterations < 1) throw std::invalid_argument("iterative_train: iterations must be >= 1");
    const TabularMDP& m = bundle.mdp;
    const StateAggregationClass& cls = bundle.learner_class;
    const int T = m.horizon, S = m.num_states, A = m.num_actions;
    const TrainMode mode =
        demo.mode == DemoSource::Mode::exact ? TrainMode::exact : TrainMode::sampled;
    const auto demo_w = demo_weights(demo);
    const OccupancyProfile expert_occ = expert_profile(demo, opt.lambda);

    AggregatedLossDataset agg;
    WeightedClassificationProblem cls_sum(cls.num_cells, A);
    std::vector<double> ipm_weight_sum(static_cast<std::size_t>(S) * A, 0.0);
    std::vector<const IpmGameSpec*> game_ptrs;

    std::vector<Policy> iterates;
    iterates.push_back(train_bc(demo, cls).stationary());
    std::vector<TrainReport::Row> rows;
    std::ostringstream note;

    auto validation_of = [&](const Policy& p) {
        if (mode == TrainMode::exact) return on_policy_mismatch(m, PolicyView(p), bundle.expert);
        return held_out_disagreement(p, demo);
    };

    for (int i = 1; i <= iterations; ++i) {
        const Policy cur = iterates.back();
        const double validation = validation_of(cur);
        const OccupancyProfile occ =
            occupancy_of(bundle, cur, mode, opt.n_rollouts, opt.lambda, rng);
        const RatioEstimate ratio =
            ratio_for(occ, expert_occ, opt.alpha, opt.clip, opt.ratio_mode);
        double iter_loss = 0.0;
        if (loss == LossKind::cov || loss == LossKind::cov_fail)
            check_ratio_usable(ratio, "iterative_train");

        Policy next;
        if (loss == LossKind::cov) {
            WeightedClassificationProblem di(cls.num_cells, A);
            for (int t = 0; t < T; ++t) {
                di.add_all(cov_problem(demo_w[t], ratio.per_step[t], cls, S, A));
                iter_loss += loss_cov_at(cur, demo_w[t], ratio.per_step[t], S, A);
            }
            iter_loss /= T;
            agg.classification.push_back(di);
            cls_sum.add_all(di);
            next = cls_sum.solve(cls);
        } else if (loss == LossKind::fail) {
            std::vector<IpmGameSpec> batch;
            for (int t = 1; t < T; ++t) {
                IpmGameSpec g;
                g.t = t;
                g.learner_dist = occ.per_step[static_cast<std::size_t>(t) - 1];
                g.expert_next = expert_occ.per_step[static_cast<std::size_t>(t)];
                iter_loss = std::max(
                    iter_loss,
                    ipm_distance(pushforward(m, g.learner_dist, cur), g.expert_next, fclass.at(t + 1))
                        .value);
                batch.push_back(std::move(g));
            }
            agg.ipm_games.push_back(std::move(batch));
            game_ptrs.clear();
            for (const auto& b : agg.ipm_games)
                for (const auto& g : b) game_ptrs.push_back(&g);
            MinimaxResult r = solve_ipm_games(m, game_ptrs, fclass, cls);
            if (!r.certified) note << "iter=" << i << " minimax gap " << r.gap << "; ";
            next = r.to_policy(cls, A);
        } else {
            std::vector<double> wi(static_cast<std::size_t>(S) * A, 0.0);
            for (int t = 1; t < T; ++t) {
                const auto& wt = demo_w[static_cast<std::size_t>(t) - 1];
                const auto& rt = ratio.per_step[static_cast<std::size_t>(t) - 1];
                for (int s = 0; s < S; ++s)
                    for (int a = 0; a < A; ++a) {
                        const double w = wt[static_cast<std::size_t>(s) * A + a];
                        if (w != 0.0) wi[static_cast<std::size_t>(s) * A + a] += w * rt[s];
                    }
                iter_loss = std::max(iter_loss, loss_cov_fail(m, cur, demo, ratio, fclass, t));
            }
            agg.state_ipm_weights.push_back(wi);
            for (std::size_t j = 0; j < wi.size(); ++j) ipm_weight_sum[j] += wi[j];
            double achieved = 0.0;
            next = minimize_state_ipm(m, ipm_weight_sum, fclass, cls, 1, &achieved);
        }
        agg.iterations = static_cast<std::size_t>(i);
        rows.push_back({i, validation, iter_loss});
        iterates.push_back(std::move(next));
    }
    rows.push_back({iterations + 1, validation_of(iterates.back()), rows.back().loss});

    int best = 0;
    for (std::size_t i = 1; i < rows.size(); ++i)
        if (rows[i].validation < rows[best].validation) best = static_cast<int>(i);

    if (out_dataset) *out_dataset = std::move(agg);
    TrainReport rep;
    rep.policy = iterates[best];
    rep.per_iteration = rows;
    rep.chosen_iteration = best;
    rep.train_loss = rows[best].loss;
    rep.note = note.str();
    return rep;
}

TrainReport train_dagger(const EnvBundle& bundle, const Policy& interactive_expert,
                         const StateAggregationClass& cls, int iterations, RandomSource& rng,
                         TrainMode mode, int n_rollouts) {
    if (iterations < 1) throw std::invalid_argument("train_dagger: iterations must be >= 1");
    const TabularMDP& m = bundle.mdp;
    const int T = m.horizon, S = m.num_states, A = m.num_actions;

    WeightedClassificationProblem agg(cls.num_cells, A);
    std::vector<Policy> iterates;
    iterates.push_back(Policy::uniform(S, A));
    iterates.back().class_tag = cls;
    std::vector<TrainReport::Row> rows;

    auto validation_of = [&](const Policy& p, const std::vector<Trajectory>* rollouts) {
        if (mode == TrainMode::exact)
            return on_policy_mismatch(m, PolicyView(p), interactive_expert);
        double total = 0.0;
        std::size_t n = 0;
        for (const Trajectory& tr : *rollouts)
            for (const auto& [t, s, a] : tr.steps) {
                total += disagreement(p, interactive_expert, s);
                ++n;
            }
        return n ? total / static_cast<double>(n) : 0.0;
    };

    for (int i = 1; i <= iterations; ++i) {
        const Policy cur = iterates.back();
        double validation;
        if (mode == TrainMode::exact) {
            const OccupancyProfile occ = exact_occupancy(m, PolicyView(cur));
            for (int t = 0; t < T; ++t)
                for (int s = 0; s < S; ++s) {
                    const double w = occ.per_step[t][s];
                    if (w == 0.0) continue;
                    for (int a = 0; a < A; ++a) {
                        const double pa = interactive_expert.prob(s, a);
                        if (pa != 0.0) agg.add(cls.cell_of[s], a, w * pa);
                    }
                }
            validation = validation_of(cur, nullptr);
        } else {
            const std::vector<Trajectory> rollouts =
                batch_rollout(m, PolicyView(cur), n_rollouts, rng.next_u64());
            for (const Trajectory& tr : rollouts)
                for (const auto& [t, s, a] : tr.steps) {
                    const int label = rng.sample(interactive_expert.row(s), A);
                    agg.add(cls.cell_of[s], label, 1.0);
                }
            validation = validation_of(cur, &rollouts);
        }
        rows.push_back({i, validation, 0.0});
        iterates.push_back(agg.solve(cls));
    }
    if (mode == TrainMode::exact) {
        rows.push_back({iterations + 1, validation_of(iterates.back(), nullptr), 0.0});
    } else {
        const std::vector<Trajectory> rollouts =
            batch_rollout(m, PolicyView(iterates.back()), n_rollouts, rng.next_u64());
        rows.push_back({iterations + 1, validation_of(iterates.back(), &rollouts), 0.0});
    }

    int best = 0;
    for (std::size_t i = 1; i < rows.size(); ++i)
        if (rows[i].validation < rows[best].validation) best = static_cast<int>(i);

    TrainReport rep;
    rep.policy = iterates[best];
    rep.per_iteration = rows;
    rep.chosen_iteration = best;
    rep.train_loss = rows[best].validation;
    return rep;
}

}  // namespace ilab
