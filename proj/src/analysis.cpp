#include "ilab/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace ilab {

std::string to_string(AlgorithmKind k) {
    switch (k) {
        case AlgorithmKind::bc: return "bc";
        case AlgorithmKind::dagger: return "dagger";
        case AlgorithmKind::alice_cov: return "alice_cov";
        case AlgorithmKind::alice_fail: return "alice_fail";
        case AlgorithmKind::alice_cov_fail: return "alice_cov_fail";
    }
    return "?";
}

AlgorithmKind algorithm_from_string(const std::string& s) {
    if (s == "bc") return AlgorithmKind::bc;
    if (s == "dagger") return AlgorithmKind::dagger;
    if (s == "alice_cov") return AlgorithmKind::alice_cov;
    if (s == "alice_fail") return AlgorithmKind::alice_fail;
    if (s == "alice_cov_fail") return AlgorithmKind::alice_cov_fail;
    throw std::invalid_argument("unknown algorithm: " + s);
}

std::string AlgorithmSpec::effective_label() const {
    if (!label.empty()) return label;
    std::string out = to_string(kind);
    if (kind != AlgorithmKind::bc && kind != AlgorithmKind::dagger)
        out += training == Training::forward ? "_forward" : "_iterative";
    if (policy_class != "default") out += "_" + policy_class;
    return out;
}

std::string to_string(BoundTheorem t) {
    switch (t) {
        case BoundTheorem::bc_quadratic: return "bc_quadratic";
        case BoundTheorem::dagger_linear: return "dagger_linear";
        case BoundTheorem::bc_goldilocks: return "bc_goldilocks";
        case BoundTheorem::alice_cov: return "alice_cov";
        case BoundTheorem::alice_fail: return "alice_fail";
        case BoundTheorem::alice_cov_fail: return "alice_cov_fail";
    }
    return "?";
}

BoundTheorem theorem_from_string(const std::string& s) {
    if (s == "bc_quadratic") return BoundTheorem::bc_quadratic;
    if (s == "dagger_linear") return BoundTheorem::dagger_linear;
    if (s == "bc_goldilocks") return BoundTheorem::bc_goldilocks;
    if (s == "alice_cov") return BoundTheorem::alice_cov;
    if (s == "alice_fail") return BoundTheorem::alice_fail;
    if (s == "alice_cov_fail") return BoundTheorem::alice_cov_fail;
    throw std::invalid_argument("unknown bound theorem: " + s);
}

std::vector<BoundTheorem> applicable_theorems(AlgorithmKind kind) {
    switch (kind) {
        case AlgorithmKind::bc:
            return {BoundTheorem::bc_quadratic, BoundTheorem::bc_goldilocks};
        case AlgorithmKind::dagger: return {BoundTheorem::dagger_linear};
        case AlgorithmKind::alice_cov: return {BoundTheorem::alice_cov};
        case AlgorithmKind::alice_fail: return {BoundTheorem::alice_fail};
        case AlgorithmKind::alice_cov_fail: return {BoundTheorem::alice_cov_fail};
    }
    return {};
}

namespace {

StateAggregationClass resolve_class(const EnvBundle& env, const std::string& which) {
    if (which == "default") return env.learner_class;
    if (which == "singleton") return singleton_cells(env.mdp.num_states);
    if (which == "single_cell") return single_cell(env.mdp.num_states);
    throw std::invalid_argument("unknown policy class: " + which);
}

FunctionClass resolve_fclass(const EnvBundle& env, const std::string& which) {
    if (which == "full") return FunctionClass::full(env.mdp.num_states);
    if (which == "constant") return FunctionClass::constant(env.mdp.num_states);
    throw std::invalid_argument("unknown function class: " + which);
}

LossKind loss_of(AlgorithmKind kind) {
    switch (kind) {
        case AlgorithmKind::alice_cov: return LossKind::cov;
        case AlgorithmKind::alice_fail: return LossKind::fail;
        case AlgorithmKind::alice_cov_fail: return LossKind::cov_fail;
        default: throw std::invalid_argument("loss_of: not an aggregate-loss algorithm");
    }
}

}  // namespace

RunArtifacts run_algorithm(const EnvBundle& env, const AlgorithmSpec& spec, TrainMode mode,
                           std::uint64_t seed, const SampledModeConfig& sampled) {
    RunArtifacts out;
    out.bundle = env;
    out.bundle.learner_class = resolve_class(env, spec.policy_class);
    if (spec.policy_class != "default")
        out.bundle.label = label_regime(out.bundle.mdp, out.bundle.expert, out.bundle.learner_class);
    out.fclass = resolve_fclass(env, spec.fclass);
    out.spec = spec;
    out.mode = mode;
    out.demo = mode == TrainMode::exact
                   ? exact_demo(out.bundle)
                   : collect_demos(out.bundle, sampled.n_demos, RandomSource::derive(seed, 1));
    RandomSource rng(RandomSource::derive(seed, 2));

    switch (spec.kind) {
        case AlgorithmKind::bc:
            out.report = train_bc(out.demo, out.bundle.learner_class);
            break;
        case AlgorithmKind::dagger:
            out.report = train_dagger(out.bundle, out.bundle.expert, out.bundle.learner_class,
                                      spec.iterations, rng, mode, sampled.n_rollouts);
            break;
        default: {
            const LossKind loss = loss_of(spec.kind);
            if (spec.training == Training::forward) {
                ForwardOptions fo;
                fo.alpha = spec.alpha;
                fo.clip = spec.clip;
                out.report = forward_train(out.bundle, out.demo, loss, out.fclass, fo);
            } else {
                IterativeOptions io;
                io.alpha = spec.alpha;
                io.clip = spec.clip;
                io.ratio_mode = spec.ratio_mode;
                io.n_rollouts = sampled.n_rollouts;
                io.lambda = sampled.lambda;
                out.report =
                    iterative_train(out.bundle, out.demo, loss, out.fclass, spec.iterations, rng, io);
            }
        }
    }
    return out;
}

namespace {

// average-over-t demonstration-measure 0-1 loss of the returned policy
double demo_measure_loss(const RunArtifacts& run) {
    const auto w = demo_weights(run.demo);
    const auto ones = RatioEstimate::ones(run.demo.horizon, run.demo.num_states);
    const PolicyView view = run.report.view();
    double loss = 0.0;
    for (int t = 1; t <= run.demo.horizon; ++t)
        loss += loss_cov_at(view.at(t), w[static_cast<std::size_t>(t) - 1],
                            ones.per_step[static_cast<std::size_t>(t) - 1], run.demo.num_states,
                            run.demo.num_actions);
    return loss / run.demo.horizon;
}

RatioEstimate learner_ratio(const RunArtifacts& run, const OccupancyProfile& learner_occ) {
    const OccupancyProfile expert_occ = expert_profile(run.demo);
    OccupancyProfile l = learner_occ, e = expert_occ;
    if (run.spec.ratio_mode == RatioMode::averaged) {
        l.per_step.assign(learner_occ.per_step.size(), learner_occ.average);
        e.per_step.assign(expert_occ.per_step.size(), expert_occ.average);
    }
    return estimate_density_ratio(l, e, run.spec.alpha, run.spec.clip);
}

void require_kind(const RunArtifacts& run, AlgorithmKind kind, BoundTheorem t) {
    if (run.spec.kind != kind)
        throw std::invalid_argument("verify_bound(" + to_string(t) +
                                    "): run artifacts come from a different algorithm (" +
                                    to_string(run.spec.kind) + ")");
}

}  // namespace

BoundCheck verify_bound(BoundTheorem theorem, const RunArtifacts& run) {
    const TabularMDP& m = run.bundle.mdp;
    const Policy& expert = run.bundle.expert;
    const PolicyView learner = run.report.view();
    const int T = m.horizon;

    BoundCheck chk;
    chk.theorem = theorem;
    chk.regret = policy_value(m, learner) - policy_value(m, PolicyView(expert));
    chk.mismatch = on_policy_mismatch(m, learner, expert);

    const OccupancyProfile learner_occ = exact_occupancy(m, learner);

    switch (theorem) {
        case BoundTheorem::bc_quadratic: {
            chk.epsilon = chk.mismatch;
            chk.rhs = static_cast<double>(T) * T * chk.epsilon;
            break;
        }
        case BoundTheorem::dagger_linear: {
            chk.epsilon = chk.mismatch;
            chk.advantage_bound = advantage_sup(m, expert);
            chk.rhs = chk.advantage_bound * T * chk.epsilon;
            break;
        }
        case BoundTheorem::bc_goldilocks: {
            chk.epsilon = demo_measure_loss(run);
            chk.density_ratio = density_ratio_sup(learner_occ, exact_occupancy(m, PolicyView(expert)));
            chk.advantage_bound = advantage_sup(m, expert);
            const double linear = T * chk.density_ratio * chk.advantage_bound * chk.epsilon;
            const double quadratic = static_cast<double>(T) * T * chk.epsilon;
            chk.rhs = std::min(linear, quadratic);
            break;
        }
        case BoundTheorem::alice_cov: {
            require_kind(run, AlgorithmKind::alice_cov, theorem);
            const RatioEstimate ratio = learner_ratio(run, learner_occ);
            const auto w = demo_weights(run.demo);
            double eps = 0.0;
            for (int t = 1; t <= T; ++t)
                eps = std::max(eps, loss_cov_at(learner.at(t), w[static_cast<std::size_t>(t) - 1],
                                                ratio.per_step[static_cast<std::size_t>(t) - 1],
                                                m.num_states, m.num_actions));
            chk.epsilon = eps;
            chk.gamma = ratio.gamma_bound;
            chk.advantage_bound = advantage_sup(m, expert);
            chk.rhs = T * chk.advantage_bound * (chk.epsilon + chk.gamma);
            break;
        }
        case BoundTheorem::alice_fail: {
            require_kind(run, AlgorithmKind::alice_fail, theorem);
            double eps = 0.0;
            for (int t = 1; t <= T; ++t)
                eps = std::max(eps, loss_fail(m, learner.at(t), run.demo,
                                              learner_occ.per_step[static_cast<std::size_t>(t) - 1],
                                              run.fclass, t)
                                        .value);
            chk.epsilon = eps;
            chk.ibe = inherent_bellman_error(m, expert, run.fclass);
            chk.rhs = 2.0 * T * (chk.epsilon + chk.ibe);
            break;
        }
        case BoundTheorem::alice_cov_fail: {
            require_kind(run, AlgorithmKind::alice_cov_fail, theorem);
            const RatioEstimate ratio = learner_ratio(run, learner_occ);
            double eps = 0.0;
            for (int t = 1; t <= T; ++t)
                eps = std::max(eps, loss_cov_fail(m, learner.at(t), run.demo, ratio, run.fclass, t));
            chk.epsilon = eps;
            chk.gamma = ratio.gamma_bound;
            chk.advantage_bound = advantage_sup(m, expert);
            chk.rhs = T * (chk.epsilon + chk.advantage_bound * chk.gamma);
            break;
        }
    }
    chk.slack = chk.rhs - chk.regret;
    chk.holds = chk.regret <= chk.rhs + 1e-9;
    return chk;
}

namespace {

std::string params_to_string(const std::map<std::string, double>& params) {
    std::ostringstream os;
    bool first = true;
    for (const auto& [k, v] : params) {
        if (!first) os << ";";
        first = false;
        os << k << "=" << v;
    }
    return os.str();
}

}  // namespace

SweepRow row_from_artifacts(const RunArtifacts& run, std::uint64_t seed) {
    SweepRow row;
    row.env = run.bundle.name;
    row.params = params_to_string(run.bundle.params);
    row.T = run.bundle.mdp.horizon;
    row.algo = run.spec.effective_label();
    row.seed = seed;
    const BoundTheorem thm = applicable_theorems(run.spec.kind).back();
    const BoundCheck chk = verify_bound(thm, run);
    row.regret = chk.regret;
    row.mismatch = chk.mismatch;
    row.epsilon = chk.epsilon;
    row.gamma = chk.gamma;
    row.bound_thm = to_string(thm);
    row.bound_rhs = chk.rhs;
    row.holds = chk.holds;
    row.slack = chk.slack;
    // record every measured constant, not only the ones this bound consumes
    row.density_ratio = chk.density_ratio != 0.0
                            ? chk.density_ratio
                            : density_ratio_sup(run.bundle.mdp, run.report.view(), run.bundle.expert);
    row.advantage_bound = chk.advantage_bound != 0.0
                              ? chk.advantage_bound
                              : advantage_sup(run.bundle.mdp, run.bundle.expert);
    row.ibe = chk.ibe;
    if (row.ibe == 0.0) {
        try {
            row.ibe = inherent_bellman_error(run.bundle.mdp, run.bundle.expert, run.fclass);
        } catch (const std::invalid_argument&) {
            // class too large to enumerate; leave unreported
        }
    }
    return row;
}

namespace {

SweepRow run_one_row(const std::string& env_name, const std::map<std::string, double>& env_params,
                     int T, const AlgorithmSpec& spec, std::uint64_t seed, const SweepConfig& cfg) {
    SweepRow row;
    row.T = T;
    row.algo = spec.effective_label();
    row.seed = seed;
    row.env = env_name;
    try {
        EnvBundle env = build_env(env_name, T, env_params);
        row.params = params_to_string(env.params);
        RunArtifacts run = run_algorithm(env, spec, cfg.mode, seed, cfg.sampled);
        row = row_from_artifacts(run, seed);
    } catch (const std::exception& e) {
        row.error = e.what();
    }
    return row;
}

}  // namespace

SweepResult horizon_sweep(const std::string& env_name,
                          const std::map<std::string, double>& env_params,
                          const std::vector<int>& T_list,
                          const std::vector<AlgorithmSpec>& algorithms,
                          const std::vector<std::uint64_t>& seeds, const SweepConfig& cfg) {
    if (T_list.size() < 4)
        throw std::invalid_argument("horizon_sweep: need at least 4 horizons");
    for (std::size_t i = 1; i < T_list.size(); ++i)
        if (T_list[i] <= T_list[i - 1])
            throw std::invalid_argument("horizon_sweep: horizons must be sorted ascending");

    std::vector<std::uint64_t> use_seeds = seeds.empty() ? std::vector<std::uint64_t>{0} : seeds;
    if (cfg.mode == TrainMode::exact) use_seeds.resize(1);

    struct Job {
        int T;
        const AlgorithmSpec* spec;
        std::uint64_t seed;
    };
    std::vector<Job> jobs;
    for (int T : T_list)
        for (const AlgorithmSpec& spec : algorithms)
            for (std::uint64_t seed : use_seeds) jobs.push_back({T, &spec, seed});

    SweepResult result;
    result.rows.resize(jobs.size());
#pragma omp parallel for schedule(dynamic)
    for (long long i = 0; i < static_cast<long long>(jobs.size()); ++i) {
        const Job& j = jobs[static_cast<std::size_t>(i)];
        result.rows[static_cast<std::size_t>(i)] =
            run_one_row(env_name, env_params, j.T, *j.spec, j.seed, cfg);
    }
    return result;
}

ExponentFit fit_scaling_exponent(const SweepResult& sweep, const std::string& algo,
                                 const std::string& env) {
    std::vector<double> xs, ys;
    ExponentFit fit;
    for (const SweepRow& row : sweep.rows) {
        if (row.algo != algo || row.env != env || !row.error.empty()) continue;
        if (row.regret <= 1e-12) {
            ++fit.n_excluded;
            continue;
        }
        xs.push_back(std::log(static_cast<double>(row.T)));
        ys.push_back(std::log(row.regret));
        fit.T_range.push_back(row.T);
    }
    if (xs.size() < 4)
        throw std::invalid_argument("fit_scaling_exponent: fewer than 4 positive-regret rows");
    const double n = static_cast<double>(xs.size());
    double sx = 0.0, sy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sx += xs[i];
        sy += ys[i];
    }
    const double mx = sx / n, my = sy / n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
        syy += (ys[i] - my) * (ys[i] - my);
    }
    fit.beta = sxy / sxx;
    fit.intercept = my - fit.beta * mx;
    fit.r_squared = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
    fit.n_points = static_cast<int>(xs.size());
    std::sort(fit.T_range.begin(), fit.T_range.end());
    return fit;
}

}  // namespace ilab
