#include "ilab/demos.hpp"

#include <stdexcept>

namespace ilab {

DemoSource collect_demos(const EnvBundle& bundle, int n, std::uint64_t seed) {
    if (n < 1) throw std::invalid_argument("collect_demos: n must be >= 1");
    DemoSource d;
    d.mode = DemoSource::Mode::sampled;
    d.horizon = bundle.mdp.horizon;
    d.num_states = bundle.mdp.num_states;
    d.num_actions = bundle.mdp.num_actions;
    d.seed = seed;
    d.trajectories = batch_rollout(bundle.mdp, PolicyView(bundle.expert), n, seed);
    const int n_train = std::max(1, (n * 8) / 10);
    for (int i = 0; i < n; ++i)
        (i < n_train ? d.train_idx : d.val_idx).push_back(i);
    return d;
}

DemoSource exact_demo(const EnvBundle& bundle) {
    DemoSource d;
    d.mode = DemoSource::Mode::exact;
    d.horizon = bundle.mdp.horizon;
    d.num_states = bundle.mdp.num_states;
    d.num_actions = bundle.mdp.num_actions;
    d.occupancy = exact_occupancy(bundle.mdp, PolicyView(bundle.expert));
    d.expert_rule = bundle.expert;
    return d;
}

OccupancyProfile empirical_occupancy(const DemoSource& d, double lambda) {
    if (d.mode != DemoSource::Mode::sampled)
        throw std::invalid_argument("empirical_occupancy: needs a sampled DemoSource");
    OccupancyProfile out;
    out.per_step.assign(d.horizon, std::vector<double>(d.num_states, 0.0));
    for (int idx : d.train_idx) {
        const Trajectory& tr = d.trajectories[idx];
        for (const auto& [t, s, a] : tr.steps) out.per_step[t - 1][s] += 1.0;
    }
    const double n = static_cast<double>(d.train_idx.size());
    for (int t = 0; t < d.horizon; ++t) {
        const double denom = n + lambda * d.num_states;
        for (int s = 0; s < d.num_states; ++s)
            out.per_step[t][s] = (out.per_step[t][s] + lambda) / denom;
    }
    out.average.assign(d.num_states, 0.0);
    for (int t = 0; t < d.horizon; ++t)
        for (int s = 0; s < d.num_states; ++s) out.average[s] += out.per_step[t][s];
    for (int s = 0; s < d.num_states; ++s) out.average[s] /= d.horizon;
    return out;
}

std::vector<std::vector<double>> demo_weights(const DemoSource& d) {
    std::vector<std::vector<double>> w(
        d.horizon, std::vector<double>(static_cast<std::size_t>(d.num_states) * d.num_actions, 0.0));
    if (d.mode == DemoSource::Mode::exact) {
        for (int t = 0; t < d.horizon; ++t)
            for (int s = 0; s < d.num_states; ++s) {
                const double rho = d.occupancy.per_step[t][s];
                if (rho == 0.0) continue;
                for (int a = 0; a < d.num_actions; ++a)
                    w[t][static_cast<std::size_t>(s) * d.num_actions + a] =
                        rho * d.expert_rule.prob(s, a);
            }
        return w;
    }
    const double n = static_cast<double>(d.train_idx.size());
    for (int idx : d.train_idx) {
        const Trajectory& tr = d.trajectories[idx];
        for (const auto& [t, s, a] : tr.steps)
            w[t - 1][static_cast<std::size_t>(s) * d.num_actions + a] += 1.0 / n;
    }
    return w;
}

OccupancyProfile expert_profile(const DemoSource& d, double lambda) {
    if (d.mode == DemoSource::Mode::exact) return d.occupancy;
    return empirical_occupancy(d, lambda);
}

}  // namespace ilab
