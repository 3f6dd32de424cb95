#include "ilab/envs.hpp"

#include <cmath>
#include <stdexcept>

namespace ilab {

namespace {

TabularMDP make_empty(int S, int A, int T) {
    TabularMDP m;
    m.num_states = S;
    m.num_actions = A;
    m.horizon = T;
    m.transition.assign(static_cast<std::size_t>(S) * A * S, 0.0);
    m.cost.assign(S, 0.0);
    m.initial_dist.assign(S, 0.0);
    return m;
}

}  // namespace

std::vector<Policy> feasible_policies(const StateAggregationClass& cls, int num_actions) {
    const int C = cls.num_cells;
    double count_f = std::pow(static_cast<double>(num_actions), C);
    if (count_f > static_cast<double>(1 << 20))
        throw std::invalid_argument("feasible_policies: enumeration too large");
    const std::uint64_t count = static_cast<std::uint64_t>(count_f + 0.5);
    std::vector<Policy> out;
    out.reserve(count);
    const int S = static_cast<int>(cls.cell_of.size());
    for (std::uint64_t idx = 0; idx < count; ++idx) {
        std::vector<int> cell_action(C);
        std::uint64_t rem = idx;
        for (int c = 0; c < C; ++c) {
            cell_action[c] = static_cast<int>(rem % num_actions);
            rem /= num_actions;
        }
        std::vector<int> action_of(S);
        for (int s = 0; s < S; ++s) action_of[s] = cell_action[cls.cell_of[s]];
        Policy p = Policy::deterministic(action_of, num_actions);
        p.class_tag = cls;
        out.push_back(std::move(p));
    }
    return out;
}

bool policy_feasible(const Policy& p, const StateAggregationClass& cls, double tol) {
    std::vector<int> seen(cls.num_cells, -1);
    for (int s = 0; s < p.num_states; ++s) {
        const int c = cls.cell_of[s];
        if (seen[c] < 0) {
            seen[c] = s;
            continue;
        }
        for (int a = 0; a < p.num_actions; ++a)
            if (std::abs(p.prob(s, a) - p.prob(seen[c], a)) > tol) return false;
    }
    return true;
}

std::string label_regime(const TabularMDP& m, const Policy& expert,
                         const StateAggregationClass& cls) {
    if (policy_feasible(expert, cls)) return "easy";
    // The uniform policy is always feasible and reaches every state any
    // feasible policy can reach, so it witnesses the infinite-ratio check.
    Policy uni = Policy::uniform(m.num_states, m.num_actions);
    const double ratio = density_ratio_sup(m, PolicyView(uni), expert);
    if (std::isinf(ratio)) return "hard";
    return "goldilocks";
}

EnvBundle build_recoverability_env(RecoverabilityKind kind, int T, double slip, double aux_rate,
                                   int k) {
    if (T < 2) throw std::invalid_argument("build_recoverability_env: T must be >= 2");
    if (slip < 0.0 || slip > 0.5)
        throw std::invalid_argument("build_recoverability_env: slip must be in [0, 0.5]");
    if (aux_rate < 0.0 || aux_rate > 0.5)
        throw std::invalid_argument("build_recoverability_env: aux_rate must be in [0, 0.5]");
    if (k < 1) throw std::invalid_argument("build_recoverability_env: k must be >= 1");

    EnvBundle b;
    if (kind == RecoverabilityKind::unrecoverable) {
        // g=0, h1=1, h2=2, b=3. h1 recovers with action 0, h2 with action 1.
        const double s1 = slip, s2 = 0.8 * slip, sb = slip / 16.0;
        TabularMDP m = make_empty(4, 2, T);
        m.initial_dist[0] = 1.0;
        m.cost = {0.0, 0.0, 0.0, 1.0};
        m.row_mut(0, 0)[0] = 1.0 - s1 - s2 - sb;
        m.row_mut(0, 0)[1] = s1;
        m.row_mut(0, 0)[2] = s2;
        m.row_mut(0, 0)[3] = sb;
        m.row_mut(0, 1)[3] = 1.0;
        m.row_mut(1, 0)[0] = 1.0;  // h1: action 0 recovers
        m.row_mut(1, 1)[3] = 1.0;
        m.row_mut(2, 0)[3] = 1.0;  // h2: action 0 falls in
        m.row_mut(2, 1)[0] = 1.0;
        m.row_mut(3, 0)[3] = 1.0;  // absorbing
        m.row_mut(3, 1)[3] = 1.0;
        b.mdp = std::move(m);
        b.expert = Policy::deterministic({0, 0, 1, 1}, 2);
        StateAggregationClass cls;
        cls.cell_of = {0, 1, 1, 2};  // the two side states share a cell
        cls.num_cells = 3;
        b.learner_class = cls;
        b.name = "unrecoverable";
        b.params = {{"T", static_cast<double>(T)}, {"slip", slip}};
    } else {
        const int kk = (kind == RecoverabilityKind::one_step) ? 1 : k;
        const int S = kk + 2;  // g, h, b1..bk
        TabularMDP m = make_empty(S, 2, T);
        m.initial_dist[0] = 1.0;
        for (int j = 0; j < kk; ++j) m.cost[2 + j] = 1.0;
        // g
        m.row_mut(0, 0)[0] = 1.0 - slip - aux_rate;
        m.row_mut(0, 0)[1] = aux_rate;
        m.row_mut(0, 0)[2] = slip;
        m.row_mut(0, 1)[2] = 1.0;
        // h
        m.row_mut(1, 0)[0] = 1.0;
        m.row_mut(1, 1)[2] = 1.0;
        // chain
        for (int j = 0; j < kk; ++j) {
            const int s = 2 + j;
            m.row_mut(s, 0)[s] = 1.0;  // staying put keeps paying
            m.row_mut(s, 1)[j + 1 == kk ? 0 : s + 1] = 1.0;
        }
        b.mdp = std::move(m);
        std::vector<int> expert_actions(S, 1);
        expert_actions[0] = 0;
        expert_actions[1] = 0;
        b.expert = Policy::deterministic(expert_actions, 2);
        StateAggregationClass cls;
        cls.cell_of.resize(S);
        cls.cell_of[0] = 0;
        cls.cell_of[1] = 1;
        cls.cell_of[2] = 1;  // side state and chain entry share a cell
        for (int j = 1; j < kk; ++j) cls.cell_of[2 + j] = 1 + j;
        cls.num_cells = kk + 1;
        b.learner_class = cls;
        b.name = (kind == RecoverabilityKind::one_step) ? "one_step" : "k_step";
        b.params = {{"T", static_cast<double>(T)},
                    {"slip", slip},
                    {"aux_rate", aux_rate},
                    {"k", static_cast<double>(kk)}};
    }
    b.expert.class_tag = std::nullopt;
    b.label = label_regime(b.mdp, b.expert, b.learner_class);
    return b;
}

namespace {

constexpr int kLatchGo = 0;
constexpr int kLatchStop = 1;

int latch_state_id(int phase, int prev, int vis) { return (phase * 2 + prev) * 2 + vis; }

}  // namespace

int latching_num_cells() { return 6; }
bool latching_cell_is_masked(int cell) { return cell >= 4; }
int latching_masked_cell_prev(int cell) { return cell - 4; }

EnvBundle build_latching_env(int T, double signal_noise, double slip, int period, int green_len) {
    if (T < 2) throw std::invalid_argument("build_latching_env: T must be >= 2");
    if (signal_noise < 0.0 || signal_noise > 0.5)
        throw std::invalid_argument("build_latching_env: signal_noise must be in [0, 0.5]");
    if (slip < 0.0 || slip > 0.5)
        throw std::invalid_argument("build_latching_env: slip must be in [0, 0.5]");
    if (period < 2 || green_len < 1 || green_len >= period)
        throw std::invalid_argument("build_latching_env: need 1 <= green_len < period");

    const int P = period;
    const double eta = signal_noise;
    const int S = 4 * P;
    auto light = [green_len](int phase) { return phase < green_len ? kLatchGo : kLatchStop; };

    TabularMDP m = make_empty(S, 2, T);
    for (int p = 0; p < P; ++p) {
        const int p_prev = (p + P - 1) % P;
        for (int prev = 0; prev < 2; ++prev) {
            const double c = (prev == light(p_prev)) ? 0.0 : 1.0;
            for (int vis = 0; vis < 2; ++vis) {
                const int s = latch_state_id(p, prev, vis);
                m.cost[s] = c;
                for (int a = 0; a < 2; ++a) {
                    double* row = m.row_mut(s, a);
                    const int p_stay = p, p_adv = (p + 1) % P;
                    row[latch_state_id(p_adv, a, 1)] += (1.0 - slip) * (1.0 - eta);
                    row[latch_state_id(p_adv, a, 0)] += (1.0 - slip) * eta;
                    row[latch_state_id(p_stay, a, 1)] += slip * (1.0 - eta);
                    row[latch_state_id(p_stay, a, 0)] += slip * eta;
                }
            }
        }
    }
    // episodes start as the light turns red, with the correct previous action
    const int start_phase = green_len;
    const int start_prev = light((start_phase + P - 1) % P);
    m.initial_dist[latch_state_id(start_phase, start_prev, 1)] = 1.0 - eta;
    m.initial_dist[latch_state_id(start_phase, start_prev, 0)] = eta;

    std::vector<int> expert_actions(S);
    for (int p = 0; p < P; ++p)
        for (int prev = 0; prev < 2; ++prev)
            for (int vis = 0; vis < 2; ++vis) expert_actions[latch_state_id(p, prev, vis)] = light(p);

    // cells: visible -> (color, prev) in 0..3; masked -> 4 + prev
    StateAggregationClass cls;
    cls.cell_of.resize(S);
    for (int p = 0; p < P; ++p)
        for (int prev = 0; prev < 2; ++prev) {
            cls.cell_of[latch_state_id(p, prev, 1)] = light(p) * 2 + prev;
            cls.cell_of[latch_state_id(p, prev, 0)] = 4 + prev;
        }
    cls.num_cells = 6;

    EnvBundle b;
    b.name = "latching";
    b.mdp = std::move(m);
    b.expert = Policy::deterministic(expert_actions, 2);
    b.learner_class = cls;
    b.params = {{"T", static_cast<double>(T)}, {"signal_noise", signal_noise},
                {"slip", slip},               {"period", static_cast<double>(P)},
                {"green_len", static_cast<double>(green_len)}};
    b.label = label_regime(b.mdp, b.expert, b.learner_class);
    return b;
}

StateAggregationClass latching_prev_action_only_class(int period) {
    StateAggregationClass cls;
    cls.cell_of.resize(4 * period);
    for (int p = 0; p < period; ++p)
        for (int prev = 0; prev < 2; ++prev)
            for (int vis = 0; vis < 2; ++vis) cls.cell_of[latch_state_id(p, prev, vis)] = prev;
    cls.num_cells = 2;
    return cls;
}

EnvBundle smooth_expert(const EnvBundle& bundle, double eta) {
    if (eta < 0.0 || eta > 1.0) throw std::invalid_argument("smooth_expert: eta must be in [0, 1]");
    EnvBundle out = bundle;
    if (eta == 0.0) return out;
    const int S = bundle.mdp.num_states, A = bundle.mdp.num_actions;
    for (int s = 0; s < S; ++s)
        for (int a = 0; a < A; ++a)
            out.expert.action_dist[static_cast<std::size_t>(s) * A + a] =
                (1.0 - eta) * bundle.expert.prob(s, a) + eta / A;
    out.params["smooth_eta"] = eta;
    out.label = label_regime(out.mdp, out.expert, out.learner_class);
    return out;
}

std::map<std::string, std::vector<EnvParamSpec>> env_registry() {
    return {
        {"one_step",
         {{"slip", 0.1, "chance the main state slips into the bad state"},
          {"aux_rate", 0.0, "chance the main state slips into the cost-free side state"},
          {"smooth_eta", 0.0, "expert smoothing toward uniform"}}},
        {"k_step",
         {{"slip", 0.1, "chance the main state slips into the chain entry"},
          {"aux_rate", 0.0, "chance the main state slips into the cost-free side state"},
          {"k", 2, "recovery chain length"},
          {"smooth_eta", 0.0, "expert smoothing toward uniform"}}},
        {"unrecoverable",
         {{"slip", 0.008, "side-state rate; absorbing-state rate is slip/16"},
          {"smooth_eta", 0.0, "expert smoothing toward uniform"}}},
        {"latching",
         {{"signal_noise", 0.3, "chance the light phase is masked"},
          {"slip", 0.0, "chance the phase stalls for a step"},
          {"period", 12, "light cycle length"},
          {"green_len", 10, "green phases per cycle"},
          {"smooth_eta", 0.0, "expert smoothing toward uniform"}}},
    };
}

EnvBundle build_env(const std::string& name, int T, const std::map<std::string, double>& params) {
    auto reg = env_registry();
    auto it = reg.find(name);
    if (it == reg.end()) throw std::invalid_argument("unknown environment name: " + name);
    std::map<std::string, double> p;
    for (const auto& spec : it->second) p[spec.name] = spec.default_value;
    for (const auto& [key, value] : params) {
        if (p.find(key) == p.end())
            throw std::invalid_argument("unknown parameter '" + key + "' for environment " + name);
        p[key] = value;
    }
    EnvBundle b;
    if (name == "one_step")
        b = build_recoverability_env(RecoverabilityKind::one_step, T, p["slip"], p["aux_rate"]);
    else if (name == "k_step")
        b = build_recoverability_env(RecoverabilityKind::k_step, T, p["slip"], p["aux_rate"],
                                     static_cast<int>(p["k"]));
    else if (name == "unrecoverable")
        b = build_recoverability_env(RecoverabilityKind::unrecoverable, T, p["slip"]);
    else
        b = build_latching_env(T, p["signal_noise"], p["slip"], static_cast<int>(p["period"]),
                               static_cast<int>(p["green_len"]));
    if (p["smooth_eta"] > 0.0) b = smooth_expert(b, p["smooth_eta"]);
    return b;
}

}  // namespace ilab
