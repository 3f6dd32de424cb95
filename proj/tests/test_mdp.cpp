#include <doctest.h>

#include <cmath>

#include "ilab/envs.hpp"
#include "ilab/mdp.hpp"
#include "test_util.hpp"

using namespace ilab;
using namespace testutil;

TEST_CASE("validate_mdp reports nothing on a well-formed MDP") {
    EnvBundle env = one_step_small();
    CHECK(validate_mdp(env.mdp).empty());
}

TEST_CASE("validate_mdp names the offending row and magnitude") {
    EnvBundle env = one_step_small();
    TabularMDP bad = env.mdp;
    bad.row_mut(0, 0)[0] -= 0.1;  // row now sums to 0.9
    const auto v = validate_mdp(bad);
    REQUIRE(v.size() == 1);
    CHECK(v[0].find("s=0") != std::string::npos);
    CHECK(v[0].find("0.9") != std::string::npos);

    TabularMDP bad_cost = env.mdp;
    bad_cost.cost[2] = 1.2;
    const auto vc = validate_mdp(bad_cost);
    REQUIRE(vc.size() == 1);
    CHECK(vc[0].find("cost(s=2)") != std::string::npos);
}

TEST_CASE("exact occupancy matches the hand recursion") {
    EnvBundle env = one_step_small();
    const OccupancyProfile occ = exact_occupancy(env.mdp, PolicyView(env.expert));
    CHECK(occ.per_step[0] == std::vector<double>{1.0, 0.0, 0.0});
    CHECK(occ.per_step[1][0] == doctest::Approx(0.9).epsilon(1e-12));
    CHECK(occ.per_step[1][2] == doctest::Approx(0.1).epsilon(1e-12));
    CHECK(occ.per_step[2][0] == doctest::Approx(0.91).epsilon(1e-12));
    CHECK(occ.per_step[2][2] == doctest::Approx(0.09).epsilon(1e-12));

    for (const auto& rho : occ.per_step) {
        double sum = 0.0;
        for (double v : rho) sum += v;
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-10));
    }
    for (int s = 0; s < 3; ++s) {
        const double avg = (occ.per_step[0][s] + occ.per_step[1][s] + occ.per_step[2][s]) / 3.0;
        CHECK(occ.average[s] == doctest::Approx(avg).epsilon(1e-10));
    }
}

TEST_CASE("policy value: frozen fixture value and enumeration oracle") {
    EnvBundle env = one_step_small();
    const double j = policy_value(env.mdp, PolicyView(env.expert));
    CHECK(j == doctest::Approx(0.19).epsilon(1e-12));
    CHECK(j == doctest::Approx(enum_policy_value(env.mdp, PolicyView(env.expert))).epsilon(1e-12));
}

TEST_CASE("policy value: zero costs and unit costs") {
    EnvBundle env = one_step_small();
    TabularMDP m = env.mdp;
    m.cost.assign(m.num_states, 0.0);
    CHECK(policy_value(m, PolicyView(env.expert)) == 0.0);
    m.cost.assign(m.num_states, 1.0);
    CHECK(policy_value(m, PolicyView(env.expert)) == doctest::Approx(3.0).epsilon(1e-12));
}

TEST_CASE("two value formulas agree on random instances") {
    RandomSource rng(21);
    for (int trial = 0; trial < 20; ++trial) {
        TabularMDP m = random_mdp(rng, 5, 3, 7);
        Policy p = random_policy(rng, 5, 3);
        const double j = policy_value(m, PolicyView(p));
        const OccupancyProfile occ = exact_occupancy(m, PolicyView(p));
        double davg = 0.0;
        for (int s = 0; s < m.num_states; ++s) davg += occ.average[s] * m.cost[s];
        CHECK(j == doctest::Approx(m.horizon * davg).epsilon(1e-10));
    }
}

TEST_CASE("rollout: determinism and the degenerate deterministic case") {
    EnvBundle env = one_step_small();
    RandomSource r1(5), r2(5);
    const Trajectory t1 = rollout(env.mdp, PolicyView(env.expert), r1);
    const Trajectory t2 = rollout(env.mdp, PolicyView(env.expert), r2);
    CHECK(t1.steps == t2.steps);

    // fully deterministic two-state swap chain: the trajectory is unique
    TabularMDP m;
    m.num_states = 2;
    m.num_actions = 1;
    m.horizon = 4;
    m.transition = {0.0, 1.0, 1.0, 0.0};
    m.cost = {0.0, 1.0};
    m.initial_dist = {1.0, 0.0};
    Policy p = always_action(0, 2, 1);
    for (std::uint64_t seed : {1ull, 99ull, 12345ull}) {
        RandomSource rng(seed);
        const Trajectory tr = rollout(m, PolicyView(p), rng);
        CHECK(tr.steps == std::vector<std::array<int, 3>>{{1, 0, 0}, {2, 1, 0}, {3, 0, 0}, {4, 1, 0}});
    }
}

TEST_CASE("Monte-Carlo occupancy converges to the exact recursion") {
    EnvBundle env = one_step_small();
    const OccupancyProfile exact = exact_occupancy(env.mdp, PolicyView(env.expert));
    for (int n : {1000, 10000, 100000}) {
        const auto trs = batch_rollout(env.mdp, PolicyView(env.expert), n, 123);
        std::vector<std::vector<double>> freq(3, std::vector<double>(3, 0.0));
        for (const Trajectory& tr : trs)
            for (const auto& [t, s, a] : tr.steps) freq[t - 1][s] += 1.0 / n;
        double worst = 0.0;
        for (int t = 0; t < 3; ++t) worst = std::max(worst, l1(freq[t], exact.per_step[t]));
        CHECK(worst <= 5.0 * std::sqrt(3.0 / n));
        if (n == 100000) CHECK(freq[1][2] == doctest::Approx(0.1).epsilon(0.1));
    }
}

TEST_CASE("value tables: terminal layer, advantage identities, enumeration oracle") {
    EnvBundle env = one_step_small();
    const ValueTables vt = value_tables(env.mdp, PolicyView(env.expert));
    // last layer has no continuation
    for (int s = 0; s < 3; ++s)
        for (int a = 0; a < 2; ++a) CHECK(vt.q_at(3, s, a) == env.mdp.cost[s]);
    // deterministic expert: advantage at its own action is exactly zero
    const auto mode = env.expert.mode();
    for (int t = 1; t <= 3; ++t)
        for (int s = 0; s < 3; ++s) CHECK(vt.adv_at(t, s, mode[s]) == 0.0);
    // frozen hand value and the full-enumeration oracle
    CHECK(vt.adv_at(1, 0, 1) == doctest::Approx(0.81).epsilon(1e-12));
    for (int t = 1; t <= 3; ++t)
        for (int s = 0; s < 3; ++s)
            for (int a = 0; a < 2; ++a)
                CHECK(vt.q_at(t, s, a) ==
                      doctest::Approx(enum_q(env.mdp, PolicyView(env.expert), t, s, a))
                          .epsilon(1e-10));
}

TEST_CASE("advantage identity holds for random stochastic policies") {
    RandomSource rng(31);
    TabularMDP m = random_mdp(rng, 4, 3, 5);
    Policy p = random_policy(rng, 4, 3);
    const ValueTables vt = value_tables(m, PolicyView(p));
    for (int t = 1; t <= 5; ++t)
        for (int s = 0; s < 4; ++s) {
            double v = 0.0;
            for (int a = 0; a < 3; ++a) v += p.prob(s, a) * vt.q_at(t, s, a);
            for (int a = 0; a < 3; ++a)
                CHECK(vt.adv_at(t, s, a) == doctest::Approx(vt.q_at(t, s, a) - v).epsilon(1e-10));
        }
}

TEST_CASE("performance difference: both routes agree") {
    EnvBundle env = one_step_small();
    SUBCASE("learner equals expert") {
        const auto [lhs, rhs] = performance_difference(env.mdp, PolicyView(env.expert), env.expert);
        CHECK(lhs == doctest::Approx(0.0).epsilon(1e-12));
        CHECK(rhs == doctest::Approx(0.0).epsilon(1e-12));
    }
    SUBCASE("always-stay learner, frozen value") {
        Policy a0 = always_action(0, 3, 2);
        const auto [lhs, rhs] = performance_difference(env.mdp, PolicyView(a0), env.expert);
        CHECK(lhs == doctest::Approx(0.1).epsilon(1e-9));
        CHECK(std::abs(lhs - rhs) <= 1e-9);
    }
    SUBCASE("random instances, 100 seeds") {
        for (int seed = 0; seed < 100; ++seed) {
            RandomSource rng(1000 + seed);
            const int S = 2 + static_cast<int>(rng.next_u64() % 7);
            const int A = 2 + static_cast<int>(rng.next_u64() % 3);
            const int T = 2 + static_cast<int>(rng.next_u64() % 9);
            TabularMDP m = random_mdp(rng, S, A, T);
            Policy learner = random_policy(rng, S, A);
            Policy expert = random_policy(rng, S, A);
            const auto [lhs, rhs] = performance_difference(m, PolicyView(learner), expert);
            CHECK(std::abs(lhs - rhs) <= 1e-9);
        }
    }
}

TEST_CASE("on-policy mismatch") {
    EnvBundle env = one_step_small();
    CHECK(on_policy_mismatch(env.mdp, PolicyView(env.expert), env.expert) == 0.0);

    // disagreeing everywhere
    Policy flipped = env.expert;
    for (int s = 0; s < 3; ++s) {
        const double a0 = flipped.prob(s, 0);
        flipped.row_mut(s)[0] = flipped.prob(s, 1);
        flipped.row_mut(s)[1] = a0;
    }
    CHECK(on_policy_mismatch(env.mdp, PolicyView(flipped), env.expert) ==
          doctest::Approx(1.0).epsilon(1e-12));

    // always-stay disagrees only at the bad state
    Policy a0 = always_action(0, 3, 2);
    const OccupancyProfile occ = exact_occupancy(env.mdp, PolicyView(a0));
    CHECK(on_policy_mismatch(env.mdp, PolicyView(a0), env.expert) ==
          doctest::Approx(occ.average[2]).epsilon(1e-12));
}

TEST_CASE("density ratio sup") {
    EnvBundle env = one_step_small();
    SUBCASE("learner equals expert: ratio one") {
        CHECK(density_ratio_sup(env.mdp, PolicyView(env.expert), env.expert) == 1.0);
    }
    SUBCASE("expert never visits a learner state: infinite") {
        // a latching-style bundle where the deterministic expert never holds
        // a wrong previous action, but a feasible learner can
        EnvBundle latch = build_latching_env(6, 0.3);
        Policy wrong = always_action(1, latch.mdp.num_states, 2);
        CHECK(std::isinf(density_ratio_sup(latch.mdp, PolicyView(wrong), latch.expert)));
    }
    SUBCASE("smoothed expert keeps the ratio finite, matches elementwise division") {
        EnvBundle sm = smooth_expert(env, 0.1);
        Policy a0 = always_action(0, 3, 2);
        const double r = density_ratio_sup(sm.mdp, PolicyView(a0), sm.expert);
        CHECK(std::isfinite(r));
        const OccupancyProfile lo = exact_occupancy(sm.mdp, PolicyView(a0));
        const OccupancyProfile eo = exact_occupancy(sm.mdp, PolicyView(sm.expert));
        double want = 0.0;
        for (int t = 0; t < 3; ++t)
            for (int s = 0; s < 3; ++s) {
                if (eo.per_step[t][s] > 0.0)
                    want = std::max(want, lo.per_step[t][s] / eo.per_step[t][s]);
                else
                    CHECK(lo.per_step[t][s] == 0.0);
            }
        CHECK(r == doctest::Approx(want).epsilon(1e-12));
    }
    SUBCASE("brute-force agreement on the fixture") {
        Policy a0 = always_action(0, 3, 2);
        const double r = density_ratio_sup(env.mdp, PolicyView(a0), env.expert);
        CHECK(r == doctest::Approx(0.19 / 0.09).epsilon(1e-12));
    }
}

TEST_CASE("advantage sup") {
    EnvBundle env = one_step_small();
    SUBCASE("zero-cost MDP gives zero") {
        TabularMDP m = env.mdp;
        m.cost.assign(m.num_states, 0.0);
        CHECK(advantage_sup(m, env.expert) == 0.0);
    }
    SUBCASE("fixture value equals the enumeration oracle") {
        const double u = advantage_sup(env.mdp, env.expert);
        double want = -1e300;
        for (int t = 1; t <= 3; ++t)
            for (int s = 0; s < 3; ++s) {
                double v = 0.0;
                for (int a = 0; a < 2; ++a)
                    v += env.expert.prob(s, a) * enum_q(env.mdp, PolicyView(env.expert), t, s, a);
                for (int a = 0; a < 2; ++a)
                    want = std::max(want, enum_q(env.mdp, PolicyView(env.expert), t, s, a) - v);
            }
        CHECK(u == doctest::Approx(want).epsilon(1e-10));
        CHECK(u == doctest::Approx(1.0).epsilon(1e-12));
    }
    SUBCASE("expert-mismatch cost gives u = 1 exactly") {
        const double u = advantage_sup(env.mdp, env.expert, CostModel::mismatch(env.expert));
        CHECK(u == 1.0);
    }
    SUBCASE("random instances agree with the path-enumeration oracle") {
        RandomSource rng(47);
        for (int trial = 0; trial < 8; ++trial) {
            const int S = 3 + static_cast<int>(rng.next_u64() % 2);
            const int T = 3 + static_cast<int>(rng.next_u64() % 3);
            TabularMDP m = random_mdp(rng, S, 2, T);
            Policy expert = random_policy(rng, S, 2);
            double want = -1e300;
            for (int t = 1; t <= T; ++t)
                for (int s = 0; s < S; ++s) {
                    double v = 0.0;
                    for (int a = 0; a < 2; ++a)
                        v += expert.prob(s, a) * enum_q(m, PolicyView(expert), t, s, a);
                    for (int a = 0; a < 2; ++a)
                        want = std::max(want, enum_q(m, PolicyView(expert), t, s, a) - v);
                }
            CHECK(advantage_sup(m, expert) == doctest::Approx(want).epsilon(1e-9));
        }
    }
}

TEST_CASE("occupancies stay normalized for every bundle and policy") {
    std::vector<EnvBundle> bundles = {
        build_recoverability_env(RecoverabilityKind::one_step, 7, 0.1),
        build_recoverability_env(RecoverabilityKind::k_step, 7, 0.015, 0.03, 3),
        build_recoverability_env(RecoverabilityKind::unrecoverable, 7, 0.008),
        build_latching_env(7, 0.3),
    };
    RandomSource rng(53);
    for (const EnvBundle& b : bundles) {
        std::vector<Policy> policies = {b.expert, Policy::uniform(b.mdp.num_states, 2),
                                        random_policy(rng, b.mdp.num_states, 2)};
        for (const Policy& p : policies) {
            const OccupancyProfile occ = exact_occupancy(b.mdp, PolicyView(p));
            for (const auto& rho : occ.per_step) {
                double sum = 0.0;
                for (double v : rho) sum += v;
                CHECK(std::abs(sum - 1.0) <= 1e-10);
            }
        }
    }
}

TEST_CASE("policy shape errors") {
    EnvBundle env = one_step_small();
    Policy wrong = always_action(0, 5, 2);
    CHECK_THROWS_AS((void)exact_occupancy(env.mdp, PolicyView(wrong)), std::invalid_argument);
    PolicySequence seq;
    seq.per_step = {env.expert, env.expert};  // horizon is 3
    CHECK_THROWS_AS((void)exact_occupancy(env.mdp, PolicyView(seq)), std::invalid_argument);
}
