#include <doctest.h>

#include <cmath>

#include "ilab/analysis.hpp"
#include "test_util.hpp"

using namespace ilab;
using namespace testutil;

namespace {

SweepResult synthetic_sweep(const std::vector<int>& Ts, double coef, double power) {
    SweepResult s;
    for (int T : Ts) {
        SweepRow r;
        r.env = "synthetic";
        r.algo = "algo";
        r.T = T;
        r.regret = coef * std::pow(static_cast<double>(T), power);
        s.rows.push_back(r);
    }
    return s;
}

}  // namespace

TEST_CASE("exponent fits recover exact power laws") {
    const std::vector<int> Ts = {10, 20, 40, 80, 160, 320};
    const ExponentFit lin = fit_scaling_exponent(synthetic_sweep(Ts, 3.0, 1.0), "algo", "synthetic");
    CHECK(std::abs(lin.beta - 1.0) <= 1e-6);
    CHECK(lin.r_squared == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(lin.n_points == 6);

    const ExponentFit quad =
        fit_scaling_exponent(synthetic_sweep(Ts, 0.01, 2.0), "algo", "synthetic");
    CHECK(std::abs(quad.beta - 2.0) <= 1e-6);
    CHECK(quad.intercept == doctest::Approx(std::log(0.01)).epsilon(1e-9));
}

TEST_CASE("exponent fits exclude zero-regret rows and report the count") {
    SweepResult s = synthetic_sweep({10, 20, 40, 80, 160}, 2.0, 1.5);
    s.rows[1].regret = 0.0;
    const ExponentFit fit = fit_scaling_exponent(s, "algo", "synthetic");
    CHECK(fit.n_points == 4);
    CHECK(fit.n_excluded == 1);
    CHECK(std::abs(fit.beta - 1.5) <= 1e-6);

    SweepResult few = synthetic_sweep({10, 20, 40}, 1.0, 1.0);
    CHECK_THROWS_AS((void)fit_scaling_exponent(few, "algo", "synthetic"), std::invalid_argument);
}

TEST_CASE("bound checks") {
    SUBCASE("realizable cloning: zero epsilon, trivially holds") {
        EnvBundle env = build_recoverability_env(RecoverabilityKind::one_step, 6, 0.1);
        AlgorithmSpec spec;
        spec.kind = AlgorithmKind::bc;
        spec.policy_class = "singleton";
        const RunArtifacts run = run_algorithm(env, spec, TrainMode::exact, 0);
        for (BoundTheorem thm : {BoundTheorem::bc_quadratic, BoundTheorem::bc_goldilocks}) {
            const BoundCheck chk = verify_bound(thm, run);
            CHECK(chk.holds);
            CHECK(chk.slack >= 0.0);
            CHECK(chk.epsilon <= 1e-12);
            CHECK(std::abs(chk.regret) <= 1e-9);
        }
    }
    SUBCASE("goldilocks cloning bound with measured constants") {
        EnvBundle env = build_recoverability_env(RecoverabilityKind::one_step, 20, 0.015, 0.03);
        AlgorithmSpec spec;
        spec.kind = AlgorithmKind::bc;
        const RunArtifacts run = run_algorithm(env, spec, TrainMode::exact, 0);
        const BoundCheck chk = verify_bound(BoundTheorem::bc_goldilocks, run);
        CHECK(chk.holds);
        CHECK(chk.regret > 0.01);  // genuinely misspecified
        CHECK(std::isfinite(chk.density_ratio));
        CHECK(chk.epsilon > 0.009);
    }
    SUBCASE("forward reweighted training satisfies its bound with zero drift") {
        EnvBundle env = build_recoverability_env(RecoverabilityKind::one_step, 20, 0.015, 0.03);
        AlgorithmSpec spec;
        spec.kind = AlgorithmKind::alice_cov;
        spec.training = Training::forward;
        const RunArtifacts run = run_algorithm(env, spec, TrainMode::exact, 0);
        const BoundCheck chk = verify_bound(BoundTheorem::alice_cov, run);
        CHECK(chk.holds);
        CHECK(chk.gamma == 0.0);
        CHECK(chk.slack >= 0.0);
    }
    SUBCASE("interactive baseline bound") {
        EnvBundle env = build_recoverability_env(RecoverabilityKind::one_step, 20, 0.015, 0.03);
        AlgorithmSpec spec;
        spec.kind = AlgorithmKind::dagger;
        const RunArtifacts run = run_algorithm(env, spec, TrainMode::exact, 0);
        const BoundCheck chk = verify_bound(BoundTheorem::dagger_linear, run);
        CHECK(chk.holds);
        CHECK(chk.advantage_bound > 0.9);
    }
    SUBCASE("wrong artifact set is rejected") {
        EnvBundle env = build_recoverability_env(RecoverabilityKind::one_step, 6, 0.1);
        AlgorithmSpec spec;
        spec.kind = AlgorithmKind::bc;
        const RunArtifacts run = run_algorithm(env, spec, TrainMode::exact, 0);
        CHECK_THROWS_AS((void)verify_bound(BoundTheorem::alice_fail, run), std::invalid_argument);
        CHECK_THROWS_AS((void)verify_bound(BoundTheorem::alice_cov, run), std::invalid_argument);
    }
}

TEST_CASE("horizon sweeps") {
    AlgorithmSpec bc;
    bc.kind = AlgorithmKind::bc;
    bc.policy_class = "single_cell";

    SUBCASE("single-cell cloning regret increases with the horizon") {
        const SweepResult s = horizon_sweep("one_step", {{"slip", 0.015}, {"aux_rate", 0.03}},
                                            {10, 20, 40, 80}, {bc}, {0});
        REQUIRE(s.rows.size() == 4);
        for (std::size_t i = 0; i + 1 < s.rows.size(); ++i) {
            CHECK(s.rows[i].error.empty());
            CHECK(s.rows[i].regret < s.rows[i + 1].regret);
        }
    }
    SUBCASE("realizable rows report zero regret") {
        AlgorithmSpec singleton = bc;
        singleton.policy_class = "singleton";
        const SweepResult s =
            horizon_sweep("one_step", {{"slip", 0.1}}, {4, 6, 8, 10}, {singleton}, {0});
        for (const SweepRow& r : s.rows) CHECK(std::abs(r.regret) <= 1e-9);
    }
    SUBCASE("exact mode collapses seeds and repeats identically") {
        const SweepResult a = horizon_sweep("one_step", {{"slip", 0.015}, {"aux_rate", 0.03}},
                                            {5, 10, 15, 20}, {bc}, {1, 2, 3});
        CHECK(a.rows.size() == 4);  // one deterministic row per horizon
        const SweepResult b = horizon_sweep("one_step", {{"slip", 0.015}, {"aux_rate", 0.03}},
                                            {5, 10, 15, 20}, {bc}, {1, 2, 3});
        for (std::size_t i = 0; i < a.rows.size(); ++i) {
            CHECK(a.rows[i].regret == b.rows[i].regret);
            CHECK(a.rows[i].epsilon == b.rows[i].epsilon);
            CHECK(a.rows[i].bound_rhs == b.rows[i].bound_rhs);
        }
    }
    SUBCASE("row-level failures are recorded, not thrown") {
        AlgorithmSpec cov;
        cov.kind = AlgorithmKind::alice_cov;
        cov.training = Training::forward;
        const SweepResult s = horizon_sweep("latching", {{"signal_noise", 0.3}, {"slip", 0.2}},
                                            {6, 8, 10, 12}, {cov}, {0});
        REQUIRE(s.rows.size() == 4);
        for (const SweepRow& r : s.rows) {
            CHECK_FALSE(r.error.empty());
            CHECK(r.error.find("hard regime") != std::string::npos);
        }
    }
    SUBCASE("unsorted or too-short horizon lists are rejected") {
        CHECK_THROWS_AS(
            (void)horizon_sweep("one_step", {}, {10, 5, 20, 40}, {bc}, {0}),
            std::invalid_argument);
        CHECK_THROWS_AS((void)horizon_sweep("one_step", {}, {10, 20, 40}, {bc}, {0}),
                        std::invalid_argument);
    }
}
