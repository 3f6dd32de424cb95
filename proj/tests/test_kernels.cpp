#include <doctest.h>

#include "ilab/kernels.hpp"
#include "test_util.hpp"

using namespace ilab;
using namespace testutil;

TEST_CASE("occupancy step: serial and parallel are bit-identical") {
    RandomSource rng(11);
    for (int trial = 0; trial < 5; ++trial) {
        const int S = 32 + trial * 40, A = 3;
        TabularMDP m = random_mdp(rng, S, A, 4);
        Policy p = random_policy(rng, S, A);
        std::vector<double> rho(S, 0.0);
        double sum = 0.0;
        for (int s = 0; s < S; ++s) {
            rho[s] = rng.next_double();
            sum += rho[s];
        }
        for (int s = 0; s < S; ++s) rho[s] /= sum;
        std::vector<double> a(S), b(S);
        kernels::occupancy_step_serial(m, p, rho.data(), a.data());
        kernels::occupancy_step_parallel(m, p, rho.data(), b.data());
        CHECK(a == b);
    }
}

TEST_CASE("backup step: serial and parallel are bit-identical") {
    RandomSource rng(12);
    const int S = 120, A = 4;
    TabularMDP m = random_mdp(rng, S, A, 4);
    std::vector<double> cost_sa(static_cast<std::size_t>(S) * A), v(S);
    for (auto& c : cost_sa) c = rng.next_double();
    for (auto& x : v) x = rng.next_double();
    std::vector<double> qa(static_cast<std::size_t>(S) * A), qb(qa.size());
    kernels::backup_step_serial(m, cost_sa.data(), v.data(), qa.data());
    kernels::backup_step_parallel(m, cost_sa.data(), v.data(), qb.data());
    CHECK(qa == qb);
}

TEST_CASE("batch rollout: serial and parallel produce identical trajectories") {
    EnvBundle env = one_step_small();
    const auto a = kernels::batch_rollout_serial(env.mdp, PolicyView(env.expert), 500, 7);
    const auto b = kernels::batch_rollout_parallel(env.mdp, PolicyView(env.expert), 500, 7);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].seed_id == b[i].seed_id);
        CHECK(a[i].steps == b[i].steps);
    }
}

TEST_CASE("scan_max: identical results and lowest-index tie-breaking") {
    auto eval = [](std::uint64_t i) {
        return static_cast<double>((i * 2654435761u) % 1000) / 1000.0;
    };
    const auto a = kernels::scan_max_serial(100000, eval);
    const auto b = kernels::scan_max_parallel(100000, eval);
    CHECK(a.first == b.first);
    CHECK(a.second == b.second);

    auto flat = [](std::uint64_t i) { return i >= 17 && i < 40 ? 1.0 : 0.0; };
    CHECK(kernels::scan_max_serial(100000, flat).second == 17);
    CHECK(kernels::scan_max_parallel(100000, flat).second == 17);
}
