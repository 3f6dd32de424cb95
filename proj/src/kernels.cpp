#include "ilab/kernels.hpp"

#include <cstdlib>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace ilab::kernels {

bool parallel_enabled() {
#ifdef _OPENMP
    static const bool disabled = std::getenv("ILAB_SERIAL") != nullptr;
    return !disabled;
#else
    return false;
#endif
}

namespace {

inline double gather_one(const TabularMDP& m, const Policy& pi, const double* rho, int s2) {
    const int S = m.num_states;
    const int A = m.num_actions;
    double acc = 0.0;
    for (int s = 0; s < S; ++s) {
        const double w = rho[s];
        if (w == 0.0) continue;
        const double* pr = pi.row(s);
        for (int a = 0; a < A; ++a) {
            const double pa = pr[a];
            if (pa == 0.0) continue;
            acc += w * pa * m.p(s, a, s2);
        }
    }
    return acc;
}

inline double backup_one(const TabularMDP& m, const double* v_next, int s, int a) {
    const int S = m.num_states;
    const double* pr = m.row(s, a);
    double acc = 0.0;
    for (int s2 = 0; s2 < S; ++s2) acc += pr[s2] * v_next[s2];
    return acc;
}

// fills a pre-sized trajectory so the parallel loop does no allocation
void rollout_fill(const TabularMDP& m, const PolicyView& pi, std::uint64_t stream_seed,
                  Trajectory& tr) {
    RandomSource rng(stream_seed);
    int s = rng.sample(m.initial_dist.data(), m.num_states);
    for (int t = 1; t <= m.horizon; ++t) {
        const Policy& pt = pi.at(t);
        int a = rng.sample(pt.row(s), m.num_actions);
        tr.steps[static_cast<std::size_t>(t) - 1] = {t, s, a};
        s = rng.sample(m.row(s, a), m.num_states);
    }
}

std::vector<Trajectory> make_batch(const TabularMDP& m, int n) {
    std::vector<Trajectory> out(n);
    for (int i = 0; i < n; ++i) {
        out[i].seed_id = static_cast<std::uint64_t>(i);
        out[i].steps.resize(m.horizon);
    }
    return out;
}

}  // namespace

void occupancy_step_serial(const TabularMDP& m, const Policy& pi, const double* rho,
                           double* rho_next) {
    for (int s2 = 0; s2 < m.num_states; ++s2) rho_next[s2] = gather_one(m, pi, rho, s2);
}

void occupancy_step_parallel(const TabularMDP& m, const Policy& pi, const double* rho,
                             double* rho_next) {
#pragma omp parallel for schedule(static)
    for (int s2 = 0; s2 < m.num_states; ++s2) rho_next[s2] = gather_one(m, pi, rho, s2);
}

void occupancy_step(const TabularMDP& m, const Policy& pi, const double* rho, double* rho_next) {
    if (parallel_enabled() && m.num_states >= 64)
        occupancy_step_parallel(m, pi, rho, rho_next);
    else
        occupancy_step_serial(m, pi, rho, rho_next);
}

void backup_step_serial(const TabularMDP& m, const double* cost_sa, const double* v_next,
                        double* q_out) {
    const int A = m.num_actions;
    for (int s = 0; s < m.num_states; ++s)
        for (int a = 0; a < A; ++a)
            q_out[static_cast<std::size_t>(s) * A + a] =
                cost_sa[static_cast<std::size_t>(s) * A + a] + backup_one(m, v_next, s, a);
}

void backup_step_parallel(const TabularMDP& m, const double* cost_sa, const double* v_next,
                          double* q_out) {
    const int A = m.num_actions;
#pragma omp parallel for schedule(static)
    for (int s = 0; s < m.num_states; ++s)
        for (int a = 0; a < A; ++a)
            q_out[static_cast<std::size_t>(s) * A + a] =
                cost_sa[static_cast<std::size_t>(s) * A + a] + backup_one(m, v_next, s, a);
}

void backup_step(const TabularMDP& m, const double* cost_sa, const double* v_next, double* q_out) {
    if (parallel_enabled() && m.num_states >= 64)
        backup_step_parallel(m, cost_sa, v_next, q_out);
    else
        backup_step_serial(m, cost_sa, v_next, q_out);
}

std::vector<Trajectory> batch_rollout_serial(const TabularMDP& m, const PolicyView& pi, int n,
                                             std::uint64_t base_seed) {
    std::vector<Trajectory> out = make_batch(m, n);
    for (int i = 0; i < n; ++i)
        rollout_fill(m, pi, RandomSource::derive(base_seed, static_cast<std::uint64_t>(i)), out[i]);
    return out;
}

std::vector<Trajectory> batch_rollout_parallel(const TabularMDP& m, const PolicyView& pi, int n,
                                               std::uint64_t base_seed) {
    std::vector<Trajectory> out = make_batch(m, n);
#pragma omp parallel for schedule(static)
    for (int i = 0; i < n; ++i)
        rollout_fill(m, pi, RandomSource::derive(base_seed, static_cast<std::uint64_t>(i)), out[i]);
    return out;
}

std::pair<double, std::uint64_t> scan_max_serial(
    std::uint64_t count, const std::function<double(std::uint64_t)>& eval) {
    double best = -1e300;
    std::uint64_t best_i = 0;
    for (std::uint64_t i = 0; i < count; ++i) {
        const double v = eval(i);
        if (v > best) {
            best = v;
            best_i = i;
        }
    }
    return {best, best_i};
}

std::pair<double, std::uint64_t> scan_max_parallel(
    std::uint64_t count, const std::function<double(std::uint64_t)>& eval) {
#ifdef _OPENMP
    const int nt = omp_get_max_threads();
    std::vector<double> best(nt, -1e300);
    std::vector<std::uint64_t> best_i(nt, 0);
#pragma omp parallel
    {
        const int tid = omp_get_thread_num();
        double b = -1e300;
        std::uint64_t bi = 0;
#pragma omp for schedule(static)
        for (long long i = 0; i < static_cast<long long>(count); ++i) {
            const double v = eval(static_cast<std::uint64_t>(i));
            if (v > b || (v == b && static_cast<std::uint64_t>(i) < bi)) {
                b = v;
                bi = static_cast<std::uint64_t>(i);
            }
        }
        best[tid] = b;
        best_i[tid] = bi;
    }
    double b = -1e300;
    std::uint64_t bi = 0;
    bool any = false;
    for (int t = 0; t < nt; ++t) {
        if (best[t] <= -1e300) continue;
        if (!any || best[t] > b || (best[t] == b && best_i[t] < bi)) {
            b = best[t];
            bi = best_i[t];
            any = true;
        }
    }
    return {b, bi};
#else
    return scan_max_serial(count, eval);
#endif
}

std::pair<double, std::uint64_t> scan_max(std::uint64_t count,
                                          const std::function<double(std::uint64_t)>& eval) {
    if (parallel_enabled() && count >= 4096) return scan_max_parallel(count, eval);
    return scan_max_serial(count, eval);
}

}  // namespace ilab::kernels
