#pragma once

#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include "ilab/mdp.hpp"

namespace ilab::kernels {

// Hot loops, each in a serial reference version and an OpenMP version.
// Both versions are written gather-style with identical inner-loop order so
// outputs are bit-identical; tests compare them with exact equality.

// rho_next(s') = sum_{s,a} rho(s) pi(a|s) P(s'|s,a)
void occupancy_step_serial(const TabularMDP& m, const Policy& pi, const double* rho,
                           double* rho_next);
void occupancy_step_parallel(const TabularMDP& m, const Policy& pi, const double* rho,
                             double* rho_next);
void occupancy_step(const TabularMDP& m, const Policy& pi, const double* rho, double* rho_next);

// q(s,a) = c(s,a) + sum_{s'} P(s'|s,a) v_next(s')
void backup_step_serial(const TabularMDP& m, const double* cost_sa, const double* v_next,
                        double* q_out);
void backup_step_parallel(const TabularMDP& m, const double* cost_sa, const double* v_next,
                          double* q_out);
void backup_step(const TabularMDP& m, const double* cost_sa, const double* v_next, double* q_out);

// n independent rollouts; trajectory i uses a stream derived from
// (base_seed, i), so scheduling cannot change the result.
std::vector<Trajectory> batch_rollout_serial(const TabularMDP& m, const PolicyView& pi, int n,
                                             std::uint64_t base_seed);
std::vector<Trajectory> batch_rollout_parallel(const TabularMDP& m, const PolicyView& pi, int n,
                                               std::uint64_t base_seed);

// argmax of eval(i) over i in [0, count); ties resolved to the lowest index.
// The parallel version merges per-thread bests deterministically.
std::pair<double, std::uint64_t> scan_max_serial(std::uint64_t count,
                                                 const std::function<double(std::uint64_t)>& eval);
std::pair<double, std::uint64_t> scan_max_parallel(std::uint64_t count,
                                                   const std::function<double(std::uint64_t)>& eval);
std::pair<double, std::uint64_t> scan_max(std::uint64_t count,
                                          const std::function<double(std::uint64_t)>& eval);

bool parallel_enabled();

}  // namespace ilab::kernels
