#pragma once

// Branching process in an i.i.d. random environment: environment paths,
// the backward extinction-probability schedule, population trajectories,
// reduced (surviving-lineage) counts, and the J-functionals of the
// environment walk.

#include <cstdint>
#include <utility>
#include <vector>

#include "bpre/common.hpp"
#include "bpre/offspring.hpp"
#include "bpre/rng.hpp"

namespace bpre {

struct EnvironmentPath {
    std::vector<OffspringLaw> laws;  // Q_1 .. Q_n
    std::vector<double> S;           // S_0 = 0, S_k = sum of log means
    std::vector<double> eta;         // eta_k = f_k''(1) / f_k'(1)^2

    long n() const { return static_cast<long>(laws.size()); }
    static EnvironmentPath from_laws(std::vector<OffspringLaw> laws);
};

EnvironmentPath simulate_environment(const EnvironmentModel& model, long n,
                                     Rng& rng);

// q[p] = P(Z_n = 0 | Z_p = 1, environment), computed by the backward
// generating-function pass with q[n] = 0.
struct ExtinctionSchedule {
    std::vector<double> q;  // indices 0..n
    long n() const { return static_cast<long>(q.size()) - 1; }
};

ExtinctionSchedule extinction_schedule(const EnvironmentPath& env);

struct PopulationTrajectory {
    std::vector<std::uint64_t> Z;  // Z_0 .. Z_p
    long extinct_at = -1;   // first generation with Z = 0, or -1
    long approx_from = -1;  // first generation where the conditional
                            // normal approximation was used, or -1
    bool capped = false;    // hit the population cap at least once
};

inline constexpr std::uint64_t kPopulationCap = 1ULL << 62;
inline constexpr std::uint64_t kNormalApproxThreshold = 1000000000ULL;

// Forward simulation of generation sizes under the given environment.
// Totals are drawn exactly (parametric shortcuts per family) while
// Z <= kNormalApproxThreshold; above it, a conditional normal step with
// matched mean and variance is used and flagged via approx_from.
PopulationTrajectory simulate_population(const EnvironmentPath& env,
                                         std::uint64_t z0, long p, Rng& rng,
                                         std::uint64_t cap = kPopulationCap);

// Z_{p,n} | (Z_p, environment) ~ Binomial(Z_p, 1 - q_{p,n}): number of
// generation-p individuals with descendants at time n.
std::uint64_t reduced_count(std::uint64_t z_p, double q_pn, Rng& rng);

// Small-scale oracle: simulates every individual's subtree to time n and
// counts generation-p ancestors of the time-n population directly.
// Returns (Z_p, Z_{p,n}).
std::pair<std::uint64_t, std::uint64_t> genealogy_reduced(
    const EnvironmentPath& env, std::uint64_t z0, long p, Rng& rng);

// J-functionals of the environment walk, evaluated with exponentials
// relative to the post-p minimum so that no term exceeds eta * n:
//   J+(p, r) = sum_{l=p}^{r-1} eta_{l+1} e^{S_p - S_l} + e^{S_p - S_r}
//   J-(p, r) = sum_{l=p}^{r-1} eta_{l+1} e^{S_r - S_l}
//   J^-(0, r) = sum_{l=0}^{r-1} eta_{l+1} e^{S_{l+1}}
struct JFunctionals {
    long p = 0, n = 0;
    long tau = 0;        // first argmin of S over [p, n]
    double l_hat = 0.0;  // S_tau - S_p
    double j_minus_p_tau = 0.0;
    double j_plus_tau_n = 1.0;
    double j_hat_minus_0_n = 0.0;
};

JFunctionals j_functionals(const EnvironmentPath& env, long p);

double j_plus(const EnvironmentPath& env, long p, long r);
double j_minus(const EnvironmentPath& env, long p, long r);
double j_hat_minus(const EnvironmentPath& env, long r);

// P(Z_n > 0 | environment, Z_0 = z0) = 1 - q_0^z0.
double survival_probability(const ExtinctionSchedule& sched, std::uint64_t z0);
double survival_probability(const EnvironmentPath& env, std::uint64_t z0);

// W_k = e^{-S_{m_k}} Z_{m_k} along the index map m(u) = q + floor(u (p-q))
// for u in u_grid; requires the trajectory to reach every m(u).
std::vector<double> w_observable(const EnvironmentPath& env,
                                 const PopulationTrajectory& traj,
                                 const std::vector<double>& u_grid, long q,
                                 long p);

}  // namespace bpre
