#pragma once

// Exact combinatorics for the simple symmetric +-1 walk: point masses,
// reflection identities for path minima, the renewal functions in closed
// form, and the one-step kernels of the V- and U-transformed chains.
// These serve as independent references for the Monte Carlo machinery.

#include <cstdint>
#include <vector>

#include "bpre/common.hpp"
#include "bpre/rng.hpp"

namespace bpre::lattice {

double log_choose(long n, long k);

// P(S_n = s); zero off the parity grid.
double pmf_S(long n, long s);

// P(S_n = s) for s = -n, -n+2, ..., n, indexed by (s + n) / 2.
std::vector<double> pmf_table(long n);

// P(S_n <= s), summed from the lower tail for accuracy.
double cdf_S(long n, long s);

// P(L_n >= -r) for r >= 0, by reflection:
//   P(min_{j<=n} S_j <= -m) = P(S_n <= -m) + P(S_n < -m),  m = r + 1.
double prob_L_ge(long n, long r);

// P(L_n >= -r) for every r in {0, ..., rmax} from a single pmf table.
std::vector<double> prob_L_ge_all(long n, long rmax);

// P(S_n = s, L_n >= -r), r >= 0, by reflection at -(r+1).
double joint_pmf_min(long n, long s, long r);

// Renewal functions in closed form: V(x) = floor(x) + 1 for x >= 0 and
// U(x) = floor(|x|) + 1 for x <= 0.  Both are exactly harmonic for the
// walk killed on the far side of 0 (kept sets y >= 0 and y <= 0).
double V_exact(double x);
double U_exact(double x);

// One step of the V-transformed chain from integer x >= 0:
// up with probability V(x+1) / (2 V(x)).
long pplus_step(long x, Rng& rng);

// One step of the U-transformed chain from integer x <= 0: down with
// probability U(x-1) / (2 U(x)).  From 0 the step is always down; from -1
// the chain climbs back to the boundary point 0 with weight U(0)/(2 U(-1)).
long pminus_step(long x, Rng& rng);

// P(S_n = j | L_n >= 0) for j = n mod 2, +2, ..., n; entry i holds
// j = (n mod 2) + 2i.
std::vector<double> meander_endpoint_pmf(long n);

// Endpoint law of the V-transformed chain started at 0, same indexing.
std::vector<double> pplus_endpoint_pmf(long n);

}  // namespace bpre::lattice
