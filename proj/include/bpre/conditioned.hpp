#pragma once

// Renewal functions V and U of the oscillating walk, harmonicity checks,
// samplers for the walk conditioned to stay nonnegative (P+) / nonpositive
// (P-) and on finite-horizon minimum events, and the constant C0.
//
//   V(x) = 1 + sum_k P(-S_k <= x, M_k < 0),  x >= 0,
//   U(x) = 1 + sum_k P(-S_k >= x, L_k > 0),  x <= 0,
//
// (the strict-descending resp. strict-ascending ladder renewal functions,
// by time reversal), estimated from a single bundle of free paths per
// function; V(0) and U(0) are 1 by construction (the events are empty at
// x = 0).  V is harmonic for the walk killed below 0, U for the walk
// killed above 0.

#include <functional>
#include <string>
#include <vector>

#include "bpre/common.hpp"
#include "bpre/rng.hpp"
#include "bpre/walk.hpp"

namespace bpre {

struct HarmonicEstimate {
    std::vector<double> x;      // grid, ascending (V: x >= 0; U: x <= 0)
    std::vector<double> value;  // monotone-projected estimates
    std::vector<double> raw;    // unprojected per-point MC means
    std::vector<double> se;
    long K = 0;        // series truncation depth
    long n_mc = 0;     // path bundle size
    double tail_share = 0.0;  // contribution of the last decade k > 0.9 K
    bool is_V = true;
    double power_exponent = 1.0;  // V ~ x^(alpha(1-rho)), U ~ |x|^(alpha rho)

    // Linear interpolation inside the grid (anchored at the exact value 1
    // at x = 0), fitted power law beyond it.
    double at(double xq) const;

    // CSV rows "x,value,se,K,n_mc".
    std::string to_csv() const;
};

HarmonicEstimate estimate_V(const IncrementLaw& law,
                            const std::vector<double>& grid, long K, long n_mc,
                            Rng& rng);

HarmonicEstimate estimate_U(const IncrementLaw& law,
                            const std::vector<double>& grid, long K, long n_mc,
                            Rng& rng);

struct HarmonicityResidual {
    double x;
    double residual;  // E[h(x + X); x + X on the kept side] - h(x)
    double se;
};

// MC check of E[V(x+X); x+X >= 0] = V(x) (resp. U with x+X <= 0) at every
// grid point of the estimate.  Throws if the grid is too narrow to cover
// the increment spread.
std::vector<HarmonicityResidual> verify_harmonicity(const HarmonicEstimate& est,
                                                    const IncrementLaw& law,
                                                    long n_mc, Rng& rng);

// Same residuals for a closed-form h (no estimation error term).
std::vector<HarmonicityResidual> verify_harmonicity_fn(
    const std::function<double(double)>& h, bool is_V,
    const std::vector<double>& grid, const IncrementLaw& law, long n_mc,
    Rng& rng);

struct ConditionedPathSample {
    WalkPath path;   // path.S[0] = x0
    double weight;   // importance weight; 1 for the exact lattice chains
};

// Walk under P+ from x0 >= 0.  Lattice: exact h-transform chain with
// step probabilities V(x+-1)/(2V(x)), weight 1.  Otherwise: free-walk
// proposal carrying the telescoped weight V(S_n) 1{L_n >= 0} / V(x0).
ConditionedPathSample sample_Pplus(double x0, long n, const IncrementLaw& law,
                                   const HarmonicEstimate* V, Rng& rng);

// Walk under P- from x0 <= 0; never enters (0, inf).  On the lattice the
// chain may revisit the boundary point 0 (the kernel carries U(0) = 1).
ConditionedPathSample sample_Pminus(double x0, long n, const IncrementLaw& law,
                                    const HarmonicEstimate* U, Rng& rng);

struct MinEventSample {
    std::vector<WalkPath> paths;  // accepted: L_n >= -r
    long attempts = 0;
    double acceptance_rate = 0.0;  // unbiased: accepted / attempts
};

// Rejection sampler for {L_n >= -r}; runs the full proposal budget.
// Zero acceptances raise BudgetExhausted with rate bound 1/budget.
MinEventSample sample_conditioned_min(long n, double r,
                                      const IncrementLaw& law, Rng& rng,
                                      long budget);

// Endpoint-only variant (streamed, no path storage): S_n of accepted
// {L_n >= 0} paths.
struct MeanderEndpoints {
    std::vector<double> endpoints;
    long attempts = 0;
    double acceptance_rate = 0.0;
};
MeanderEndpoints sample_meander_endpoints(const IncrementLaw& law, long n,
                                          long budget, Rng& rng);

struct C0Estimate {
    // Route 1: V(c_n) P(L_n >= 0); route 2: 1 / E[(S_n/c_n)^(alpha(1-rho))
    // | L_n >= 0].  CIs combine MC error with the plateau drift between
    // the two largest grid points.
    double route1 = 0.0, route1_lo = 0.0, route1_hi = 0.0;
    double route2 = 0.0, route2_lo = 0.0, route2_hi = 0.0;
    bool consistent = true;  // |route1 - route2| <= 3 joint SE
    std::vector<long> n_grid;
    std::vector<double> route1_by_n, route2_by_n;
};

struct C0Options {
    long K = 10000;        // V-series depth (non-lattice)
    long n_mc_V = 200000;  // V estimation bundle
    long budget_per_n = 0;  // rejection budget; 0 = auto from n
};

C0Estimate estimate_C0(const IncrementLaw& law, const std::vector<long>& n_grid,
                       Rng& rng, const C0Options& opts = {});

}  // namespace bpre
