#pragma once

// The conditional limit law D(x) of the scaled log-population,
// P(log Z_n / c_n > x | Z_n > 0) -> D(x), evaluated along three routes:
// the alpha = 2 closed form, deterministic quadrature against the
// meander endpoint density, and two Monte Carlo renderings (meander
// endpoints with the external constant, P+ endpoints self-normalized).

#include <vector>

#include "bpre/common.hpp"

namespace bpre {

struct DEstimate {
    double value = 0.0;
    double se = 0.0;
};

// alpha = 2 closed form: D(x) = 2 (1 - Phi(x)) = erfc(x / sqrt(2)).
double d_brownian(double x);

// sqrt(2/pi) * integral_x^inf (z - x) z exp(-z^2/2) dz by adaptive
// Simpson quadrature to 1e-10 (alpha = 2 reference independent of the
// closed form).
double d_defD_quadrature(double x);

// CDF of the running-maximum representative at small times:
// M(z) = erf(z / sqrt(2)) - sqrt(2/pi) z exp(-z^2 / 2), z >= 0.
double maxwell_cdf(double z);

// Meander route: c0 * mean((b - x)^kappa; b >= x) over scaled meander
// endpoints b.  c0_se propagates the uncertainty of the external
// constant; x beyond the sample maximum yields {0, 0}.
DEstimate d_mc_meander(const std::vector<double>& scaled_endpoints, double x,
                       double kappa, double c0, double c0_se = 0.0);

// P+ route, self-normalized: sum w (1 - x/b)^kappa 1{b >= x} / sum w
// over scaled P+ endpoints (weights empty = unweighted); the SE is the
// linearized ratio-estimator SE.
DEstimate d_mc_pplus(const std::vector<double>& scaled_endpoints,
                     const std::vector<double>& weights, double x,
                     double kappa);

// Weighted empirical CDF value P(T <= z) with linearized SE.
DEstimate t_small_cdf(const std::vector<double>& values,
                      const std::vector<double>& weights, double z);

// Default evaluation grid for D(x).
std::vector<double> default_x_grid();

}  // namespace bpre
