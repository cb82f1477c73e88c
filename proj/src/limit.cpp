#include "bpre/limit.hpp"

#include <algorithm>
#include <cmath>

namespace bpre {

double d_brownian(double x) {
    if (x < 0.0) throw DomainError("d_brownian: x must be >= 0");
    return std::erfc(x / std::sqrt(2.0));
}

namespace {

double defD_integrand(double z, double x) {
    return (z - x) * z * std::exp(-0.5 * z * z);
}

double simpson(double a, double b, double fa, double fm, double fb) {
    return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

double adaptive(double a, double b, double fa, double fm, double fb,
                double whole, double tol, double x, int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = defD_integrand(lm, x), frm = defD_integrand(rm, x);
    const double left = simpson(a, m, fa, flm, fm);
    const double right = simpson(m, b, fm, frm, fb);
    if (depth <= 0 || std::fabs(left + right - whole) <= 15.0 * tol)
        return left + right + (left + right - whole) / 15.0;
    return adaptive(a, m, fa, flm, fm, left, 0.5 * tol, x, depth - 1) +
           adaptive(m, b, fm, frm, fb, right, 0.5 * tol, x, depth - 1);
}

}  // namespace

double d_defD_quadrature(double x) {
    if (x < 0.0) throw DomainError("d_defD_quadrature: x must be >= 0");
    // Beyond T the integrand is below exp(-T^2/2) * (T + 1)^2, which is
    // far under the 1e-10 target for T = x + 14.
    const double b = x + 14.0;
    const double fa = defD_integrand(x, x);
    const double fm = defD_integrand(0.5 * (x + b), x);
    const double fb = defD_integrand(b, x);
    const double whole = simpson(x, b, fa, fm, fb);
    const double integral =
        adaptive(x, b, fa, fm, fb, whole, 1e-12, x, 48);
    return std::sqrt(2.0 / kPi) * integral;
}

double maxwell_cdf(double z) {
    if (z < 0.0) return 0.0;
    return std::erf(z / std::sqrt(2.0)) -
           std::sqrt(2.0 / kPi) * z * std::exp(-0.5 * z * z);
}

DEstimate d_mc_meander(const std::vector<double>& scaled_endpoints, double x,
                       double kappa, double c0, double c0_se) {
    if (scaled_endpoints.empty())
        throw DomainError("d_mc_meander: empty endpoint sample");
    const double bmax =
        *std::max_element(scaled_endpoints.begin(), scaled_endpoints.end());
    if (x > bmax) return {0.0, 0.0};
    double s = 0.0, s2 = 0.0;
    for (double b : scaled_endpoints) {
        const double w = b >= x ? std::pow(b - x, kappa) : 0.0;
        s += w;
        s2 += w * w;
    }
    const double m = static_cast<double>(scaled_endpoints.size());
    const double mean = s / m;
    const double var = std::max(0.0, s2 / m - mean * mean);
    const double se_mean = std::sqrt(var / m);
    DEstimate out;
    out.value = c0 * mean;
    out.se = std::sqrt(c0 * c0 * se_mean * se_mean +
                       mean * mean * c0_se * c0_se);
    return out;
}

DEstimate d_mc_pplus(const std::vector<double>& scaled_endpoints,
                     const std::vector<double>& weights, double x,
                     double kappa) {
    if (scaled_endpoints.empty())
        throw DomainError("d_mc_pplus: empty endpoint sample");
    if (!weights.empty() && weights.size() != scaled_endpoints.size())
        throw DomainError("d_mc_pplus: weight/sample size mismatch");
    double sw = 0.0, swg = 0.0;
    for (std::size_t i = 0; i < scaled_endpoints.size(); ++i) {
        const double w = weights.empty() ? 1.0 : weights[i];
        const double b = scaled_endpoints[i];
        const double g =
            b >= x && b > 0.0 ? std::pow(1.0 - x / b, kappa) : 0.0;
        sw += w;
        swg += w * g;
    }
    if (!(sw > 0.0)) throw DomainError("d_mc_pplus: total weight is zero");
    const double ratio = swg / sw;
    double num = 0.0;
    for (std::size_t i = 0; i < scaled_endpoints.size(); ++i) {
        const double w = weights.empty() ? 1.0 : weights[i];
        const double b = scaled_endpoints[i];
        const double g =
            b >= x && b > 0.0 ? std::pow(1.0 - x / b, kappa) : 0.0;
        const double d = w * (g - ratio);
        num += d * d;
    }
    DEstimate out;
    out.value = ratio;
    out.se = std::sqrt(num) / sw;
    return out;
}

DEstimate t_small_cdf(const std::vector<double>& values,
                      const std::vector<double>& weights, double z) {
    if (values.empty()) throw DomainError("t_small_cdf: empty sample");
    if (!weights.empty() && weights.size() != values.size())
        throw DomainError("t_small_cdf: weight/sample size mismatch");
    double sw = 0.0, swg = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double w = weights.empty() ? 1.0 : weights[i];
        sw += w;
        if (values[i] <= z) swg += w;
    }
    if (!(sw > 0.0)) throw DomainError("t_small_cdf: total weight is zero");
    const double ratio = swg / sw;
    double num = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double w = weights.empty() ? 1.0 : weights[i];
        const double g = values[i] <= z ? 1.0 : 0.0;
        const double d = w * (g - ratio);
        num += d * d;
    }
    return {ratio, std::sqrt(num) / sw};
}

std::vector<double> default_x_grid() {
    return {0.0, 0.25, 0.5, 0.75, 1.0, 1.5, 2.0, 3.0};
}

}  // namespace bpre
