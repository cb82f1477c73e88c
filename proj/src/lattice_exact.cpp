#include "bpre/lattice_exact.hpp"

#include <algorithm>
#include <cmath>

namespace bpre::lattice {

namespace {
const double kLn2 = 0.6931471805599453094;
}

double log_choose(long n, long k) {
    if (k < 0 || k > n) return -HUGE_VAL;
    return std::lgamma(double(n) + 1.0) - std::lgamma(double(k) + 1.0) -
           std::lgamma(double(n - k) + 1.0);
}

double pmf_S(long n, long s) {
    if (s < -n || s > n || ((n + s) & 1)) return 0.0;
    return std::exp(log_choose(n, (n + s) / 2) - double(n) * kLn2);
}

std::vector<double> pmf_table(long n) {
    std::vector<double> t(size_t(n) + 1);
    for (long i = 0; i <= n; ++i) t[size_t(i)] = pmf_S(n, 2 * i - n);
    return t;
}

double cdf_S(long n, long s) {
    if (s >= n) return 1.0;
    if (s < -n) return 0.0;
    // Sum over the parity grid -n, -n+2, ... from the lower tail.
    double acc = 0.0;
    for (long v = -n; v <= s; v += 2) acc += pmf_S(n, v);
    return std::min(acc, 1.0);
}

double prob_L_ge(long n, long r) {
    if (r < 0) throw DomainError("prob_L_ge: r must be >= 0");
    double p = 1.0 - cdf_S(n, -r - 1) - cdf_S(n, -r - 2);
    return std::max(0.0, std::min(1.0, p));
}

std::vector<double> prob_L_ge_all(long n, long rmax) {
    std::vector<double> pmf = pmf_table(n);
    // cdfLow[i] = P(S_n <= 2i - n), cumulated from the bottom.
    std::vector<double> cdf_low(pmf.size());
    double acc = 0.0;
    for (size_t i = 0; i < pmf.size(); ++i) {
        acc += pmf[i];
        cdf_low[i] = acc;
    }
    auto cdf_at = [&](long s) -> double {
        if (s >= n) return 1.0;
        if (s < -n) return 0.0;
        long i = (s + n) >= 0 ? (s + n) / 2 : -1;  // floor to grid
        if (i < 0) return 0.0;
        return cdf_low[size_t(std::min(i, n))];
    };
    std::vector<double> out(size_t(rmax) + 1);
    for (long r = 0; r <= rmax; ++r) {
        double p = 1.0 - cdf_at(-r - 1) - cdf_at(-r - 2);
        out[size_t(r)] = std::max(0.0, std::min(1.0, p));
    }
    return out;
}

double joint_pmf_min(long n, long s, long r) {
    if (r < 0) throw DomainError("joint_pmf_min: r must be >= 0");
    if (s < -r) return 0.0;
    return std::max(0.0, pmf_S(n, s) - pmf_S(n, s + 2 * (r + 1)));
}

double V_exact(double x) {
    if (x < 0.0) return 0.0;
    return std::floor(x) + 1.0;
}

double U_exact(double x) {
    if (x > 0.0) return 0.0;
    return std::floor(-x) + 1.0;
}

long pplus_step(long x, Rng& rng) {
    if (x < 0) throw DomainError("pplus_step: x must be >= 0");
    double up = double(x + 2) / double(2 * (x + 1));
    return rng.u01() < up ? x + 1 : x - 1;
}

long pminus_step(long x, Rng& rng) {
    if (x > 0) throw DomainError("pminus_step: x must be <= 0");
    double down = U_exact(double(x - 1)) / (2.0 * U_exact(double(x)));
    return rng.u01() < down ? x - 1 : x + 1;
}

std::vector<double> meander_endpoint_pmf(long n) {
    std::vector<double> out;
    out.reserve(size_t(n / 2) + 1);
    double norm = 0.0;
    for (long j = n % 2; j <= n; j += 2) {
        double w = std::max(0.0, pmf_S(n, j) - pmf_S(n, j + 2));
        out.push_back(w);
        norm += w;
    }
    for (double& w : out) w /= norm;
    return out;
}

std::vector<double> pplus_endpoint_pmf(long n) {
    std::vector<double> out;
    out.reserve(size_t(n / 2) + 1);
    double norm = 0.0;
    for (long j = n % 2; j <= n; j += 2) {
        double w = V_exact(double(j)) *
                   std::max(0.0, pmf_S(n, j) - pmf_S(n, j + 2));
        out.push_back(w);
        norm += w;
    }
    for (double& w : out) w /= norm;
    return out;
}

}  // namespace bpre::lattice
