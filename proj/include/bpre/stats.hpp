#pragma once

// Small statistics toolbox: weighted empirical CDFs, KS distances with
// bootstrap confidence intervals, cluster bootstrap for means, isotonic
// (PAVA) projection, weighted medians, log-log slope fits, and a
// chi-square tail for goodness-of-fit checks.

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "bpre/common.hpp"
#include "bpre/rng.hpp"

namespace bpre {

class EmpiricalCDF {
  public:
    // Takes ownership of the samples; empty weights = uniform.
    explicit EmpiricalCDF(std::vector<double> values,
                          std::vector<double> weights = {});

    // Right-continuous evaluation.
    double operator()(double x) const;

    size_t size() const { return values_.size(); }
    const std::vector<double>& points() const { return values_; }

    // sup_x |F_hat(x) - ref(x)|, probing both sides of every jump.
    double ks_against(const std::function<double(double)>& ref) const;

  private:
    std::vector<double> values_;  // sorted
    std::vector<double> cum_;     // cumulative weights, normalized to 1
};

struct KSResult {
    double statistic = 0.0;
    size_t n = 0;
    std::string reference;
    double threshold = 1.0;
    bool pass = false;
    double ci_lo = 0.0, ci_hi = 0.0;  // bootstrap CI of the statistic
};

// KS distance with optional cluster bootstrap (resampling whole clusters
// when cluster ids are supplied, otherwise plain nonparametric
// bootstrap).  `boot` = 0 skips the CI.
KSResult ks_distance(const std::vector<double>& values,
                     const std::function<double(double)>& ref,
                     const std::string& reference_name, double threshold,
                     Rng& rng, int boot = 1000,
                     const std::vector<long>* clusters = nullptr);

double mean_of(const std::vector<double>& v);
double sd_of(const std::vector<double>& v);  // sample standard deviation

// Percentile bootstrap 95% CI for the mean.
std::pair<double, double> bootstrap_ci_mean(const std::vector<double>& v,
                                            int boot, Rng& rng);

// Same, resampling whole clusters (values grouped by cluster id).
std::pair<double, double> bootstrap_ci_mean_clustered(
    const std::vector<double>& v, const std::vector<long>& clusters, int boot,
    Rng& rng);

// Weighted median: smallest value whose cumulative weight reaches half.
double weighted_median(std::vector<double> values, std::vector<double> weights);

// L2 isotonic regression (pool-adjacent-violators), nondecreasing.
std::vector<double> isotonic_projection(const std::vector<double>& y,
                                        const std::vector<double>& w = {});

// Least-squares slope of log(y) against log(x).
double fit_loglog_slope(const std::vector<double>& x,
                        const std::vector<double>& y);

// P(Chi2_k > x).
double chi2_sf(double x, double k);

// Standard normal CDF.
double normal_cdf(double x);

}  // namespace bpre
