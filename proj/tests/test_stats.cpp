#include "doctest.h"

#include <cmath>
#include <vector>

#include "bpre/rng.hpp"
#include "bpre/stats.hpp"

using namespace bpre;

TEST_CASE("empirical cdf is right-continuous with correct jump sizes") {
    EmpiricalCDF F({3.0, 1.0, 2.0, 2.0});
    CHECK(F(0.99) == doctest::Approx(0.0));
    CHECK(F(1.0) == doctest::Approx(0.25));
    CHECK(F(1.5) == doctest::Approx(0.25));
    CHECK(F(2.0) == doctest::Approx(0.75));  // double point mass
    CHECK(F(2.9999) == doctest::Approx(0.75));
    CHECK(F(3.0) == doctest::Approx(1.0));
    CHECK(F(100.0) == doctest::Approx(1.0));
    CHECK(F.size() == 4);
}

TEST_CASE("weighted empirical cdf normalizes the weights") {
    EmpiricalCDF F({1.0, 2.0, 3.0}, {1.0, 1.0, 2.0});
    CHECK(F(1.0) == doctest::Approx(0.25));
    CHECK(F(2.0) == doctest::Approx(0.5));
    CHECK(F(3.0) == doctest::Approx(1.0));
}

TEST_CASE("ks distance of a true sample is small at n = 1e5") {
    Rng rng(101);
    std::vector<double> v(100000);
    for (auto& x : v) x = rng.u01();
    Rng boot(102);
    const KSResult r = ks_distance(
        v, [](double x) { return x < 0 ? 0.0 : (x > 1 ? 1.0 : x); },
        "uniform", 0.01, boot, 200);
    CHECK(r.statistic <= 0.01);
    CHECK(r.pass);
    CHECK(r.n == v.size());
    CHECK(r.ci_lo <= r.statistic);
    CHECK(r.ci_hi >= r.statistic);
}

TEST_CASE("ks distance of disjoint supports is one") {
    std::vector<double> v{5.0, 6.0, 7.0};
    Rng boot(103);
    // Reference fully supported below 5: F(x) = 1 for x >= 1.
    const KSResult r = ks_distance(
        v, [](double x) { return x < 0 ? 0.0 : (x > 1 ? 1.0 : x); },
        "uniform", 0.5, boot, 0);
    CHECK(r.statistic == doctest::Approx(1.0));
    CHECK_FALSE(r.pass);
}

TEST_CASE("bootstrap mean CI agrees with the binomial standard error") {
    Rng rng(104);
    const long n = 5000;
    std::vector<double> v(n);
    long ones = 0;
    for (auto& x : v) {
        x = rng.u01() < 0.3 ? 1.0 : 0.0;
        if (x == 1.0) ++ones;
    }
    Rng boot(105);
    const auto ci = bootstrap_ci_mean(v, 2000, boot);
    const double p_hat = double(ones) / double(n);
    const double se_binom = std::sqrt(p_hat * (1.0 - p_hat) / double(n));
    const double se_boot = (ci.second - ci.first) / (2.0 * 1.959964);
    CHECK(std::fabs(se_boot / se_binom - 1.0) < 0.2);
    CHECK(ci.first < p_hat);
    CHECK(ci.second > p_hat);
}

TEST_CASE("cluster bootstrap widens the CI when values are shared") {
    // 200 clusters of 50 identical values: the effective sample size is
    // 200, so the clustered CI must be ~sqrt(50) times the iid one.
    Rng rng(106);
    std::vector<double> v;
    std::vector<long> cl;
    for (long c = 0; c < 200; ++c) {
        const double x = rng.normal();
        for (int k = 0; k < 50; ++k) {
            v.push_back(x);
            cl.push_back(c);
        }
    }
    Rng b1(107), b2(108);
    const auto iid = bootstrap_ci_mean(v, 1000, b1);
    const auto grp = bootstrap_ci_mean_clustered(v, cl, 1000, b2);
    const double w_iid = iid.second - iid.first;
    const double w_grp = grp.second - grp.first;
    CHECK(w_grp > 3.0 * w_iid);   // sqrt(50) ~ 7.1, leave slack
    CHECK(w_grp < 12.0 * w_iid);
}

TEST_CASE("weighted median honors the weights") {
    CHECK(weighted_median({1, 2, 3, 4, 5}, {1, 1, 1, 1, 1}) ==
          doctest::Approx(3.0));
    CHECK(weighted_median({1, 2, 3}, {10, 1, 1}) == doctest::Approx(1.0));
    CHECK(weighted_median({5}, {2.5}) == doctest::Approx(5.0));
    // Order of supply must not matter.
    CHECK(weighted_median({3, 1, 2}, {1, 10, 1}) == doctest::Approx(1.0));
}

TEST_CASE("isotonic projection pools adjacent violators") {
    const auto flat = isotonic_projection({3.0, 1.0, 2.0});
    CHECK(flat[0] == doctest::Approx(2.0));
    CHECK(flat[1] == doctest::Approx(2.0));
    CHECK(flat[2] == doctest::Approx(2.0));

    const auto same = isotonic_projection({1.0, 2.0, 3.0});
    CHECK(same[0] == doctest::Approx(1.0));
    CHECK(same[2] == doctest::Approx(3.0));

    // Weighted pooling: violator pair averages with weights.
    const auto w = isotonic_projection({2.0, 0.0}, {1.0, 3.0});
    CHECK(w[0] == doctest::Approx(0.5));
    CHECK(w[1] == doctest::Approx(0.5));

    // Projection is monotone for any input.
    const auto r = isotonic_projection({5, 4, 4.5, 1, 2, 8, 7});
    for (size_t i = 1; i < r.size(); ++i) CHECK(r[i] >= r[i - 1]);
}

TEST_CASE("loglog slope recovery is exact on a pure power law") {
    std::vector<double> x{2, 4, 8, 16, 32}, y;
    for (double xi : x) y.push_back(3.0 * std::pow(xi, -0.5));
    CHECK(fit_loglog_slope(x, y) == doctest::Approx(-0.5).epsilon(1e-12));
}

TEST_CASE("chi-square survival function matches closed forms") {
    CHECK(chi2_sf(0.0, 3.0) == doctest::Approx(1.0));
    // k = 2: exp(-x/2) exactly.
    CHECK(chi2_sf(4.0, 2.0) == doctest::Approx(std::exp(-2.0)).epsilon(1e-8));
    // k = 1: 2 * (1 - Phi(sqrt(x))).
    CHECK(chi2_sf(3.841459, 1.0) == doctest::Approx(0.05).epsilon(1e-4));
    CHECK(chi2_sf(1.0, 1.0) ==
          doctest::Approx(2.0 * (1.0 - normal_cdf(1.0))).epsilon(1e-8));
}

TEST_CASE("normal cdf pins") {
    CHECK(normal_cdf(0.0) == doctest::Approx(0.5));
    CHECK(normal_cdf(1.959964) == doctest::Approx(0.975).epsilon(1e-6));
    CHECK(normal_cdf(-1.0) ==
          doctest::Approx(1.0 - normal_cdf(1.0)).epsilon(1e-12));
}

TEST_CASE("mean and sd helpers") {
    const std::vector<double> v{1, 2, 3, 4};
    CHECK(mean_of(v) == doctest::Approx(2.5));
    // Sample sd with Bessel correction: sqrt(5/3).
    CHECK(sd_of(v) == doctest::Approx(std::sqrt(5.0 / 3.0)).epsilon(1e-12));
}

TEST_CASE("ks_against probes both sides of every jump") {
    // Single sample point at 0.5 against uniform: sup deviation is 0.5
    // approached from both sides of the jump.
    EmpiricalCDF F({0.5});
    const double d =
        F.ks_against([](double x) { return x < 0 ? 0.0 : (x > 1 ? 1.0 : x); });
    CHECK(d == doctest::Approx(0.5));
}
