#include "doctest.h"

#include <cmath>
#include <vector>

#include "bpre/offspring.hpp"
#include "bpre/stats.hpp"

using namespace bpre;

namespace {

// Central difference f'(1) and f''(1) from the generating function, to
// cross-check the stored moments without trusting the closed forms.
double gf_mean_numeric(const OffspringLaw& law) {
    const double h = 1e-5;
    return (law.gf(1.0) - law.gf(1.0 - h)) / h;
}

double gf_fpp_numeric(const OffspringLaw& law) {
    const double h = 1e-4;
    return (law.gf(1.0) - 2.0 * law.gf(1.0 - h) + law.gf(1.0 - 2.0 * h)) /
           (h * h);
}

}  // namespace

TEST_CASE("generating function anchors") {
    // f(0) = Q({0}) and f(1) = 1 for every family.
    CHECK(OffspringLaw::geometric_q(0.3).gf(0.0) == doctest::Approx(0.3));
    CHECK(OffspringLaw::geometric_q(0.3).gf(1.0) == doctest::Approx(1.0));
    CHECK(OffspringLaw::poisson(1.0).gf(0.0) ==
          doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
    CHECK(OffspringLaw::poisson(2.5).gf(1.0) == doctest::Approx(1.0));
    const OffspringLaw lf = OffspringLaw::linear_fractional(1.5, 2.5);
    CHECK(lf.gf(1.0) == doctest::Approx(1.0).epsilon(1e-12));
    const OffspringLaw ex = OffspringLaw::explicit_law({0.2, 0.3, 0.5});
    CHECK(ex.gf(0.0) == doctest::Approx(0.2));
    CHECK(ex.gf(0.5) == doctest::Approx(0.2 + 0.15 + 0.125));
    CHECK(ex.gf(1.0) == doctest::Approx(1.0));
}

TEST_CASE("stored moments match numeric derivatives of the gf") {
    const OffspringLaw laws[] = {
        OffspringLaw::geometric_q(0.4),
        OffspringLaw::geometric_mean(2.0),
        OffspringLaw::poisson(1.7),
        OffspringLaw::linear_fractional(0.8, 2.5),
        OffspringLaw::explicit_law({0.1, 0.4, 0.3, 0.2}),
    };
    for (const auto& law : laws) {
        CHECK(law.mean() ==
              doctest::Approx(gf_mean_numeric(law)).epsilon(1e-3));
        CHECK(law.second_factorial() ==
              doctest::Approx(gf_fpp_numeric(law)).epsilon(1e-2));
        CHECK(law.eta() ==
              doctest::Approx(law.second_factorial() /
                              (law.mean() * law.mean())).epsilon(1e-12));
        CHECK(law.log_mean() ==
              doctest::Approx(std::log(law.mean())).epsilon(1e-12));
    }
}

TEST_CASE("geometric laws have eta = 2 at every mean") {
    for (double m : {0.1, 0.5, 1.0, 3.0, 20.0}) {
        const OffspringLaw law = OffspringLaw::geometric_mean(m);
        CHECK(law.eta() == doctest::Approx(2.0).epsilon(1e-12));
        CHECK(law.mean() == doctest::Approx(m).epsilon(1e-12));
    }
    // geometric_q and geometric_mean describe the same family.
    const OffspringLaw a = OffspringLaw::geometric_q(0.25);
    const OffspringLaw b = OffspringLaw::geometric_mean(3.0);
    for (double s : {0.0, 0.3, 0.7, 1.0})
        CHECK(a.gf(s) == doctest::Approx(b.gf(s)).epsilon(1e-12));
}

TEST_CASE("poisson laws have eta = 1 at every mean") {
    // f''(1) = lambda^2, so eta = f''(1)/m^2 = 1 independent of lambda.
    CHECK(OffspringLaw::poisson(2.0).eta() == doctest::Approx(1.0));
    CHECK(OffspringLaw::poisson(0.25).eta() == doctest::Approx(1.0));
    CHECK(OffspringLaw::poisson(2.0).second_factorial() ==
          doctest::Approx(4.0).epsilon(1e-12));
}

TEST_CASE("linear-fractional family contains geometric as eta = 2") {
    const OffspringLaw geo = OffspringLaw::geometric_mean(1.5);
    const OffspringLaw lf = OffspringLaw::linear_fractional(1.5, 2.0);
    for (double s : {0.0, 0.2, 0.5, 0.9, 1.0})
        CHECK(geo.gf(s) == doctest::Approx(lf.gf(s)).epsilon(1e-12));
    CHECK(lf.eta() == doctest::Approx(2.0).epsilon(1e-10));

    // Requested eta is reproduced exactly elsewhere in the family.
    const OffspringLaw lf25 = OffspringLaw::linear_fractional(0.9, 2.5);
    CHECK(lf25.eta() == doctest::Approx(2.5).epsilon(1e-10));
    CHECK(lf25.mean() == doctest::Approx(0.9).epsilon(1e-12));

    // m (1 - eta/2) <= 1 is required for a nonnegative atom at zero.
    CHECK_THROWS_AS(OffspringLaw::linear_fractional(3.0, 1.0), DomainError);
    CHECK_NOTHROW(OffspringLaw::linear_fractional(3.0, 2.0));
}

TEST_CASE("zeta tail sums") {
    // zeta(0) = E xi^2 / m^2 = (f''(1) + m) / m^2.
    const OffspringLaw geo = OffspringLaw::geometric_mean(1.0);
    CHECK(geo.zeta(0) == doctest::Approx(3.0).epsilon(1e-10));

    const OffspringLaw one = OffspringLaw::explicit_law({0.0, 1.0});
    CHECK(one.zeta(0) == doctest::Approx(1.0));
    CHECK(one.zeta(2) == doctest::Approx(0.0));

    const OffspringLaw poi = OffspringLaw::poisson(2.0);
    CHECK(poi.zeta(0) ==
          doctest::Approx((poi.second_factorial() + poi.mean()) /
                          (poi.mean() * poi.mean())).epsilon(1e-10));

    // Tail sums are nonincreasing in the cutoff and vanish eventually.
    for (const auto& law :
         {OffspringLaw::geometric_mean(2.0), OffspringLaw::poisson(3.0),
          OffspringLaw::linear_fractional(1.2, 2.5)}) {
        double prev = law.zeta(0);
        for (long a : {1L, 2L, 4L, 8L, 32L}) {
            const double z = law.zeta(a);
            CHECK(z <= prev + 1e-12);
            prev = z;
        }
        CHECK(law.zeta(4000) < 1e-6);
    }

    // Explicit-law zeta by direct summation.
    const OffspringLaw ex = OffspringLaw::explicit_law({0.2, 0.3, 0.5});
    const double m = 1.3;
    CHECK(ex.zeta(2) == doctest::Approx(0.5 * 4.0 / (m * m)).epsilon(1e-12));
}

TEST_CASE("sampling matches the generating function") {
    Rng rng(41);
    const long n = 100000;
    for (const auto& law :
         {OffspringLaw::geometric_mean(1.3), OffspringLaw::poisson(2.2),
          OffspringLaw::linear_fractional(1.1, 2.5),
          OffspringLaw::explicit_law({0.25, 0.25, 0.25, 0.25})}) {
        for (double s : {0.3, 0.7}) {
            double acc = 0.0, acc2 = 0.0;
            Rng r(41);
            for (long i = 0; i < n; ++i) {
                const double v = std::pow(s, double(law.sample(r)));
                acc += v;
                acc2 += v * v;
            }
            const double est = acc / n;
            const double se = std::sqrt((acc2 / n - est * est) / n);
            CHECK(std::fabs(est - law.gf(s)) < 4.0 * se + 1e-9);
        }
    }
}

TEST_CASE("explicit law sampling frequencies") {
    Rng rng(42);
    const OffspringLaw ex = OffspringLaw::explicit_law({0.2, 0.3, 0.5});
    const long n = 200000;
    std::vector<long> counts(3, 0);
    for (long i = 0; i < n; ++i) counts[ex.sample(rng)]++;
    CHECK(double(counts[0]) / n == doctest::Approx(0.2).epsilon(0.02));
    CHECK(double(counts[1]) / n == doctest::Approx(0.3).epsilon(0.02));
    CHECK(double(counts[2]) / n == doctest::Approx(0.5).epsilon(0.02));
}

TEST_CASE("parametric totals agree with naive summation in law") {
    Rng rng(43);
    const long reps = 30000;
    const uint64_t z = 40;
    for (const auto& law :
         {OffspringLaw::geometric_mean(0.9), OffspringLaw::poisson(1.1),
          OffspringLaw::linear_fractional(0.95, 2.5),
          OffspringLaw::explicit_law({0.3, 0.4, 0.2, 0.1})}) {
        std::vector<double> fast(reps), naive(reps);
        double hi = 0.0;
        for (long i = 0; i < reps; ++i) {
            fast[i] = double(law.sample_total(z, rng));
            uint64_t s = 0;
            for (uint64_t j = 0; j < z; ++j) s += law.sample(rng);
            naive[i] = double(s);
            hi = std::max(hi, std::max(fast[i], naive[i]));
        }
        // Integer-valued samples: compare the two empirical cdfs at every
        // lattice point (both are right-continuous there, so this is the
        // proper two-sample KS for tied data).
        EmpiricalCDF Ff(fast), Fn(naive);
        double d = 0.0;
        for (double k = 0.0; k <= hi; k += 1.0)
            d = std::max(d, std::fabs(Ff(k) - Fn(k)));
        // Null scale sqrt(2/reps); 4 is a ~1e-4 band.
        CHECK(d < 4.0 * std::sqrt(2.0 / double(reps)));

        // Means must agree tightly as well.
        const double se_mean = sd_of(fast) / std::sqrt(double(reps));
        CHECK(std::fabs(mean_of(fast) - double(z) * law.mean()) <
              5.0 * se_mean);
    }
}

TEST_CASE("total of zero parents is zero") {
    Rng rng(45);
    for (const auto& law :
         {OffspringLaw::geometric_mean(1.0), OffspringLaw::poisson(1.0)})
        CHECK(law.sample_total(0, rng) == 0);
}

TEST_CASE("environment model fits the family mean to exp(X)") {
    const EnvironmentModel env(IncrementLaw::gaussian(),
                               EnvironmentModel::Family::Geometric);
    const OffspringLaw law = env.law_from_logmean(0.37);
    CHECK(law.kind() == OffspringLaw::Kind::Geometric);
    CHECK(law.mean() == doctest::Approx(std::exp(0.37)).epsilon(1e-12));
    CHECK(law.log_mean() == doctest::Approx(0.37).epsilon(1e-15));

    const EnvironmentModel lf(IncrementLaw::gaussian(),
                              EnvironmentModel::Family::LinearFractional,
                              2.5);
    CHECK(lf.lf_eta() == doctest::Approx(2.5));
    const OffspringLaw lflaw = lf.law_from_logmean(-0.2);
    CHECK(lflaw.eta() == doctest::Approx(2.5).epsilon(1e-10));

    const EnvironmentModel poi(IncrementLaw::lattice(),
                               EnvironmentModel::Family::Poisson);
    Rng rng(46);
    const OffspringLaw drawn = poi.draw(rng);
    CHECK((drawn.mean() == doctest::Approx(std::exp(1.0)) ||
           drawn.mean() == doctest::Approx(std::exp(-1.0))));
}

TEST_CASE("moment condition diagnostic: light tails pass") {
    const EnvironmentModel env(IncrementLaw::gaussian(),
                               EnvironmentModel::Family::Geometric);
    Rng rng(47);
    const ConditionA2Report rep = check_condition_A2(env, 2, 0.5, 20000, rng);
    CHECK(rep.finite_verdict);
    CHECK(rep.exponent == doctest::Approx(2.5));
    CHECK(rep.estimate >= 0.0);
    CHECK(rep.ci_lo <= rep.estimate);
    CHECK(rep.ci_hi >= rep.estimate);

    const EnvironmentModel lf(IncrementLaw::gaussian(),
                              EnvironmentModel::Family::LinearFractional,
                              2.5);
    Rng rng2(48);
    CHECK(check_condition_A2(lf, 2, 0.5, 20000, rng2).finite_verdict);
}

TEST_CASE("moment condition diagnostic: precondition errors") {
    const EnvironmentModel env(IncrementLaw::gaussian(),
                               EnvironmentModel::Family::Geometric);
    Rng rng(49);
    CHECK_THROWS_AS(check_condition_A2(env, 2, 0.5, 100, rng), DomainError);
    CHECK_THROWS_AS(check_condition_A2(env, 2, -0.1, 20000, rng), DomainError);
}

TEST_CASE("moment condition diagnostic: heavy tails are flagged") {
    // Pareto(1.8) increments: log zeta(0) ~ |X| on the left tail, so the
    // (alpha + eps)-moment with eps = 0.5 diverges (exponent 2.3 > 1.8).
    // Index 1.8 keeps the sample extremes inside the representable mean
    // range, where the running-max heuristic can see the growth.
    const EnvironmentModel env(IncrementLaw::two_sided_pareto(1.8, 0.5),
                               EnvironmentModel::Family::Geometric);
    Rng rng(50);
    const ConditionA2Report rep = check_condition_A2(env, 0, 0.5, 50000, rng);
    CHECK_FALSE(rep.finite_verdict);
}
