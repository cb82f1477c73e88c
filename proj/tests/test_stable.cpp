#include "doctest.h"

#include <cmath>
#include <vector>

#include "bpre/rng.hpp"
#include "bpre/stable.hpp"
#include "bpre/stats.hpp"

using namespace bpre;

TEST_CASE("positivity parameter: closed values") {
    // arctan formula evaluated independently at high precision.
    CHECK(stable_rho(2.0, 0.0) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(stable_rho(1.0, 0.0) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(stable_rho(1.5, 0.5) ==
          doctest::Approx(0.4016109215663778).epsilon(1e-12));
    CHECK(stable_rho(0.8, -0.3) ==
          doctest::Approx(0.2033580079993701).epsilon(1e-12));
    // Skew pushing mass to the right for alpha < 1 (tan > 0) raises rho.
    CHECK(stable_rho(0.8, 0.3) > 0.5);
    // For 1 < alpha < 2 the tan factor is negative: beta > 0 lowers rho.
    CHECK(stable_rho(1.5, 0.5) < 0.5);
}

TEST_CASE("parameter validation rejects the inadmissible set") {
    CHECK_THROWS_AS((StableParams{0.0, 0.0, 0.5}.validate()), DomainError);
    CHECK_THROWS_AS((StableParams{2.5, 0.0, 0.5}.validate()), DomainError);
    CHECK_THROWS_AS((StableParams{2.0, 0.2, 0.5}.validate()), DomainError);
    CHECK_THROWS_AS((StableParams{1.0, 0.2, 0.5}.validate()), DomainError);
    CHECK_THROWS_AS((StableParams{1.5, 1.0, 0.5}.validate()), DomainError);
    CHECK_THROWS_AS((StableParams{1.5, 0.0, -1.0}.validate()), DomainError);
    CHECK_NOTHROW((StableParams{1.5, 0.99, 0.5}.validate()));
    CHECK_NOTHROW((StableParams{0.8, -0.3, 1.0}.validate()));
}

TEST_CASE("canonical limit scale") {
    CHECK(stable_clim(2.0) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(stable_clim(1.0) == doctest::Approx(kPi / 2.0).epsilon(1e-15));
    // (2 - alpha) / (alpha * C_alpha) against independent evaluation.
    CHECK(stable_clim(1.5) ==
          doctest::Approx(0.8355427582103335).epsilon(1e-12));
    CHECK(stable_clim(0.8) ==
          doctest::Approx(2.1279730882904953).epsilon(1e-12));
    CHECK_THROWS_AS(stable_clim(2.5), DomainError);
}

TEST_CASE("sampler at alpha = 2 is exactly normal with variance 2c") {
    Rng rng(21);
    const StableParams p{2.0, 0.0, 0.5};
    const long n = 200000;
    std::vector<double> v(n);
    for (auto& x : v) x = sample_stable(p, rng);
    CHECK(std::fabs(mean_of(v)) < 4.0 / std::sqrt(double(n)));
    CHECK(sd_of(v) == doctest::Approx(1.0).epsilon(0.01));
    Rng boot(22);
    const KSResult ks =
        ks_distance(v, [](double x) { return normal_cdf(x); }, "Phi", 0.005,
                    boot, 0);
    CHECK(ks.statistic < 0.005);
}

TEST_CASE("sampler at alpha = 1 is Cauchy") {
    Rng rng(23);
    const StableParams p{1.0, 0.0, 1.0};
    const long n = 200000;
    std::vector<double> v(n);
    for (auto& x : v) x = sample_stable(p, rng);
    Rng boot(24);
    const KSResult ks = ks_distance(
        v, [](double x) { return 0.5 + std::atan(x) / kPi; }, "Cauchy", 0.005,
        boot, 0);
    CHECK(ks.statistic < 0.005);
}

TEST_CASE("sampler frequency of positives pins the sign convention") {
    // P(X > 0) = rho; the opposite characteristic-function sign flips
    // rho - 1/2 and fails these bands.
    const long n = 200000;
    for (auto [a, b] : {std::pair{1.5, 0.5}, std::pair{0.8, -0.3}}) {
        Rng rng(25);
        const StableParams p{a, b, 0.7};
        long pos = 0;
        for (long i = 0; i < n; ++i)
            if (sample_stable(p, rng) > 0.0) ++pos;
        const double rho = stable_rho(a, b);
        const double se = std::sqrt(rho * (1.0 - rho) / double(n));
        CHECK(std::fabs(double(pos) / double(n) - rho) < 4.0 * se);
    }
}

TEST_CASE("empirical characteristic function matches the target") {
    Rng rng(26);
    const StableParams p{1.5, 0.5, 0.5};
    const long n = 200000;
    std::vector<double> v(n);
    for (auto& x : v) x = sample_stable(p, rng);
    // b = c beta tan(pi alpha / 2); E e^{itX} = e^{-c t^a} (cos(b t^a) -
    // i sin(b t^a)) for t > 0 under the implemented convention.
    const double b = p.c * p.beta * std::tan(kPi * p.alpha / 2.0);
    for (double t : {0.5, 1.0, 2.0}) {
        double re = 0.0, im = 0.0;
        for (double x : v) {
            re += std::cos(t * x);
            im += std::sin(t * x);
        }
        re /= double(n);
        im /= double(n);
        const double ta = std::pow(t, p.alpha);
        const double mod = std::exp(-p.c * ta);
        CHECK(std::fabs(re - mod * std::cos(b * ta)) < 0.01);
        CHECK(std::fabs(im - mod * std::sin(b * ta)) < 0.01);
        // sin(b t^a) < 0 here; check the sign explicitly, it is the
        // convention-sensitive part.
        CHECK(im < 0.0);
    }
}

TEST_CASE("density and cdf use the Gaussian closed form at alpha = 2") {
    const StableDist d(StableParams{2.0, 0.0, 0.5});
    CHECK(d.pdf(1.0) == doctest::Approx(0.24197072451914337).epsilon(1e-10));
    CHECK(d.cdf(1.0) == doctest::Approx(0.8413447460685430).epsilon(1e-10));
    CHECK(d.cdf(0.0) == doctest::Approx(0.5).epsilon(1e-10));
    CHECK(d.rho() == doctest::Approx(0.5));
}

TEST_CASE("density and cdf use the Cauchy closed form at alpha = 1") {
    const StableDist d(StableParams{1.0, 0.0, 1.0});
    CHECK(d.pdf(2.0) == doctest::Approx(0.06366197723675813).epsilon(1e-10));
    CHECK(d.cdf(2.0) == doctest::Approx(0.8524163823495667).epsilon(1e-10));
}

TEST_CASE("Fourier inversion agrees with a large sample") {
    // No closed form at alpha = 1.5: check the numeric CDF against the
    // exact sampler.
    const StableParams p{1.5, 0.5, 0.5};
    const StableDist d(p);
    Rng rng(27);
    const long n = 200000;
    std::vector<double> v(n);
    for (auto& x : v) x = sample_stable(p, rng);
    Rng boot(28);
    const KSResult ks = ks_distance(
        v, [&d](double x) { return d.cdf(x); }, "StableDist", 0.01, boot, 0);
    CHECK(ks.statistic < 0.005);
    // cdf(0) must equal 1 - rho.
    CHECK(d.cdf(0.0) == doctest::Approx(1.0 - d.rho()).epsilon(1e-3));
}

TEST_CASE("tails are regularly varying with index alpha") {
    const StableParams p{0.8, -0.3, 1.0};
    const StableDist d(p);
    // x^alpha * P(X > x) approaches a constant; ratios across dyadic x
    // must flatten out.
    const double r1 = std::pow(40.0, p.alpha) * (1.0 - d.cdf(40.0));
    const double r2 = std::pow(80.0, p.alpha) * (1.0 - d.cdf(80.0));
    const double r3 = std::pow(160.0, p.alpha) * (1.0 - d.cdf(160.0));
    CHECK(std::fabs(r2 / r1 - 1.0) < 0.05);
    CHECK(std::fabs(r3 / r2 - 1.0) < 0.03);
    CHECK(r1 > 0.0);
}

TEST_CASE("truncated second moment: closed-form anchors") {
    // Standard normal (alpha = 2, c = 1/2):
    //   G(u) = (erf(u/sqrt 2) - sqrt(2/pi) u e^{-u^2/2}) / u^2.
    const StableDist g(StableParams{2.0, 0.0, 0.5});
    CHECK(g.truncated_second_moment(1.0) ==
          doctest::Approx(0.19874804309879920).epsilon(1e-6));
    CHECK(g.truncated_second_moment(2.0) ==
          doctest::Approx(0.18463396751272234).epsilon(1e-6));

    // Cauchy, scale 1: G(u) = (2/pi)(u - arctan u)/u^2.
    const StableDist c(StableParams{1.0, 0.0, 1.0});
    CHECK(c.truncated_second_moment(1.0) ==
          doctest::Approx(0.13661977236758134).epsilon(1e-6));
    CHECK(c.truncated_second_moment(5.0) ==
          doctest::Approx(0.09235059112863636).epsilon(1e-6));
}

TEST_CASE("truncated second moment tail matches the clim constant") {
    // u^alpha G(u) -> alpha C_alpha c / (2 - alpha) = c / clim(alpha).
    const double c = 1.0, alpha = 1.5;
    const StableDist d(StableParams{alpha, 0.0, c});
    const double lim = c / stable_clim(alpha);
    const double r60 = std::pow(60.0, alpha) * d.truncated_second_moment(60.0);
    const double r120 =
        std::pow(120.0, alpha) * d.truncated_second_moment(120.0);
    CHECK(std::fabs(r60 / lim - 1.0) < 0.05);
    CHECK(std::fabs(r120 / lim - 1.0) < 0.04);
}
