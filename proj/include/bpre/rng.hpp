#pragma once

// Random number generation.
//
// Every Monte Carlo replicate owns its own generator, derived from
// (master seed, experiment id, replicate index) through a splitmix64
// mixing chain.  Replicates are therefore statistically independent and
// reproducible regardless of how they are scheduled across worker
// threads: outputs depend on indices only, never on thread timing.

#include <cmath>
#include <cstdint>
#include <limits>

#include "bpre/common.hpp"

namespace bpre {

// Finalizer from splitmix64; also a good standalone 64-bit mixer.
inline uint64_t mix64(uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// xoshiro256++ (Blackman & Vigna).  Fast, 256-bit state, passes BigCrush.
class Rng {
  public:
    using result_type = uint64_t;

    explicit Rng(uint64_t seed = 0x9d1fa3e06bd2c4ecULL) {
        // Expand the seed through splitmix64 as recommended upstream.
        uint64_t x = seed;
        for (auto& w : s_) {
            x += 0x9e3779b97f4a7c15ULL;
            uint64_t z = x;
            z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
            z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
            w = z ^ (z >> 31);
        }
    }

    // Deterministic per-replicate stream: chain the ids through the mixer
    // so that distinct (seed, stream, replicate) triples decorrelate.
    static Rng for_replicate(uint64_t master_seed, uint64_t stream_id,
                             uint64_t replicate) {
        uint64_t h = mix64(master_seed ^ mix64(stream_id ^ mix64(replicate)));
        return Rng(h);
    }

    uint64_t operator()() {
        uint64_t* s = s_;
        const uint64_t result = rotl(s[0] + s[3], 23) + s[0];
        const uint64_t t = s[1] << 17;
        s[2] ^= s[0];
        s[3] ^= s[1];
        s[1] ^= s[2];
        s[0] ^= s[3];
        s[2] ^= t;
        s[3] = rotl(s[3], 45);
        return result;
    }

    static constexpr uint64_t min() { return 0; }
    static constexpr uint64_t max() { return ~0ULL; }

    // Uniform in [0, 1), 53-bit resolution.
    double u01() { return double((*this)() >> 11) * 0x1.0p-53; }

    // Uniform in (0, 1] -- safe as a log() argument.
    double u01_pos() { return 1.0 - u01(); }

    // Standard normal via the Marsaglia polar method; the second variate
    // of each pair is cached.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * u01() - 1.0;
            v = 2.0 * u01() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        double f = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * f;
        have_spare_ = true;
        return u * f;
    }

    double exponential() { return -std::log(u01_pos()); }

    // Gamma(shape, scale) via Marsaglia & Tsang (2000); shape < 1 is
    // boosted with the u^(1/shape) trick.
    double gamma(double shape, double scale = 1.0) {
        if (shape <= 0.0 || scale <= 0.0)
            throw DomainError("gamma: shape and scale must be positive");
        if (shape < 1.0) {
            double u = u01_pos();
            return gamma(shape + 1.0, scale) * std::pow(u, 1.0 / shape);
        }
        const double d = shape - 1.0 / 3.0;
        const double c = 1.0 / std::sqrt(9.0 * d);
        for (;;) {
            double x, v;
            do {
                x = normal();
                v = 1.0 + c * x;
            } while (v <= 0.0);
            v = v * v * v;
            double u = u01_pos();
            if (u < 1.0 - 0.0331 * x * x * x * x) return d * v * scale;
            if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v)))
                return d * v * scale;
        }
    }

    // Poisson(mean): inversion by sequential search for small means,
    // Hormann's PTRS transformed rejection otherwise.  Exact at every
    // scale that fits in uint64.
    uint64_t poisson(double mean) {
        if (mean < 0.0 || !std::isfinite(mean))
            throw DomainError("poisson: mean must be finite and nonnegative");
        if (mean == 0.0) return 0;
        if (mean < 30.0) return poisson_inversion(mean);
        return poisson_ptrs(mean);
    }

    // Binomial(n, p).  Exact inversion whenever min(np, n(1-p)) <= 64
    // (covers every distribution-critical small-scale use); for larger
    // spreads a continuity-corrected normal approximation is used, whose
    // Kolmogorov error at the switch point is below 1e-2 and decays like
    // the inverse square root of the variance.
    uint64_t binomial(uint64_t n, double p) {
        if (!(p >= 0.0 && p <= 1.0))
            throw DomainError("binomial: p must lie in [0,1]");
        if (n == 0 || p == 0.0) return 0;
        if (p == 1.0) return n;
        if (p > 0.5) return n - binomial(n, 1.0 - p);
        const double mean = double(n) * p;
        if (mean <= 64.0) return binomial_inversion(n, p);
        const double sd = std::sqrt(mean * (1.0 - p));
        double x = std::floor(mean + sd * normal() + 0.5);
        if (x < 0.0) x = 0.0;
        if (x > double(n)) x = double(n);
        return uint64_t(x);
    }

    // Geometric on {0,1,2,...} with success probability q: number of
    // failures before the first success.
    uint64_t geometric(double q) {
        if (!(q > 0.0 && q <= 1.0))
            throw DomainError("geometric: q must lie in (0,1]");
        if (q == 1.0) return 0;
        double u = u01_pos();
        double k = std::floor(std::log(u) / std::log1p(-q));
        if (k < 0.0) k = 0.0;
        return uint64_t(k);
    }

  private:
    static uint64_t rotl(uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }

    uint64_t poisson_inversion(double mean) {
        const double q0 = std::exp(-mean);
        double cum = q0, pk = q0, u = u01();
        uint64_t k = 0;
        while (u > cum) {
            ++k;
            pk *= mean / double(k);
            cum += pk;
            if (k > 2000) break;  // u ~ 1 and fp underflow guard
        }
        return k;
    }

    // PTRS ("transformed rejection with squeeze", Hormann 1993).
    uint64_t poisson_ptrs(double mean) {
        const double slam = std::sqrt(mean);
        const double loglam = std::log(mean);
        const double b = 0.931 + 2.53 * slam;
        const double a = -0.059 + 0.02483 * b;
        const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
        const double vr = 0.9277 - 3.6224 / (b - 2.0);
        for (;;) {
            double u = u01() - 0.5;
            double v = u01();
            double us = 0.5 - std::fabs(u);
            double kf = std::floor((2.0 * a / us + b) * u + mean + 0.43);
            if (us >= 0.07 && v <= vr) return uint64_t(kf);
            if (kf < 0.0 || (us < 0.013 && v > us)) continue;
            if (std::log(v * inv_alpha / (a / (us * us) + b)) <=
                kf * loglam - mean - std::lgamma(kf + 1.0))
                return uint64_t(kf);
        }
    }

    uint64_t binomial_inversion(uint64_t n, double p) {
        // P(0) computed in log space so huge n with tiny p stays exact.
        const double logq = std::log1p(-p);
        const double ratio = p / (1.0 - p);
        double pk = std::exp(double(n) * logq);
        double cum = pk, u = u01();
        uint64_t k = 0;
        while (u > cum && k < n) {
            ++k;
            pk *= ratio * double(n - k + 1) / double(k);
            cum += pk;
            if (k > 1100) break;  // fp tail guard; P(reach) < 1e-15
        }
        return k;
    }

    uint64_t s_[4];
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace bpre
