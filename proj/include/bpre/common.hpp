#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace bpre {

// Base class for all library errors.  CLI maps these to exit code 1;
// statistical test failures are reported separately (exit code 2).
struct Error : std::runtime_error {
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Invalid parameters / out-of-domain arguments.
struct DomainError : Error {
    explicit DomainError(const std::string& what) : Error(what) {}
};

// Rejection sampler ran out of attempts.  Carries an upper confidence
// bound on the acceptance rate so callers can size a retry.
struct BudgetExhausted : Error {
    BudgetExhausted(const std::string& what, double rate_bound)
        : Error(what), acceptance_rate_bound(rate_bound) {}
    double acceptance_rate_bound;
};

// A Monte Carlo run ended with too few conditioned samples to build the
// requested statistic.
struct InsufficientSample : Error {
    InsufficientSample(const std::string& what, long got, long needed)
        : Error(what), got(got), needed(needed) {}
    long got;
    long needed;
};

inline constexpr double kPi = 3.14159265358979323846;

// Integer power for small nonnegative exponents (exact for z0^k style uses).
inline double powi(double base, long n) {
    double r = 1.0, b = base;
    for (long e = n; e > 0; e >>= 1) {
        if (e & 1) r *= b;
        b *= b;
    }
    return r;
}

}  // namespace bpre
