#include "bpre/walk.hpp"

#include <algorithm>
#include <cmath>

namespace bpre {

namespace {

// Integral_a^b x^j * alpha x^(-alpha-1) dx, the j-th moment piece of a
// Pareto(alpha) density on [1, inf) restricted to [a, b].
double pareto_moment(int j, double a, double b, double alpha) {
    if (b <= a) return 0.0;
    double e = double(j) - alpha;
    if (std::fabs(e) < 1e-12) return alpha * std::log(b / a);
    return alpha * (std::pow(b, e) - std::pow(a, e)) / e;
}

}  // namespace

IncrementLaw IncrementLaw::lattice() {
    IncrementLaw law;
    law.kind_ = Kind::LatticeSSRW;
    law.attracting_ = StableParams{2.0, 0.0, stable_clim(2.0)};
    law.rho_ = 0.5;
    return law;
}

IncrementLaw IncrementLaw::gaussian() {
    IncrementLaw law;
    law.kind_ = Kind::Gaussian;
    law.attracting_ = StableParams{2.0, 0.0, stable_clim(2.0)};
    law.rho_ = 0.5;
    return law;
}

IncrementLaw IncrementLaw::exact_stable(double alpha, double beta, double c) {
    IncrementLaw law;
    law.kind_ = Kind::ExactStable;
    law.raw_ = StableParams{alpha, beta, c};
    law.raw_.validate();
    law.attracting_ = StableParams{alpha, beta, stable_clim(alpha)};
    law.rho_ = stable_rho(alpha, beta);
    law.dist_ = std::make_shared<const StableDist>(law.raw_);
    if (alpha != 1.0 && alpha != 2.0) {
        law.cms_tau_ = std::tan(kPi * alpha / 2.0);
        law.cms_B_ = std::atan(beta * law.cms_tau_) / alpha;
        double bt = beta * law.cms_tau_;
        law.cms_S_ = std::pow(1.0 + bt * bt, 0.5 / alpha);
        law.cms_cpow_ = std::pow(c, 1.0 / alpha);
    }
    return law;
}

IncrementLaw IncrementLaw::two_sided_pareto(double alpha, double p_plus) {
    if (!(alpha > 0.0 && alpha < 2.0))
        throw DomainError("two_sided_pareto: alpha must lie in (0,2)");
    if (!(p_plus > 0.0 && p_plus < 1.0))
        throw DomainError("two_sided_pareto: p_plus must lie in (0,1)");
    IncrementLaw law;
    law.kind_ = Kind::TwoSidedPareto;
    law.pareto_alpha_ = alpha;
    law.p_plus_ = p_plus;
    // Tail balance beta = p+ - p-; the admissibility check below rejects
    // e.g. alpha = 1 with p_plus != 1/2.
    law.attracting_ = StableParams{alpha, 2.0 * p_plus - 1.0,
                                   stable_clim(alpha)};
    law.attracting_.validate();
    law.rho_ = stable_rho(law.attracting_);
    law.center_ =
        alpha > 1.0 ? (2.0 * p_plus - 1.0) * alpha / (alpha - 1.0) : 0.0;
    return law;
}

double IncrementLaw::sample(Rng& rng) const {
    switch (kind_) {
        case Kind::LatticeSSRW:
            return (rng() & 1) ? 1.0 : -1.0;
        case Kind::Gaussian:
            return rng.normal();
        case Kind::ExactStable: {
            const double a = raw_.alpha;
            if (a == 2.0) return std::sqrt(2.0 * raw_.c) * rng.normal();
            if (a == 1.0) return raw_.c * std::tan(kPi * (rng.u01() - 0.5));
            const double V = kPi * (rng.u01() - 0.5);
            const double W = rng.exponential();
            const double X =
                cms_S_ * std::sin(a * (V + cms_B_)) /
                std::pow(std::cos(V), 1.0 / a) *
                std::pow(std::cos(V - a * (V + cms_B_)) / W, (1.0 - a) / a);
            return cms_cpow_ * X;
        }
        case Kind::TwoSidedPareto: {
            double xi = std::pow(rng.u01_pos(), -1.0 / pareto_alpha_);
            double sgn = rng.u01() < p_plus_ ? 1.0 : -1.0;
            return sgn * xi - center_;
        }
    }
    return 0.0;  // unreachable
}

double IncrementLaw::G(double u) const {
    if (!(u > 0.0)) throw DomainError("G: u must be positive");
    switch (kind_) {
        case Kind::LatticeSSRW:
            return u < 1.0 ? 0.0 : 1.0 / (u * u);
        case Kind::Gaussian: {
            double m = std::erf(u / std::sqrt(2.0)) -
                       u * std::sqrt(2.0 / kPi) * std::exp(-0.5 * u * u);
            return m / (u * u);
        }
        case Kind::ExactStable:
            return dist_->truncated_second_moment(u);
        case Kind::TwoSidedPareto: {
            const double s = center_, a = pareto_alpha_;
            double total = 0.0;
            // Positive branch: X = xi - s, xi >= 1, |X| <= u.
            {
                double lo = std::max(1.0, s - u), hi = s + u;
                total += p_plus_ *
                         (pareto_moment(2, lo, hi, a) -
                          2.0 * s * pareto_moment(1, lo, hi, a) +
                          s * s * pareto_moment(0, lo, hi, a));
            }
            // Negative branch: X = -xi - s, xi >= 1, |X| <= u.
            {
                double hi = u - s;
                total += (1.0 - p_plus_) *
                         (pareto_moment(2, 1.0, hi, a) +
                          2.0 * s * pareto_moment(1, 1.0, hi, a) +
                          s * s * pareto_moment(0, 1.0, hi, a));
            }
            return total / (u * u);
        }
    }
    return 0.0;  // unreachable
}

double IncrementLaw::u_star() const {
    switch (kind_) {
        case Kind::LatticeSSRW:
            return 1.0;
        case Kind::Gaussian:
        case Kind::ExactStable:
            return 0.0;
        case Kind::TwoSidedPareto:
            return std::max(0.0, 1.0 - std::fabs(center_));
    }
    return 0.0;  // unreachable
}

double norming_cn(const IncrementLaw& law, long n) {
    if (n < 1) throw DomainError("norming_cn: n must be >= 1");
    const double target = 1.0 / double(n);
    const double us = law.u_star();

    double hi = std::max(1.0, 2.0 * us);
    while (law.G(hi) > target && hi < 1e15) hi *= 2.0;

    // Geometric scan for the last point where G exceeds 1/n.  All our
    // laws have a single hump beyond u* wider than the 25% probe
    // spacing, so this brackets the rightmost crossing.
    double u = std::max(us, 1e-6), last = -1.0;
    while (u < hi) {
        if (law.G(u) > target) last = u;
        u *= 1.25;
    }
    if (last < 0.0) return std::max(us, 1e-12);

    double lo = last, bhi = std::min(last * 1.25, hi);
    while ((bhi - lo) > 1e-9 * bhi) {
        double mid = 0.5 * (lo + bhi);
        if (law.G(mid) > target)
            lo = mid;
        else
            bhi = mid;
    }
    return 0.5 * (lo + bhi);
}

WalkPath simulate_walk(const IncrementLaw& law, long n, Rng& rng) {
    if (n < 0) throw DomainError("simulate_walk: n must be >= 0");
    WalkPath path;
    path.S.resize(size_t(n) + 1);
    path.S[0] = 0.0;
    double s = 0.0;
    for (long k = 1; k <= n; ++k) {
        s += law.sample(rng);
        path.S[size_t(k)] = s;
    }
    return path;
}

PathStats path_statistics(const WalkPath& path) {
    const long n = path.n();
    if (n <= 0) return PathStats{0.0, 0.0, 0};
    double L = 0.0, M = path.S[1];
    long tau = 0;
    for (long j = 1; j <= n; ++j) {
        double v = path.S[size_t(j)];
        if (v < L) {
            L = v;
            tau = j;
        }
        if (v > M) M = v;
    }
    return PathStats{L, M, tau};
}

double min_from(const WalkPath& path, long k) {
    const long n = path.n();
    if (k < 0 || k > n) throw DomainError("min_from: index out of range");
    double m = path.S[size_t(k)];
    for (long j = k + 1; j <= n; ++j) m = std::min(m, path.S[size_t(j)]);
    return m;
}

double l_hat(const WalkPath& path, long k) {
    return min_from(path, k) - path.S[size_t(k)];
}

}  // namespace bpre
