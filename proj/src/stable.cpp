#include "bpre/stable.hpp"

#include <algorithm>
#include <cmath>

namespace bpre {

namespace {

// ---- 20-point Gauss-Legendre rule ----------------------------------------

struct GL20 {
    double x[20];
    double w[20];
    GL20() {
        // Nodes by Newton iteration on P_20; standard and exact to 1 ulp.
        const int n = 20;
        for (int i = 0; i < n / 2; ++i) {
            double t = std::cos(kPi * (i + 0.75) / (n + 0.5));
            double p0, p1, dp;
            for (int it = 0; it < 100; ++it) {
                p0 = 1.0;
                p1 = t;
                for (int k = 2; k <= n; ++k) {
                    double p2 = ((2.0 * k - 1.0) * t * p1 - (k - 1.0) * p0) / k;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n * (t * p1 - p0) / (t * t - 1.0);
                double step = p1 / dp;
                t -= step;
                if (std::fabs(step) < 1e-15) break;
            }
            x[i] = -t;
            x[n - 1 - i] = t;
            w[i] = w[n - 1 - i] = 2.0 / ((1.0 - t * t) * dp * dp);
        }
    }
};

const GL20& gl20() {
    static const GL20 rule;
    return rule;
}

template <class F>
double gl_integrate(F&& f, double a, double b) {
    const GL20& r = gl20();
    const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    double s = 0.0;
    for (int i = 0; i < 20; ++i) s += r.w[i] * f(mid + half * r.x[i]);
    return s * half;
}

// Integrate f over [a, b] splitting into subpanels so each sees a phase
// advance of at most ~2.5 radians; `phase` must be increasing.
template <class F>
double gl_oscillatory(F&& f, double a, double b, double phase_span) {
    int m = 1 + int(std::min(phase_span / 2.5, 4000.0));
    double s = 0.0, w = (b - a) / m;
    for (int j = 0; j < m; ++j) s += gl_integrate(f, a + j * w, a + (j + 1) * w);
    return s;
}

double sq(double v) { return v * v; }

}  // namespace

// ---- parameters ------------------------------------------------------------

void StableParams::validate() const {
    if (!std::isfinite(alpha) || !std::isfinite(beta) || !std::isfinite(c) ||
        c <= 0.0)
        throw DomainError("stable: parameters must be finite with c > 0");
    const bool interior =
        ((alpha > 0.0 && alpha < 1.0) || (alpha > 1.0 && alpha < 2.0)) &&
        std::fabs(beta) < 1.0;
    const bool boundary = (alpha == 1.0 || alpha == 2.0) && beta == 0.0;
    if (!(interior || boundary))
        throw DomainError("stable: (alpha, beta) outside the admissible set");
}

double stable_rho(double alpha, double beta) {
    StableParams{alpha, beta, 1.0}.validate();
    if (alpha == 1.0 || alpha == 2.0) return 0.5;
    return 0.5 + std::atan(beta * std::tan(kPi * alpha / 2.0)) / (kPi * alpha);
}

double stable_rho(const StableParams& p) { return stable_rho(p.alpha, p.beta); }

double stable_clim(double alpha) {
    if (alpha == 2.0) return 0.5;
    if (alpha == 1.0) return kPi / 2.0;
    if (!(alpha > 0.0 && alpha < 2.0))
        throw DomainError("stable_clim: alpha must lie in (0, 2]");
    // C_alpha is the two-sided tail constant of the canonical stable law.
    const double C = (1.0 - alpha) /
                     (std::tgamma(2.0 - alpha) * std::cos(kPi * alpha / 2.0));
    return (2.0 - alpha) / (alpha * C);
}

// ---- sampler ---------------------------------------------------------------

double sample_stable(const StableParams& p, Rng& rng) {
    p.validate();
    if (p.alpha == 2.0) return std::sqrt(2.0 * p.c) * rng.normal();
    if (p.alpha == 1.0) return p.c * std::tan(kPi * (rng.u01() - 0.5));
    // Chambers-Mallows-Stuck, Weron's variant for this CF convention.
    const double a = p.alpha;
    const double tau = std::tan(kPi * a / 2.0);
    const double B = std::atan(p.beta * tau) / a;
    const double S = std::pow(1.0 + sq(p.beta * tau), 0.5 / a);
    const double V = kPi * (rng.u01() - 0.5);
    const double W = rng.exponential();
    const double X = S * std::sin(a * (V + B)) /
                     std::pow(std::cos(V), 1.0 / a) *
                     std::pow(std::cos(V - a * (V + B)) / W, (1.0 - a) / a);
    return std::pow(p.c, 1.0 / a) * X;
}

// ---- StableDist ------------------------------------------------------------

StableDist::StableDist(StableParams p) : p_(p) {
    p_.validate();
    rho_ = stable_rho(p_);
    closed_form_ = (p_.alpha == 2.0 || p_.alpha == 1.0);
    if (!closed_form_) {
        b_ = p_.c * p_.beta * std::tan(kPi * p_.alpha / 2.0);
        build_tables();
    }
}

double StableDist::fourier_pdf(double x) const {
    const double a = p_.alpha, c = p_.c, b = b_;
    const double T = std::pow(37.0 / c, 1.0 / a);
    auto g = [&](double t) {
        return std::exp(-c * std::pow(t, a)) *
               std::cos(x * t - b * std::pow(t, a));
    };
    double sum = 0.0, hi = T;
    for (int k = 0; k < 52 && hi > 1e-14 * T; ++k) {
        double lo = hi * 0.5;
        double span = std::fabs(x) * (hi - lo) +
                      std::fabs(b) * (std::pow(hi, a) - std::pow(lo, a));
        sum += gl_oscillatory(g, lo, hi, span);
        hi = lo;
    }
    return std::max(sum / kPi, 0.0);
}

double StableDist::fourier_cdf(double x) const {
    const double a = p_.alpha, c = p_.c, b = b_;
    const double T = std::pow(37.0 / c, 1.0 / a);
    auto g = [&](double t) {
        double ta = std::pow(t, a);
        return std::exp(-c * ta) * std::sin(x * t - b * ta) / t;
    };
    double sum = 0.0, hi = T;
    for (int k = 0; k < 52 && hi > 1e-14 * T; ++k) {
        double lo = hi * 0.5;
        double span = std::fabs(x) * (hi - lo) +
                      std::fabs(b) * (std::pow(hi, a) - std::pow(lo, a));
        sum += gl_oscillatory(g, lo, hi, span);
        hi = lo;
    }
    return std::min(1.0, std::max(0.0, 0.5 + sum / kPi));
}

bool StableDist::tail_pdf(double x, double& out) const {
    const std::vector<double>& coef = x > 0.0 ? d_ : dm_;
    const double ax = std::fabs(x), a = p_.alpha;
    double sum = 0.0, prev = HUGE_VAL;
    for (size_t k = 1; k < coef.size(); ++k) {
        double term = coef[k] * std::pow(ax, -a * k - 1.0);
        if (std::fabs(term) >= prev) {
            out = std::max(sum, 0.0);
            return prev < 1e-13 + 1e-9 * std::fabs(sum);
        }
        sum += term;
        prev = std::fabs(term);
        if (prev < 1e-17 * std::fabs(sum)) break;
    }
    out = std::max(sum, 0.0);
    return true;
}

double StableDist::tail_sf(double x) const {
    // P(X > x) for x > 0, or P(X < x) for x < 0 (by the beta -> -beta
    // symmetry of the negative tail).
    const std::vector<double>& coef = x > 0.0 ? d_ : dm_;
    const double ax = std::fabs(x), a = p_.alpha;
    double sum = 0.0, prev = HUGE_VAL;
    for (size_t k = 1; k < coef.size(); ++k) {
        double term = coef[k] * std::pow(ax, -a * k) / (a * k);
        if (std::fabs(term) >= prev) break;
        sum += term;
        prev = std::fabs(term);
        if (prev < 1e-17 * std::fabs(sum)) break;
    }
    return std::min(1.0, std::max(sum, 0.0));
}

double StableDist::tail_x2_mass(double a0, double u) const {
    const double a = p_.alpha;
    double sum = 0.0, prev = HUGE_VAL;
    for (size_t k = 1; k < dsym_.size(); ++k) {
        double e = 2.0 - a * k;
        double piece = std::fabs(e) < 1e-9
                           ? std::log(u / a0)
                           : (std::pow(u, e) - std::pow(a0, e)) / e;
        double term = dsym_[k] * piece;
        if (std::fabs(term) >= prev) break;
        sum += term;
        prev = std::fabs(term);
        if (prev < 1e-17 * std::fabs(sum)) break;
    }
    return std::max(sum, 0.0);
}

void StableDist::build_tables() {
    const double a = p_.alpha, c = p_.c;

    // Tail coefficients: expanding exp(-lambda t^a) under the inversion
    // integral gives f(x) ~ (1/pi) sum_k (-1)^(k+1) (cR)^k
    //   sin(k(phi + pi a/2)) Gamma(ak+1)/k! x^(-ak-1),  x -> +inf,
    // with R = |1 - i beta tan(pi a/2)| and phi = arg of its conjugate.
    const double tau = std::tan(kPi * a / 2.0);
    const double R = std::sqrt(1.0 + sq(p_.beta * tau));
    const double phi = std::atan(p_.beta * tau);
    const int kmax = std::min(40, int(168.0 / a));
    d_.assign(kmax + 1, 0.0);
    dm_.assign(kmax + 1, 0.0);
    dsym_.assign(kmax + 1, 0.0);
    double lg_ck = 0.0;  // log((cR)^k / k!)
    for (int k = 1; k <= kmax; ++k) {
        lg_ck += std::log(c * R) - std::log(double(k));
        double mag = std::exp(std::lgamma(a * k + 1.0) + lg_ck) / kPi;
        double sgn = (k % 2 == 1) ? 1.0 : -1.0;
        d_[k] = sgn * mag * std::sin(k * (phi + kPi * a / 2.0));
        dm_[k] = sgn * mag * std::sin(k * (kPi * a / 2.0 - phi));
        dsym_[k] = d_[k] + dm_[k];
    }

    A_ = std::max(4.0, 12.0 * std::pow(c, 1.0 / a));

    // Cumulative H(v) = int_0^v x^2 (f(x) + f(-x)) dx on a uniform grid.
    const int hp = 400;
    h_grid_.resize(hp + 1);
    h_cum_.resize(hp + 1);
    h_cum_[0] = 0.0;
    h_grid_[0] = 0.0;
    for (int j = 0; j < hp; ++j) {
        double lo = A_ * j / hp, hi = A_ * (j + 1) / hp;
        double piece = gl_integrate(
            [&](double x) {
                return x * x * (fourier_pdf(x) + fourier_pdf(-x));
            },
            lo, hi);
        h_grid_[j + 1] = hi;
        h_cum_[j + 1] = h_cum_[j] + piece;
    }

    // CDF table over [-A, A]; outside, the tail series takes over.
    const int cp = 2000;
    xmax_ = A_;
    cdf_grid_.resize(cp + 1);
    cdf_val_.resize(cp + 1);
    for (int j = 0; j <= cp; ++j) {
        double x = -A_ + 2.0 * A_ * j / cp;
        cdf_grid_[j] = x;
        cdf_val_[j] = fourier_cdf(x);
    }
}

double StableDist::pdf(double x) const {
    const double a = p_.alpha, c = p_.c;
    if (a == 2.0)
        return std::exp(-x * x / (4.0 * c)) / std::sqrt(4.0 * kPi * c);
    if (a == 1.0) return (c / kPi) / (x * x + c * c);
    if (std::fabs(x) > A_) {
        double v;
        if (tail_pdf(x, v)) return v;
    }
    return fourier_pdf(x);
}

double StableDist::cdf(double x) const {
    const double a = p_.alpha, c = p_.c;
    if (a == 2.0) return 0.5 * (1.0 + std::erf(x / std::sqrt(4.0 * c)));
    if (a == 1.0) return 0.5 + std::atan(x / c) / kPi;
    if (x > xmax_) return 1.0 - tail_sf(x);
    if (x < -xmax_) return tail_sf(x);
    double t = (x + xmax_) / (2.0 * xmax_) * (cdf_grid_.size() - 1);
    size_t j = std::min(size_t(t), cdf_grid_.size() - 2);
    double w = t - double(j);
    return (1.0 - w) * cdf_val_[j] + w * cdf_val_[j + 1];
}

double StableDist::truncated_second_moment(double u) const {
    if (!(u > 0.0))
        throw DomainError("truncated_second_moment: u must be positive");
    const double a = p_.alpha, c = p_.c;
    if (a == 2.0) {
        // N(0, s^2) with s^2 = 2c: integral has the Maxwell closed form.
        const double s = std::sqrt(2.0 * c), v = u / s;
        double m = std::erf(v / std::sqrt(2.0)) -
                   v * std::sqrt(2.0 / kPi) * std::exp(-0.5 * v * v);
        return s * s * m / (u * u);
    }
    if (a == 1.0)
        return (2.0 * c / kPi) * (u - c * std::atan(u / c)) / (u * u);
    double mass;
    if (u <= A_) {
        double t = u / A_ * (h_grid_.size() - 1);
        size_t j = std::min(size_t(t), h_grid_.size() - 2);
        double w = t - double(j);
        mass = (1.0 - w) * h_cum_[j] + w * h_cum_[j + 1];
    } else {
        mass = h_cum_.back() + tail_x2_mass(A_, u);
    }
    return mass / (u * u);
}

}  // namespace bpre
