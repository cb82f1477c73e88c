#include "bpre/conditioned.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>

#include "bpre/lattice_exact.hpp"
#include "bpre/stable.hpp"
#include "bpre/stats.hpp"

namespace bpre {

namespace {

void check_grid(const std::vector<double>& grid, bool is_V) {
    if (grid.empty()) throw DomainError("renewal grid is empty");
    if (!std::is_sorted(grid.begin(), grid.end()))
        throw DomainError("renewal grid must be ascending");
    if (is_V && grid.front() < 0.0)
        throw DomainError("V grid points must be >= 0");
    if (!is_V && grid.back() > 0.0)
        throw DomainError("U grid points must be <= 0");
}

double fitted_amplitude(double x_edge, double v_edge, double exponent) {
    const double ax = std::fabs(x_edge);
    if (ax <= 0.0) return v_edge;
    return v_edge / std::pow(ax, exponent);
}

}  // namespace

double HarmonicEstimate::at(double xq) const {
    if (is_V) {
        if (xq < 0.0) return 0.0;
        if (xq == 0.0) return 1.0;
        if (xq >= x.back())
            return fitted_amplitude(x.back(), value.back(), power_exponent) *
                   std::pow(xq, power_exponent);
        // Anchor below the first grid point at the exact value V(0) = 1.
        double x_lo = 0.0, v_lo = 1.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            if (xq < x[i]) {
                const double t = (xq - x_lo) / (x[i] - x_lo);
                return v_lo + t * (value[i] - v_lo);
            }
            x_lo = x[i];
            v_lo = value[i];
        }
        return value.back();
    }
    if (xq > 0.0) return 0.0;
    if (xq == 0.0) return 1.0;
    if (xq <= x.front())
        return fitted_amplitude(x.front(), value.front(), power_exponent) *
               std::pow(-xq, power_exponent);
    double x_hi = 0.0, v_hi = 1.0;
    for (std::size_t i = x.size(); i-- > 0;) {
        if (xq > x[i]) {
            const double t = (xq - x[i]) / (x_hi - x[i]);
            return value[i] + t * (v_hi - value[i]);
        }
        x_hi = x[i];
        v_hi = value[i];
    }
    return value.front();
}

std::string HarmonicEstimate::to_csv() const {
    std::string out = "x,value,se,K,n_mc\n";
    char buf[160];
    for (std::size_t i = 0; i < x.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%ld,%ld\n", x[i],
                      value[i], se[i], K, n_mc);
        out += buf;
    }
    return out;
}

namespace {

HarmonicEstimate estimate_renewal(const IncrementLaw& law,
                                  const std::vector<double>& grid, long K,
                                  long n_mc, Rng& rng, bool is_V) {
    check_grid(grid, is_V);
    if (K < 1) throw DomainError("series depth K must be >= 1");
    if (n_mc < 1000) throw DomainError("renewal estimation needs n_mc >= 1000");

    const std::size_t g = grid.size();
    std::vector<double> sum(g, 0.0), sumsq(g, 0.0);
    std::vector<long> cnt(g + 1);
    double tail_sum = 0.0;  // events with k > 0.9 K counting at the far end
    const long tail_from = static_cast<long>(0.9 * static_cast<double>(K));

    for (long r = 0; r < n_mc; ++r) {
        std::fill(cnt.begin(), cnt.end(), 0L);
        long tail_events = 0;
        double S = 0.0;
        for (long k = 1; k <= K; ++k) {
            S += law.sample(rng);
            if (is_V) {
                // Needs M_k < 0: the first nonnegative point kills all
                // later terms of the series for this path.
                if (S >= 0.0) break;
                const double t = -S;  // event at grid points x >= t
                const std::size_t idx = static_cast<std::size_t>(
                    std::lower_bound(grid.begin(), grid.end(), t) -
                    grid.begin());
                if (idx < g) {
                    ++cnt[idx];
                    if (k > tail_from) ++tail_events;
                }
            } else {
                // Needs L_k > 0: the first nonpositive point kills the path.
                if (S <= 0.0) break;
                // Event {-S_k >= x} at grid points x <= -S, i.e. indices
                // strictly below upper_bound(grid, -S).
                const std::size_t idx = static_cast<std::size_t>(
                    std::upper_bound(grid.begin(), grid.end(), -S) -
                    grid.begin());
                ++cnt[idx];
                if (idx > 0 && k > tail_from) ++tail_events;
            }
        }
        if (is_V) {
            long acc = 0;
            for (std::size_t i = 0; i < g; ++i) {
                acc += cnt[i];
                sum[i] += static_cast<double>(acc);
                sumsq[i] += static_cast<double>(acc) * static_cast<double>(acc);
            }
        } else {
            long acc = 0;
            for (std::size_t i = g; i-- > 0;) {
                acc += cnt[i + 1];
                sum[i] += static_cast<double>(acc);
                sumsq[i] += static_cast<double>(acc) * static_cast<double>(acc);
            }
        }
        tail_sum += static_cast<double>(tail_events);
    }

    HarmonicEstimate est;
    est.x = grid;
    est.K = K;
    est.n_mc = n_mc;
    est.is_V = is_V;
    est.raw.resize(g);
    est.se.resize(g);
    const double nm = static_cast<double>(n_mc);
    for (std::size_t i = 0; i < g; ++i) {
        const double mean = sum[i] / nm;
        const double var = std::max(0.0, sumsq[i] / nm - mean * mean);
        est.raw[i] = 1.0 + mean;
        est.se[i] = std::sqrt(var / nm);
    }
    // The series is empty at x = 0; pin the exact value.
    for (std::size_t i = 0; i < g; ++i)
        if (grid[i] == 0.0) {
            est.raw[i] = 1.0;
            est.se[i] = 0.0;
        }

    const std::size_t far = is_V ? g - 1 : 0;
    const double far_mass = est.raw[far] - 1.0;
    est.tail_share = far_mass > 0.0 ? (tail_sum / nm) / far_mass : 0.0;

    const StableParams ap = law.attracting();
    const double rho = stable_rho(ap.alpha, ap.beta);
    est.power_exponent = is_V ? ap.alpha * (1.0 - rho) : ap.alpha * rho;

    // Monotone projection: V nondecreasing in x, U nonincreasing in x.
    if (is_V) {
        est.value = isotonic_projection(est.raw);
    } else {
        std::vector<double> rev(est.raw.rbegin(), est.raw.rend());
        rev = isotonic_projection(rev);
        est.value.assign(rev.rbegin(), rev.rend());
    }
    return est;
}

}  // namespace

HarmonicEstimate estimate_V(const IncrementLaw& law,
                            const std::vector<double>& grid, long K, long n_mc,
                            Rng& rng) {
    return estimate_renewal(law, grid, K, n_mc, rng, true);
}

HarmonicEstimate estimate_U(const IncrementLaw& law,
                            const std::vector<double>& grid, long K, long n_mc,
                            Rng& rng) {
    return estimate_renewal(law, grid, K, n_mc, rng, false);
}

namespace {

std::vector<HarmonicityResidual> harmonicity_impl(
    const std::function<double(double)>& h, bool is_V,
    const std::vector<double>& grid, const std::vector<double>& base_se,
    double grid_edge, const IncrementLaw& law, long n_mc, Rng& rng) {
    if (n_mc < 1000) throw DomainError("harmonicity check needs n_mc >= 1000");
    std::vector<HarmonicityResidual> out;
    out.reserve(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double x0 = grid[i];
        double s = 0.0, s2 = 0.0;
        long beyond = 0;
        for (long r = 0; r < n_mc; ++r) {
            const double y = x0 + law.sample(rng);
            double gval = 0.0;
            if (is_V ? (y >= 0.0) : (y <= 0.0)) {
                gval = h(y);
                if (is_V ? (y > grid_edge) : (y < grid_edge)) ++beyond;
            }
            s += gval;
            s2 += gval * gval;
        }
        const double nm = static_cast<double>(n_mc);
        // Probing the edge point of a symmetric law parks half the kept
        // mass beyond the grid, which is fine (the power fit covers it);
        // only a clear majority signals a grid that is truly too short.
        if (static_cast<double>(beyond) > 0.75 * nm)
            throw Error("harmonicity check: grid too narrow for the "
                        "increment spread (most mass lands beyond it)");
        const double mean = s / nm;
        const double var = std::max(0.0, s2 / nm - mean * mean);
        const double se_pt = i < base_se.size() ? base_se[i] : 0.0;
        out.push_back({x0, mean - h(x0),
                       std::sqrt(var / nm + se_pt * se_pt)});
    }
    return out;
}

}  // namespace

std::vector<HarmonicityResidual> verify_harmonicity(const HarmonicEstimate& est,
                                                    const IncrementLaw& law,
                                                    long n_mc, Rng& rng) {
    const double edge = est.is_V ? est.x.back() : est.x.front();
    return harmonicity_impl([&est](double y) { return est.at(y); }, est.is_V,
                            est.x, est.se, edge, law, n_mc, rng);
}

std::vector<HarmonicityResidual> verify_harmonicity_fn(
    const std::function<double(double)>& h, bool is_V,
    const std::vector<double>& grid, const IncrementLaw& law, long n_mc,
    Rng& rng) {
    check_grid(grid, is_V);
    const double edge = is_V ? std::numeric_limits<double>::infinity()
                             : -std::numeric_limits<double>::infinity();
    return harmonicity_impl(h, is_V, grid, {}, edge, law, n_mc, rng);
}

namespace {

long lattice_start(double x0, const char* who) {
    const double r = std::round(x0);
    if (std::fabs(x0 - r) > 1e-9)
        throw DomainError(std::string(who) +
                          ": lattice start point must be an integer");
    return static_cast<long>(r);
}

}  // namespace

ConditionedPathSample sample_Pplus(double x0, long n, const IncrementLaw& law,
                                   const HarmonicEstimate* V, Rng& rng) {
    if (x0 < 0.0) throw DomainError("sample_Pplus: x0 must be >= 0");
    if (n < 0) throw DomainError("sample_Pplus: n must be >= 0");
    ConditionedPathSample out;
    out.path.S.resize(static_cast<std::size_t>(n) + 1);
    out.path.S[0] = x0;

    if (law.kind() == IncrementLaw::Kind::LatticeSSRW) {
        long x = lattice_start(x0, "sample_Pplus");
        for (long k = 1; k <= n; ++k) {
            x = lattice::pplus_step(x, rng);
            out.path.S[static_cast<std::size_t>(k)] =
                static_cast<double>(x);
        }
        out.weight = 1.0;
        return out;
    }

    if (V == nullptr)
        throw DomainError("sample_Pplus: non-lattice laws need a V estimate");
    const double v0 = V->at(x0);
    if (!(v0 > 0.0))
        throw Error("sample_Pplus: V estimate nonpositive at the start point");
    double S = x0;
    bool alive = true;
    for (long k = 1; k <= n; ++k) {
        S += law.sample(rng);
        out.path.S[static_cast<std::size_t>(k)] = S;
        if (S < 0.0) alive = false;
    }
    if (!alive) {
        out.weight = 0.0;
        return out;
    }
    const double vn = V->at(S);
    if (!(vn > 0.0))
        throw Error("sample_Pplus: V estimate nonpositive at a visited point");
    out.weight = vn / v0;
    return out;
}

ConditionedPathSample sample_Pminus(double x0, long n, const IncrementLaw& law,
                                    const HarmonicEstimate* U, Rng& rng) {
    if (x0 > 0.0) throw DomainError("sample_Pminus: x0 must be <= 0");
    if (n < 0) throw DomainError("sample_Pminus: n must be >= 0");
    ConditionedPathSample out;
    out.path.S.resize(static_cast<std::size_t>(n) + 1);
    out.path.S[0] = x0;

    if (law.kind() == IncrementLaw::Kind::LatticeSSRW) {
        long x = lattice_start(x0, "sample_Pminus");
        for (long k = 1; k <= n; ++k) {
            x = lattice::pminus_step(x, rng);
            out.path.S[static_cast<std::size_t>(k)] =
                static_cast<double>(x);
        }
        out.weight = 1.0;
        return out;
    }

    if (U == nullptr)
        throw DomainError("sample_Pminus: non-lattice laws need a U estimate");
    const double u0 = U->at(x0);
    if (!(u0 > 0.0))
        throw Error("sample_Pminus: U estimate nonpositive at the start point");
    double S = x0;
    bool alive = true;
    for (long k = 1; k <= n; ++k) {
        S += law.sample(rng);
        out.path.S[static_cast<std::size_t>(k)] = S;
        if (S > 0.0) alive = false;  // the kept region is (-inf, 0]
    }
    if (!alive) {
        out.weight = 0.0;
        return out;
    }
    const double un = U->at(S);
    if (!(un > 0.0))
        throw Error("sample_Pminus: U estimate nonpositive at a visited point");
    out.weight = un / u0;
    return out;
}

MinEventSample sample_conditioned_min(long n, double r,
                                      const IncrementLaw& law, Rng& rng,
                                      long budget) {
    if (n < 1) throw DomainError("sample_conditioned_min: n must be >= 1");
    if (r < 0.0)
        throw DomainError(
            "sample_conditioned_min: r must be >= 0 (L_n <= 0 always)");
    if (budget < 1) throw DomainError("sample_conditioned_min: empty budget");

    MinEventSample out;
    std::vector<double> S(static_cast<std::size_t>(n) + 1);
    for (long b = 0; b < budget; ++b) {
        S[0] = 0.0;
        double cur = 0.0, lo = 0.0;
        for (long k = 1; k <= n; ++k) {
            cur += law.sample(rng);
            S[static_cast<std::size_t>(k)] = cur;
            if (cur < lo) lo = cur;
        }
        if (lo >= -r) {
            WalkPath p;
            p.S = S;
            out.paths.push_back(std::move(p));
        }
    }
    out.attempts = budget;
    out.acceptance_rate =
        static_cast<double>(out.paths.size()) / static_cast<double>(budget);
    if (out.paths.empty())
        throw BudgetExhausted(
            "sample_conditioned_min: no acceptances within the budget",
            3.0 / static_cast<double>(budget));
    return out;
}

MeanderEndpoints sample_meander_endpoints(const IncrementLaw& law, long n,
                                          long budget, Rng& rng) {
    if (n < 1) throw DomainError("sample_meander_endpoints: n must be >= 1");
    if (budget < 1) throw DomainError("sample_meander_endpoints: empty budget");
    MeanderEndpoints out;
    for (long b = 0; b < budget; ++b) {
        double S = 0.0;
        bool alive = true;
        for (long k = 1; k <= n; ++k) {
            S += law.sample(rng);
            if (S < 0.0) {  // the event {L_n >= 0} is already lost
                alive = false;
                break;
            }
        }
        if (alive) out.endpoints.push_back(S);
    }
    out.attempts = budget;
    out.acceptance_rate = static_cast<double>(out.endpoints.size()) /
                          static_cast<double>(budget);
    if (out.endpoints.empty())
        throw BudgetExhausted(
            "sample_meander_endpoints: no acceptances within the budget",
            3.0 / static_cast<double>(budget));
    return out;
}

C0Estimate estimate_C0(const IncrementLaw& law, const std::vector<long>& n_grid,
                       Rng& rng, const C0Options& opts) {
    if (n_grid.size() < 2)
        throw DomainError("estimate_C0: need at least two n values");
    if (!std::is_sorted(n_grid.begin(), n_grid.end()))
        throw DomainError("estimate_C0: n grid must be ascending");

    const StableParams ap = law.attracting();
    const double kappa = ap.alpha * (1.0 - stable_rho(ap.alpha, ap.beta));
    const bool lattice = law.kind() == IncrementLaw::Kind::LatticeSSRW;

    C0Estimate est;
    est.n_grid = n_grid;
    std::vector<double> se1_by_n(n_grid.size(), 0.0),
        se2_by_n(n_grid.size(), 0.0);

    HarmonicEstimate V;
    if (!lattice) {
        const double c_max = norming_cn(law, n_grid.back());
        const double top = 1.3 * c_max;
        std::vector<double> grid{0.0};
        const double lo = std::max(law.u_star(), 0.02 * top);
        const int pts = 16;
        for (int i = 0; i < pts; ++i)
            grid.push_back(lo * std::pow(top / lo,
                                         static_cast<double>(i) /
                                             static_cast<double>(pts - 1)));
        V = estimate_V(law, grid, opts.K, opts.n_mc_V, rng);
    }

    for (std::size_t i = 0; i < n_grid.size(); ++i) {
        const long n = n_grid[i];
        const double cn = norming_cn(law, n);
        if (lattice) {
            const double Vc = lattice::V_exact(cn);
            const double P = lattice::prob_L_ge(n, 0);
            est.route1_by_n.push_back(Vc * P);
            const std::vector<double> pmf = lattice::meander_endpoint_pmf(n);
            double mom = 0.0;
            for (std::size_t j = 0; j < pmf.size(); ++j) {
                const double b = static_cast<double>(n % 2) +
                                 2.0 * static_cast<double>(j);
                mom += pmf[j] * std::pow(b / cn, kappa);
            }
            est.route2_by_n.push_back(1.0 / mom);
        } else {
            long budget = opts.budget_per_n;
            if (budget <= 0)
                budget = static_cast<long>(
                    4000.0 * std::sqrt(static_cast<double>(n)));
            const MeanderEndpoints me =
                sample_meander_endpoints(law, n, budget, rng);
            const double P = me.acceptance_rate;
            const double se_P =
                std::sqrt(P * (1.0 - P) / static_cast<double>(budget));
            const double Vc = V.at(cn);
            // SE at c_n: nearest grid point's SE (the grid covers c_n).
            double se_V = 0.0;
            std::size_t nearest = 0;
            for (std::size_t j = 1; j < V.x.size(); ++j)
                if (std::fabs(V.x[j] - cn) < std::fabs(V.x[nearest] - cn))
                    nearest = j;
            se_V = V.se[nearest];
            est.route1_by_n.push_back(Vc * P);
            se1_by_n[i] = std::sqrt(Vc * Vc * se_P * se_P + P * P * se_V * se_V);

            double s = 0.0, s2 = 0.0;
            for (double b : me.endpoints) {
                const double w = std::pow(b / cn, kappa);
                s += w;
                s2 += w * w;
            }
            const double m = static_cast<double>(me.endpoints.size());
            const double mean = s / m;
            const double var = std::max(0.0, s2 / m - mean * mean);
            est.route2_by_n.push_back(1.0 / mean);
            se2_by_n[i] = std::sqrt(var / m) / (mean * mean);
        }
    }

    const std::size_t last = n_grid.size() - 1;
    const double drift1 =
        std::fabs(est.route1_by_n[last] - est.route1_by_n[last - 1]);
    const double drift2 =
        std::fabs(est.route2_by_n[last] - est.route2_by_n[last - 1]);
    est.route1 = est.route1_by_n[last];
    est.route2 = est.route2_by_n[last];
    est.route1_lo = est.route1 - 2.0 * se1_by_n[last] - drift1;
    est.route1_hi = est.route1 + 2.0 * se1_by_n[last] + drift1;
    est.route2_lo = est.route2 - 2.0 * se2_by_n[last] - drift2;
    est.route2_hi = est.route2 + 2.0 * se2_by_n[last] + drift2;
    const double joint =
        std::sqrt(se1_by_n[last] * se1_by_n[last] +
                  se2_by_n[last] * se2_by_n[last] + drift1 * drift1 +
                  drift2 * drift2);
    est.consistent = std::fabs(est.route1 - est.route2) <= 3.0 * joint ||
                     joint == 0.0;
    if (lattice) {
        // Exact computation: flag only a genuine plateau failure.
        est.consistent =
            std::fabs(est.route1 - est.route2) <= drift1 + drift2 + 0.02;
        est.route1_lo = est.route1 - drift1;
        est.route1_hi = est.route1 + drift1;
        est.route2_lo = est.route2 - drift2;
        est.route2_hi = est.route2 + drift2;
    }
    return est;
}

}  // namespace bpre
