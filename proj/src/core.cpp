#include "bpre/core.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace bpre {

EnvironmentPath EnvironmentPath::from_laws(std::vector<OffspringLaw> laws) {
    EnvironmentPath env;
    env.S.resize(laws.size() + 1);
    env.eta.resize(laws.size());
    env.S[0] = 0.0;
    for (std::size_t k = 0; k < laws.size(); ++k) {
        env.S[k + 1] = env.S[k] + laws[k].log_mean();
        env.eta[k] = laws[k].eta();
    }
    env.laws = std::move(laws);
    return env;
}

EnvironmentPath simulate_environment(const EnvironmentModel& model, long n,
                                     Rng& rng) {
    if (n < 0) throw DomainError("simulate_environment: n must be >= 0");
    std::vector<OffspringLaw> laws;
    laws.reserve(static_cast<std::size_t>(n));
    for (long k = 0; k < n; ++k) laws.push_back(model.draw(rng));
    return EnvironmentPath::from_laws(std::move(laws));
}

ExtinctionSchedule extinction_schedule(const EnvironmentPath& env) {
    ExtinctionSchedule sched;
    const std::size_t n = env.laws.size();
    sched.q.resize(n + 1);
    sched.q[n] = 0.0;  // f_{n,n} is the identity
    for (std::size_t p = n; p-- > 0;)
        sched.q[p] = env.laws[p].gf(sched.q[p + 1]);
    return sched;
}

PopulationTrajectory simulate_population(const EnvironmentPath& env,
                                         std::uint64_t z0, long p, Rng& rng,
                                         std::uint64_t cap) {
    if (p < 0 || p > env.n())
        throw DomainError("simulate_population: p outside the environment");
    if (cap == 0) throw DomainError("simulate_population: zero cap");

    PopulationTrajectory traj;
    traj.Z.resize(static_cast<std::size_t>(p) + 1);
    std::uint64_t z = std::min(z0, cap);
    traj.capped = z0 > cap;
    traj.Z[0] = z;
    if (z == 0) traj.extinct_at = 0;

    for (long k = 1; k <= p; ++k) {
        if (z == 0) {
            traj.Z[static_cast<std::size_t>(k)] = 0;
            continue;
        }
        const OffspringLaw& law = env.laws[static_cast<std::size_t>(k - 1)];
        std::uint64_t next;
        if (z <= kNormalApproxThreshold) {
            next = law.sample_total(z, rng);
        } else {
            // Conditional normal step with the exact mean z*m and
            // variance z*(f''(1) + m - m^2).
            const double m = law.mean();
            const double var1 =
                law.second_factorial() + m - m * m;
            const double mean = static_cast<double>(z) * m;
            const double sd = std::sqrt(static_cast<double>(z) * var1);
            const double draw = std::round(mean + sd * rng.normal());
            next = draw <= 0.0 ? 0
                               : static_cast<std::uint64_t>(
                                     std::min(draw, 9.0e18));
            if (traj.approx_from < 0) traj.approx_from = k;
        }
        if (next > cap) {
            next = cap;
            traj.capped = true;
        }
        z = next;
        traj.Z[static_cast<std::size_t>(k)] = z;
        if (z == 0 && traj.extinct_at < 0) traj.extinct_at = k;
    }
    return traj;
}

std::uint64_t reduced_count(std::uint64_t z_p, double q_pn, Rng& rng) {
    if (!(q_pn >= 0.0 && q_pn <= 1.0))
        throw DomainError("reduced_count: q must lie in [0, 1]");
    if (z_p == 0) return 0;
    if (z_p > static_cast<std::uint64_t>(1) << 53)
        throw DomainError("reduced_count: Z_p too large for a binomial draw");
    return static_cast<std::uint64_t>(
        rng.binomial(static_cast<long>(z_p), 1.0 - q_pn));
}

std::pair<std::uint64_t, std::uint64_t> genealogy_reduced(
    const EnvironmentPath& env, std::uint64_t z0, long p, Rng& rng) {
    const long n = env.n();
    if (p < 0 || p > n)
        throw DomainError("genealogy_reduced: p outside the environment");

    // Offspring counts per individual per generation; children of
    // individual i at generation k occupy a contiguous block of k+1.
    std::vector<std::vector<std::uint64_t>> counts(
        static_cast<std::size_t>(n));
    std::vector<std::uint64_t> sizes(static_cast<std::size_t>(n) + 1);
    sizes[0] = z0;
    for (long k = 0; k < n; ++k) {
        const std::uint64_t zk = sizes[static_cast<std::size_t>(k)];
        if (zk > 10000000ULL)
            throw Error("genealogy_reduced: population too large for the "
                        "per-individual oracle");
        auto& row = counts[static_cast<std::size_t>(k)];
        row.resize(zk);
        std::uint64_t total = 0;
        for (std::uint64_t i = 0; i < zk; ++i) {
            row[i] = env.laws[static_cast<std::size_t>(k)].sample(rng);
            total += row[i];
        }
        sizes[static_cast<std::size_t>(k) + 1] = total;
    }

    // Backward pass: an individual counts if some descendant is alive
    // at time n.
    std::vector<char> flag(sizes[static_cast<std::size_t>(n)], 1);
    for (long k = n; k-- > p;) {
        const auto& row = counts[static_cast<std::size_t>(k)];
        std::vector<char> up(row.size(), 0);
        std::size_t child = 0;
        for (std::size_t i = 0; i < row.size(); ++i) {
            char any = 0;
            for (std::uint64_t c = 0; c < row[i]; ++c)
                any |= flag[child++];
            up[i] = any;
        }
        flag = std::move(up);
    }
    std::uint64_t reduced = 0;
    for (char f : flag) reduced += static_cast<std::uint64_t>(f);
    return {sizes[static_cast<std::size_t>(p)], reduced};
}

namespace {

void check_pair(const EnvironmentPath& env, long p, long r, const char* who) {
    if (p < 0 || r < p || r > env.n())
        throw DomainError(std::string(who) + ": need 0 <= p <= r <= n");
}

}  // namespace

JFunctionals j_functionals(const EnvironmentPath& env, long p) {
    const long n = env.n();
    check_pair(env, p, n, "j_functionals");
    JFunctionals out;
    out.p = p;
    out.n = n;

    long tau = p;
    for (long j = p; j <= n; ++j)
        if (env.S[static_cast<std::size_t>(j)] <
            env.S[static_cast<std::size_t>(tau)])
            tau = j;
    out.tau = tau;
    const double s_tau = env.S[static_cast<std::size_t>(tau)];
    out.l_hat = s_tau - env.S[static_cast<std::size_t>(p)];

    double jm = 0.0;
    for (long l = p; l < tau; ++l)
        jm += env.eta[static_cast<std::size_t>(l)] *
              std::exp(s_tau - env.S[static_cast<std::size_t>(l)]);
    out.j_minus_p_tau = jm;

    double jp = std::exp(s_tau - env.S[static_cast<std::size_t>(n)]);
    for (long l = tau; l < n; ++l)
        jp += env.eta[static_cast<std::size_t>(l)] *
              std::exp(s_tau - env.S[static_cast<std::size_t>(l)]);
    out.j_plus_tau_n = jp;

    out.j_hat_minus_0_n = j_hat_minus(env, n);
    return out;
}

double j_plus(const EnvironmentPath& env, long p, long r) {
    check_pair(env, p, r, "j_plus");
    const double s_p = env.S[static_cast<std::size_t>(p)];
    double acc = std::exp(s_p - env.S[static_cast<std::size_t>(r)]);
    for (long l = p; l < r; ++l)
        acc += env.eta[static_cast<std::size_t>(l)] *
               std::exp(s_p - env.S[static_cast<std::size_t>(l)]);
    return acc;
}

double j_minus(const EnvironmentPath& env, long p, long r) {
    check_pair(env, p, r, "j_minus");
    const double s_r = env.S[static_cast<std::size_t>(r)];
    double acc = 0.0;
    for (long l = p; l < r; ++l)
        acc += env.eta[static_cast<std::size_t>(l)] *
               std::exp(s_r - env.S[static_cast<std::size_t>(l)]);
    return acc;
}

double j_hat_minus(const EnvironmentPath& env, long r) {
    check_pair(env, 0, r, "j_hat_minus");
    double acc = 0.0;
    for (long l = 0; l < r; ++l)
        acc += env.eta[static_cast<std::size_t>(l)] *
               std::exp(env.S[static_cast<std::size_t>(l) + 1]);
    return acc;
}

double survival_probability(const ExtinctionSchedule& sched,
                            std::uint64_t z0) {
    if (sched.q.empty()) throw DomainError("survival_probability: empty");
    if (z0 == 0) return 0.0;
    const double q0 = sched.q[0];
    if (q0 <= 0.0) return 1.0;
    // 1 - q0^z0 without cancellation when the power is close to 1.
    return -std::expm1(static_cast<double>(z0) * std::log(q0));
}

double survival_probability(const EnvironmentPath& env, std::uint64_t z0) {
    return survival_probability(extinction_schedule(env), z0);
}

std::vector<double> w_observable(const EnvironmentPath& env,
                                 const PopulationTrajectory& traj,
                                 const std::vector<double>& u_grid, long q,
                                 long p) {
    if (q < 0 || p < q || p > env.n())
        throw DomainError("w_observable: need 0 <= q <= p <= n");
    if (static_cast<long>(traj.Z.size()) <= p)
        throw DomainError("w_observable: trajectory shorter than p");
    std::vector<double> out;
    out.reserve(u_grid.size());
    for (double u : u_grid) {
        if (!(u >= 0.0 && u <= 1.0))
            throw DomainError("w_observable: u grid points must be in [0,1]");
        const long m =
            q + static_cast<long>(std::floor(u * static_cast<double>(p - q)));
        out.push_back(std::exp(-env.S[static_cast<std::size_t>(m)]) *
                      static_cast<double>(traj.Z[static_cast<std::size_t>(m)]));
    }
    return out;
}

}  // namespace bpre
