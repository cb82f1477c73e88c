#include "bpre/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include "json.hpp"

#include "bpre/conditioned.hpp"
#include "bpre/core.hpp"
#include "bpre/lattice_exact.hpp"
#include "bpre/limit.hpp"
#include "bpre/stable.hpp"

namespace bpre {

namespace {

using ordered_json = nlohmann::ordered_json;

// Stream tags: the per-replicate RNG is keyed by (master seed, stream id,
// replicate), where the stream id mixes a role tag with (n, p).  This is
// what makes output independent of the worker schedule.
constexpr std::uint64_t kTagEnv = 0x656e7669726f6e31ULL;
constexpr std::uint64_t kTagPop = 0x706f70756c617431ULL;
constexpr std::uint64_t kTagWalk = 0x77616c6b77616c6bULL;
constexpr std::uint64_t kTagBoot = 0x626f6f7473747261ULL;
constexpr std::uint64_t kTagRef = 0x7265666572656e63ULL;

std::uint64_t stream_id(std::uint64_t tag, long n, long p) {
    return mix64(tag ^ (static_cast<std::uint64_t>(n) * 0x9e3779b97f4a7c15ULL) ^
                 (static_cast<std::uint64_t>(p) << 1));
}

std::string fmt(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

std::string fmt6(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.6g", x);
    return buf;
}

// Runs fn(batch_begin, batch_end, batch_index) over fixed-size batches of
// the replicate index space and returns the outputs in batch order.  The
// batch size is a constant so the partition never depends on the worker
// count.
template <class Out, class Fn>
std::vector<Out> run_batches(long total, int workers, Fn fn) {
    constexpr long kBatch = 4096;
    const long nb = (total + kBatch - 1) / kBatch;
    std::vector<Out> outs(static_cast<std::size_t>(nb));
    std::atomic<long> next{0};
    auto work = [&] {
        for (;;) {
            const long b = next.fetch_add(1);
            if (b >= nb) break;
            const long lo = b * kBatch;
            const long hi = std::min(total, lo + kBatch);
            outs[static_cast<std::size_t>(b)] = fn(lo, hi, b);
        }
    };
    if (workers <= 1 || nb <= 1) {
        work();
    } else {
        std::vector<std::thread> ts;
        const int nw = static_cast<int>(
            std::min<long>(workers, nb));
        ts.reserve(static_cast<std::size_t>(nw));
        for (int w = 0; w < nw; ++w) ts.emplace_back(work);
        for (auto& t : ts) t.join();
    }
    return outs;
}

// Extinction probability of a fresh tail environment of the given length.
// Geometric and linear-fractional offspring admit the exact closed form
// 1/(1-q) = e^{-(S_n - S_p)} + sum (eta/2) e^{-(S_l - S_p)} (compositions
// of Moebius generating functions stay in the family); other families
// fall back to the backward generating-function pass.
double tail_extinction(const EnvironmentModel& model, long steps, Rng& rng,
                       std::vector<double>& xbuf) {
    if (steps <= 0) return 0.0;
    const IncrementLaw& inc = model.increment_law();
    const bool geom = model.family() == EnvironmentModel::Family::Geometric;
    const bool lf =
        model.family() == EnvironmentModel::Family::LinearFractional &&
        model.lf_eta() >= 2.0;  // eta >= 2 keeps every mean admissible
    if (geom || lf) {
        const double half_eta = (geom ? 2.0 : model.lf_eta()) / 2.0;
        double w = 1.0, A = 0.0;
        for (long l = 0; l < steps; ++l) {
            A += half_eta * w;
            w *= std::exp(-inc.sample(rng));
        }
        A += w;
        if (!(A >= 1.0)) A = 1.0;  // fp guard; the identity gives A >= 1
        return 1.0 - 1.0 / A;
    }
    xbuf.resize(static_cast<std::size_t>(steps));
    for (long l = 0; l < steps; ++l) xbuf[static_cast<std::size_t>(l)] =
        inc.sample(rng);
    double q = 0.0;
    for (long l = steps; l-- > 0;)
        q = model.law_from_logmean(xbuf[static_cast<std::size_t>(l)]).gf(q);
    return q;
}

ordered_json config_mirror(const ExperimentConfig& cfg) {
    ordered_json arr = ordered_json::array();
    for (const auto& kv : cfg.raw)
        arr.push_back(ordered_json::array({kv.first, kv.second}));
    return arr;
}

ExperimentResult make_result(const ExperimentConfig& cfg, ordered_json results,
                             bool passed, std::vector<std::string> lines) {
    ExperimentResult out;
    out.experiment = experiment_name(cfg.kind);
    out.passed = passed;
    for (const auto& w : cfg.warnings) lines.push_back("warning: " + w);
    out.lines = std::move(lines);
    ordered_json summary;
    summary["experiment"] = out.experiment;
    summary["config"] = config_mirror(cfg);
    summary["warnings"] = cfg.warnings;
    summary["passed"] = passed;
    summary["results"] = std::move(results);
    summary["report"] = out.lines;
    out.summary_json = summary.dump(2) + "\n";
    return out;
}

// Limit-law reference D(x).  alpha = 2 has the closed form; otherwise a
// self-normalized meander-route MC estimate on a dense grid serves as
// the reference (noted in the report).
struct DReference {
    std::function<double(double)> D;
    std::string name;
};

DReference make_D_reference(const IncrementLaw& law, std::uint64_t seed) {
    const StableParams ap = law.attracting();
    if (ap.alpha == 2.0)
        return {[](double x) { return x <= 0.0 ? 1.0 : d_brownian(x); },
                "2(1-Phi(x))"};
    const double kappa = ap.alpha * (1.0 - stable_rho(ap.alpha, ap.beta));
    const long n_ref = 2048;
    Rng rng = Rng::for_replicate(seed, stream_id(kTagRef, n_ref, 0), 0);
    const MeanderEndpoints me =
        sample_meander_endpoints(law, n_ref, 400000, rng);
    const double cn = norming_cn(law, n_ref);
    double norm = 0.0;
    std::vector<double> b;
    b.reserve(me.endpoints.size());
    for (double e : me.endpoints) {
        b.push_back(e / cn);
        norm += std::pow(e / cn, kappa);
    }
    norm /= static_cast<double>(b.size());
    std::vector<double> xs, ds;
    for (double x = 0.0; x <= 4.0 + 1e-9; x += 0.125) {
        double s = 0.0;
        for (double bb : b)
            if (bb >= x) s += std::pow(bb - x, kappa);
        xs.push_back(x);
        ds.push_back(s / static_cast<double>(b.size()) / norm);
    }
    // D is nonincreasing; project and interpolate.
    std::vector<double> rev(ds.rbegin(), ds.rend());
    rev = isotonic_projection(rev);
    ds.assign(rev.rbegin(), rev.rend());
    auto D = [xs, ds](double x) {
        if (x <= xs.front()) return std::min(1.0, ds.front());
        if (x >= xs.back()) return 0.0;
        const auto it = std::upper_bound(xs.begin(), xs.end(), x);
        const std::size_t i = static_cast<std::size_t>(it - xs.begin());
        const double t = (x - xs[i - 1]) / (xs[i] - xs[i - 1]);
        return ds[i - 1] + t * (ds[i] - ds[i - 1]);
    };
    return {D, "meander-mc reference"};
}

struct TSmallReference {
    std::function<double(double)> cdf;
    std::string name;
};

TSmallReference make_tsmall_reference(const IncrementLaw& law,
                                      std::uint64_t seed) {
    const StableParams ap = law.attracting();
    if (ap.alpha == 2.0)
        return {[](double z) { return maxwell_cdf(z); }, "Maxwell(|Z_3|)"};
    // Conditioned-walk endpoint law: meander endpoints reweighted by
    // V(S_n) turn the {L_n >= 0} sample into the V-transformed law.
    const long n_ref = 2048;
    Rng rng = Rng::for_replicate(seed, stream_id(kTagRef, n_ref, 1), 0);
    const MeanderEndpoints me =
        sample_meander_endpoints(law, n_ref, 400000, rng);
    const double cn = norming_cn(law, n_ref);
    std::vector<double> grid{0.0};
    for (int i = 0; i < 14; ++i)
        grid.push_back(0.05 * cn * std::pow(1.3 * 20.0, i / 13.0));
    Rng vrng = Rng::for_replicate(seed, stream_id(kTagRef, n_ref, 2), 0);
    const HarmonicEstimate V = estimate_V(law, grid, 6000, 100000, vrng);
    std::vector<double> vals, ws;
    vals.reserve(me.endpoints.size());
    for (double e : me.endpoints) {
        vals.push_back(e / cn);
        ws.push_back(V.at(e));
    }
    auto ecdf = std::make_shared<EmpiricalCDF>(std::move(vals), std::move(ws));
    return {[ecdf](double z) { return (*ecdf)(z); },
            "V-weighted endpoint reference"};
}

// ---------------------------------------------------------------------
// reduced-law / t-small shared core
// ---------------------------------------------------------------------

struct ReducedBatch {
    std::string csv;
    std::vector<double> scaled_reduced;  // survivors (Z_{p,n} >= 1)
    std::vector<double> scaled_pop;      // survivors, log(Z_p)/c_p
    std::vector<long> clusters;          // survivors' environment ids
    std::vector<double> pop_alive;       // log(Z_p)/c_p whenever Z_p > 0
    long survivors = 0;
    long zp_alive = 0;
};

struct ReducedPerN {
    long n = 0, p = 0;
    double cp = 0.0;
    long replicates = 0, survivors = 0, zp_alive = 0;
    double acceptance_rate = 0.0;
    KSResult ks_reduced, ks_tsmall;
    double dom_cond = 0.0, dom_uncond = 0.0;
    std::string csv;
};

ReducedPerN reduced_core_one_n(const ExperimentConfig& cfg, long n, long p,
                               bool reduced_observable_in_csv) {
    const EnvironmentModel model = cfg.environment();
    const IncrementLaw& inc = model.increment_law();
    const double cp = norming_cn(inc, p);
    const long M = cfg.replicas_per_env;
    const std::uint64_t sid_env = stream_id(kTagEnv, n, p);
    const std::uint64_t sid_pop = stream_id(kTagPop, n, p);

    auto batch_fn = [&](long lo, long hi, long) {
        ReducedBatch out;
        out.csv.reserve(static_cast<std::size_t>(hi - lo) * 32);
        std::vector<double> xbuf;
        char row[192];
        for (long rep = lo; rep < hi; ++rep) {
            const long cluster = rep / M;
            Rng env_rng = Rng::for_replicate(cfg.seed, sid_env,
                                             static_cast<std::uint64_t>(cluster));
            Rng pop_rng = Rng::for_replicate(cfg.seed, sid_pop,
                                             static_cast<std::uint64_t>(rep));
            std::uint64_t Z = 1;
            for (long k = 1; k <= p && Z > 0; ++k) {
                const double X = inc.sample(env_rng);
                Z = model.law_from_logmean(X).sample_total(Z, pop_rng);
            }
            if (Z == 0) {
                std::snprintf(row, sizeof row, "%ld,%ld,%ld,0,,0,0,\n", rep, n,
                              p);
                out.csv += row;
                continue;
            }
            ++out.zp_alive;
            const double q = tail_extinction(model, n - p, env_rng, xbuf);
            const std::uint64_t Zpn = reduced_count(Z, q, pop_rng);
            const bool survived = Zpn >= 1;
            const double sp =
                std::log(static_cast<double>(Z)) / cp;
            out.pop_alive.push_back(sp);
            double sr = 0.0;
            if (survived) {
                sr = std::log(static_cast<double>(Zpn)) / cp;
                ++out.survivors;
                out.scaled_reduced.push_back(sr);
                out.scaled_pop.push_back(sp);
                out.clusters.push_back(cluster);
            }
            const double shown = reduced_observable_in_csv ? sr : sp;
            std::snprintf(row, sizeof row, "%ld,%ld,%ld,%llu,%s,%llu,%d,%s\n",
                          rep, n, p, static_cast<unsigned long long>(Z),
                          fmt(q).c_str(),
                          static_cast<unsigned long long>(Zpn),
                          survived ? 1 : 0,
                          survived ? fmt(shown).c_str() : "");
            out.csv += row;
        }
        return out;
    };

    const auto batches =
        run_batches<ReducedBatch>(cfg.replicates, cfg.workers, batch_fn);

    ReducedPerN agg;
    agg.n = n;
    agg.p = p;
    agg.cp = cp;
    agg.replicates = cfg.replicates;
    agg.csv = "replicate,n,p,Z_p,q_pn,Z_pn,survived,scaled_value\n";
    std::vector<double> scaled_reduced, scaled_pop, pop_alive;
    std::vector<long> clusters;
    for (const auto& b : batches) {
        agg.csv += b.csv;
        agg.survivors += b.survivors;
        agg.zp_alive += b.zp_alive;
        scaled_reduced.insert(scaled_reduced.end(), b.scaled_reduced.begin(),
                              b.scaled_reduced.end());
        scaled_pop.insert(scaled_pop.end(), b.scaled_pop.begin(),
                          b.scaled_pop.end());
        pop_alive.insert(pop_alive.end(), b.pop_alive.begin(),
                         b.pop_alive.end());
        clusters.insert(clusters.end(), b.clusters.begin(), b.clusters.end());
    }
    agg.acceptance_rate = static_cast<double>(agg.survivors) /
                          static_cast<double>(cfg.replicates);
    if (agg.survivors < cfg.min_survivors)
        throw InsufficientSample(
            std::string(experiment_name(cfg.kind)) + " at n = " +
                std::to_string(n) + ": survivors below the configured minimum",
            agg.survivors, cfg.min_survivors);

    const DReference dref = make_D_reference(inc, cfg.seed);
    const TSmallReference tref = make_tsmall_reference(inc, cfg.seed);
    auto red_cdf = [&dref](double x) {
        return x < 0.0 ? 0.0 : 1.0 - dref.D(x);
    };
    Rng boot1 = Rng::for_replicate(cfg.seed, stream_id(kTagBoot, n, p), 1);
    Rng boot2 = Rng::for_replicate(cfg.seed, stream_id(kTagBoot, n, p), 2);
    const std::vector<long>* cl = M > 1 ? &clusters : nullptr;
    agg.ks_reduced = ks_distance(scaled_reduced, red_cdf, dref.name,
                                 cfg.ks_threshold, boot1, 1000, cl);
    agg.ks_tsmall = ks_distance(scaled_pop, tref.cdf, tref.name,
                                cfg.ks_threshold, boot2, 1000, cl);

    // Stochastic-dominance comparison: survival-conditioned law of
    // log(Z_p)/c_p against the law conditioned only on Z_p > 0.
    long a = 0, b2 = 0;
    for (double v : scaled_pop)
        if (v > 1.0) ++a;
    for (double v : pop_alive)
        if (v > 1.0) ++b2;
    agg.dom_cond = scaled_pop.empty()
                       ? 0.0
                       : static_cast<double>(a) /
                             static_cast<double>(scaled_pop.size());
    agg.dom_uncond = pop_alive.empty()
                         ? 0.0
                         : static_cast<double>(b2) /
                               static_cast<double>(pop_alive.size());
    return agg;
}

ExperimentResult reduced_or_tsmall(const ExperimentConfig& cfg,
                                   bool reduced_kind) {
    std::vector<std::string> lines;
    ordered_json per_n = ordered_json::array();
    std::vector<std::pair<std::string, std::string>> artifacts;
    std::vector<double> ks_trend;
    bool passed = true;

    for (std::size_t i = 0; i < cfg.n_grid.size(); ++i) {
        const long n = cfg.n_grid[i];
        const long p = cfg.p_for(i);
        ReducedPerN r = reduced_core_one_n(cfg, n, p, reduced_kind);
        const KSResult& ks = reduced_kind ? r.ks_reduced : r.ks_tsmall;
        ks_trend.push_back(ks.statistic);

        std::ostringstream line;
        line << "n=" << n << " p=" << p << " survivors=" << r.survivors << "/"
             << r.replicates << " rate=" << fmt6(r.acceptance_rate)
             << " KS[reduced]=" << fmt6(r.ks_reduced.statistic)
             << " KS[t-small]=" << fmt6(r.ks_tsmall.statistic)
             << " threshold=" << fmt6(cfg.ks_threshold);
        lines.push_back(line.str());
        lines.push_back("  dominance: P(obs>1 | Z_n>0)=" + fmt6(r.dom_cond) +
                        " >= P(obs>1 | Z_p>0)=" + fmt6(r.dom_uncond) +
                        (r.dom_cond >= r.dom_uncond ? "  ok" : "  VIOLATED"));
        if (!reduced_kind && r.dom_cond < r.dom_uncond) passed = false;

        ordered_json jn;
        jn["n"] = n;
        jn["p"] = p;
        jn["c_p"] = r.cp;
        jn["replicates"] = r.replicates;
        jn["survivors"] = r.survivors;
        jn["zp_alive"] = r.zp_alive;
        jn["acceptance_rate"] = r.acceptance_rate;
        jn["ks_reduced"] = r.ks_reduced.statistic;
        jn["ks_reduced_ci"] = {r.ks_reduced.ci_lo, r.ks_reduced.ci_hi};
        jn["ks_tsmall"] = r.ks_tsmall.statistic;
        jn["ks_tsmall_ci"] = {r.ks_tsmall.ci_lo, r.ks_tsmall.ci_hi};
        jn["reference"] = ks.reference;
        jn["dom_cond"] = r.dom_cond;
        jn["dom_uncond"] = r.dom_uncond;
        std::ostringstream fname;
        fname << experiment_name(cfg.kind) << "_n" << n << ".csv";
        jn["artifact"] = fname.str();
        per_n.push_back(std::move(jn));
        artifacts.emplace_back(fname.str(), std::move(r.csv));
    }

    if (ks_trend.back() > cfg.ks_threshold) passed = false;
    bool decreasing = true;
    for (std::size_t i = 1; i < ks_trend.size(); ++i)
        if (!(ks_trend[i] < ks_trend[i - 1])) decreasing = false;
    if (ks_trend.size() >= 2) {
        lines.push_back(std::string("KS trend across n: ") +
                        (decreasing ? "strictly decreasing" :
                                      "NOT strictly decreasing"));
        if (!decreasing) passed = false;
    }

    ordered_json results;
    results["per_n"] = std::move(per_n);
    ExperimentResult res = make_result(cfg, std::move(results), passed,
                                       std::move(lines));
    res.artifacts = std::move(artifacts);
    return res;
}

// ---------------------------------------------------------------------
// minima-law
// ---------------------------------------------------------------------

ExperimentResult minima_experiment(const ExperimentConfig& cfg) {
    std::vector<std::string> lines;
    ordered_json rows = ordered_json::array();
    std::string csv = "n,p,r,x,profile,reference\n";
    bool passed = true;
    const std::vector<double> xg =
        cfg.x_grid.empty() ? std::vector<double>{0.25, 0.5, 1.0, 1.5}
                           : cfg.x_grid;
    const bool lattice = cfg.increment.is_lattice();

    for (std::size_t i = 0; i < cfg.n_grid.size(); ++i) {
        const long n = cfg.n_grid[i];
        const long p = cfg.p_for(i);
        const double cp = norming_cn(cfg.increment, p);
        // profiles[r][x]
        std::vector<std::vector<double>> profiles;

        for (double rv : cfg.r_values) {
            std::vector<double> prof;
            if (lattice) {
                const long r = static_cast<long>(std::llround(rv));
                if (std::fabs(rv - static_cast<double>(r)) > 1e-9 || r < 0)
                    throw DomainError(
                        "minima-law: lattice r values must be integers >= 0");
                const double denom = lattice::prob_L_ge(n, r);
                const std::vector<double> tail =
                    lattice::prob_L_ge_all(n - p, p + r + 2);
                for (double x : xg) {
                    const long m =
                        x <= 0.0 ? 0
                                 : static_cast<long>(
                                       std::ceil(x * cp - 1e-12));
                    double num = 0.0;
                    for (long y = p; y >= std::max(m, -r); y -= 2) {
                        const double jp = lattice::joint_pmf_min(p, y, r);
                        if (jp == 0.0) continue;
                        const long rr = y - m;
                        num += jp * tail[static_cast<std::size_t>(rr)];
                    }
                    prof.push_back(num / denom);
                }
            } else {
                // Rejection fallback: condition on {L_n >= -r} directly.
                long budget = cfg.budget > 0 ? cfg.budget : 200000;
                Rng rng = Rng::for_replicate(
                    cfg.seed, stream_id(kTagWalk, n, static_cast<long>(rv)),
                    0);
                const MinEventSample s = sample_conditioned_min(
                    n, rv, cfg.increment, rng, budget);
                for (double x : xg) {
                    long hit = 0;
                    for (const auto& path : s.paths) {
                        double lo = path.S[static_cast<std::size_t>(p)];
                        for (long j = p; j <= n; ++j)
                            lo = std::min(lo,
                                          path.S[static_cast<std::size_t>(j)]);
                        if (lo >= x * cp) ++hit;
                    }
                    prof.push_back(static_cast<double>(hit) /
                                   static_cast<double>(s.paths.size()));
                }
            }
            profiles.push_back(prof);

            for (std::size_t xi = 0; xi < xg.size(); ++xi) {
                const double ref = d_brownian(xg[xi]);
                char row[160];
                std::snprintf(row, sizeof row, "%ld,%ld,%g,%g,%s,%s\n", n, p,
                              rv, xg[xi], fmt(prof[xi]).c_str(),
                              cfg.increment.attracting().alpha == 2.0
                                  ? fmt(ref).c_str()
                                  : "");
                csv += row;
                ordered_json jr;
                jr["n"] = n;
                jr["p"] = p;
                jr["r"] = rv;
                jr["x"] = xg[xi];
                jr["profile"] = prof[xi];
                if (cfg.increment.attracting().alpha == 2.0) {
                    jr["reference"] = ref;
                    const double dev = std::fabs(prof[xi] - ref);
                    jr["abs_dev"] = dev;
                    if (dev > cfg.walk_threshold) passed = false;
                    std::ostringstream l;
                    l << "n=" << n << " r=" << rv << " x=" << xg[xi]
                      << " profile=" << fmt6(prof[xi]) << " D=" << fmt6(ref)
                      << " |dev|=" << fmt6(dev);
                    lines.push_back(l.str());
                }
                rows.push_back(jr);
            }
        }

        // r-independence: profiles for different r agree pointwise.
        double max_r_dev = 0.0;
        for (std::size_t a = 1; a < profiles.size(); ++a)
            for (std::size_t xi = 0; xi < xg.size(); ++xi)
                max_r_dev = std::max(
                    max_r_dev, std::fabs(profiles[a][xi] - profiles[0][xi]));
        if (profiles.size() >= 2) {
            lines.push_back("n=" + std::to_string(n) +
                            " max profile deviation across r: " +
                            fmt6(max_r_dev));
            if (max_r_dev > cfg.walk_threshold) passed = false;
        }
    }

    ordered_json results;
    results["rows"] = std::move(rows);
    ExperimentResult res =
        make_result(cfg, std::move(results), passed, std::move(lines));
    res.artifacts.emplace_back("minima_profile.csv", csv);
    return res;
}

// ---------------------------------------------------------------------
// survival-asymptotics
// ---------------------------------------------------------------------

ExperimentResult survival_asymptotics(const ExperimentConfig& cfg) {
    const EnvironmentModel model = cfg.environment();
    const IncrementLaw& inc = model.increment_law();
    const bool lattice = inc.is_lattice();
    const StableParams ap = inc.attracting();
    const double rho = stable_rho(ap.alpha, ap.beta);

    std::vector<double> p_surv, p_surv_se, p_walk, p_walk_se, ratio;
    std::vector<std::pair<double, double>> surv_ci;
    std::string csv = "n,p_surv,se_surv,p_walk,se_walk,ratio\n";
    const long n_max = *std::max_element(cfg.n_grid.begin(), cfg.n_grid.end());

    for (long n : cfg.n_grid) {
        // Variance balancing: smaller n get more environments.
        const long R = static_cast<long>(
            std::ceil(static_cast<double>(cfg.replicates) *
                      std::sqrt(static_cast<double>(n_max) /
                                static_cast<double>(n))));
        const std::uint64_t sid = stream_id(kTagEnv, n, 0);
        auto fn = [&](long lo, long hi, long) {
            std::vector<double> v;
            v.reserve(static_cast<std::size_t>(hi - lo));
            std::vector<double> xbuf;
            for (long rep = lo; rep < hi; ++rep) {
                Rng rng = Rng::for_replicate(cfg.seed, sid,
                                             static_cast<std::uint64_t>(rep));
                v.push_back(1.0 - tail_extinction(model, n, rng, xbuf));
            }
            return v;
        };
        const auto outs = run_batches<std::vector<double>>(R, cfg.workers, fn);
        std::vector<double> v;
        v.reserve(static_cast<std::size_t>(R));
        for (const auto& o : outs) v.insert(v.end(), o.begin(), o.end());
        const double ps = mean_of(v);
        const double se = sd_of(v) / std::sqrt(static_cast<double>(v.size()));
        Rng brng = Rng::for_replicate(cfg.seed, stream_id(kTagBoot, n, 0), 0);
        surv_ci.push_back(bootstrap_ci_mean(v, 1000, brng));

        double pw, pw_se;
        if (lattice) {
            pw = lattice::prob_L_ge(n, 0);
            pw_se = 0.0;
        } else {
            const long W = std::max<long>(4 * R, 400000);
            const std::uint64_t sidw = stream_id(kTagWalk, n, 0);
            auto wfn = [&](long lo, long hi, long) {
                long alive = 0;
                for (long rep = lo; rep < hi; ++rep) {
                    Rng rng = Rng::for_replicate(
                        cfg.seed, sidw, static_cast<std::uint64_t>(rep));
                    double S = 0.0;
                    bool ok = true;
                    for (long k = 1; k <= n; ++k) {
                        S += inc.sample(rng);
                        if (S < 0.0) {
                            ok = false;
                            break;
                        }
                    }
                    if (ok) ++alive;
                }
                return alive;
            };
            const auto wo = run_batches<long>(W, cfg.workers, wfn);
            long alive = 0;
            for (long a : wo) alive += a;
            pw = static_cast<double>(alive) / static_cast<double>(W);
            pw_se = std::sqrt(pw * (1.0 - pw) / static_cast<double>(W));
        }
        p_surv.push_back(ps);
        p_surv_se.push_back(se);
        p_walk.push_back(pw);
        p_walk_se.push_back(pw_se);
        ratio.push_back(ps / pw);
        char row[200];
        std::snprintf(row, sizeof row, "%ld,%s,%s,%s,%s,%s\n", n,
                      fmt(ps).c_str(), fmt(se).c_str(), fmt(pw).c_str(),
                      fmt(pw_se).c_str(), fmt(ps / pw).c_str());
        csv += row;
    }

    std::vector<double> ns(cfg.n_grid.begin(), cfg.n_grid.end());
    const double slope = fit_loglog_slope(ns, p_surv);
    const double slope_ref = rho - 1.0;
    const std::size_t last = ratio.size() - 1;
    const double plateau =
        std::fabs(ratio[last] - ratio[last - 1]) / ratio[last];
    const double theta = ratio[last];
    const double theta_lo = surv_ci[last].first / (p_walk[last] +
                                                   3.0 * p_walk_se[last]);
    const bool ci_excludes_zero = theta_lo > 0.0;

    const bool slope_ok =
        slope >= slope_ref - 0.05 && slope <= slope_ref + 0.05;
    const bool plateau_ok = plateau <= 0.10;
    const bool passed = slope_ok && plateau_ok && ci_excludes_zero;

    std::vector<std::string> lines;
    lines.push_back("log-log slope of P(Z_n>0): " + fmt6(slope) +
                    " (reference rho-1 = " + fmt6(slope_ref) + ")" +
                    (slope_ok ? "  ok" : "  OUT OF BAND"));
    lines.push_back("theta plateau: ratio(" + std::to_string(cfg.n_grid[last]) +
                    ")=" + fmt6(ratio[last]) + ", drift vs previous grid n: " +
                    fmt6(plateau) + (plateau_ok ? "  ok" : "  > 10%"));
    lines.push_back(std::string("theta CI excludes 0: ") +
                    (ci_excludes_zero ? "yes" : "NO") +
                    " (lo=" + fmt6(theta_lo) + ")");

    ordered_json results;
    results["n_grid"] = cfg.n_grid;
    results["p_surv"] = p_surv;
    results["p_surv_se"] = p_surv_se;
    results["p_walk"] = p_walk;
    results["p_walk_se"] = p_walk_se;
    results["ratio"] = ratio;
    results["slope"] = slope;
    results["slope_reference"] = slope_ref;
    results["plateau_drift"] = plateau;
    results["theta"] = theta;
    results["theta_ci_lo"] = theta_lo;

    ExperimentResult res =
        make_result(cfg, std::move(results), passed, std::move(lines));
    res.artifacts.emplace_back("survival_asymptotics.csv", csv);
    return res;
}

// ---------------------------------------------------------------------
// w-constancy
// ---------------------------------------------------------------------

ExperimentResult w_constancy(const ExperimentConfig& cfg) {
    const EnvironmentModel model = cfg.environment();
    const IncrementLaw& inc = model.increment_law();
    constexpr double kEps = 1e-12;

    std::vector<double> stat_by_q;
    std::vector<long> survivors_by_q;
    std::string csv = "q,p,n,statistic,survivors,replicates\n";
    std::vector<std::string> lines;
    bool w_range_ok = true;

    for (long q : cfg.q_grid) {
        const long p = q * q;
        const long n = 64 * p;
        const long h = 2 * p - q;  // furthest index the statistic reads
        const std::uint64_t sid_env = stream_id(kTagEnv, n, q);
        const std::uint64_t sid_pop = stream_id(kTagPop, n, q);

        struct WBatch {
            std::vector<double> stats, weights;
            bool range_ok = true;
        };
        auto fn = [&](long lo, long hi, long) {
            WBatch out;
            std::vector<double> xbuf;
            for (long rep = lo; rep < hi; ++rep) {
                Rng env_rng = Rng::for_replicate(
                    cfg.seed, sid_env, static_cast<std::uint64_t>(rep));
                Rng pop_rng = Rng::for_replicate(
                    cfg.seed, sid_pop, static_cast<std::uint64_t>(rep));
                std::uint64_t Z = 1;
                double S = 0.0, S1 = 0.0, S2 = 0.0;
                std::uint64_t Z1 = 0, Z2 = 0;
                for (long k = 1; k <= h && Z > 0; ++k) {
                    const double X = inc.sample(env_rng);
                    Z = model.law_from_logmean(X).sample_total(Z, pop_rng);
                    S += X;
                    if (k == p) {
                        S1 = S;
                        Z1 = Z;
                    }
                    if (k == h) {
                        S2 = S;
                        Z2 = Z;
                    }
                }
                if (Z == 0) continue;  // cannot survive to n
                // Weight = P(Z_n > 0 | Z_h, tail environment), the exact
                // conditioning on survival to n.
                const double qt = tail_extinction(model, n - h, env_rng, xbuf);
                const double w =
                    qt <= 0.0 ? 1.0
                              : -std::expm1(static_cast<double>(Z2) *
                                            std::log(qt));
                if (w <= 0.0) continue;
                const double W1 =
                    std::exp(-S1) * static_cast<double>(Z1);
                const double W2 =
                    std::exp(-S2) * static_cast<double>(Z2);
                if (!(W1 > 0.0 && W2 > 0.0 && std::isfinite(W1) &&
                      std::isfinite(W2)))
                    out.range_ok = false;
                out.stats.push_back(std::fabs(W2 - W1) / std::max(W1, kEps));
                out.weights.push_back(w);
            }
            return out;
        };
        const auto outs = run_batches<WBatch>(cfg.replicates, cfg.workers, fn);
        std::vector<double> stats, weights;
        for (const auto& o : outs) {
            stats.insert(stats.end(), o.stats.begin(), o.stats.end());
            weights.insert(weights.end(), o.weights.begin(), o.weights.end());
            if (!o.range_ok) w_range_ok = false;
        }
        if (static_cast<long>(stats.size()) < cfg.min_survivors)
            throw InsufficientSample(
                "w-constancy at q = " + std::to_string(q) +
                    ": survivors below the configured minimum",
                static_cast<long>(stats.size()), cfg.min_survivors);
        const double med = weighted_median(stats, weights);
        stat_by_q.push_back(med);
        survivors_by_q.push_back(static_cast<long>(stats.size()));
        char row[160];
        std::snprintf(row, sizeof row, "%ld,%ld,%ld,%s,%ld,%ld\n", q, p, n,
                      fmt(med).c_str(), static_cast<long>(stats.size()),
                      cfg.replicates);
        csv += row;
        lines.push_back("q=" + std::to_string(q) + " p=" + std::to_string(p) +
                        " n=" + std::to_string(n) +
                        " median |W2-W1|/W1 = " + fmt6(med) + " (" +
                        std::to_string(stats.size()) + " survivors)");
    }

    bool decreasing = true;
    for (std::size_t i = 1; i < stat_by_q.size(); ++i)
        if (!(stat_by_q[i] < stat_by_q[i - 1])) decreasing = false;
    lines.push_back(std::string("trend: ") +
                    (decreasing ? "strictly decreasing"
                                : "NOT strictly decreasing"));
    lines.push_back(std::string("W range check on survivors: ") +
                    (w_range_ok ? "all finite and positive"
                                : "VIOLATION observed"));
    const bool passed = decreasing && w_range_ok;

    ordered_json results;
    results["q_grid"] = cfg.q_grid;
    results["statistic"] = stat_by_q;
    results["survivors"] = survivors_by_q;
    results["strictly_decreasing"] = decreasing;
    results["w_range_ok"] = w_range_ok;

    ExperimentResult res =
        make_result(cfg, std::move(results), passed, std::move(lines));
    res.artifacts.emplace_back("w_constancy.csv", csv);
    return res;
}

// ---------------------------------------------------------------------
// harmonicity
// ---------------------------------------------------------------------

ExperimentResult harmonicity(const ExperimentConfig& cfg) {
    const IncrementLaw& inc = cfg.increment;
    const bool lattice = inc.is_lattice();
    std::vector<double> vg, ug;
    if (lattice) {
        vg = {0, 1, 2, 3, 5, 8};
        ug = {-8, -5, -3, -2, -1, 0};
    } else {
        vg = {0, 0.5, 1, 2, 3, 5, 8};
        ug = {-8, -5, -3, -2, -1, -0.5, 0};
    }

    Rng rv = Rng::for_replicate(cfg.seed, stream_id(kTagEnv, 0, 1), 0);
    Rng ru = Rng::for_replicate(cfg.seed, stream_id(kTagEnv, 0, 2), 0);
    const HarmonicEstimate V = estimate_V(inc, vg, cfg.K, cfg.n_mc, rv);
    const HarmonicEstimate U = estimate_U(inc, ug, cfg.K, cfg.n_mc, ru);
    Rng hv = Rng::for_replicate(cfg.seed, stream_id(kTagEnv, 0, 3), 0);
    Rng hu = Rng::for_replicate(cfg.seed, stream_id(kTagEnv, 0, 4), 0);
    const auto res_v = verify_harmonicity(V, inc, cfg.n_mc, hv);
    const auto res_u = verify_harmonicity(U, inc, cfg.n_mc, hu);

    bool passed = true;
    std::vector<std::string> lines;
    std::string csv = "function,x,value,se,residual,residual_se\n";
    ordered_json jfn = ordered_json::array();
    auto emit = [&](const char* name, const HarmonicEstimate& est,
                    const std::vector<HarmonicityResidual>& res) {
        // Probes from the far grid point land beyond the grid, where the
        // power-law extrapolation is only first-order unbiased (a linear
        // function with intercept picks up ~ intercept * E[overshoot] / edge,
        // well above 3 SE at these bundle sizes).  The edge residual is
        // reported but only interior points gate the pass; on the lattice
        // the closed-form comparison below still covers every point.
        const std::size_t edge = est.is_V ? est.x.size() - 1 : 0;
        double worst = 0.0;
        for (std::size_t i = 0; i < est.x.size(); ++i) {
            char row[200];
            std::snprintf(row, sizeof row, "%s,%s,%s,%s,%s,%s\n", name,
                          fmt(est.x[i]).c_str(), fmt(est.value[i]).c_str(),
                          fmt(est.se[i]).c_str(), fmt(res[i].residual).c_str(),
                          fmt(res[i].se).c_str());
            csv += row;
            const bool ok = res[i].se == 0.0
                                ? std::fabs(res[i].residual) < 1e-12
                                : std::fabs(res[i].residual) <=
                                      3.0 * res[i].se;
            const bool gated = i != edge;
            if (gated && !ok) passed = false;
            if (gated && res[i].se > 0.0)
                worst = std::max(worst, std::fabs(res[i].residual) / res[i].se);
            ordered_json j;
            j["function"] = name;
            j["x"] = est.x[i];
            j["value"] = est.value[i];
            j["se"] = est.se[i];
            j["residual"] = res[i].residual;
            j["residual_se"] = res[i].se;
            j["within_3se"] = ok;
            j["gated"] = gated;
            jfn.push_back(j);
        }
        lines.push_back(std::string(name) +
                        ": max interior |residual|/se = " + fmt6(worst));
    };
    emit("V", V, res_v);
    emit("U", U, res_u);

    // Exact lattice references V(x) = x + 1 and U(x) = 1 + |x|.
    double max_rel = 0.0;
    if (lattice) {
        for (std::size_t i = 0; i < V.x.size(); ++i) {
            const double ref = lattice::V_exact(V.x[i]);
            max_rel = std::max(max_rel,
                               std::fabs(V.value[i] - ref) / ref);
        }
        for (std::size_t i = 0; i < U.x.size(); ++i) {
            const double ref = lattice::U_exact(U.x[i]);
            max_rel = std::max(max_rel,
                               std::fabs(U.value[i] - ref) / ref);
        }
        lines.push_back("lattice closed-form max relative error: " +
                        fmt6(max_rel));
        if (max_rel > 0.02) passed = false;
    }

    ordered_json results;
    results["points"] = std::move(jfn);
    if (lattice) results["closed_form_max_rel_err"] = max_rel;
    results["tail_share_V"] = V.tail_share;
    results["tail_share_U"] = U.tail_share;

    ExperimentResult res =
        make_result(cfg, std::move(results), passed, std::move(lines));
    res.artifacts.emplace_back("harmonicity.csv", csv);
    return res;
}

// ---------------------------------------------------------------------
// limit-law-routes
// ---------------------------------------------------------------------

ExperimentResult limit_law_routes(const ExperimentConfig& cfg) {
    const IncrementLaw& inc = cfg.increment;
    const StableParams ap = inc.attracting();
    const double rho = stable_rho(ap.alpha, ap.beta);
    const double kappa = ap.alpha * (1.0 - rho);
    const bool a2 = ap.alpha == 2.0;
    const long n = cfg.n_grid.back();
    const double cn = norming_cn(inc, n);
    const std::vector<double> xg =
        cfg.x_grid.empty() ? default_x_grid() : cfg.x_grid;

    // Meander endpoints (rejection) once; P+ endpoints once.
    const long budget =
        cfg.budget > 0
            ? cfg.budget
            : static_cast<long>(6000.0 * std::sqrt(static_cast<double>(n)));
    Rng mrng = Rng::for_replicate(cfg.seed, stream_id(kTagWalk, n, 1), 0);
    const MeanderEndpoints me = sample_meander_endpoints(inc, n, budget, mrng);
    std::vector<double> mb;
    mb.reserve(me.endpoints.size());
    for (double e : me.endpoints) mb.push_back(e / cn);

    // Self-normalizing constant for the meander route (route 2 of C0).
    double m0 = 0.0, m0sq = 0.0;
    for (double b : mb) {
        const double w = std::pow(b, kappa);
        m0 += w;
        m0sq += w * w;
    }
    const double msize = static_cast<double>(mb.size());
    m0 /= msize;
    const double m0_var = std::max(0.0, m0sq / msize - m0 * m0);
    const double c0_hat = 1.0 / m0;
    const double c0_se = std::sqrt(m0_var / msize) / (m0 * m0);

    // P+ endpoints: exact chain for the lattice walk, V-weighted free
    // paths otherwise.
    std::vector<double> pb, pw;
    Rng prng = Rng::for_replicate(cfg.seed, stream_id(kTagWalk, n, 2), 0);
    if (inc.is_lattice()) {
        const long paths = 20000;
        pb.reserve(paths);
        for (long i = 0; i < paths; ++i) {
            long x = 0;
            for (long k = 0; k < n; ++k) x = lattice::pplus_step(x, prng);
            pb.push_back(static_cast<double>(x) / cn);
        }
    } else {
        std::vector<double> grid{0.0};
        const double top = 1.3 * cn;
        const double lo = std::max(inc.u_star(), 0.02 * top);
        for (int i = 0; i < 16; ++i)
            grid.push_back(lo *
                           std::pow(top / lo, static_cast<double>(i) / 15.0));
        Rng vrng = Rng::for_replicate(cfg.seed, stream_id(kTagWalk, n, 3), 0);
        const HarmonicEstimate V =
            estimate_V(inc, grid, cfg.K, cfg.n_mc, vrng);
        // The acceptances of a fresh meander bundle, weighted by V(S_n),
        // are distributed as the V-transformed walk at time n.
        const MeanderEndpoints pe =
            sample_meander_endpoints(inc, n, budget, prng);
        for (double e : pe.endpoints) {
            pb.push_back(e / cn);
            pw.push_back(V.at(e));
        }
    }

    std::string csv = "x,route,estimate,se\n";
    std::vector<std::string> lines;
    ordered_json rows = ordered_json::array();
    bool passed = true;
    auto add_row = [&](double x, const char* route, double est, double se) {
        char row[160];
        std::snprintf(row, sizeof row, "%s,%s,%s,%s\n", fmt(x).c_str(), route,
                      fmt(est).c_str(), fmt(se).c_str());
        csv += row;
        ordered_json j;
        j["x"] = x;
        j["route"] = route;
        j["estimate"] = est;
        j["se"] = se;
        rows.push_back(j);
    };

    for (double x : xg) {
        const DEstimate dm = d_mc_meander(mb, x, kappa, c0_hat, c0_se);
        const DEstimate dp = d_mc_pplus(pb, pw, x, kappa);
        double ref = 0.0;
        if (a2) {
            ref = d_brownian(x);
            const double quad = d_defD_quadrature(x);
            add_row(x, "closed", ref, 0.0);
            add_row(x, "quadrature", quad, 0.0);
            if (std::fabs(ref - quad) > 1e-10) passed = false;
            const double band_m = std::max(0.03, 3.0 * dm.se);
            const double band_p = std::max(0.03, 3.0 * dp.se);
            if (std::fabs(dm.value - ref) > band_m) passed = false;
            if (std::fabs(dp.value - ref) > band_p) passed = false;
            std::ostringstream l;
            l << "x=" << fmt6(x) << " D=" << fmt6(ref) << " meander="
              << fmt6(dm.value) << "+-" << fmt6(dm.se) << " pplus="
              << fmt6(dp.value) << "+-" << fmt6(dp.se);
            lines.push_back(l.str());
        } else {
            const double joint =
                std::sqrt(dm.se * dm.se + dp.se * dp.se);
            if (std::fabs(dm.value - dp.value) > 3.0 * joint && joint > 0.0)
                passed = false;
            std::ostringstream l;
            l << "x=" << fmt6(x) << " meander=" << fmt6(dm.value) << "+-"
              << fmt6(dm.se) << " pplus=" << fmt6(dp.value) << "+-"
              << fmt6(dp.se) << " |diff|=" << fmt6(std::fabs(dm.value -
                                                             dp.value));
            lines.push_back(l.str());
        }
        add_row(x, "meander-mc", dm.value, dm.se);
        add_row(x, "pplus-mc", dp.value, dp.se);
    }

    ordered_json results;
    results["n"] = n;
    results["c_n"] = cn;
    results["kappa"] = kappa;
    results["c0_hat"] = c0_hat;
    results["c0_se"] = c0_se;
    results["meander_acceptance"] = me.acceptance_rate;
    results["rows"] = std::move(rows);

    ExperimentResult res =
        make_result(cfg, std::move(results), passed, std::move(lines));
    res.artifacts.emplace_back("limit_law_routes.csv", csv);
    return res;
}

}  // namespace

ExperimentResult run_reduced_experiment(const ExperimentConfig& cfg) {
    return reduced_or_tsmall(cfg, true);
}

ExperimentResult run_t_small(const ExperimentConfig& cfg) {
    return reduced_or_tsmall(cfg, false);
}

ExperimentResult run_minima_experiment(const ExperimentConfig& cfg) {
    return minima_experiment(cfg);
}

ExperimentResult run_survival_asymptotics(const ExperimentConfig& cfg) {
    return survival_asymptotics(cfg);
}

ExperimentResult run_w_constancy(const ExperimentConfig& cfg) {
    return w_constancy(cfg);
}

ExperimentResult run_harmonicity(const ExperimentConfig& cfg) {
    return harmonicity(cfg);
}

ExperimentResult run_limit_law_routes(const ExperimentConfig& cfg) {
    return limit_law_routes(cfg);
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
    switch (cfg.kind) {
        case ExperimentKind::ReducedLaw: return run_reduced_experiment(cfg);
        case ExperimentKind::MinimaLaw: return run_minima_experiment(cfg);
        case ExperimentKind::SurvivalAsymptotics:
            return run_survival_asymptotics(cfg);
        case ExperimentKind::TSmall: return run_t_small(cfg);
        case ExperimentKind::WConstancy: return run_w_constancy(cfg);
        case ExperimentKind::Harmonicity: return run_harmonicity(cfg);
        case ExperimentKind::LimitLawRoutes: return run_limit_law_routes(cfg);
    }
    throw Error("unknown experiment kind");
}

void write_artifacts(const ExperimentResult& result,
                     const std::string& out_dir) {
    std::filesystem::create_directories(out_dir);
    for (const auto& [name, bytes] : result.artifacts) {
        std::ofstream out(std::filesystem::path(out_dir) / name,
                          std::ios::binary);
        if (!out) throw Error("cannot write artifact: " + name);
        out.write(bytes.data(),
                  static_cast<std::streamsize>(bytes.size()));
    }
    std::ofstream js(std::filesystem::path(out_dir) /
                         (result.experiment + ".summary.json"),
                     std::ios::binary);
    if (!js) throw Error("cannot write summary for " + result.experiment);
    js.write(result.summary_json.data(),
             static_cast<std::streamsize>(result.summary_json.size()));
}

}  // namespace bpre
