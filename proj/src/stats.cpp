#include "bpre/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace bpre {

EmpiricalCDF::EmpiricalCDF(std::vector<double> values,
                           std::vector<double> weights) {
    if (values.empty()) throw Error("EmpiricalCDF: empty sample");
    if (!weights.empty() && weights.size() != values.size())
        throw Error("EmpiricalCDF: weight/value size mismatch");
    std::vector<size_t> idx(values.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(),
              [&](size_t a, size_t b) { return values[a] < values[b]; });
    values_.reserve(values.size());
    cum_.reserve(values.size());
    double acc = 0.0;
    for (size_t i : idx) {
        double w = weights.empty() ? 1.0 : weights[i];
        if (!(w >= 0.0)) throw Error("EmpiricalCDF: negative weight");
        acc += w;
        values_.push_back(values[i]);
        cum_.push_back(acc);
    }
    if (!(acc > 0.0)) throw Error("EmpiricalCDF: total weight must be > 0");
    for (double& c : cum_) c /= acc;
}

double EmpiricalCDF::operator()(double x) const {
    size_t i = size_t(std::upper_bound(values_.begin(), values_.end(), x) -
                      values_.begin());
    return i == 0 ? 0.0 : cum_[i - 1];
}

double EmpiricalCDF::ks_against(const std::function<double(double)>& ref) const {
    double ks = 0.0, prev = 0.0;
    for (size_t i = 0; i < values_.size(); ++i) {
        // Skip to the last tied value so F_hat is evaluated after the
        // full jump; `prev` holds the value just before the jump.
        if (i + 1 < values_.size() && values_[i + 1] == values_[i]) continue;
        double r = ref(values_[i]);
        ks = std::max(ks, std::fabs(cum_[i] - r));
        ks = std::max(ks, std::fabs(prev - r));
        prev = cum_[i];
    }
    return ks;
}

KSResult ks_distance(const std::vector<double>& values,
                     const std::function<double(double)>& ref,
                     const std::string& reference_name, double threshold,
                     Rng& rng, int boot, const std::vector<long>* clusters) {
    if (values.empty()) throw Error("ks_distance: empty sample");
    KSResult res;
    res.n = values.size();
    res.reference = reference_name;
    res.threshold = threshold;
    res.statistic = EmpiricalCDF(values).ks_against(ref);
    res.pass = res.statistic <= threshold;
    res.ci_lo = res.ci_hi = res.statistic;
    if (boot <= 0) return res;

    // Group indices by cluster (each value its own cluster if absent).
    std::vector<std::vector<size_t>> groups;
    if (clusters && !clusters->empty()) {
        if (clusters->size() != values.size())
            throw Error("ks_distance: cluster label size mismatch");
        std::vector<size_t> idx(values.size());
        std::iota(idx.begin(), idx.end(), 0);
        std::sort(idx.begin(), idx.end(), [&](size_t a, size_t b) {
            return (*clusters)[a] < (*clusters)[b];
        });
        for (size_t i = 0; i < idx.size();) {
            size_t j = i;
            groups.emplace_back();
            while (j < idx.size() &&
                   (*clusters)[idx[j]] == (*clusters)[idx[i]])
                groups.back().push_back(idx[j++]);
            i = j;
        }
    }
    std::vector<double> stats(static_cast<size_t>(boot));
    std::vector<double> resampled;
    for (int b = 0; b < boot; ++b) {
        resampled.clear();
        if (groups.empty()) {
            for (size_t i = 0; i < values.size(); ++i)
                resampled.push_back(
                    values[size_t(rng.u01() * double(values.size()))]);
        } else {
            while (resampled.size() < values.size()) {
                const auto& g = groups[size_t(rng.u01() * double(groups.size()))];
                for (size_t i : g) resampled.push_back(values[i]);
            }
        }
        stats[size_t(b)] = EmpiricalCDF(resampled).ks_against(ref);
    }
    std::sort(stats.begin(), stats.end());
    res.ci_lo = stats[size_t(0.025 * boot)];
    res.ci_hi = stats[std::min(size_t(boot) - 1, size_t(0.975 * boot))];
    return res;
}

double mean_of(const std::vector<double>& v) {
    if (v.empty()) throw Error("mean_of: empty input");
    double s = 0.0;
    for (double x : v) s += x;
    return s / double(v.size());
}

double sd_of(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    double m = mean_of(v), s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / double(v.size() - 1));
}

std::pair<double, double> bootstrap_ci_mean(const std::vector<double>& v,
                                            int boot, Rng& rng) {
    if (v.empty()) throw Error("bootstrap_ci_mean: empty input");
    std::vector<double> means(static_cast<size_t>(boot));
    for (int b = 0; b < boot; ++b) {
        double s = 0.0;
        for (size_t i = 0; i < v.size(); ++i)
            s += v[size_t(rng.u01() * double(v.size()))];
        means[size_t(b)] = s / double(v.size());
    }
    std::sort(means.begin(), means.end());
    return {means[size_t(0.025 * boot)],
            means[std::min(size_t(boot) - 1, size_t(0.975 * boot))]};
}

std::pair<double, double> bootstrap_ci_mean_clustered(
    const std::vector<double>& v, const std::vector<long>& clusters, int boot,
    Rng& rng) {
    if (v.empty()) throw Error("bootstrap_ci_mean_clustered: empty input");
    if (clusters.size() != v.size())
        throw Error("bootstrap_ci_mean_clustered: label size mismatch");
    // Per-cluster sums and counts; resample clusters with replacement.
    std::vector<long> ids = clusters;
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    std::vector<double> csum(ids.size(), 0.0);
    std::vector<double> ccnt(ids.size(), 0.0);
    for (size_t i = 0; i < v.size(); ++i) {
        size_t g = size_t(std::lower_bound(ids.begin(), ids.end(),
                                           clusters[i]) -
                          ids.begin());
        csum[g] += v[i];
        ccnt[g] += 1.0;
    }
    std::vector<double> means(static_cast<size_t>(boot));
    for (int b = 0; b < boot; ++b) {
        double s = 0.0, n = 0.0;
        for (size_t g = 0; g < ids.size(); ++g) {
            size_t pick = size_t(rng.u01() * double(ids.size()));
            s += csum[pick];
            n += ccnt[pick];
        }
        means[size_t(b)] = n > 0.0 ? s / n : 0.0;
    }
    std::sort(means.begin(), means.end());
    return {means[size_t(0.025 * boot)],
            means[std::min(size_t(boot) - 1, size_t(0.975 * boot))]};
}

double weighted_median(std::vector<double> values,
                       std::vector<double> weights) {
    if (values.empty() || values.size() != weights.size())
        throw Error("weighted_median: bad input");
    std::vector<size_t> idx(values.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(),
              [&](size_t a, size_t b) { return values[a] < values[b]; });
    double total = 0.0;
    for (double w : weights) total += w;
    if (!(total > 0.0)) throw Error("weighted_median: zero total weight");
    double acc = 0.0;
    for (size_t i : idx) {
        acc += weights[i];
        if (acc >= 0.5 * total) return values[i];
    }
    return values[idx.back()];
}

std::vector<double> isotonic_projection(const std::vector<double>& y,
                                        const std::vector<double>& w) {
    const size_t n = y.size();
    std::vector<double> level(n), weight(n);
    std::vector<size_t> count(n);
    size_t blocks = 0;
    for (size_t i = 0; i < n; ++i) {
        level[blocks] = y[i];
        weight[blocks] = w.empty() ? 1.0 : w[i];
        count[blocks] = 1;
        ++blocks;
        while (blocks > 1 && level[blocks - 2] > level[blocks - 1]) {
            double tw = weight[blocks - 2] + weight[blocks - 1];
            level[blocks - 2] =
                (level[blocks - 2] * weight[blocks - 2] +
                 level[blocks - 1] * weight[blocks - 1]) / tw;
            weight[blocks - 2] = tw;
            count[blocks - 2] += count[blocks - 1];
            --blocks;
        }
    }
    std::vector<double> out;
    out.reserve(n);
    for (size_t b = 0; b < blocks; ++b)
        out.insert(out.end(), count[b], level[b]);
    return out;
}

double fit_loglog_slope(const std::vector<double>& x,
                        const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2)
        throw Error("fit_loglog_slope: need >= 2 points");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (size_t i = 0; i < x.size(); ++i) {
        if (!(x[i] > 0.0 && y[i] > 0.0))
            throw Error("fit_loglog_slope: inputs must be positive");
        double lx = std::log(x[i]), ly = std::log(y[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    double n = double(x.size());
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

namespace {

// Regularized lower incomplete gamma P(a, x): series for x < a+1,
// continued fraction (modified Lentz) otherwise.
double gamma_p(double a, double x) {
    if (x <= 0.0) return 0.0;
    if (x < a + 1.0) {
        double ap = a, sum = 1.0 / a, del = sum;
        for (int i = 0; i < 500; ++i) {
            ap += 1.0;
            del *= x / ap;
            sum += del;
            if (std::fabs(del) < std::fabs(sum) * 1e-15) break;
        }
        return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
    }
    double b = x + 1.0 - a, c = 1e300, d = 1.0 / b, h = d;
    for (int i = 1; i < 500; ++i) {
        double an = -double(i) * (double(i) - a);
        b += 2.0;
        d = an * d + b;
        if (std::fabs(d) < 1e-300) d = 1e-300;
        c = b + an / c;
        if (std::fabs(c) < 1e-300) c = 1e-300;
        d = 1.0 / d;
        double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < 1e-15) break;
    }
    double q = std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
    return 1.0 - q;
}

}  // namespace

double chi2_sf(double x, double k) {
    if (x <= 0.0) return 1.0;
    return 1.0 - gamma_p(0.5 * k, 0.5 * x);
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

}  // namespace bpre
