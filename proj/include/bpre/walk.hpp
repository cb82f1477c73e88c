#pragma once

// The associated random walk: increment laws in a stable domain of
// attraction, truncated second moments, the norming sequence c_n, path
// simulation and path statistics (minima, maxima, first argmin).

#include <memory>
#include <vector>

#include "bpre/common.hpp"
#include "bpre/rng.hpp"
#include "bpre/stable.hpp"

namespace bpre {

class IncrementLaw {
  public:
    enum class Kind { LatticeSSRW, Gaussian, ExactStable, TwoSidedPareto };

    static IncrementLaw lattice();
    static IncrementLaw gaussian();
    static IncrementLaw exact_stable(double alpha, double beta, double c = 0.5);
    // |X| Pareto(alpha) on [1,inf), sign + with probability p_plus;
    // centered at construction when alpha > 1 so E X = 0.
    static IncrementLaw two_sided_pareto(double alpha, double p_plus);

    Kind kind() const { return kind_; }
    bool is_lattice() const { return kind_ == Kind::LatticeSSRW; }

    // Parameters (alpha, beta, c_lim(alpha)) of the attracting stable law
    // of G-normed partial sums.
    const StableParams& attracting() const { return attracting_; }
    double rho() const { return rho_; }

    double sample(Rng& rng) const;

    // G(u) = u^-2 * E[X^2; |X| <= u].  Closed form except for
    // exact-stable increments, which use the Fourier machinery.
    double G(double u) const;

    // Leftmost point with G > 0 (left edge of the support of |X|).
    double u_star() const;

    // Underlying stable law for exact-stable increments (null otherwise).
    const StableDist* stable_dist() const { return dist_.get(); }
    const StableParams& stable_raw() const { return raw_; }

  private:
    IncrementLaw() = default;

    Kind kind_ = Kind::LatticeSSRW;
    StableParams attracting_{2.0, 0.0, 0.5};
    double rho_ = 0.5;

    StableParams raw_{2.0, 0.0, 0.5};           // exact-stable only
    std::shared_ptr<const StableDist> dist_;    // exact-stable only
    double cms_tau_ = 0.0, cms_B_ = 0.0, cms_S_ = 1.0, cms_cpow_ = 1.0;

    double pareto_alpha_ = 0.0, p_plus_ = 0.5, center_ = 0.0;
};

// inf{u >= u* : G(v) <= 1/n for all v >= u}; bisection to relative
// tolerance 1e-9.  The "eventual" infimum avoids the degenerate zero
// answer for laws whose G vanishes near the origin.
double norming_cn(const IncrementLaw& law, long n);

struct WalkPath {
    std::vector<double> S;  // S[0] = 0, ..., S[n]
    long n() const { return long(S.size()) - 1; }
};

struct PathStats {
    double L;  // min_{0<=j<=n} S_j (includes S_0 = 0)
    double M;  // max_{1<=j<=n} S_j (excludes S_0; 0 for n = 0)
    long tau;  // first j with S_j = L
};

WalkPath simulate_walk(const IncrementLaw& law, long n, Rng& rng);

// Single left-to-right scan; tau is the first index attaining the
// minimum.  n = 0 yields the (0, 0, 0) convention.
PathStats path_statistics(const WalkPath& path);

// min_{k<=j<=n} S_j.
double min_from(const WalkPath& path, long k);

// L-hat_{k,n} = min_{0<=j<=n-k} (S_{k+j} - S_k).
double l_hat(const WalkPath& path, long k);

}  // namespace bpre
