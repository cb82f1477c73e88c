#include "bpre/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace bpre {

const char* experiment_name(ExperimentKind k) {
    switch (k) {
        case ExperimentKind::ReducedLaw: return "reduced-law";
        case ExperimentKind::MinimaLaw: return "minima-law";
        case ExperimentKind::SurvivalAsymptotics: return "survival-asymptotics";
        case ExperimentKind::TSmall: return "t-small";
        case ExperimentKind::WConstancy: return "w-constancy";
        case ExperimentKind::Harmonicity: return "harmonicity";
        case ExperimentKind::LimitLawRoutes: return "limit-law-routes";
    }
    return "?";
}

ExperimentKind experiment_from_name(const std::string& name) {
    for (ExperimentKind k :
         {ExperimentKind::ReducedLaw, ExperimentKind::MinimaLaw,
          ExperimentKind::SurvivalAsymptotics, ExperimentKind::TSmall,
          ExperimentKind::WConstancy, ExperimentKind::Harmonicity,
          ExperimentKind::LimitLawRoutes})
        if (name == experiment_name(k)) return k;
    throw DomainError("unknown experiment name: " + name);
}

long ExperimentConfig::p_for(std::size_t i) const {
    if (i >= n_grid.size()) throw DomainError("p_for: index out of range");
    if (p_power)
        return static_cast<long>(
            std::floor(std::pow(static_cast<double>(n_grid[i]), p_gamma)));
    if (p_list.size() != n_grid.size())
        throw DomainError("p list length must match the n grid");
    return p_list[i];
}

namespace {

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

double parse_double(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        double x = std::stod(v, &pos);
        if (trim(v.substr(pos)).empty()) return x;
    } catch (...) {
    }
    throw DomainError("config: bad numeric value for " + key + ": " + v);
}

long parse_long(const std::string& key, const std::string& v) {
    const double x = parse_double(key, v);
    if (x != std::floor(x))
        throw DomainError("config: " + key + " must be an integer");
    return static_cast<long>(x);
}

std::vector<std::string> split_commas(const std::string& v) {
    std::vector<std::string> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(trim(item));
    return out;
}

std::vector<double> parse_doubles(const std::string& key,
                                  const std::string& v) {
    std::vector<double> out;
    for (const auto& s : split_commas(v)) out.push_back(parse_double(key, s));
    return out;
}

std::vector<long> parse_longs(const std::string& key, const std::string& v) {
    std::vector<long> out;
    for (const auto& s : split_commas(v)) out.push_back(parse_long(key, s));
    return out;
}

struct IncrementSpec {
    std::string kind = "gaussian";
    double alpha = 1.5, beta = 0.0, c = 0.5, p_plus = 0.5;

    IncrementLaw build() const {
        if (kind == "lattice-ssrw") return IncrementLaw::lattice();
        if (kind == "gaussian") return IncrementLaw::gaussian();
        if (kind == "exact-stable")
            return IncrementLaw::exact_stable(alpha, beta, c);
        if (kind == "two-sided-pareto")
            return IncrementLaw::two_sided_pareto(alpha, p_plus);
        throw DomainError("config: unknown increment kind: " + kind);
    }
};

}  // namespace

ExperimentConfig parse_config_text(const std::string& text) {
    ExperimentConfig cfg;
    IncrementSpec inc;
    bool have_x_grid = false;

    std::stringstream ss(text);
    std::string line;
    while (std::getline(ss, line)) {
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        const std::size_t eq = t.find('=');
        if (eq == std::string::npos)
            throw DomainError("config: expected 'key = value': " + t);
        const std::string key = trim(t.substr(0, eq));
        const std::string val = trim(t.substr(eq + 1));
        cfg.raw.emplace_back(key, val);

        if (key == "experiment") {
            cfg.kind = experiment_from_name(val);
        } else if (key == "env.family") {
            if (val == "geometric")
                cfg.family = EnvironmentModel::Family::Geometric;
            else if (val == "poisson")
                cfg.family = EnvironmentModel::Family::Poisson;
            else if (val == "linear-fractional")
                cfg.family = EnvironmentModel::Family::LinearFractional;
            else
                throw DomainError("config: unknown offspring family: " + val);
        } else if (key == "env.increment") {
            inc.kind = val;
        } else if (key == "env.alpha") {
            inc.alpha = parse_double(key, val);
        } else if (key == "env.beta") {
            inc.beta = parse_double(key, val);
        } else if (key == "env.c") {
            inc.c = parse_double(key, val);
        } else if (key == "env.p_plus") {
            inc.p_plus = parse_double(key, val);
        } else if (key == "env.eta") {
            cfg.lf_eta = parse_double(key, val);
        } else if (key == "n_grid") {
            cfg.n_grid = parse_longs(key, val);
        } else if (key == "p_rule") {
            if (val.rfind("power:", 0) == 0) {
                cfg.p_power = true;
                cfg.p_gamma = parse_double(key, val.substr(6));
                if (!(cfg.p_gamma > 0.0 && cfg.p_gamma < 1.0))
                    throw DomainError("config: p power must be in (0,1)");
            } else if (val.rfind("list:", 0) == 0) {
                cfg.p_power = false;
                cfg.p_list = parse_longs(key, val.substr(5));
            } else {
                throw DomainError(
                    "config: p_rule must be power:<gamma> or list:<p,...>");
            }
        } else if (key == "replicates") {
            cfg.replicates = parse_long(key, val);
        } else if (key == "replicas_per_env") {
            cfg.replicas_per_env = parse_long(key, val);
        } else if (key == "min_survivors") {
            cfg.min_survivors = parse_long(key, val);
        } else if (key == "seed") {
            cfg.seed = static_cast<std::uint64_t>(parse_long(key, val));
        } else if (key == "workers") {
            cfg.workers = static_cast<int>(parse_long(key, val));
        } else if (key == "out_dir") {
            cfg.out_dir = val;
        } else if (key == "format") {
            if (val != "csv" && val != "json")
                throw DomainError("config: format must be csv or json");
            cfg.format = val;
        } else if (key == "x_grid") {
            cfg.x_grid = parse_doubles(key, val);
            have_x_grid = true;
        } else if (key == "r_values") {
            cfg.r_values = parse_doubles(key, val);
        } else if (key == "q_grid") {
            cfg.q_grid = parse_longs(key, val);
        } else if (key == "ks_threshold") {
            cfg.ks_threshold = parse_double(key, val);
        } else if (key == "walk_threshold") {
            cfg.walk_threshold = parse_double(key, val);
        } else if (key == "K") {
            cfg.K = parse_long(key, val);
        } else if (key == "n_mc") {
            cfg.n_mc = parse_long(key, val);
        } else if (key == "budget") {
            cfg.budget = parse_long(key, val);
        } else {
            throw DomainError("config: unknown key: " + key);
        }
    }

    cfg.increment = inc.build();
    (void)have_x_grid;
    if (cfg.replicates < 1) throw DomainError("config: replicates must be >= 1");
    if (cfg.replicas_per_env < 1)
        throw DomainError("config: replicas_per_env must be >= 1");
    if (cfg.workers < 1) throw DomainError("config: workers must be >= 1");
    if (cfg.n_grid.empty()) throw DomainError("config: empty n grid");
    for (long n : cfg.n_grid)
        if (n < 1) throw DomainError("config: n grid entries must be >= 1");
    if (!cfg.p_power && cfg.p_list.size() != cfg.n_grid.size())
        throw DomainError("config: p list length must match the n grid");

    // Scaling-regime gate: p should be much smaller than n.
    for (std::size_t i = 0; i < cfg.n_grid.size(); ++i) {
        const long n = cfg.n_grid[i];
        const long p = cfg.p_for(i);
        if (p < 0 || p > n)
            throw DomainError("config: p must lie in [0, n]");
        if (static_cast<double>(p) > 0.1 * static_cast<double>(n)) {
            std::ostringstream w;
            w << "p/n = " << static_cast<double>(p) / static_cast<double>(n)
              << " at n = " << n
              << " exceeds 0.1; the limit regime wants p << n";
            cfg.warnings.push_back(w.str());
        }
    }
    return cfg;
}

ExperimentConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open config file: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str());
}

}  // namespace bpre
