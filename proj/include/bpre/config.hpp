#pragma once

// Experiment configuration: a human-readable "key = value" file whose
// lines are mirrored verbatim into the JSON summary so a run is fully
// reconstructible from its artifacts.

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "bpre/common.hpp"
#include "bpre/offspring.hpp"
#include "bpre/walk.hpp"

namespace bpre {

enum class ExperimentKind {
    ReducedLaw,
    MinimaLaw,
    SurvivalAsymptotics,
    TSmall,
    WConstancy,
    Harmonicity,
    LimitLawRoutes,
};

const char* experiment_name(ExperimentKind k);
ExperimentKind experiment_from_name(const std::string& name);

struct ExperimentConfig {
    ExperimentKind kind = ExperimentKind::ReducedLaw;

    // Environment: increment law of the associated walk plus offspring
    // family (conditionally on X the offspring mean is e^X).
    IncrementLaw increment = IncrementLaw::gaussian();
    EnvironmentModel::Family family = EnvironmentModel::Family::Geometric;
    double lf_eta = 2.0;  // linear-fractional family parameter

    std::vector<long> n_grid{512, 2048, 8192};
    bool p_power = true;      // p = floor(n^gamma) when true
    double p_gamma = 0.5;
    std::vector<long> p_list;  // explicit p per n when p_power = false

    long replicates = 200000;
    long replicas_per_env = 1;  // M population runs per environment
    long min_survivors = 500;
    std::uint64_t seed = 1;
    int workers = 1;
    std::string out_dir = "out";
    std::string format = "csv";  // csv | json

    std::vector<double> x_grid;   // D(x) evaluation grid (default if empty)
    std::vector<double> r_values{0.0};        // minima-law
    std::vector<long> q_grid{8, 32, 128};     // w-constancy
    double ks_threshold = 0.15;
    double walk_threshold = 0.05;  // pure-walk profile tolerance

    long K = 10000;      // renewal series depth (harmonicity / limit-law)
    long n_mc = 200000;  // renewal or residual-check bundle size
    long budget = 0;     // rejection budget (0 = auto)

    // Original key/value lines in file order, mirrored into summaries.
    std::vector<std::pair<std::string, std::string>> raw;
    std::vector<std::string> warnings;

    EnvironmentModel environment() const {
        return EnvironmentModel(increment, family, lf_eta);
    }

    // p for the i-th entry of n_grid under the configured rule.
    long p_for(std::size_t i) const;
};

// Parses the key = value text; unknown keys and malformed values throw
// DomainError.  Every configured (p, n) pair with p/n > 0.1 appends a
// warning (the scaling regime wants p much smaller than n).
ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig parse_config_file(const std::string& path);

}  // namespace bpre
