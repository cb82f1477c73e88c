#pragma once

// Experiment runners behind the CLI: each consumes an ExperimentConfig,
// simulates with per-replicate RNG substreams (bit-identical output for
// any worker count), and returns report lines, CSV artifacts, and a
// JSON summary that mirrors the config verbatim.

#include <string>
#include <utility>
#include <vector>

#include "bpre/config.hpp"
#include "bpre/stats.hpp"

namespace bpre {

struct ExperimentResult {
    std::string experiment;
    bool passed = true;              // all configured thresholds met
    std::vector<std::string> lines;  // human-readable report
    std::string summary_json;
    // (filename, bytes) pairs; written under out_dir by write_artifacts.
    std::vector<std::pair<std::string, std::string>> artifacts;
};

ExperimentResult run_experiment(const ExperimentConfig& cfg);

ExperimentResult run_reduced_experiment(const ExperimentConfig& cfg);
ExperimentResult run_minima_experiment(const ExperimentConfig& cfg);
ExperimentResult run_survival_asymptotics(const ExperimentConfig& cfg);
ExperimentResult run_t_small(const ExperimentConfig& cfg);
ExperimentResult run_w_constancy(const ExperimentConfig& cfg);
ExperimentResult run_harmonicity(const ExperimentConfig& cfg);
ExperimentResult run_limit_law_routes(const ExperimentConfig& cfg);

// Writes every artifact plus <experiment>.summary.json into out_dir
// (created if missing).
void write_artifacts(const ExperimentResult& result,
                     const std::string& out_dir);

}  // namespace bpre
