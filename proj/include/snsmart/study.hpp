#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "snsmart/estimators.hpp"
#include "snsmart/simulator.hpp"
#include "snsmart/weights.hpp"

namespace snsmart {

// Method labels accepted by StudyConfig::methods.
// FIXED0/FIXED1 are the conjugate fit with delta pinned to (0,0)/(1,1).
extern const std::vector<std::string> kMethodLabels;

struct StudyConfig {
    std::vector<ScenarioSpec> scenarios;
    std::vector<long long> n_totals;
    long long replications = 1;
    std::vector<std::string> methods;
    PriorConfig prior;
    // The rng field of mcmc is ignored; per-replication streams are derived
    // from master_seed so reports are independent of thread scheduling.
    McmcConfig mcmc;
    std::uint64_t master_seed = 0;
    int parallelism = 1;
    bool emit_delta_draws = false;

    void validate() const;
};

struct CellMetrics {
    std::string scenario;
    long long n_total = 0;
    std::string method;
    std::array<double, kTreatments> bias{};
    std::array<double, kTreatments> rmse{};
    double mean_abs_bias = 0.0;
    double mean_rmse = 0.0;
    std::optional<DeltaPair> delta_mean;
    std::optional<DeltaPair> delta_sd;
    long long replications_used = 0;
};

struct DeltaDraw {
    std::string scenario;
    long long n_total = 0;
    std::string method;
    long long replication = 0; // zero-based replication index
    DeltaPair delta;
};

struct StudyReport {
    StudyConfig config;
    std::vector<CellMetrics> cells;
    std::vector<DeltaDraw> delta_draws; // populated when emit_delta_draws
    long long total_replications = 0;   // dataset cells times replications
    long long excluded_replications = 0;
    double wall_seconds = 0.0;
};

// Runs the full (scenario x N x method) grid.  Every method within a
// replication sees the same simulated dataset.  A replication where any
// method fails is dropped from all methods of its cell and counted; more
// than 1% exclusions overall aborts the study.
StudyReport run_study(const StudyConfig& config);

// Writes delta_summary.csv, estimation_summary.csv, study_meta.json and,
// when draws were kept, delta_draws.csv.
void write_reports(const StudyReport& report, const std::string& out_dir);

StudyConfig parse_study_config(const std::string& json_text);
std::string study_config_to_json(const StudyConfig& config);

// Parses a single scenario: a bare builtin id, {"builtin": id}, or
// {"name":..., "stage1_rates":[3 numbers], "stage2_rates":[3x3 numbers]}.
ScenarioSpec parse_scenario_json(const std::string& json_text);

} // namespace snsmart
