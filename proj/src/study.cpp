#include "snsmart/study.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <thread>

#include <json.hpp>

#include "snsmart/csv.hpp"
#include "snsmart/errors.hpp"
#include "snsmart/version.hpp"

namespace snsmart {

const std::vector<std::string> kMethodLabels = {
    "FIXED0", "FIXED1", "PLC", "MLC", "MPP", "BOM", "FET", "BJSM"};

namespace {

struct MethodPlan {
    std::string label;
    enum class Kind { Conjugate, Mpp, Bjsm } kind = Kind::Conjugate;
    WeightRule rule = WeightRule::Fixed;
    DeltaPair fixed{0.0, 0.0};
};

MethodPlan plan_for(const std::string& label) {
    MethodPlan plan;
    plan.label = label;
    if (label == "FIXED0") {
        plan.rule = WeightRule::Fixed;
        plan.fixed = {0.0, 0.0};
    } else if (label == "FIXED1") {
        plan.rule = WeightRule::Fixed;
        plan.fixed = {1.0, 1.0};
    } else if (label == "PLC") {
        plan.rule = WeightRule::PLC;
    } else if (label == "MLC") {
        plan.rule = WeightRule::MLC;
    } else if (label == "BOM") {
        plan.rule = WeightRule::BOM;
    } else if (label == "FET") {
        plan.rule = WeightRule::FET;
    } else if (label == "MPP") {
        plan.kind = MethodPlan::Kind::Mpp;
    } else if (label == "BJSM") {
        plan.kind = MethodPlan::Kind::Bjsm;
    } else {
        throw ConfigError("unknown method label: " + label);
    }
    return plan;
}

// Stream id layout: dataset cell in the high bits, then a purpose tag
// (0 = trial simulation, 1 = MPP chain, 2 = BJSM chain), then the
// replication index.  Cell 0's simulation stream is plain (seed, rep).
std::uint64_t stream_id_for(std::size_t cell, int purpose, long long rep) {
    return (static_cast<std::uint64_t>(cell) << 40) |
           (static_cast<std::uint64_t>(purpose) << 32) |
           static_cast<std::uint64_t>(rep);
}

struct RepResult {
    bool failed = false;
    // Indexed by method position in the config.
    std::vector<std::array<double, kTreatments>> pi;
    std::vector<DeltaPair> delta;
    std::vector<char> has_delta;
};

bool is_builtin_scenario1(const ScenarioSpec& spec) {
    const ScenarioSpec ref = builtin_scenario(1);
    if (spec.stage1_rates != ref.stage1_rates) return false;
    return spec.stage2_rates == ref.stage2_rates;
}

} // namespace

void StudyConfig::validate() const {
    if (scenarios.empty()) throw ConfigError("study: no scenarios given");
    std::set<std::string> names;
    for (const auto& s : scenarios) {
        s.validate();
        if (!names.insert(s.name).second) {
            throw ConfigError("study: duplicate scenario name " + s.name);
        }
    }
    if (n_totals.empty()) throw ConfigError("study: no sample sizes given");
    std::set<long long> sizes;
    for (long long n : n_totals) {
        if (n <= 0 || n % kTreatments != 0) {
            throw ConfigError("study: sample sizes must be positive multiples of 3");
        }
        if (!sizes.insert(n).second) {
            throw ConfigError("study: duplicate sample size");
        }
    }
    if (replications < 1 || replications >= (1LL << 32)) {
        throw ConfigError("study: replications must be in [1, 2^32)");
    }
    if (scenarios.size() * n_totals.size() >= (1ULL << 24)) {
        throw ConfigError("study: too many scenario/size cells");
    }
    if (methods.empty()) throw ConfigError("study: no methods given");
    std::set<std::string> seen;
    for (const auto& m : methods) {
        plan_for(m); // validates the label
        if (!seen.insert(m).second) {
            throw ConfigError("study: duplicate method " + m);
        }
    }
    prior.validate();
    mcmc.validate();
    if (parallelism < 1) throw ConfigError("study: parallelism must be >= 1");
}

StudyReport run_study(const StudyConfig& config) {
    config.validate();
    const auto t0 = std::chrono::steady_clock::now();

    struct Cell {
        std::size_t index;
        const ScenarioSpec* scenario;
        long long n_total;
    };
    std::vector<Cell> cells;
    for (const auto& scenario : config.scenarios) {
        for (long long n : config.n_totals) {
            cells.push_back({cells.size(), &scenario, n});
        }
    }
    std::vector<MethodPlan> plans;
    plans.reserve(config.methods.size());
    for (const auto& m : config.methods) plans.push_back(plan_for(m));

    const long long reps = config.replications;
    const std::size_t n_items = cells.size() * static_cast<std::size_t>(reps);
    std::vector<RepResult> slots(n_items);

    std::atomic<std::size_t> next_item{0};
    auto worker = [&]() {
        for (;;) {
            const std::size_t item = next_item.fetch_add(1);
            if (item >= n_items) return;
            const std::size_t c = item / static_cast<std::size_t>(reps);
            const long long r =
                static_cast<long long>(item % static_cast<std::size_t>(reps));
            RepResult& slot = slots[item];
            try {
                RngStream sim_rng(config.master_seed,
                                  stream_id_for(cells[c].index, 0, r));
                const TrialCounts counts =
                    simulate_trial(*cells[c].scenario, cells[c].n_total, sim_rng);
                const SubgroupCounts sub = pool_subgroups(counts);
                slot.pi.resize(plans.size());
                slot.delta.resize(plans.size());
                slot.has_delta.assign(plans.size(), 0);
                for (std::size_t m = 0; m < plans.size(); ++m) {
                    const MethodPlan& plan = plans[m];
                    EstimateResult fit;
                    switch (plan.kind) {
                    case MethodPlan::Kind::Conjugate:
                        fit = fit_power_prior(counts, sub, config.prior,
                                              plan.rule, plan.fixed);
                        break;
                    case MethodPlan::Kind::Mpp: {
                        McmcConfig mc = config.mcmc;
                        mc.rng = RngStream(config.master_seed,
                                           stream_id_for(cells[c].index, 1, r));
                        fit = mpp_fit(counts, sub, config.prior, mc);
                        break;
                    }
                    case MethodPlan::Kind::Bjsm: {
                        McmcConfig mc = config.mcmc;
                        mc.rng = RngStream(config.master_seed,
                                           stream_id_for(cells[c].index, 2, r));
                        fit = bjsm_fit(counts, config.prior, mc);
                        break;
                    }
                    }
                    slot.pi[m] = fit.pi_hat;
                    if (fit.delta_hat) {
                        slot.delta[m] = *fit.delta_hat;
                        slot.has_delta[m] = 1;
                    }
                }
            } catch (const std::exception&) {
                slot.failed = true;
            }
        }
    };

    const std::size_t n_threads = std::min<std::size_t>(
        static_cast<std::size_t>(config.parallelism), std::max<std::size_t>(n_items, 1));
    std::vector<std::thread> threads;
    threads.reserve(n_threads);
    for (std::size_t t = 0; t < n_threads; ++t) threads.emplace_back(worker);
    for (auto& t : threads) t.join();

    StudyReport report;
    report.config = config;
    report.total_replications = static_cast<long long>(n_items);

    for (const Cell& cell : cells) {
        std::vector<const RepResult*> included;
        included.reserve(static_cast<std::size_t>(reps));
        for (long long r = 0; r < reps; ++r) {
            const RepResult& slot =
                slots[cell.index * static_cast<std::size_t>(reps) +
                      static_cast<std::size_t>(r)];
            if (slot.failed) {
                ++report.excluded_replications;
            } else {
                included.push_back(&slot);
            }
        }
        const auto used = static_cast<long long>(included.size());
        for (std::size_t m = 0; m < plans.size(); ++m) {
            CellMetrics metrics;
            metrics.scenario = cell.scenario->name;
            metrics.n_total = cell.n_total;
            metrics.method = plans[m].label;
            metrics.replications_used = used;
            if (used > 0) {
                for (int k = 0; k < kTreatments; ++k) {
                    const double truth = cell.scenario->stage1_rates[k];
                    double sum_err = 0.0;
                    double sum_sq = 0.0;
                    for (const RepResult* slot : included) {
                        const double err = slot->pi[m][k] - truth;
                        sum_err += err;
                        sum_sq += err * err;
                    }
                    metrics.bias[k] = sum_err / static_cast<double>(used);
                    metrics.rmse[k] =
                        std::sqrt(sum_sq / static_cast<double>(used));
                }
                double abs_bias = 0.0;
                double rmse = 0.0;
                for (int k = 0; k < kTreatments; ++k) {
                    abs_bias += std::fabs(metrics.bias[k]);
                    rmse += metrics.rmse[k];
                }
                metrics.mean_abs_bias = abs_bias / kTreatments;
                metrics.mean_rmse = rmse / kTreatments;

                const bool has_delta =
                    !included.empty() && included.front()->has_delta[m];
                if (has_delta) {
                    double s1 = 0.0, s2 = 0.0;
                    for (const RepResult* slot : included) {
                        s1 += slot->delta[m].d1;
                        s2 += slot->delta[m].d2;
                    }
                    DeltaPair mean{s1 / static_cast<double>(used),
                                   s2 / static_cast<double>(used)};
                    DeltaPair sd{0.0, 0.0};
                    if (used > 1) {
                        double v1 = 0.0, v2 = 0.0;
                        for (const RepResult* slot : included) {
                            v1 += (slot->delta[m].d1 - mean.d1) *
                                  (slot->delta[m].d1 - mean.d1);
                            v2 += (slot->delta[m].d2 - mean.d2) *
                                  (slot->delta[m].d2 - mean.d2);
                        }
                        sd.d1 = std::sqrt(v1 / static_cast<double>(used - 1));
                        sd.d2 = std::sqrt(v2 / static_cast<double>(used - 1));
                    }
                    metrics.delta_mean = mean;
                    metrics.delta_sd = sd;
                }
            }
            report.cells.push_back(std::move(metrics));
        }
        if (config.emit_delta_draws) {
            for (std::size_t m = 0; m < plans.size(); ++m) {
                for (long long r = 0; r < reps; ++r) {
                    const RepResult& slot =
                        slots[cell.index * static_cast<std::size_t>(reps) +
                              static_cast<std::size_t>(r)];
                    if (slot.failed || !slot.has_delta[m]) continue;
                    report.delta_draws.push_back({cell.scenario->name,
                                                  cell.n_total, plans[m].label,
                                                  r, slot.delta[m]});
                }
            }
        }
    }

    if (report.excluded_replications * 100 > report.total_replications) {
        throw NumericError(
            "study: " + std::to_string(report.excluded_replications) + " of " +
            std::to_string(report.total_replications) +
            " replications failed (over the 1% budget)");
    }

    // Full stage-2 pooling can only help when stage 2 replays stage 1's
    // rates exactly; a violation here means an estimator regression.
    if (reps >= 2000) {
        const auto has = [&](const char* label) {
            return std::find(config.methods.begin(), config.methods.end(),
                             label) != config.methods.end();
        };
        if (has("FIXED0") && has("FIXED1")) {
            for (const auto& scenario : config.scenarios) {
                if (!is_builtin_scenario1(scenario)) continue;
                for (long long n : config.n_totals) {
                    double rmse0 = -1.0, rmse1 = -1.0;
                    for (const auto& cell : report.cells) {
                        if (cell.scenario != scenario.name || cell.n_total != n)
                            continue;
                        if (cell.method == "FIXED0") rmse0 = cell.mean_rmse;
                        if (cell.method == "FIXED1") rmse1 = cell.mean_rmse;
                    }
                    if (rmse0 >= 0.0 && rmse1 >= 0.0 && rmse1 > rmse0) {
                        throw ConsistencyError(
                            "study: full pooling lost to no pooling under "
                            "fully compatible rates (FIXED1 rmse " +
                            format_double(rmse1) + " > FIXED0 rmse " +
                            format_double(rmse0) + ")");
                    }
                }
            }
        }
    }

    report.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    return report;
}

namespace {

using nlohmann::json;

void require_keys(const json& obj, const std::set<std::string>& allowed,
                  const std::string& context) {
    for (const auto& [key, value] : obj.items()) {
        (void)value;
        if (!allowed.count(key)) {
            throw ConfigError("config: unknown key \"" + key + "\" in " +
                              context);
        }
    }
}

double json_rate(const json& j, const std::string& context) {
    if (!j.is_number()) {
        throw ConfigError("config: " + context + " must be a number");
    }
    return j.get<double>();
}

ScenarioSpec scenario_from_json(const json& j, std::size_t position) {
    if (j.is_number_integer()) {
        return builtin_scenario(j.get<int>());
    }
    if (!j.is_object()) {
        throw ConfigError("config: scenario entries must be builtin ids or objects");
    }
    require_keys(j, {"name", "stage1_rates", "stage2_rates"}, "scenario");
    ScenarioSpec spec;
    spec.name = j.contains("name") ? j.at("name").get<std::string>()
                                   : "custom" + std::to_string(position + 1);
    const auto& s1 = j.at("stage1_rates");
    const auto& s2 = j.at("stage2_rates");
    if (!s1.is_array() || s1.size() != kTreatments) {
        throw ConfigError("config: stage1_rates must hold 3 numbers");
    }
    if (!s2.is_array() || s2.size() != kTreatments) {
        throw ConfigError("config: stage2_rates must be a 3x3 matrix");
    }
    for (int k = 0; k < kTreatments; ++k) {
        spec.stage1_rates[k] = json_rate(s1.at(k), "stage1_rates");
        if (!s2.at(k).is_array() || s2.at(k).size() != kTreatments) {
            throw ConfigError("config: stage2_rates must be a 3x3 matrix");
        }
        for (int kp = 0; kp < kTreatments; ++kp) {
            spec.stage2_rates[k][kp] = json_rate(s2.at(k).at(kp), "stage2_rates");
        }
    }
    spec.validate();
    return spec;
}

} // namespace

StudyConfig parse_study_config(const std::string& json_text) {
    json parsed;
    try {
        parsed = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("study config: ") + e.what());
    }
    if (!parsed.is_object()) {
        throw ConfigError("study config: top level must be an object");
    }
    require_keys(parsed,
                 {"schema_version", "scenarios", "n_totals", "replications",
                  "methods", "prior", "mcmc", "master_seed", "parallelism",
                  "emit_delta_draws"},
                 "study config");
    StudyConfig config;
    try {
        if (parsed.contains("schema_version")) {
            const int version = parsed.at("schema_version").get<int>();
            if (version != kSchemaVersion) {
                throw ConfigError("study config: unsupported schema_version " +
                                  std::to_string(version));
            }
        }
        const auto& scenarios = parsed.at("scenarios");
        if (!scenarios.is_array()) {
            throw ConfigError("study config: scenarios must be an array");
        }
        for (std::size_t i = 0; i < scenarios.size(); ++i) {
            config.scenarios.push_back(scenario_from_json(scenarios.at(i), i));
        }
        for (const auto& n : parsed.at("n_totals")) {
            config.n_totals.push_back(n.get<long long>());
        }
        config.replications = parsed.at("replications").get<long long>();
        for (const auto& m : parsed.at("methods")) {
            config.methods.push_back(m.get<std::string>());
        }
        if (parsed.contains("prior")) {
            const auto& p = parsed.at("prior");
            require_keys(p,
                         {"a_pi", "b_pi", "a_delta", "b_delta", "beta_shape",
                          "beta_rate"},
                         "prior");
            config.prior.a_pi = p.value("a_pi", config.prior.a_pi);
            config.prior.b_pi = p.value("b_pi", config.prior.b_pi);
            config.prior.a_delta = p.value("a_delta", config.prior.a_delta);
            config.prior.b_delta = p.value("b_delta", config.prior.b_delta);
            config.prior.beta_shape =
                p.value("beta_shape", config.prior.beta_shape);
            config.prior.beta_rate = p.value("beta_rate", config.prior.beta_rate);
        }
        if (parsed.contains("mcmc")) {
            const auto& m = parsed.at("mcmc");
            require_keys(m,
                         {"burn_in", "kept_samples", "thin", "step_logit_pi",
                          "step_logit_delta", "step_log_beta"},
                         "mcmc");
            config.mcmc.burn_in = m.value("burn_in", config.mcmc.burn_in);
            config.mcmc.kept_samples =
                m.value("kept_samples", config.mcmc.kept_samples);
            config.mcmc.thin = m.value("thin", config.mcmc.thin);
            config.mcmc.step_logit_pi =
                m.value("step_logit_pi", config.mcmc.step_logit_pi);
            config.mcmc.step_logit_delta =
                m.value("step_logit_delta", config.mcmc.step_logit_delta);
            config.mcmc.step_log_beta =
                m.value("step_log_beta", config.mcmc.step_log_beta);
        }
        if (parsed.contains("master_seed")) {
            config.master_seed = parsed.at("master_seed").get<std::uint64_t>();
        }
        if (parsed.contains("parallelism")) {
            config.parallelism = parsed.at("parallelism").get<int>();
        }
        if (parsed.contains("emit_delta_draws")) {
            config.emit_delta_draws = parsed.at("emit_delta_draws").get<bool>();
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("study config: ") + e.what());
    }
    config.validate();
    return config;
}

ScenarioSpec parse_scenario_json(const std::string& json_text) {
    json parsed;
    try {
        parsed = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("scenario: ") + e.what());
    }
    try {
        if (parsed.is_object() && parsed.contains("builtin")) {
            require_keys(parsed, {"builtin"}, "scenario");
            return builtin_scenario(parsed.at("builtin").get<int>());
        }
        return scenario_from_json(parsed, 0);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("scenario: ") + e.what());
    }
}

std::string study_config_to_json(const StudyConfig& config) {
    json out;
    out["schema_version"] = kSchemaVersion;
    json scenarios = json::array();
    for (const auto& s : config.scenarios) {
        json spec;
        spec["name"] = s.name;
        spec["stage1_rates"] = s.stage1_rates;
        spec["stage2_rates"] = s.stage2_rates;
        scenarios.push_back(std::move(spec));
    }
    out["scenarios"] = std::move(scenarios);
    out["n_totals"] = config.n_totals;
    out["replications"] = config.replications;
    out["methods"] = config.methods;
    out["prior"] = {{"a_pi", config.prior.a_pi},
                    {"b_pi", config.prior.b_pi},
                    {"a_delta", config.prior.a_delta},
                    {"b_delta", config.prior.b_delta},
                    {"beta_shape", config.prior.beta_shape},
                    {"beta_rate", config.prior.beta_rate}};
    out["mcmc"] = {{"burn_in", config.mcmc.burn_in},
                   {"kept_samples", config.mcmc.kept_samples},
                   {"thin", config.mcmc.thin},
                   {"step_logit_pi", config.mcmc.step_logit_pi},
                   {"step_logit_delta", config.mcmc.step_logit_delta},
                   {"step_log_beta", config.mcmc.step_log_beta}};
    out["master_seed"] = config.master_seed;
    out["parallelism"] = config.parallelism;
    out["emit_delta_draws"] = config.emit_delta_draws;
    return out.dump(2);
}

void write_reports(const StudyReport& report, const std::string& out_dir) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) {
        throw Error("cannot create output directory " + out_dir + ": " +
                    ec.message());
    }
    auto open = [&](const char* name) {
        std::ofstream out(fs::path(out_dir) / name, std::ios::binary);
        if (!out) {
            throw Error(std::string("cannot write ") + name + " in " + out_dir);
        }
        return out;
    };

    {
        auto out = open("delta_summary.csv");
        write_csv_row(out, {"scenario", "n_total", "method", "delta1_mean",
                            "delta1_sd", "delta2_mean", "delta2_sd"});
        for (const auto& cell : report.cells) {
            if (!cell.delta_mean) continue;
            write_csv_row(out, {cell.scenario, std::to_string(cell.n_total),
                                cell.method, format_double(cell.delta_mean->d1),
                                format_double(cell.delta_sd->d1),
                                format_double(cell.delta_mean->d2),
                                format_double(cell.delta_sd->d2)});
        }
    }
    {
        auto out = open("estimation_summary.csv");
        write_csv_row(out, {"scenario", "n_total", "method", "treatment",
                            "bias", "rmse"});
        for (const auto& cell : report.cells) {
            for (int k = 0; k < kTreatments; ++k) {
                write_csv_row(out, {cell.scenario, std::to_string(cell.n_total),
                                    cell.method,
                                    std::string(1, treatment_label(k)),
                                    format_double(cell.bias[k]),
                                    format_double(cell.rmse[k])});
            }
            // The ALL row carries the across-treatment summary pair:
            // mean absolute bias and mean rMSE.
            write_csv_row(out, {cell.scenario, std::to_string(cell.n_total),
                                cell.method, "ALL",
                                format_double(cell.mean_abs_bias),
                                format_double(cell.mean_rmse)});
        }
    }
    if (report.config.emit_delta_draws) {
        auto out = open("delta_draws.csv");
        write_csv_row(out, {"scenario", "n_total", "method", "replication",
                            "delta1", "delta2"});
        for (const auto& draw : report.delta_draws) {
            write_csv_row(out, {draw.scenario, std::to_string(draw.n_total),
                                draw.method, std::to_string(draw.replication),
                                format_double(draw.delta.d1),
                                format_double(draw.delta.d2)});
        }
    }
    {
        auto out = open("study_meta.json");
        json meta;
        meta["schema_version"] = kSchemaVersion;
        meta["library_version"] = kVersion;
        meta["config"] = json::parse(study_config_to_json(report.config));
        meta["total_replications"] = report.total_replications;
        meta["excluded_replications"] = report.excluded_replications;
        meta["wall_seconds"] = report.wall_seconds;
        json used = json::array();
        for (const auto& cell : report.cells) {
            used.push_back({{"scenario", cell.scenario},
                            {"n_total", cell.n_total},
                            {"method", cell.method},
                            {"replications_used", cell.replications_used}});
        }
        meta["cells"] = std::move(used);
        out << meta.dump(2) << '\n';
    }
}

} // namespace snsmart
