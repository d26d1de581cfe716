// Command line front end: analyze one dataset, simulate a trial, or run a
// Monte Carlo study grid.  Exit codes: 0 success, 1 usage/config error,
// 2 data error, 3 runtime failure.  Diagnostics go to stderr.

#include <cctype>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "snsmart/errors.hpp"
#include "snsmart/estimators.hpp"
#include "snsmart/simulator.hpp"
#include "snsmart/study.hpp"
#include "snsmart/trial_data.hpp"
#include "snsmart/version.hpp"
#include "snsmart/weights.hpp"

namespace {

using namespace snsmart;

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::string upper(std::string s) {
    for (char& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    return s;
}

struct AnalyzeArgs {
    std::string data_path;
    std::string method;
    double delta1 = -1.0; // sentinel: unset
    double delta2 = -1.0;
    PriorConfig prior;
    McmcConfig mcmc;
    std::uint64_t seed = 0;
    std::uint64_t stream = 0;
};

struct SimulateArgs {
    std::string scenario;
    long long n_total = 0;
    std::uint64_t seed = 0;
    std::uint64_t stream = 0;
    std::string out_path; // empty: stdout
};

struct StudyArgs {
    std::string config_path;
    std::string out_dir; // empty: fall back to SNSMART_OUT_DIR
    int threads = 0;     // 0: use the config's parallelism
};

void add_prior_options(CLI::App* cmd, PriorConfig& prior) {
    cmd->add_option("--a-pi", prior.a_pi, "Beta prior shape a for response rates");
    cmd->add_option("--b-pi", prior.b_pi, "Beta prior shape b for response rates");
    cmd->add_option("--a-delta", prior.a_delta, "Beta prior shape a for power parameters");
    cmd->add_option("--b-delta", prior.b_delta, "Beta prior shape b for power parameters");
    cmd->add_option("--beta-shape", prior.beta_shape, "Gamma prior shape for linkage parameters");
    cmd->add_option("--beta-rate", prior.beta_rate, "Gamma prior rate for linkage parameters");
}

void add_mcmc_options(CLI::App* cmd, McmcConfig& mcmc) {
    cmd->add_option("--burn-in", mcmc.burn_in, "Discarded MCMC iterations");
    cmd->add_option("--kept-samples", mcmc.kept_samples, "Recorded MCMC draws");
    cmd->add_option("--thin", mcmc.thin, "Iterations per recorded draw");
    cmd->add_option("--step-logit-pi", mcmc.step_logit_pi, "Proposal step on logit response rates");
    cmd->add_option("--step-logit-delta", mcmc.step_logit_delta, "Proposal step on logit power parameters");
    cmd->add_option("--step-log-beta", mcmc.step_log_beta, "Proposal step on log linkage parameters");
}

int run_analyze(const AnalyzeArgs& args) {
    std::vector<ParticipantRecord> records;
    if (args.data_path == "-") {
        records = parse_participants(std::cin);
    } else {
        std::ifstream in(args.data_path, std::ios::binary);
        if (!in) throw ParseError("cannot open " + args.data_path);
        records = parse_participants(in);
    }
    const TrialCounts counts = aggregate_counts(records);
    const SubgroupCounts sub = pool_subgroups(counts);

    const std::string method = upper(args.method);
    const bool has_delta = args.delta1 >= 0.0 || args.delta2 >= 0.0;
    if (has_delta && method != "FIXED") {
        throw ConfigError("--delta1/--delta2 apply only to --method fixed");
    }

    McmcConfig mcmc = args.mcmc;
    mcmc.rng = RngStream(args.seed, args.stream);

    EstimateResult result;
    if (method == "FIXED") {
        if (args.delta1 < 0.0 || args.delta2 < 0.0) {
            throw ConfigError("--method fixed requires --delta1 and --delta2");
        }
        result = fit_power_prior(counts, sub, args.prior, WeightRule::Fixed,
                                 {args.delta1, args.delta2});
    } else if (method == "FIXED0") {
        result = fit_power_prior(counts, sub, args.prior, WeightRule::Fixed, {0.0, 0.0});
    } else if (method == "FIXED1") {
        result = fit_power_prior(counts, sub, args.prior, WeightRule::Fixed, {1.0, 1.0});
    } else if (method == "PLC") {
        result = fit_power_prior(counts, sub, args.prior, WeightRule::PLC);
    } else if (method == "MLC") {
        result = fit_power_prior(counts, sub, args.prior, WeightRule::MLC);
    } else if (method == "BOM") {
        result = fit_power_prior(counts, sub, args.prior, WeightRule::BOM);
    } else if (method == "FET") {
        result = fit_power_prior(counts, sub, args.prior, WeightRule::FET);
    } else if (method == "MPP") {
        result = mpp_fit(counts, sub, args.prior, mcmc);
    } else if (method == "BJSM") {
        result = bjsm_fit(counts, args.prior, mcmc);
    } else {
        throw ConfigError("unknown method " + args.method +
                          " (expected fixed, fixed0, fixed1, plc, mlc, mpp, bom, fet or bjsm)");
    }
    std::cout << estimate_to_json(result) << '\n';
    return 0;
}

int run_simulate(const SimulateArgs& args) {
    ScenarioSpec scenario;
    const bool numeric = !args.scenario.empty() &&
                         args.scenario.find_first_not_of("0123456789") == std::string::npos;
    if (numeric) {
        int id = 0;
        try {
            id = std::stoi(args.scenario);
        } catch (const std::exception&) {
            throw ConfigError("scenario id out of range: " + args.scenario);
        }
        scenario = builtin_scenario(id);
    } else {
        scenario = parse_scenario_json(read_file(args.scenario));
    }
    RngStream rng(args.seed, args.stream);
    const std::vector<ParticipantRecord> records =
        simulate_participants(scenario, args.n_total, rng);
    if (args.out_path.empty()) {
        write_participants_csv(std::cout, records);
    } else {
        std::ofstream out(args.out_path, std::ios::binary);
        if (!out) throw Error("cannot write " + args.out_path);
        write_participants_csv(out, records);
    }
    return 0;
}

int run_study_cmd(const StudyArgs& args) {
    StudyConfig config = parse_study_config(read_file(args.config_path));
    if (args.threads > 0) config.parallelism = args.threads;

    std::string out_dir = args.out_dir;
    if (out_dir.empty()) {
        if (const char* env = std::getenv("SNSMART_OUT_DIR")) out_dir = env;
    }
    if (out_dir.empty()) {
        throw ConfigError("no output directory: pass --out or set SNSMART_OUT_DIR");
    }

    const StudyReport report = run_study(config);
    write_reports(report, out_dir);
    std::cerr << "study: " << report.cells.size() << " result cells, "
              << report.excluded_replications << " of " << report.total_replications
              << " replications excluded, " << report.wall_seconds
              << "s; reports in " << out_dir << '\n';
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"snSMART response rate estimation via power priors"};
    app.set_version_flag("--version", std::string(snsmart::kVersion));
    app.require_subcommand(1);

    AnalyzeArgs analyze_args;
    CLI::App* analyze = app.add_subcommand(
        "analyze", "Estimate response rates from a participant CSV");
    analyze->add_option("--data", analyze_args.data_path,
                        "Participant CSV path, or - for stdin")->required();
    analyze->add_option("--method", analyze_args.method,
                        "fixed, fixed0, fixed1, plc, mlc, mpp, bom, fet or bjsm")->required();
    analyze->add_option("--delta1", analyze_args.delta1,
                        "Responder-data weight in [0,1] (method fixed)")
        ->check(CLI::Range(0.0, 1.0));
    analyze->add_option("--delta2", analyze_args.delta2,
                        "Non-responder-data weight in [0,1] (method fixed)")
        ->check(CLI::Range(0.0, 1.0));
    analyze->add_option("--seed", analyze_args.seed, "RNG seed for MCMC methods");
    analyze->add_option("--stream", analyze_args.stream, "RNG stream id for MCMC methods");
    add_prior_options(analyze, analyze_args.prior);
    add_mcmc_options(analyze, analyze_args.mcmc);

    SimulateArgs simulate_args;
    CLI::App* simulate = app.add_subcommand(
        "simulate", "Simulate one trial and emit a participant CSV");
    simulate->add_option("--scenario", simulate_args.scenario,
                         "Builtin scenario id (1-7) or scenario JSON path")->required();
    simulate->add_option("--n", simulate_args.n_total,
                         "Participants, a positive multiple of 3")->required();
    simulate->add_option("--seed", simulate_args.seed, "RNG seed");
    simulate->add_option("--stream", simulate_args.stream, "RNG stream id");
    simulate->add_option("--out", simulate_args.out_path,
                         "Output CSV path (default: stdout)");

    StudyArgs study_args;
    CLI::App* study = app.add_subcommand(
        "study", "Run a Monte Carlo study from a JSON config");
    study->add_option("--config", study_args.config_path, "StudyConfig JSON path")->required();
    study->add_option("--out", study_args.out_dir,
                      "Report directory (default: $SNSMART_OUT_DIR)");
    study->add_option("--threads", study_args.threads,
                      "Worker threads (overrides the config's parallelism)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (analyze->parsed()) return run_analyze(analyze_args);
        if (simulate->parsed()) return run_simulate(simulate_args);
        if (study->parsed()) return run_study_cmd(study_args);
        std::cerr << "no subcommand given\n";
        return 1;
    } catch (const snsmart::ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const snsmart::ParseError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const snsmart::ConsistencyError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const snsmart::DomainError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    }
}
