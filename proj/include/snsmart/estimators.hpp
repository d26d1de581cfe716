#pragma once

#include <array>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "snsmart/rng.hpp"
#include "snsmart/trial_data.hpp"
#include "snsmart/weights.hpp"

namespace snsmart {

struct ParamSummary {
    std::string name;
    double mean = 0.0;
    double sd = 0.0;
    double lo95 = 0.0;
    double hi95 = 0.0;
    // Present for MCMC output only; exact conjugate summaries have none.
    std::optional<double> ess;
};

struct McmcConfig {
    long long burn_in = 2000;
    long long kept_samples = 10000;
    long long thin = 1;
    double step_logit_pi = 1.0;
    double step_logit_delta = 1.0;
    double step_log_beta = 1.0;
    RngStream rng{0, 0};

    void validate() const;
};

struct FitDiagnostics {
    // Post-burn-in acceptance rate per Metropolis-updated parameter.
    std::vector<std::pair<std::string, double>> acceptance;
    std::vector<std::string> flags;
};

struct EstimateResult {
    std::string method;
    std::array<double, kTreatments> pi_hat{};
    std::optional<DeltaPair> delta_hat;
    std::optional<std::array<double, 2>> linkage_hat; // {beta0, beta1}
    std::vector<ParamSummary> summaries;
    FitDiagnostics diagnostics;
};

enum class WeightRule { Fixed, PLC, MLC, BOM, FET };

// Conjugate posterior under fixed weights:
// pi_k ~ Beta(z1 + sum_j d_j z2 + a_pi, n1-z1 + sum_j d_j (n2-z2) + b_pi).
// Summaries are exact (no sampling).
EstimateResult fit_fixed_delta(const TrialCounts& stage1,
                               const SubgroupCounts& sub,
                               const DeltaPair& delta,
                               const PriorConfig& prior);

// Selects delta by the named rule, then runs the conjugate update.  The
// fixed_delta argument is used only by WeightRule::Fixed.
EstimateResult fit_power_prior(const TrialCounts& stage1,
                               const SubgroupCounts& sub,
                               const PriorConfig& prior, WeightRule rule,
                               const DeltaPair& fixed_delta = {0.0, 0.0});

// Joint posterior over (pi, delta) where delta is random.  pi_k is drawn
// exactly from its conditional beta; each delta_j moves by random-walk
// Metropolis on the logit scale against a conditional that includes the
// weighted-prior normalizing constant.
EstimateResult mpp_fit(const TrialCounts& stage1, const SubgroupCounts& sub,
                       const PriorConfig& prior, const McmcConfig& mcmc);

// Joint stage model: stage-2 rates are beta1*pi_k for stage-1 responders
// and beta0*pi_k for re-randomized non-responders.  Random-walk Metropolis
// per parameter (logit for pi, log for beta); states where a populated
// binomial would need beta*pi > 1 are rejected.
EstimateResult bjsm_fit(const TrialCounts& counts, const PriorConfig& prior,
                        const McmcConfig& mcmc);

// Initial-positive-sequence estimate from chain autocorrelations.
double effective_sample_size(const std::vector<double>& chain);

std::string estimate_to_json(const EstimateResult& result);

} // namespace snsmart
