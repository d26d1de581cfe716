#include "snsmart/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <json.hpp>

#include "snsmart/errors.hpp"
#include "snsmart/numerics.hpp"

namespace snsmart {

void McmcConfig::validate() const {
    if (burn_in < 0 || kept_samples < 1 || thin < 1) {
        throw ConfigError("mcmc: need burn_in >= 0, kept_samples >= 1, thin >= 1");
    }
    if (!(step_logit_pi > 0.0) || !(step_logit_delta > 0.0) ||
        !(step_log_beta > 0.0)) {
        throw ConfigError("mcmc: step sizes must be positive");
    }
}

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double sigmoid(double t) {
    if (t >= 0.0) {
        return 1.0 / (1.0 + std::exp(-t));
    }
    const double e = std::exp(t);
    return e / (1.0 + e);
}

// log sigmoid(t), stable over the whole real line.
double log_sigmoid(double t) {
    if (t >= 0.0) return -std::log1p(std::exp(-t));
    return t - std::log1p(std::exp(t));
}

double logit(double p) { return std::log(p) - std::log1p(-p); }

double chain_mean(const std::vector<double>& chain) {
    return std::accumulate(chain.begin(), chain.end(), 0.0) /
           static_cast<double>(chain.size());
}

double chain_sd(const std::vector<double>& chain, double mean) {
    if (chain.size() < 2) return 0.0;
    double ss = 0.0;
    for (double x : chain) ss += (x - mean) * (x - mean);
    return std::sqrt(ss / static_cast<double>(chain.size() - 1));
}

double sorted_quantile(const std::vector<double>& sorted, double q) {
    const double h = q * static_cast<double>(sorted.size() - 1);
    const auto i = static_cast<std::size_t>(h);
    if (i + 1 >= sorted.size()) return sorted.back();
    const double frac = h - static_cast<double>(i);
    return sorted[i] + frac * (sorted[i + 1] - sorted[i]);
}

ParamSummary summarize_chain(const std::string& name,
                             const std::vector<double>& chain) {
    ParamSummary s;
    s.name = name;
    s.mean = chain_mean(chain);
    s.sd = chain_sd(chain, s.mean);
    std::vector<double> sorted(chain);
    std::sort(sorted.begin(), sorted.end());
    s.lo95 = sorted_quantile(sorted, 0.025);
    s.hi95 = sorted_quantile(sorted, 0.975);
    s.ess = effective_sample_size(chain);
    return s;
}

// Doubles or halves a step size during burn-in, aiming at the 20-50%
// acceptance band.  Frozen after burn-in so the kept chain is a fixed
// Metropolis kernel.
struct StepAdapter {
    double step;
    long long proposals = 0;
    long long accepts = 0;

    void record(bool accepted) {
        ++proposals;
        if (accepted) ++accepts;
        if (proposals == 100) {
            const double rate =
                static_cast<double>(accepts) / static_cast<double>(proposals);
            if (rate < 0.2) {
                step = std::max(step * 0.5, 1e-3);
            } else if (rate > 0.5) {
                step = std::min(step * 2.0, 100.0);
            }
            proposals = 0;
            accepts = 0;
        }
    }
};

struct AcceptCounter {
    long long proposals = 0;
    long long accepts = 0;

    double rate() const {
        return proposals ? static_cast<double>(accepts) /
                               static_cast<double>(proposals)
                         : 0.0;
    }
};

void flag_acceptance(FitDiagnostics& diag, const std::string& name,
                     const AcceptCounter& counter) {
    const double rate = counter.rate();
    diag.acceptance.emplace_back(name, rate);
    if (rate < 0.05 || rate > 0.95) {
        diag.flags.push_back("acceptance_out_of_range:" + name);
    }
}

std::string pi_name(int k) {
    return std::string("pi_") + treatment_label(k);
}

// The power prior fits consume only the stage-1 margins plus the stage-2
// subgroup cells, so they accept datasets without per-pathway bookkeeping
// (for example stage-1 margins alongside empty stage-2 cells).
void check_margins(const TrialCounts& stage1, const SubgroupCounts& sub) {
    for (int k = 0; k < kTreatments; ++k) {
        const std::string t(1, treatment_label(k));
        if (stage1.n1[k] < 0 || stage1.z1[k] < 0 ||
            stage1.z1[k] > stage1.n1[k]) {
            throw ConsistencyError("counts for treatment " + t +
                                   ": need 0 <= z1 <= n1");
        }
        for (int j = 0; j < 2; ++j) {
            if (sub.n2[k][j] < 0 || sub.z2[k][j] < 0 ||
                sub.z2[k][j] > sub.n2[k][j]) {
                throw ConsistencyError("stage-2 cells for treatment " + t +
                                       ": need 0 <= z2 <= n2");
            }
        }
    }
}

} // namespace

double effective_sample_size(const std::vector<double>& chain) {
    const auto n = chain.size();
    if (n < 4) return static_cast<double>(n);
    const double mean = chain_mean(chain);
    std::vector<double> centered(n);
    for (std::size_t i = 0; i < n; ++i) centered[i] = chain[i] - mean;

    auto autocov = [&](std::size_t lag) {
        double s = 0.0;
        for (std::size_t i = 0; i + lag < n; ++i) {
            s += centered[i] * centered[i + lag];
        }
        return s / static_cast<double>(n);
    };
    const double c0 = autocov(0);
    if (!(c0 > 0.0)) return static_cast<double>(n);

    // Geyer initial positive sequence: sum adjacent-lag pairs while the
    // pair sums stay positive.
    const std::size_t max_lag = std::min(n - 1, static_cast<std::size_t>(2000));
    double var = -c0;
    for (std::size_t m = 0; 2 * m + 1 <= max_lag; ++m) {
        const double gamma = autocov(2 * m) + autocov(2 * m + 1);
        if (gamma <= 0.0) break;
        var += 2.0 * gamma;
    }
    if (!(var > 0.0)) return static_cast<double>(n);
    return static_cast<double>(n) * c0 / var;
}

EstimateResult fit_fixed_delta(const TrialCounts& stage1,
                               const SubgroupCounts& sub,
                               const DeltaPair& delta,
                               const PriorConfig& prior) {
    check_margins(stage1, sub);
    prior.validate();
    if (!(delta.d1 >= 0.0 && delta.d1 <= 1.0 && delta.d2 >= 0.0 &&
          delta.d2 <= 1.0)) {
        throw DomainError("fit_fixed_delta: delta outside [0,1]");
    }
    EstimateResult result;
    result.method = "FIXED";
    result.delta_hat = delta;
    const double d[2] = {delta.d1, delta.d2};
    for (int k = 0; k < kTreatments; ++k) {
        double a = static_cast<double>(stage1.z1[k]) + prior.a_pi;
        double b =
            static_cast<double>(stage1.n1[k] - stage1.z1[k]) + prior.b_pi;
        for (int j = 0; j < 2; ++j) {
            a += d[j] * static_cast<double>(sub.z2[k][j]);
            b += d[j] * static_cast<double>(sub.n2[k][j] - sub.z2[k][j]);
        }
        const BetaParams post{a, b};
        ParamSummary s;
        s.name = pi_name(k);
        s.mean = beta_mean(post);
        s.sd = beta_sd(post);
        s.lo95 = beta_quantile(post, 0.025);
        s.hi95 = beta_quantile(post, 0.975);
        result.pi_hat[k] = s.mean;
        result.summaries.push_back(std::move(s));
    }
    return result;
}

EstimateResult fit_power_prior(const TrialCounts& stage1,
                               const SubgroupCounts& sub,
                               const PriorConfig& prior, WeightRule rule,
                               const DeltaPair& fixed_delta) {
    DeltaPair delta;
    std::string label;
    std::vector<std::string> flags;
    switch (rule) {
    case WeightRule::Fixed:
        delta = fixed_delta;
        if (delta.d1 == 0.0 && delta.d2 == 0.0) {
            label = "FIXED0";
        } else if (delta.d1 == 1.0 && delta.d2 == 1.0) {
            label = "FIXED1";
        } else {
            label = "FIXED";
        }
        break;
    case WeightRule::PLC: {
        bool degenerate = false;
        delta = delta_plc(sub, stage1, prior, 0.001, &degenerate);
        if (degenerate) flags.push_back("plc_degenerate_no_stage2_data");
        label = "PLC";
        break;
    }
    case WeightRule::MLC:
        delta = delta_mlc(sub, stage1, prior);
        label = "MLC";
        break;
    case WeightRule::BOM:
        delta = delta_bom(sub, stage1, prior);
        label = "BOM";
        break;
    case WeightRule::FET:
        delta = delta_fet(sub, stage1);
        label = "FET";
        break;
    }
    EstimateResult result = fit_fixed_delta(stage1, sub, delta, prior);
    result.method = label;
    for (auto& f : flags) result.diagnostics.flags.push_back(std::move(f));
    return result;
}

EstimateResult mpp_fit(const TrialCounts& stage1, const SubgroupCounts& sub,
                       const PriorConfig& prior, const McmcConfig& mcmc) {
    check_margins(stage1, sub);
    prior.validate();
    mcmc.validate();
    RngStream rng = mcmc.rng;

    const double z2[kTreatments][2] = {
        {static_cast<double>(sub.z2[0][0]), static_cast<double>(sub.z2[0][1])},
        {static_cast<double>(sub.z2[1][0]), static_cast<double>(sub.z2[1][1])},
        {static_cast<double>(sub.z2[2][0]), static_cast<double>(sub.z2[2][1])}};
    const double f2[kTreatments][2] = {
        {static_cast<double>(sub.n2[0][0] - sub.z2[0][0]),
         static_cast<double>(sub.n2[0][1] - sub.z2[0][1])},
        {static_cast<double>(sub.n2[1][0] - sub.z2[1][0]),
         static_cast<double>(sub.n2[1][1] - sub.z2[1][1])},
        {static_cast<double>(sub.n2[2][0] - sub.z2[2][0]),
         static_cast<double>(sub.n2[2][1] - sub.z2[2][1])}};

    // Log normalizing constant of the weighted prior, summed over
    // treatments; constant in pi, so it only enters the delta updates.
    auto log_norm_const = [&](const double d[2]) {
        double total = 0.0;
        for (int k = 0; k < kTreatments; ++k) {
            total += log_beta(d[0] * z2[k][0] + d[1] * z2[k][1] + prior.a_pi,
                              d[0] * f2[k][0] + d[1] * f2[k][1] + prior.b_pi);
        }
        return total;
    };

    double pi[kTreatments];
    double log_pi[kTreatments];
    double log_1mpi[kTreatments];
    double theta[2];
    double d[2];
    d[0] = d[1] = prior.a_delta / (prior.a_delta + prior.b_delta);
    theta[0] = theta[1] = logit(d[0]);
    for (int k = 0; k < kTreatments; ++k) {
        pi[k] = (static_cast<double>(stage1.z1[k]) + prior.a_pi) /
                (static_cast<double>(stage1.n1[k]) + prior.a_pi + prior.b_pi);
        log_pi[k] = std::log(pi[k]);
        log_1mpi[k] = std::log1p(-pi[k]);
    }

    // Conditional log density of theta_j = logit(delta_j) given pi and the
    // other component; the beta prior and the logit Jacobian fold into
    // a_delta*log(d) + b_delta*log(1-d).
    auto delta_log_target = [&](int j, double theta_j, double d_other) {
        const double ld = log_sigmoid(theta_j);
        const double l1md = ld - theta_j;
        const double dj = std::exp(ld);
        double data_term = 0.0;
        for (int k = 0; k < kTreatments; ++k) {
            data_term += z2[k][j] * log_pi[k] + f2[k][j] * log_1mpi[k];
        }
        double dd[2];
        dd[j] = dj;
        dd[1 - j] = d_other;
        return prior.a_delta * ld + prior.b_delta * l1md + dj * data_term -
               log_norm_const(dd);
    };

    StepAdapter adapter[2] = {{mcmc.step_logit_delta}, {mcmc.step_logit_delta}};
    AcceptCounter kept_accept[2];

    std::vector<double> pi_chain[kTreatments];
    std::vector<double> delta_chain[2];
    for (auto& c : pi_chain) c.reserve(static_cast<std::size_t>(mcmc.kept_samples));
    for (auto& c : delta_chain) c.reserve(static_cast<std::size_t>(mcmc.kept_samples));

    const long long total_iters = mcmc.burn_in + mcmc.kept_samples * mcmc.thin;
    for (long long iter = 0; iter < total_iters; ++iter) {
        const bool burning = iter < mcmc.burn_in;

        for (int k = 0; k < kTreatments; ++k) {
            const double a =
                static_cast<double>(stage1.z1[k]) + d[0] * z2[k][0] +
                d[1] * z2[k][1] + prior.a_pi;
            const double b =
                static_cast<double>(stage1.n1[k] - stage1.z1[k]) +
                d[0] * f2[k][0] + d[1] * f2[k][1] + prior.b_pi;
            pi[k] = sample_beta(rng, a, b);
            log_pi[k] = std::log(pi[k]);
            log_1mpi[k] = std::log1p(-pi[k]);
        }

        for (int j = 0; j < 2; ++j) {
            const double proposal =
                theta[j] + adapter[j].step * sample_normal(rng, 0.0, 1.0);
            const double cur = delta_log_target(j, theta[j], d[1 - j]);
            const double prop = delta_log_target(j, proposal, d[1 - j]);
            const double log_alpha = prop - cur;
            const double log_u = std::log(rng.uniform_pos());
            const bool accept = log_alpha > kNegInf && log_u < log_alpha;
            if (accept) {
                theta[j] = proposal;
                d[j] = sigmoid(proposal);
            }
            if (burning) {
                adapter[j].record(accept);
            } else {
                ++kept_accept[j].proposals;
                if (accept) ++kept_accept[j].accepts;
            }
        }

        if (!burning && (iter - mcmc.burn_in) % mcmc.thin == mcmc.thin - 1) {
            for (int k = 0; k < kTreatments; ++k) pi_chain[k].push_back(pi[k]);
            delta_chain[0].push_back(d[0]);
            delta_chain[1].push_back(d[1]);
        }
    }

    EstimateResult result;
    result.method = "MPP";
    for (int k = 0; k < kTreatments; ++k) {
        result.summaries.push_back(summarize_chain(pi_name(k), pi_chain[k]));
        result.pi_hat[k] = result.summaries.back().mean;
    }
    for (int j = 0; j < 2; ++j) {
        result.summaries.push_back(
            summarize_chain("delta_" + std::to_string(j + 1), delta_chain[j]));
    }
    result.delta_hat =
        DeltaPair{result.summaries[3].mean, result.summaries[4].mean};
    for (int j = 0; j < 2; ++j) {
        flag_acceptance(result.diagnostics, "delta_" + std::to_string(j + 1),
                        kept_accept[j]);
    }
    return result;
}

EstimateResult bjsm_fit(const TrialCounts& counts, const PriorConfig& prior,
                        const McmcConfig& mcmc) {
    counts.validate();
    prior.validate();
    mcmc.validate();
    RngStream rng = mcmc.rng;

    // Pool non-responder arrivals onto their stage-2 treatment; the model
    // gives every arrival at k the same rate beta0*pi_k, so only the
    // per-destination totals matter.
    double non_trials[kTreatments] = {0.0, 0.0, 0.0};
    double non_resp[kTreatments] = {0.0, 0.0, 0.0};
    for (int kp = 0; kp < kTreatments; ++kp) {
        for (int k = 0; k < kTreatments; ++k) {
            non_trials[k] += static_cast<double>(counts.m_non[kp][k]);
            non_resp[k] += static_cast<double>(counts.y_non[kp][k]);
        }
    }

    struct State {
        double t[kTreatments]; // logit(pi)
        double u[2];           // log(beta0), log(beta1)
    };

    // Joint log posterior on the transformed scale, Jacobians included.
    // The beta*pi <= 1 truncation applies wherever the trial has a binomial
    // with at least one trial; without data the factor does not exist and
    // must not distort the prior.
    auto log_post = [&](const State& s) {
        double lp = 0.0;
        double pi_k[kTreatments];
        for (int k = 0; k < kTreatments; ++k) {
            const double lpi = log_sigmoid(s.t[k]);
            const double l1mpi = lpi - s.t[k];
            pi_k[k] = std::exp(lpi);
            const double z1 = static_cast<double>(counts.z1[k]);
            const double n1 = static_cast<double>(counts.n1[k]);
            lp += (z1 + prior.a_pi) * lpi + (n1 - z1 + prior.b_pi) * l1mpi;
        }
        const double beta0 = std::exp(s.u[0]);
        const double beta1 = std::exp(s.u[1]);
        lp += prior.beta_shape * s.u[0] - prior.beta_rate * beta0;
        lp += prior.beta_shape * s.u[1] - prior.beta_rate * beta1;
        if (!std::isfinite(lp)) return kNegInf;

        for (int k = 0; k < kTreatments; ++k) {
            const double z1 = static_cast<double>(counts.z1[k]);
            if (z1 > 0.0) {
                const double rate = beta1 * pi_k[k];
                if (rate > 1.0) return kNegInf;
                const double y = static_cast<double>(counts.y_resp[k]);
                if (y > 0.0) lp += y * std::log(rate);
                if (z1 - y > 0.0) {
                    if (rate >= 1.0) return kNegInf;
                    lp += (z1 - y) * std::log1p(-rate);
                }
            }
            if (non_trials[k] > 0.0) {
                const double rate = beta0 * pi_k[k];
                if (rate > 1.0) return kNegInf;
                const double y = non_resp[k];
                if (y > 0.0) lp += y * std::log(rate);
                if (non_trials[k] - y > 0.0) {
                    if (rate >= 1.0) return kNegInf;
                    lp += (non_trials[k] - y) * std::log1p(-rate);
                }
            }
        }
        return lp;
    };

    State state;
    for (int k = 0; k < kTreatments; ++k) {
        const double init =
            (static_cast<double>(counts.z1[k]) + prior.a_pi) /
            (static_cast<double>(counts.n1[k]) + prior.a_pi + prior.b_pi);
        state.t[k] = logit(init);
    }
    state.u[0] = 0.0;
    state.u[1] = 0.0;
    double cur_lp = log_post(state);

    StepAdapter pi_adapter[kTreatments] = {
        {mcmc.step_logit_pi}, {mcmc.step_logit_pi}, {mcmc.step_logit_pi}};
    StepAdapter beta_adapter[2] = {{mcmc.step_log_beta}, {mcmc.step_log_beta}};
    AcceptCounter kept_pi[kTreatments];
    AcceptCounter kept_beta[2];

    std::vector<double> pi_chain[kTreatments];
    std::vector<double> beta_chain[2];
    for (auto& c : pi_chain) c.reserve(static_cast<std::size_t>(mcmc.kept_samples));
    for (auto& c : beta_chain) c.reserve(static_cast<std::size_t>(mcmc.kept_samples));

    const long long total_iters = mcmc.burn_in + mcmc.kept_samples * mcmc.thin;
    for (long long iter = 0; iter < total_iters; ++iter) {
        const bool burning = iter < mcmc.burn_in;

        for (int k = 0; k < kTreatments; ++k) {
            State proposal = state;
            proposal.t[k] =
                state.t[k] + pi_adapter[k].step * sample_normal(rng, 0.0, 1.0);
            const double prop_lp = log_post(proposal);
            const double log_alpha = prop_lp - cur_lp;
            const bool accept = log_alpha > kNegInf &&
                                std::log(rng.uniform_pos()) < log_alpha;
            if (accept) {
                state = proposal;
                cur_lp = prop_lp;
            }
            if (burning) {
                pi_adapter[k].record(accept);
            } else {
                ++kept_pi[k].proposals;
                if (accept) ++kept_pi[k].accepts;
            }
        }
        for (int b = 0; b < 2; ++b) {
            State proposal = state;
            proposal.u[b] =
                state.u[b] + beta_adapter[b].step * sample_normal(rng, 0.0, 1.0);
            const double prop_lp = log_post(proposal);
            const double log_alpha = prop_lp - cur_lp;
            const bool accept = log_alpha > kNegInf &&
                                std::log(rng.uniform_pos()) < log_alpha;
            if (accept) {
                state = proposal;
                cur_lp = prop_lp;
            }
            if (burning) {
                beta_adapter[b].record(accept);
            } else {
                ++kept_beta[b].proposals;
                if (accept) ++kept_beta[b].accepts;
            }
        }

        if (!burning && (iter - mcmc.burn_in) % mcmc.thin == mcmc.thin - 1) {
            for (int k = 0; k < kTreatments; ++k) {
                pi_chain[k].push_back(sigmoid(state.t[k]));
            }
            beta_chain[0].push_back(std::exp(state.u[0]));
            beta_chain[1].push_back(std::exp(state.u[1]));
        }
    }

    EstimateResult result;
    result.method = "BJSM";
    for (int k = 0; k < kTreatments; ++k) {
        result.summaries.push_back(summarize_chain(pi_name(k), pi_chain[k]));
        result.pi_hat[k] = result.summaries.back().mean;
    }
    result.summaries.push_back(summarize_chain("beta0", beta_chain[0]));
    result.summaries.push_back(summarize_chain("beta1", beta_chain[1]));
    result.linkage_hat = {result.summaries[3].mean, result.summaries[4].mean};
    for (int k = 0; k < kTreatments; ++k) {
        flag_acceptance(result.diagnostics, pi_name(k), kept_pi[k]);
    }
    flag_acceptance(result.diagnostics, "beta0", kept_beta[0]);
    flag_acceptance(result.diagnostics, "beta1", kept_beta[1]);
    return result;
}

std::string estimate_to_json(const EstimateResult& result) {
    nlohmann::json out;
    out["method"] = result.method;
    nlohmann::json pi = nlohmann::json::object();
    for (int k = 0; k < kTreatments; ++k) {
        pi[std::string(1, treatment_label(k))] = result.pi_hat[k];
    }
    out["pi_hat"] = std::move(pi);
    if (result.delta_hat) {
        out["delta_hat"] = {{"delta_1", result.delta_hat->d1},
                            {"delta_2", result.delta_hat->d2}};
    }
    if (result.linkage_hat) {
        out["linkage_hat"] = {{"beta0", (*result.linkage_hat)[0]},
                              {"beta1", (*result.linkage_hat)[1]}};
    }
    nlohmann::json summaries = nlohmann::json::array();
    for (const auto& s : result.summaries) {
        nlohmann::json row = {{"name", s.name}, {"mean", s.mean},
                              {"sd", s.sd},     {"lo95", s.lo95},
                              {"hi95", s.hi95}};
        if (s.ess) row["ess"] = *s.ess;
        summaries.push_back(std::move(row));
    }
    out["summaries"] = std::move(summaries);
    nlohmann::json acceptance = nlohmann::json::object();
    for (const auto& [name, rate] : result.diagnostics.acceptance) {
        acceptance[name] = rate;
    }
    out["diagnostics"] = {{"acceptance", std::move(acceptance)},
                          {"flags", result.diagnostics.flags}};
    return out.dump(2);
}

} // namespace snsmart
