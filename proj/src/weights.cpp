#include "snsmart/weights.hpp"

#include <algorithm>
#include <cmath>

#include "snsmart/errors.hpp"

namespace snsmart {

void PriorConfig::validate() const {
    const double vals[] = {a_pi, b_pi, a_delta, b_delta, beta_shape, beta_rate};
    for (double v : vals) {
        if (!(v > 0.0) || !std::isfinite(v)) {
            throw ConfigError("prior parameters must be positive and finite");
        }
    }
}

double fisher_exact_two_sided(long long n1, long long z1, long long n2,
                              long long z2) {
    if (z1 < 0 || z2 < 0 || z1 > n1 || z2 > n2 || n1 + n2 < 1) {
        throw DomainError("fisher_exact_two_sided: invalid table");
    }
    const long long total = n1 + n2;
    const long long successes = z1 + z2;
    const long long lo = std::max(0LL, n1 - (total - successes));
    const long long hi = std::min(n1, successes);
    if (lo == hi) return 1.0; // margins force a single table

    const double log_obs = log_hypergeom_pmf(z1, total, successes, n1);
    // Relative slack keeps tables that tie the observed probability but land
    // a few ulps above it from being dropped.
    const double cutoff = log_obs + std::log1p(1e-7);
    double p = 0.0;
    for (long long x = lo; x <= hi; ++x) {
        const double lp = log_hypergeom_pmf(x, total, successes, n1);
        if (lp <= cutoff) p += std::exp(lp);
    }
    return std::min(p, 1.0);
}

namespace {

// Average of per-treatment statistics over cells that hold any stage-2
// data; an entirely empty subgroup gets weight 0, which is inert because
// the weighted likelihood term it would scale is empty too.
template <typename PerTreatment>
DeltaPair average_over_nonempty(const SubgroupCounts& sub,
                                PerTreatment&& stat) {
    DeltaPair delta;
    for (int j = 0; j < 2; ++j) {
        double sum = 0.0;
        int cells = 0;
        for (int k = 0; k < kTreatments; ++k) {
            if (sub.n2[k][j] <= 0) continue;
            sum += stat(k, j);
            ++cells;
        }
        const double value = cells ? sum / cells : 0.0;
        if (j == 0) {
            delta.d1 = value;
        } else {
            delta.d2 = value;
        }
    }
    return delta;
}

} // namespace

DeltaPair delta_fet(const SubgroupCounts& sub, const TrialCounts& stage1) {
    return average_over_nonempty(sub, [&](int k, int j) {
        return fisher_exact_two_sided(stage1.n1[k], stage1.z1[k], sub.n2[k][j],
                                      sub.z2[k][j]);
    });
}

double bom_overlap(const BetaParams& p1, const BetaParams& p2) {
    const double log_overlap =
        log_beta({0.5 * (p1.a + p2.a), 0.5 * (p1.b + p2.b)}) -
        0.5 * (log_beta(p1) + log_beta(p2));
    return std::min(std::exp(log_overlap), 1.0);
}

DeltaPair delta_bom(const SubgroupCounts& sub, const TrialCounts& stage1,
                    const PriorConfig& prior) {
    prior.validate();
    return average_over_nonempty(sub, [&](int k, int j) {
        const BetaParams first{static_cast<double>(stage1.z1[k]) + prior.a_pi,
                               static_cast<double>(stage1.n1[k] - stage1.z1[k]) +
                                   prior.b_pi};
        const BetaParams second{static_cast<double>(sub.z2[k][j]) + prior.a_pi,
                                static_cast<double>(sub.n2[k][j] - sub.z2[k][j]) +
                                    prior.b_pi};
        return bom_overlap(first, second);
    });
}

namespace {

void check_delta(const DeltaPair& delta) {
    if (!(delta.d1 >= 0.0 && delta.d1 <= 1.0 && delta.d2 >= 0.0 &&
          delta.d2 <= 1.0)) {
        throw DomainError("power parameters must lie in [0,1]");
    }
}

} // namespace

double log_m_star(const DeltaPair& delta, const SubgroupCounts& sub,
                  const TrialCounts& stage1, const PriorConfig& prior) {
    check_delta(delta);
    prior.validate();
    const double d[2] = {delta.d1, delta.d2};
    double total = 0.0;
    for (int k = 0; k < kTreatments; ++k) {
        double a = static_cast<double>(stage1.z1[k]) + prior.a_pi;
        double b = static_cast<double>(stage1.n1[k] - stage1.z1[k]) + prior.b_pi;
        for (int j = 0; j < 2; ++j) {
            a += d[j] * static_cast<double>(sub.z2[k][j]);
            b += d[j] * static_cast<double>(sub.n2[k][j] - sub.z2[k][j]);
        }
        total += log_beta(a, b);
    }
    return total;
}

double log_m(const DeltaPair& delta, const SubgroupCounts& sub,
             const TrialCounts& stage1, const PriorConfig& prior) {
    check_delta(delta);
    prior.validate();
    const double d[2] = {delta.d1, delta.d2};
    double denom = 0.0;
    for (int k = 0; k < kTreatments; ++k) {
        double a = prior.a_pi;
        double b = prior.b_pi;
        for (int j = 0; j < 2; ++j) {
            a += d[j] * static_cast<double>(sub.z2[k][j]);
            b += d[j] * static_cast<double>(sub.n2[k][j] - sub.z2[k][j]);
        }
        denom += log_beta(a, b);
    }
    return log_m_star(delta, sub, stage1, prior) - denom;
}

DeltaPair delta_plc(const SubgroupCounts& sub, const TrialCounts& stage1,
                    const PriorConfig& prior, double search_floor,
                    bool* degenerate) {
    prior.validate();
    if (!(search_floor > 0.0 && search_floor < 1.0)) {
        throw DomainError("delta_plc: search floor must lie in (0,1)");
    }
    if (degenerate) *degenerate = false;

    double subgroup_total[2] = {0.0, 0.0};
    for (int j = 0; j < 2; ++j) {
        for (int k = 0; k < kTreatments; ++k) {
            subgroup_total[j] += static_cast<double>(sub.n2[k][j]);
        }
    }
    // log(total)/delta only penalizes once the subgroup holds at least two
    // observations; below that the term is zero or undefined and the
    // component is pinned to 0 and left out of the search.
    const bool usable1 = subgroup_total[0] > 1.0;
    const bool usable2 = subgroup_total[1] > 1.0;
    const double log_total1 = usable1 ? std::log(subgroup_total[0]) : 0.0;
    const double log_total2 = usable2 ? std::log(subgroup_total[1]) : 0.0;

    if (!usable1 && !usable2) {
        if (degenerate) *degenerate = true;
        return {0.0, 0.0};
    }
    constexpr double kCoarseStep = 0.01;
    constexpr int kRefineRounds = 2;
    if (usable1 && usable2) {
        const auto best = grid_minimize_2d(
            [&](double d1, double d2) {
                return -2.0 * log_m_star({d1, d2}, sub, stage1, prior) +
                       log_total1 / d1 + log_total2 / d2;
            },
            search_floor, kCoarseStep, kRefineRounds);
        return {best.x1, best.x2};
    }
    if (usable1) {
        const auto best = grid_minimize_1d(
            [&](double d1) {
                return -2.0 * log_m_star({d1, 0.0}, sub, stage1, prior) +
                       log_total1 / d1;
            },
            search_floor, kCoarseStep, kRefineRounds);
        return {best.x, 0.0};
    }
    const auto best = grid_minimize_1d(
        [&](double d2) {
            return -2.0 * log_m_star({0.0, d2}, sub, stage1, prior) +
                   log_total2 / d2;
        },
        search_floor, kCoarseStep, kRefineRounds);
    return {0.0, best.x};
}

DeltaPair delta_mlc(const SubgroupCounts& sub, const TrialCounts& stage1,
                    const PriorConfig& prior) {
    prior.validate();
    const auto best = grid_minimize_2d(
        [&](double d1, double d2) {
            return -2.0 * log_m({d1, d2}, sub, stage1, prior);
        },
        0.0, 0.01, 2);
    return {best.x1, best.x2};
}

} // namespace snsmart
