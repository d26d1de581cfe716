#pragma once

#include "snsmart/numerics.hpp"
#include "snsmart/trial_data.hpp"

namespace snsmart {

// Power parameters: d1 weights the responder subgroup, d2 the non-responder
// subgroup.  Both live in [0,1]; 0 discards stage-2 data, 1 pools it fully.
struct DeltaPair {
    double d1 = 0.0;
    double d2 = 0.0;
};

struct PriorConfig {
    double a_pi = 1.0;
    double b_pi = 1.0;
    double a_delta = 1.0;
    double b_delta = 1.0;
    double beta_shape = 1.0;
    double beta_rate = 1.0;

    void validate() const;
};

// Two-sided p-value with both margins fixed (rows n1/n2, columns by total
// responders).  A table counts as at least as extreme when its
// hypergeometric probability is <= the observed one; a relative slack of
// 1e-7 absorbs floating-point ties.  Returns 1.0 when a margin is zero.
double fisher_exact_two_sided(long long n1, long long z1, long long n2,
                              long long z2);

// delta_j = mean Fisher p-value over treatments with data in subgroup j;
// 0 when the whole subgroup is empty (the weight then multiplies nothing).
DeltaPair delta_fet(const SubgroupCounts& sub, const TrialCounts& stage1);

// Bhattacharyya overlap of two beta densities, in (0,1]; 1 iff identical.
double bom_overlap(const BetaParams& p1, const BetaParams& p2);

// delta_j = mean overlap between the stage-1 posterior and the subgroup-j
// stage-2 posterior, same empty-cell convention as delta_fet.
DeltaPair delta_bom(const SubgroupCounts& sub, const TrialCounts& stage1,
                    const PriorConfig& prior);

// Log marginal likelihood of the weighted data (additive constant dropped):
// sum over k of log B(z1 + sum_j d_j z2 + a_pi, n1-z1 + sum_j d_j (n2-z2) + b_pi).
double log_m_star(const DeltaPair& delta, const SubgroupCounts& sub,
                  const TrialCounts& stage1, const PriorConfig& prior);

// log_m_star minus the log normalizing constant of the weighted prior.
double log_m(const DeltaPair& delta, const SubgroupCounts& sub,
             const TrialCounts& stage1, const PriorConfig& prior);

// Minimizes -2 log_m_star + sum_j log(sum_k n2[k][j]) / d_j over
// [search_floor, 1]^2.  A subgroup with at most one observation has no
// usable penalty; its component is pinned to 0 and dropped from the search.
// Both subgroups empty sets *degenerate and returns (0,0).
DeltaPair delta_plc(const SubgroupCounts& sub, const TrialCounts& stage1,
                    const PriorConfig& prior, double search_floor = 0.001,
                    bool* degenerate = nullptr);

// Minimizes -2 log_m over the full [0,1]^2; 0 and 1 are admissible here.
DeltaPair delta_mlc(const SubgroupCounts& sub, const TrialCounts& stage1,
                    const PriorConfig& prior);

} // namespace snsmart
