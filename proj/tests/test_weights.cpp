#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "snsmart/errors.hpp"
#include "snsmart/numerics.hpp"
#include "snsmart/trial_data.hpp"
#include "snsmart/weights.hpp"
#include "support/oracles.hpp"

using namespace snsmart;

namespace {

bool close(double a, double b, double tol) { return std::fabs(a - b) <= tol; }

// A consistent trial where every arm has n1 participants, z1 responders,
// and the pooled stage-2 cells are given directly.
TrialCounts uniform_stage1(long long n1, long long z1) {
    TrialCounts counts;
    for (int k = 0; k < kTreatments; ++k) {
        counts.n1[k] = n1;
        counts.z1[k] = z1;
    }
    return counts;
}

SubgroupCounts cells(std::array<std::array<long long, 2>, 3> n2,
                     std::array<std::array<long long, 2>, 3> z2) {
    SubgroupCounts sub;
    sub.n2 = n2;
    sub.z2 = z2;
    return sub;
}

} // namespace

TEST_CASE("fisher p-value equals one on balanced and degenerate tables") {
    CHECK(fisher_exact_two_sided(10, 5, 10, 5) == 1.0);
    CHECK(fisher_exact_two_sided(10, 0, 10, 0) == 1.0);
    CHECK(fisher_exact_two_sided(10, 10, 10, 10) == 1.0);
    CHECK(fisher_exact_two_sided(0, 0, 10, 3) == 1.0);
    CHECK(fisher_exact_two_sided(10, 3, 0, 0) == 1.0);
    CHECK_THROWS_AS(fisher_exact_two_sided(10, 11, 10, 5), DomainError);
    CHECK_THROWS_AS(fisher_exact_two_sided(-1, 0, 10, 5), DomainError);
}

TEST_CASE("fisher p-value matches the textbook 10/10 example") {
    // Margins 10/10 with 3 vs 7 responders: p = 2 * 16526 / 184756.
    const double p = fisher_exact_two_sided(10, 3, 10, 7);
    CHECK(close(p, 33052.0 / 184756.0, 1e-12));
    // Symmetry in the two rows.
    CHECK(fisher_exact_two_sided(10, 7, 10, 3) == doctest::Approx(p).epsilon(1e-13));
}

TEST_CASE("fisher p-value agrees with exact enumeration on small margins") {
    for (long long n1 = 0; n1 <= 12; ++n1) {
        for (long long n2 = 0; n2 <= 12; ++n2) {
            if (n1 + n2 < 1) continue; // outside the operation's domain
            for (long long z1 = 0; z1 <= n1; ++z1) {
                for (long long z2 = 0; z2 <= n2; ++z2) {
                    const double lib = fisher_exact_two_sided(n1, z1, n2, z2);
                    const oracle::FisherExact ref =
                        oracle::fisher_enumerate(n1, z1, n2, z2);
                    CHECK(close(lib, ref.p, 1e-12));
                }
            }
        }
    }
}

TEST_CASE("fet weights average per-arm p-values over nonempty cells") {
    const TrialCounts stage1 = uniform_stage1(10, 5);
    // Identical proportions in every cell give the maximal weight.
    const DeltaPair full = delta_fet(
        cells({{{10, 10}, {10, 10}, {10, 10}}}, {{{5, 5}, {5, 5}, {5, 5}}}),
        stage1);
    CHECK(full.d1 == 1.0);
    CHECK(full.d2 == 1.0);

    // An empty subgroup contributes weight zero.
    const DeltaPair empty = delta_fet(
        cells({{{10, 0}, {10, 0}, {10, 0}}}, {{{5, 0}, {5, 0}, {5, 0}}}),
        stage1);
    CHECK(empty.d1 == 1.0);
    CHECK(empty.d2 == 0.0);

    // Averaging skips empty cells rather than diluting with them.
    const DeltaPair partial = delta_fet(
        cells({{{10, 0}, {0, 0}, {0, 0}}}, {{{3, 0}, {0, 0}, {0, 0}}}),
        stage1);
    CHECK(close(partial.d1, fisher_exact_two_sided(10, 5, 10, 3), 1e-15));
    CHECK(partial.d2 == 0.0);
}

TEST_CASE("bhattacharyya overlap closed form, symmetry, quadrature") {
    CHECK(bom_overlap({2.0, 3.0}, {2.0, 3.0}) == doctest::Approx(1.0).epsilon(1e-13));
    const double direct = bom_overlap({3.0, 8.0}, {7.0, 4.0});
    const double by_quad = quad_01(
        [](double x) {
            return std::exp(0.5 * (beta_log_pdf({3.0, 8.0}, x) +
                                   beta_log_pdf({7.0, 4.0}, x)));
        },
        1e-12);
    CHECK(close(direct, by_quad, 1e-10));
    CHECK(bom_overlap({3.0, 8.0}, {7.0, 4.0}) ==
          doctest::Approx(bom_overlap({7.0, 4.0}, {3.0, 8.0})).epsilon(1e-13));

    std::mt19937_64 gen(31);
    std::uniform_real_distribution<double> shape(0.5, 50.0);
    for (int i = 0; i < 100; ++i) {
        const BetaParams p1{shape(gen), shape(gen)};
        const BetaParams p2{shape(gen), shape(gen)};
        const double lib = bom_overlap(p1, p2);
        CHECK(lib > 0.0);
        CHECK(lib <= 1.0 + 1e-12);
        const double ref = quad_01(
            [&](double x) {
                return std::exp(0.5 * (beta_log_pdf(p1, x) + beta_log_pdf(p2, x)));
            },
            1e-11);
        CHECK(close(lib, ref, 1e-8));
    }
}

TEST_CASE("bom weights replay the fet empty-cell conventions") {
    const TrialCounts stage1 = uniform_stage1(10, 5);
    const PriorConfig prior;
    // Stage 2 replicating stage 1 exactly makes both overlaps one.
    const DeltaPair full = delta_bom(
        cells({{{10, 10}, {10, 10}, {10, 10}}}, {{{5, 5}, {5, 5}, {5, 5}}}),
        stage1, prior);
    CHECK(close(full.d1, 1.0, 1e-12));
    CHECK(close(full.d2, 1.0, 1e-12));
    const DeltaPair empty = delta_bom(
        cells({{{0, 10}, {0, 10}, {0, 10}}}, {{{0, 5}, {0, 5}, {0, 5}}}),
        stage1, prior);
    CHECK(empty.d1 == 0.0);
    CHECK(close(empty.d2, 1.0, 1e-12));
}

TEST_CASE("compatibility moves both per-arm measures monotonically") {
    // Stage 1: 12/30.  Stage 2 cell: n = 20 with z sweeping across 0..20;
    // agreement peaks at z = 8 and both measures decay away from it.
    const double stage1_rate_match = 8.0;
    double prev_fet = -1.0, prev_bom = -1.0;
    for (long long z = 0; z <= 20; ++z) {
        const double p = fisher_exact_two_sided(30, 12, 20, z);
        const double o = bom_overlap({13.0, 19.0},
                                     {static_cast<double>(z) + 1.0,
                                      static_cast<double>(20 - z) + 1.0});
        if (z <= static_cast<long long>(stage1_rate_match)) {
            CHECK(p >= prev_fet - 1e-12);
            CHECK(o >= prev_bom - 1e-12);
            prev_fet = p;
            prev_bom = o;
        } else {
            CHECK(p <= prev_fet + 1e-12);
            CHECK(o <= prev_bom + 1e-12);
            prev_fet = p;
            prev_bom = o;
        }
    }
}

TEST_CASE("weighted marginal likelihood hits its closed forms") {
    const TrialCounts stage1 = uniform_stage1(30, 9);
    const SubgroupCounts sub =
        cells({{{9, 14}, {9, 13}, {9, 15}}}, {{{3, 4}, {4, 5}, {2, 6}}});
    const PriorConfig prior;

    // With delta = 0 only stage 1 contributes.
    double expect0 = 0.0;
    for (int k = 0; k < kTreatments; ++k) {
        expect0 += log_beta(9.0 + 1.0, 21.0 + 1.0);
    }
    CHECK(close(log_m_star({0.0, 0.0}, sub, stage1, prior), expect0, 1e-12));
    CHECK(close(log_m({0.0, 0.0}, sub, stage1, prior),
                expect0 - 3.0 * log_beta(1.0, 1.0), 1e-12));

    // With delta = 1 the subgroups pool into the stage-1 cells.
    double expect1 = 0.0;
    double norm1 = 0.0;
    for (int k = 0; k < kTreatments; ++k) {
        const double z2 = static_cast<double>(sub.z2[k][0] + sub.z2[k][1]);
        const double f2 = static_cast<double>(sub.n2[k][0] + sub.n2[k][1]) - z2;
        expect1 += log_beta(9.0 + z2 + 1.0, 21.0 + f2 + 1.0);
        norm1 += log_beta(z2 + 1.0, f2 + 1.0);
    }
    CHECK(close(log_m_star({1.0, 1.0}, sub, stage1, prior), expect1, 1e-12));
    CHECK(close(log_m({1.0, 1.0}, sub, stage1, prior), expect1 - norm1, 1e-12));

    // At fractional weights each term is still a genuine beta integral.
    const DeltaPair d{0.5, 0.25};
    for (int k = 0; k < kTreatments; ++k) {
        const double wz = d.d1 * sub.z2[k][0] + d.d2 * sub.z2[k][1];
        const double wf = d.d1 * (sub.n2[k][0] - sub.z2[k][0]) +
                          d.d2 * (sub.n2[k][1] - sub.z2[k][1]);
        const double a = 9.0 + wz + 1.0;
        const double b = 21.0 + wf + 1.0;
        const double normalized = quad_01(
            [&](double x) {
                return std::exp((a - 1.0) * std::log(x) +
                                (b - 1.0) * std::log1p(-x) - log_beta(a, b));
            },
            1e-11);
        CHECK(close(normalized, 1.0, 1e-9));
    }

    // Continuity in delta: small perturbations move the value slightly.
    const double base = log_m_star({0.5, 0.5}, sub, stage1, prior);
    CHECK(close(log_m_star({0.5 + 1e-7, 0.5}, sub, stage1, prior), base, 1e-4));
    CHECK(close(log_m_star({0.5, 0.5 + 1e-7}, sub, stage1, prior), base, 1e-4));
}

TEST_CASE("penalized criterion search matches the exhaustive lattice") {
    const PriorConfig prior;
    for (const auto& [scenario, seed] : {std::pair{1, 101ULL}, {4, 104ULL}}) {
        const TrialCounts counts = oracle::make_fixture(scenario, 90, seed);
        const SubgroupCounts sub = pool_subgroups(counts);
        bool degenerate = true;
        const DeltaPair lib = delta_plc(sub, counts, prior, 0.001, &degenerate);
        CHECK_FALSE(degenerate);
        const DeltaPair ref = oracle::plc_grid(sub, counts, prior, 0.001);
        CHECK(close(lib.d1, ref.d1, 0.001 + 1e-9));
        CHECK(close(lib.d2, ref.d2, 0.001 + 1e-9));
        CHECK(lib.d1 >= 0.001);
        CHECK(lib.d2 >= 0.001);
        CHECK(lib.d1 <= 1.0);
        CHECK(lib.d2 <= 1.0);
    }
}

TEST_CASE("penalized criterion pins unusable subgroups to zero") {
    const TrialCounts stage1 = uniform_stage1(10, 4);
    // One observation in subgroup 1, healthy subgroup 2.
    const SubgroupCounts sub =
        cells({{{1, 4}, {0, 5}, {0, 4}}}, {{{1, 2}, {0, 2}, {0, 1}}});
    bool degenerate = true;
    const DeltaPair d = delta_plc(sub, stage1, PriorConfig{}, 0.001, &degenerate);
    CHECK_FALSE(degenerate);
    CHECK(d.d1 == 0.0);
    CHECK(d.d2 >= 0.001);

    const SubgroupCounts none = cells({{{0, 0}, {0, 0}, {0, 0}}},
                                      {{{0, 0}, {0, 0}, {0, 0}}});
    degenerate = false;
    const DeltaPair zero = delta_plc(none, stage1, PriorConfig{}, 0.001, &degenerate);
    CHECK(degenerate);
    CHECK(zero.d1 == 0.0);
    CHECK(zero.d2 == 0.0);
}

TEST_CASE("marginal likelihood search matches the exhaustive lattice") {
    const PriorConfig prior;
    for (const auto& [scenario, seed] : {std::pair{2, 202ULL}, {3, 203ULL}}) {
        const TrialCounts counts = oracle::make_fixture(scenario, 90, seed);
        const SubgroupCounts sub = pool_subgroups(counts);
        const DeltaPair lib = delta_mlc(sub, counts, prior);
        const DeltaPair ref = oracle::mlc_grid(sub, counts, prior, 0.001);
        CHECK(close(lib.d1, ref.d1, 0.001 + 1e-9));
        CHECK(close(lib.d2, ref.d2, 0.001 + 1e-9));
    }
    // No stage-2 data: the objective is flat, ties resolve to zero.
    const SubgroupCounts none = cells({{{0, 0}, {0, 0}, {0, 0}}},
                                      {{{0, 0}, {0, 0}, {0, 0}}});
    const DeltaPair flat = delta_mlc(none, uniform_stage1(10, 4), prior);
    CHECK(flat.d1 == 0.0);
    CHECK(flat.d2 == 0.0);
}

TEST_CASE("all strategies stay inside the unit square on simulated data") {
    const PriorConfig prior;
    for (int scenario = 1; scenario <= 7; ++scenario) {
        const TrialCounts counts =
            oracle::make_fixture(scenario, 90, 500ULL + scenario);
        const SubgroupCounts sub = pool_subgroups(counts);
        for (const DeltaPair d :
             {delta_fet(sub, counts), delta_bom(sub, counts, prior),
              delta_plc(sub, counts, prior), delta_mlc(sub, counts, prior)}) {
            CHECK(d.d1 >= 0.0);
            CHECK(d.d1 <= 1.0);
            CHECK(d.d2 >= 0.0);
            CHECK(d.d2 <= 1.0);
        }
    }
}

TEST_CASE("prior configuration is validated") {
    PriorConfig bad;
    bad.a_pi = 0.0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = PriorConfig{};
    bad.b_delta = -1.0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = PriorConfig{};
    bad.beta_rate = 0.0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    PriorConfig good;
    good.validate();
}
