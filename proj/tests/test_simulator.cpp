#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "snsmart/errors.hpp"
#include "snsmart/simulator.hpp"
#include "snsmart/trial_data.hpp"

using namespace snsmart;

TEST_CASE("builtin scenarios carry the study design rates") {
    const ScenarioSpec s1 = builtin_scenario(1);
    CHECK(s1.name == "scenario1");
    CHECK(s1.stage1_rates == std::array<double, 3>{0.2, 0.3, 0.4});
    CHECK(s1.stage2_rates[0] == std::array<double, 3>{0.2, 0.2, 0.2});
    CHECK(s1.stage2_rates[1] == std::array<double, 3>{0.3, 0.3, 0.3});
    CHECK(s1.stage2_rates[2] == std::array<double, 3>{0.4, 0.4, 0.4});

    const ScenarioSpec s5 = builtin_scenario(5);
    CHECK(s5.stage1_rates == std::array<double, 3>{0.2, 0.3, 0.4});
    CHECK(s5.stage2_rates[0] == std::array<double, 3>{0.6, 0.4, 0.4});
    CHECK(s5.stage2_rates[1] == std::array<double, 3>{0.6, 0.6, 0.15});
    CHECK(s5.stage2_rates[2] == std::array<double, 3>{0.2, 0.2, 0.6});

    const ScenarioSpec s6 = builtin_scenario(6);
    CHECK(s6.stage1_rates == std::array<double, 3>{0.3, 0.3, 0.3});
    for (int s2 = 0; s2 < kTreatments; ++s2) {
        CHECK(s6.stage2_rates[s2] == std::array<double, 3>{0.3, 0.3, 0.3});
    }

    CHECK_THROWS_AS(builtin_scenario(0), ConfigError);
    CHECK_THROWS_AS(builtin_scenario(8), ConfigError);
}

TEST_CASE("scenario rates are validated") {
    ScenarioSpec bad = builtin_scenario(1);
    bad.stage1_rates[1] = 1.5;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = builtin_scenario(1);
    bad.stage2_rates[2][0] = -0.1;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = builtin_scenario(1);
    bad.name.clear();
    CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("simulation assigns arms evenly and respects the design") {
    RngStream rng(3, 0);
    const auto records = simulate_participants(builtin_scenario(2), 90, rng);
    REQUIRE(records.size() == 90);
    std::array<int, 3> arm_counts{};
    for (const auto& rec : records) {
        ++arm_counts[rec.stage1_treatment];
        validate_record(rec);
    }
    CHECK(arm_counts == std::array<int, 3>{30, 30, 30});
    // Ids are sequential.
    CHECK(records.front().id == "p1");
    CHECK(records.back().id == "p90");

    RngStream rng2(3, 0);
    CHECK_THROWS_AS(simulate_participants(builtin_scenario(2), 91, rng2),
                    ConfigError);
    RngStream rng3(3, 0);
    CHECK_THROWS_AS(simulate_participants(builtin_scenario(2), 0, rng3),
                    ConfigError);
}

TEST_CASE("degenerate response rates pin the outcomes") {
    ScenarioSpec all = builtin_scenario(1);
    all.stage1_rates = {1.0, 1.0, 1.0};
    RngStream rng(5, 1);
    const TrialCounts everyone = simulate_trial(all, 90, rng);
    CHECK(everyone.z1 == std::array<long long, 3>{30, 30, 30});
    for (int kp = 0; kp < kTreatments; ++kp) {
        for (int k = 0; k < kTreatments; ++k) {
            CHECK(everyone.m_non[kp][k] == 0);
        }
    }

    ScenarioSpec none = builtin_scenario(1);
    none.stage1_rates = {0.0, 0.0, 0.0};
    for (auto& row : none.stage2_rates) row = {1.0, 1.0, 1.0};
    RngStream rng2(5, 2);
    const TrialCounts nobody = simulate_trial(none, 90, rng2);
    CHECK(nobody.z1 == std::array<long long, 3>{0, 0, 0});
    for (int kp = 0; kp < kTreatments; ++kp) {
        long long row = 0;
        for (int k = 0; k < kTreatments; ++k) {
            CHECK(nobody.m_non[kp][kp] == 0);
            row += nobody.m_non[kp][k];
            // Everyone responds at stage 2 under unit rates.
            CHECK(nobody.y_non[kp][k] == nobody.m_non[kp][k]);
        }
        CHECK(row == 30);
    }
}

TEST_CASE("identical streams reproduce the trial exactly") {
    RngStream a(11, 4);
    RngStream b(11, 4);
    const TrialCounts ca = simulate_trial(builtin_scenario(3), 300, a);
    const TrialCounts cb = simulate_trial(builtin_scenario(3), 300, b);
    CHECK(ca.n1 == cb.n1);
    CHECK(ca.z1 == cb.z1);
    CHECK(ca.y_resp == cb.y_resp);
    CHECK(ca.m_non == cb.m_non);
    CHECK(ca.y_non == cb.y_non);
}

TEST_CASE("participant output and aggregation agree") {
    RngStream a(13, 9);
    const auto records = simulate_participants(builtin_scenario(4), 120, a);
    std::ostringstream out;
    write_participants_csv(out, records);
    std::istringstream in(out.str());
    const auto parsed = parse_participants(in);
    const TrialCounts direct = aggregate_counts(records);
    const TrialCounts roundtrip = aggregate_counts(parsed);
    CHECK(direct.n1 == roundtrip.n1);
    CHECK(direct.z1 == roundtrip.z1);
    CHECK(direct.y_resp == roundtrip.y_resp);
    CHECK(direct.m_non == roundtrip.m_non);
    CHECK(direct.y_non == roundtrip.y_non);

    RngStream b(13, 9);
    const TrialCounts counts = simulate_trial(builtin_scenario(4), 120, b);
    CHECK(counts.z1 == direct.z1);
    CHECK(counts.y_non == direct.y_non);
}

TEST_CASE("long-run frequencies match the scenario rates") {
    // Scenario 1 at N=90: E[z1] = (6, 9, 12) per replication.
    const ScenarioSpec scenario = builtin_scenario(1);
    const int reps = 10000;
    std::array<double, 3> z1_sum{};
    TrialCounts pooled;
    for (int r = 0; r < reps; ++r) {
        RngStream rng(1000, static_cast<std::uint64_t>(r));
        const TrialCounts counts = simulate_trial(scenario, 90, rng);
        for (int k = 0; k < kTreatments; ++k) {
            z1_sum[k] += static_cast<double>(counts.z1[k]);
            pooled.n1[k] += counts.n1[k];
            pooled.z1[k] += counts.z1[k];
            pooled.y_resp[k] += counts.y_resp[k];
            for (int kp = 0; kp < kTreatments; ++kp) {
                pooled.m_non[k][kp] += counts.m_non[k][kp];
                pooled.y_non[k][kp] += counts.y_non[k][kp];
            }
        }
    }
    CHECK(std::fabs(z1_sum[0] / reps - 6.0) < 0.1);
    CHECK(std::fabs(z1_sum[1] / reps - 9.0) < 0.1);
    CHECK(std::fabs(z1_sum[2] / reps - 12.0) < 0.1);

    // Responders replay their stage-1 rate in stage 2 under scenario 1.
    for (int k = 0; k < kTreatments; ++k) {
        const double rate = scenario.stage1_rates[k];
        const double n = static_cast<double>(pooled.z1[k]);
        const double se = std::sqrt(rate * (1.0 - rate) / n);
        CHECK(std::fabs(static_cast<double>(pooled.y_resp[k]) / n - rate) <
              3.0 * se + 1e-12);
    }
    // Non-responders split evenly between the two other arms and respond
    // at the destination arm's rate.
    for (int kp = 0; kp < kTreatments; ++kp) {
        long long row = 0;
        for (int k = 0; k < kTreatments; ++k) row += pooled.m_non[kp][k];
        for (int k = 0; k < kTreatments; ++k) {
            if (k == kp) continue;
            const double m = static_cast<double>(pooled.m_non[kp][k]);
            const double se_split = 0.5 * std::sqrt(static_cast<double>(row));
            CHECK(std::fabs(m - 0.5 * static_cast<double>(row)) <
                  3.0 * se_split + 1e-12);
            const double rate = scenario.stage2_rates[k][kp];
            const double se = std::sqrt(rate * (1.0 - rate) / m);
            CHECK(std::fabs(static_cast<double>(pooled.y_non[kp][k]) / m - rate) <
                  3.0 * se + 1e-12);
        }
    }
}
