#include "snsmart/simulator.hpp"

#include <cmath>

#include "snsmart/errors.hpp"

namespace snsmart {

void ScenarioSpec::validate() const {
    if (name.empty()) {
        throw ConfigError("scenario: name must not be empty");
    }
    auto check = [&](double rate) {
        if (!(rate >= 0.0 && rate <= 1.0)) {
            throw ConfigError("scenario " + name +
                              ": response rates must lie in [0,1]");
        }
    };
    for (int k = 0; k < kTreatments; ++k) {
        check(stage1_rates[k]);
        for (int kp = 0; kp < kTreatments; ++kp) check(stage2_rates[k][kp]);
    }
}

ScenarioSpec builtin_scenario(int id) {
    ScenarioSpec spec;
    spec.name = "scenario" + std::to_string(id);
    spec.stage1_rates = (id >= 6) ? std::array<double, 3>{0.3, 0.3, 0.3}
                                  : std::array<double, 3>{0.2, 0.3, 0.4};
    switch (id) {
    case 1:
        spec.stage2_rates = {{{0.2, 0.2, 0.2}, {0.3, 0.3, 0.3}, {0.4, 0.4, 0.4}}};
        break;
    case 2:
        spec.stage2_rates = {{{0.4, 0.2, 0.2}, {0.3, 0.6, 0.3}, {0.4, 0.4, 0.8}}};
        break;
    case 3:
        spec.stage2_rates = {
            {{0.2, 0.1, 0.1}, {0.15, 0.3, 0.15}, {0.2, 0.2, 0.4}}};
        break;
    case 4:
        spec.stage2_rates = {
            {{0.4, 0.3, 0.3}, {0.45, 0.6, 0.45}, {0.6, 0.6, 0.8}}};
        break;
    case 5:
        spec.stage2_rates = {{{0.6, 0.4, 0.4}, {0.6, 0.6, 0.15}, {0.2, 0.2, 0.6}}};
        break;
    case 6:
        spec.stage2_rates = {{{0.3, 0.3, 0.3}, {0.3, 0.3, 0.3}, {0.3, 0.3, 0.3}}};
        break;
    case 7:
        spec.stage2_rates = {{{0.2, 0.2, 0.2}, {0.3, 0.3, 0.3}, {0.4, 0.4, 0.4}}};
        break;
    default:
        throw ConfigError("builtin scenario id must be 1..7");
    }
    return spec;
}

std::vector<ParticipantRecord> simulate_participants(const ScenarioSpec& spec,
                                                     long long n_total,
                                                     RngStream& rng) {
    spec.validate();
    if (n_total <= 0 || n_total % kTreatments != 0) {
        throw ConfigError("trial size must be a positive multiple of 3");
    }
    const long long per_arm = n_total / kTreatments;
    std::vector<ParticipantRecord> records;
    records.reserve(static_cast<std::size_t>(n_total));
    long long next_id = 1;
    for (int k = 0; k < kTreatments; ++k) {
        for (long long i = 0; i < per_arm; ++i, ++next_id) {
            ParticipantRecord rec;
            rec.id = "p" + std::to_string(next_id);
            rec.stage1_treatment = k;
            rec.stage1_response = sample_bernoulli(rng, spec.stage1_rates[k]);
            if (rec.stage1_response) {
                rec.stage2_treatment = k;
            } else {
                // Fair coin between the two alternatives, listed in
                // treatment order.
                const int alt1 = (k == 0) ? 1 : 0;
                const int alt2 = (k == 2) ? 1 : 2;
                rec.stage2_treatment = sample_bernoulli(rng, 0.5) ? alt1 : alt2;
            }
            rec.stage2_response = sample_bernoulli(
                rng, spec.stage2_rates[rec.stage2_treatment][k]);
            records.push_back(std::move(rec));
        }
    }
    return records;
}

TrialCounts simulate_trial(const ScenarioSpec& spec, long long n_total,
                           RngStream& rng) {
    return aggregate_counts(simulate_participants(spec, n_total, rng));
}

} // namespace snsmart
