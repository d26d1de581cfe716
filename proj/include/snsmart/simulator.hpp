#pragma once

#include <array>
#include <string>
#include <vector>

#include "snsmart/rng.hpp"
#include "snsmart/trial_data.hpp"

namespace snsmart {

// True response rates for one simulation scenario.  stage2_rates[k][kp] is
// the stage-2 response rate on treatment k for participants whose stage-1
// treatment was kp; the diagonal applies to stage-1 responders (who stay on
// their treatment), off-diagonal entries to re-randomized non-responders.
struct ScenarioSpec {
    std::string name;
    std::array<double, kTreatments> stage1_rates{};
    std::array<std::array<double, kTreatments>, kTreatments> stage2_rates{};

    void validate() const;
};

// The seven built-in configurations used by the operating-characteristic
// studies.  Ids 1-5 share stage-1 rates (0.2, 0.3, 0.4); 6-7 use flat 0.3.
ScenarioSpec builtin_scenario(int id);

// One synthetic trial: exactly n_total/3 participants per arm; stage-1
// response is Bernoulli(stage1_rates[k]); responders stay on k, each
// non-responder moves to one of the two alternatives by an independent fair
// coin; stage-2 response is Bernoulli(stage2_rates[new][old]).
std::vector<ParticipantRecord> simulate_participants(const ScenarioSpec& spec,
                                                     long long n_total,
                                                     RngStream& rng);

// Same draw sequence as simulate_participants, returned aggregated.
TrialCounts simulate_trial(const ScenarioSpec& spec, long long n_total,
                           RngStream& rng);

} // namespace snsmart
