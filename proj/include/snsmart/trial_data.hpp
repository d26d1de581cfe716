#pragma once

#include <array>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

namespace snsmart {

// Treatments are indexed 0, 1, 2 and labeled 'A', 'B', 'C'.  The numeric
// order is the canonical iteration order everywhere in the library.
inline constexpr int kTreatments = 3;

char treatment_label(int k);
int treatment_from_label(char c);

struct ParticipantRecord {
    std::string id;
    int stage1_treatment = 0;
    bool stage1_response = false;
    int stage2_treatment = 0;
    bool stage2_response = false;
};

// Responders keep their stage-1 treatment, non-responders must switch.
void validate_record(const ParticipantRecord& rec);

// Aggregated trial counts.  m_non[kp][k] counts stage-1 non-responders to
// treatment kp who received treatment k in stage 2; y_non[kp][k] counts how
// many of those responded.  Diagonals of m_non/y_non are structurally zero.
struct TrialCounts {
    std::array<long long, kTreatments> n1{};
    std::array<long long, kTreatments> z1{};
    std::array<long long, kTreatments> y_resp{};
    std::array<std::array<long long, kTreatments>, kTreatments> m_non{};
    std::array<std::array<long long, kTreatments>, kTreatments> y_non{};

    void validate() const;
};

// Stage-2 data pooled onto the stage-2 treatment, split by whether the
// participant responded in stage 1.  Subgroup index j: 0 = stage-1
// responders, 1 = stage-1 non-responders.
struct SubgroupCounts {
    std::array<std::array<long long, 2>, kTreatments> n2{};
    std::array<std::array<long long, 2>, kTreatments> z2{};
};

// Reads the participant CSV (header row required, columns matched by name:
// id, stage1_treatment, stage1_response, stage2_treatment, stage2_response).
// Throws ParseError with the 1-based line number on malformed input and
// ConsistencyError naming the participant id on invariant violations.
std::vector<ParticipantRecord> parse_participants(std::istream& in);

void write_participants_csv(std::ostream& out,
                            const std::vector<ParticipantRecord>& records);

TrialCounts aggregate_counts(const std::vector<ParticipantRecord>& records);

SubgroupCounts pool_subgroups(const TrialCounts& counts);

std::string trial_counts_to_json(const TrialCounts& counts);
TrialCounts trial_counts_from_json(const std::string& text);

} // namespace snsmart
