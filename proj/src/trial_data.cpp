#include "snsmart/trial_data.hpp"

#include <algorithm>
#include <sstream>

#include <json.hpp>

#include "snsmart/csv.hpp"
#include "snsmart/errors.hpp"

namespace snsmart {

char treatment_label(int k) {
    if (k < 0 || k >= kTreatments) {
        throw DomainError("treatment_label: index out of range");
    }
    return static_cast<char>('A' + k);
}

int treatment_from_label(char c) {
    if (c < 'A' || c > 'C') {
        throw ParseError(std::string("unknown treatment label '") + c + "'");
    }
    return c - 'A';
}

void validate_record(const ParticipantRecord& rec) {
    if (rec.stage1_treatment < 0 || rec.stage1_treatment >= kTreatments ||
        rec.stage2_treatment < 0 || rec.stage2_treatment >= kTreatments) {
        throw ConsistencyError("participant " + rec.id +
                               ": treatment index out of range");
    }
    if (rec.stage1_response && rec.stage2_treatment != rec.stage1_treatment) {
        throw ConsistencyError("participant " + rec.id +
                               ": responder switched treatment");
    }
    if (!rec.stage1_response && rec.stage2_treatment == rec.stage1_treatment) {
        throw ConsistencyError("participant " + rec.id +
                               ": non-responder kept the same treatment");
    }
}

void TrialCounts::validate() const {
    for (int k = 0; k < kTreatments; ++k) {
        const std::string t(1, treatment_label(k));
        if (n1[k] < 0 || z1[k] < 0 || z1[k] > n1[k]) {
            throw ConsistencyError("counts for treatment " + t +
                                   ": need 0 <= z1 <= n1");
        }
        if (y_resp[k] < 0 || y_resp[k] > z1[k]) {
            throw ConsistencyError("counts for treatment " + t +
                                   ": need 0 <= y_resp <= z1");
        }
        long long rerandomized = 0;
        for (int k2 = 0; k2 < kTreatments; ++k2) {
            if (k2 == k) {
                if (m_non[k][k2] != 0 || y_non[k][k2] != 0) {
                    throw ConsistencyError("counts for treatment " + t +
                                           ": diagonal m_non/y_non not zero");
                }
                continue;
            }
            if (m_non[k][k2] < 0 || y_non[k][k2] < 0 ||
                y_non[k][k2] > m_non[k][k2]) {
                throw ConsistencyError("counts for treatment " + t +
                                       ": need 0 <= y_non <= m_non");
            }
            rerandomized += m_non[k][k2];
        }
        if (rerandomized != n1[k] - z1[k]) {
            throw ConsistencyError("counts for treatment " + t +
                                   ": re-randomized total differs from "
                                   "non-responder count");
        }
    }
}

namespace {

bool parse_binary(const std::string& s, const char* what, long long line) {
    if (s == "0") return false;
    if (s == "1") return true;
    throw ParseError("csv line " + std::to_string(line) + ": " + what +
                     " must be 0 or 1, got \"" + s + "\"");
}

int parse_treatment(const std::string& s, long long line) {
    if (s.size() != 1 || s[0] < 'A' || s[0] > 'C') {
        throw ParseError("csv line " + std::to_string(line) +
                         ": treatment must be A, B or C, got \"" + s + "\"");
    }
    return s[0] - 'A';
}

} // namespace

std::vector<ParticipantRecord> parse_participants(std::istream& in) {
    const auto rows = parse_csv(in);
    if (rows.empty()) {
        throw ParseError("participant csv: missing header row");
    }
    static const std::array<const char*, 5> kColumns = {
        "id", "stage1_treatment", "stage1_response", "stage2_treatment",
        "stage2_response"};
    std::array<std::size_t, 5> col{};
    for (std::size_t c = 0; c < kColumns.size(); ++c) {
        const auto& header = rows[0];
        const auto it = std::find(header.begin(), header.end(), kColumns[c]);
        if (it == header.end()) {
            throw ParseError(std::string("participant csv: missing column ") +
                             kColumns[c]);
        }
        if (std::find(it + 1, header.end(), kColumns[c]) != header.end()) {
            throw ParseError(std::string("participant csv: duplicate column ") +
                             kColumns[c]);
        }
        col[c] = static_cast<std::size_t>(it - header.begin());
    }

    std::vector<ParticipantRecord> records;
    records.reserve(rows.size() - 1);
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& row = rows[r];
        const long long line = static_cast<long long>(r) + 1;
        if (row.size() != rows[0].size()) {
            throw ParseError("csv line " + std::to_string(line) +
                             ": expected " + std::to_string(rows[0].size()) +
                             " fields, got " + std::to_string(row.size()));
        }
        ParticipantRecord rec;
        rec.id = row[col[0]];
        rec.stage1_treatment = parse_treatment(row[col[1]], line);
        rec.stage1_response = parse_binary(row[col[2]], "stage1_response", line);
        rec.stage2_treatment = parse_treatment(row[col[3]], line);
        rec.stage2_response = parse_binary(row[col[4]], "stage2_response", line);
        validate_record(rec);
        records.push_back(std::move(rec));
    }
    return records;
}

void write_participants_csv(std::ostream& out,
                            const std::vector<ParticipantRecord>& records) {
    write_csv_row(out, {"id", "stage1_treatment", "stage1_response",
                        "stage2_treatment", "stage2_response"});
    for (const auto& rec : records) {
        write_csv_row(out, {rec.id, std::string(1, treatment_label(rec.stage1_treatment)),
                            rec.stage1_response ? "1" : "0",
                            std::string(1, treatment_label(rec.stage2_treatment)),
                            rec.stage2_response ? "1" : "0"});
    }
}

TrialCounts aggregate_counts(const std::vector<ParticipantRecord>& records) {
    TrialCounts counts;
    for (const auto& rec : records) {
        validate_record(rec);
        const int k1 = rec.stage1_treatment;
        const int k2 = rec.stage2_treatment;
        counts.n1[k1] += 1;
        if (rec.stage1_response) {
            counts.z1[k1] += 1;
            if (rec.stage2_response) counts.y_resp[k1] += 1;
        } else {
            counts.m_non[k1][k2] += 1;
            if (rec.stage2_response) counts.y_non[k1][k2] += 1;
        }
    }
    counts.validate();
    return counts;
}

SubgroupCounts pool_subgroups(const TrialCounts& counts) {
    counts.validate();
    SubgroupCounts sub;
    for (int k = 0; k < kTreatments; ++k) {
        sub.n2[k][0] = counts.z1[k];
        sub.z2[k][0] = counts.y_resp[k];
        for (int kp = 0; kp < kTreatments; ++kp) {
            sub.n2[k][1] += counts.m_non[kp][k];
            sub.z2[k][1] += counts.y_non[kp][k];
        }
    }
    return sub;
}

namespace {

using nlohmann::json;

json pair_table_to_json(
    const std::array<std::array<long long, kTreatments>, kTreatments>& table) {
    json out = json::object();
    for (int kp = 0; kp < kTreatments; ++kp) {
        json row = json::object();
        for (int k = 0; k < kTreatments; ++k) {
            if (k == kp) continue;
            row[std::string(1, treatment_label(k))] = table[kp][k];
        }
        out[std::string(1, treatment_label(kp))] = std::move(row);
    }
    return out;
}

json per_treatment_to_json(const std::array<long long, kTreatments>& values) {
    json out = json::object();
    for (int k = 0; k < kTreatments; ++k) {
        out[std::string(1, treatment_label(k))] = values[k];
    }
    return out;
}

long long json_count(const json& j, const std::string& context) {
    if (!j.is_number_integer() && !j.is_number_unsigned()) {
        throw ParseError("counts json: " + context + " must be an integer");
    }
    return j.get<long long>();
}

} // namespace

std::string trial_counts_to_json(const TrialCounts& counts) {
    json out;
    out["n1"] = per_treatment_to_json(counts.n1);
    out["z1"] = per_treatment_to_json(counts.z1);
    out["y_resp"] = per_treatment_to_json(counts.y_resp);
    out["m_non"] = pair_table_to_json(counts.m_non);
    out["y_non"] = pair_table_to_json(counts.y_non);
    return out.dump(2);
}

TrialCounts trial_counts_from_json(const std::string& text) {
    json parsed;
    try {
        parsed = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("counts json: ") + e.what());
    }
    TrialCounts counts;
    try {
        for (int k = 0; k < kTreatments; ++k) {
            const std::string t(1, treatment_label(k));
            counts.n1[k] = json_count(parsed.at("n1").at(t), "n1." + t);
            counts.z1[k] = json_count(parsed.at("z1").at(t), "z1." + t);
            counts.y_resp[k] =
                json_count(parsed.at("y_resp").at(t), "y_resp." + t);
            for (int k2 = 0; k2 < kTreatments; ++k2) {
                if (k2 == k) continue;
                const std::string t2(1, treatment_label(k2));
                counts.m_non[k][k2] = json_count(
                    parsed.at("m_non").at(t).at(t2), "m_non." + t + "." + t2);
                counts.y_non[k][k2] = json_count(
                    parsed.at("y_non").at(t).at(t2), "y_non." + t + "." + t2);
            }
        }
    } catch (const json::exception& e) {
        throw ParseError(std::string("counts json: ") + e.what());
    }
    counts.validate();
    return counts;
}

} // namespace snsmart
