#include "snsmart/csv.hpp"

#include <cstdio>
#include <cstdlib>
#include <cstring>

#include "snsmart/errors.hpp"

namespace snsmart {

std::vector<std::vector<std::string>> parse_csv(std::istream& in) {
    std::vector<std::vector<std::string>> records;
    std::vector<std::string> fields;
    std::string field;
    bool in_quotes = false;
    bool field_started = false; // current record has content
    long long line = 1;

    auto end_field = [&]() {
        fields.push_back(field);
        field.clear();
    };
    auto end_record = [&]() {
        end_field();
        records.push_back(std::move(fields));
        fields.clear();
        field_started = false;
    };

    char c;
    while (in.get(c)) {
        if (in_quotes) {
            if (c == '"') {
                if (in.peek() == '"') {
                    in.get(c);
                    field.push_back('"');
                } else {
                    in_quotes = false;
                }
            } else {
                if (c == '\n') ++line;
                field.push_back(c);
            }
            continue;
        }
        switch (c) {
        case '"':
            if (!field.empty()) {
                throw ParseError("csv line " + std::to_string(line) +
                                 ": quote inside unquoted field");
            }
            in_quotes = true;
            field_started = true;
            break;
        case ',':
            end_field();
            field_started = true;
            break;
        case '\r':
            break; // handled with the following \n; stray \r dropped
        case '\n':
            ++line;
            if (field_started || !field.empty() || !fields.empty()) {
                end_record();
            }
            break;
        default:
            field.push_back(c);
            field_started = true;
            break;
        }
    }
    if (in_quotes) {
        throw ParseError("csv line " + std::to_string(line) +
                         ": unterminated quoted field");
    }
    if (field_started || !field.empty() || !fields.empty()) {
        end_record();
    }
    return records;
}

void write_csv_row(std::ostream& out, const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) out << ',';
        const std::string& f = fields[i];
        const bool needs_quotes =
            f.find_first_of(",\"\r\n") != std::string::npos;
        if (!needs_quotes) {
            out << f;
            continue;
        }
        out << '"';
        for (char c : f) {
            if (c == '"') out << '"';
            out << c;
        }
        out << '"';
    }
    out << '\n';
}

std::string format_double(double x) {
    char buf[40];
    for (int prec = 15; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof(buf), "%.*g", prec, x);
        if (std::strtod(buf, nullptr) == x) break;
    }
    return buf;
}

} // namespace snsmart
