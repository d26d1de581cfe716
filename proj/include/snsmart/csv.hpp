#pragma once

#include <istream>
#include <ostream>
#include <string>
#include <vector>

namespace snsmart {

// RFC 4180 reader: handles quoted fields, embedded quotes/commas/newlines,
// and CRLF line endings.  Returns one vector of fields per record.
std::vector<std::vector<std::string>> parse_csv(std::istream& in);

// Writes one record, quoting fields only when required.
void write_csv_row(std::ostream& out, const std::vector<std::string>& fields);

// Shortest decimal string that parses back to exactly the same double.
std::string format_double(double x);

} // namespace snsmart
