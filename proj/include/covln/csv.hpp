#pragma once

#include <string>
#include <vector>

namespace covln::csv {

/// Quotes a field (RFC 4180) when it contains a comma, quote or line break.
std::string escape(const std::string& field);

/// Joins escaped fields with commas and a trailing newline.
std::string row(const std::vector<std::string>& fields);

/// Parses a whole CSV document into rows of fields. Throws InvalidInput on
/// an unterminated quoted field.
std::vector<std::vector<std::string>> parse(const std::string& text);

/// printf("%.6f").
std::string fixed(double x);

}  // namespace covln::csv
