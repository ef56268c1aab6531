#pragma once

#include <string>

namespace qppbench {

/// Shortest decimal representation that parses back to the same double.
std::string format_double(double v);

/// Strict double parse; throws std::runtime_error with `what_for_errors`
/// when the token is not a finite number.
double parse_double(const std::string& token, const std::string& what_for_errors);

/// Strict non-negative integer parse.
long parse_long(const std::string& token, const std::string& what_for_errors);

} // namespace qppbench
