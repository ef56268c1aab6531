#include "qppbench/format.hpp"

#include <charconv>
#include <cmath>
#include <stdexcept>
#include <system_error>

namespace qppbench {

std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

double parse_double(const std::string& token, const std::string& what_for_errors) {
    double v = 0.0;
    auto res = std::from_chars(token.data(), token.data() + token.size(), v);
    if (res.ec != std::errc() || res.ptr != token.data() + token.size() || !std::isfinite(v))
        throw std::runtime_error(what_for_errors + ": invalid number '" + token + "'");
    return v;
}

long parse_long(const std::string& token, const std::string& what_for_errors) {
    long v = 0;
    auto res = std::from_chars(token.data(), token.data() + token.size(), v);
    if (res.ec != std::errc() || res.ptr != token.data() + token.size() || v < 0)
        throw std::runtime_error(what_for_errors + ": invalid integer '" + token + "'");
    return v;
}

} // namespace qppbench
