#pragma once

#include <charconv>
#include <string>

namespace livseg {

/// Shortest decimal representation that parses back to the same double.
inline std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

/// Inverse of format_double; throws std::invalid_argument on junk.
double parse_double(const std::string& text);

} // namespace livseg
