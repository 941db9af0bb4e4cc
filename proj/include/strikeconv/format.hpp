#pragma once

#include <charconv>
#include <cmath>
#include <string>
#include <system_error>

namespace strikeconv {

/// Shortest text that reads back to the same double; "" for NaN.
inline std::string format_double(double v) {
    if (std::isnan(v)) return {};
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

/// Parses a whole string as a double; false on trailing characters.
inline bool parse_double(const std::string& s, double& out) {
    if (s.empty()) return false;
    const char* first = s.data();
    if (*first == '+') ++first;
    const auto res = std::from_chars(first, s.data() + s.size(), out);
    return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

}  // namespace strikeconv
