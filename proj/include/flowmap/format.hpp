#pragma once

#include <charconv>
#include <string>

namespace flowmap {

/// Shortest text that parses back to the same double.
inline std::string format_double(double x) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
    return std::string(buf, ptr);
}

}  // namespace flowmap
