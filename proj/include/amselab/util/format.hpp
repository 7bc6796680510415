#ifndef AMSELAB_UTIL_FORMAT_HPP
#define AMSELAB_UTIL_FORMAT_HPP

#include "amselab/numerics/types.hpp"

#include <charconv>
#include <string>
#include <string_view>

namespace amselab {

/// Shortest decimal form that parses back to the same double.
inline std::string format_double(double v) {
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

inline double parse_double(std::string_view s) {
    double v = 0.0;
    const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc() || r.ptr != s.data() + s.size())
        throw ConfigError("not a number: '" + std::string(s) + "'");
    return v;
}

template <typename Int>
Int parse_integer(std::string_view s) {
    Int v{};
    const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc() || r.ptr != s.data() + s.size())
        throw ConfigError("not an integer: '" + std::string(s) + "'");
    return v;
}

}  // namespace amselab

#endif  // AMSELAB_UTIL_FORMAT_HPP
