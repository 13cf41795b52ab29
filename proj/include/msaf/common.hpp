#pragma once

#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace msaf {

using Shape = std::vector<int64_t>;

inline int64_t numel_of(const Shape& s) {
    int64_t n = 1;
    for (int64_t d : s) n *= d;
    return n;
}

inline std::string shape_str(const Shape& s) {
    std::ostringstream o;
    o << "[";
    for (size_t i = 0; i < s.size(); ++i) {
        if (i) o << ",";
        o << s[i];
    }
    o << "]";
    return o.str();
}

[[noreturn]] inline void fail(const std::string& msg) {
    throw std::invalid_argument(msg);
}

inline void check(bool ok, const std::string& msg) {
    if (!ok) fail(msg);
}

} // namespace msaf
