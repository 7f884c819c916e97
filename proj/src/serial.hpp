#pragma once

#include "cmc/errors.hpp"

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>

namespace cmc::serial {

inline void write_double(std::ostream& out, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%a", v);
    out << buf;
}

inline std::string token(std::istream& in) {
    std::string t;
    if (!(in >> t)) {
        throw data_error("model file truncated");
    }
    return t;
}

inline void expect(std::istream& in, std::string_view want) {
    const auto t = token(in);
    if (t != want) {
        throw data_error("model file: expected '" + std::string(want) + "', found '" + t + "'");
    }
}

inline double read_double(std::istream& in) {
    const auto t = token(in);
    char* end = nullptr;
    const double v = std::strtod(t.c_str(), &end);
    if (end != t.c_str() + t.size()) {
        throw data_error("model file: bad number '" + t + "'");
    }
    return v;
}

inline std::uint64_t read_uint(std::istream& in) {
    const auto t = token(in);
    char* end = nullptr;
    const auto v = std::strtoull(t.c_str(), &end, 10);
    if (t.empty() || t[0] == '-' || end != t.c_str() + t.size()) {
        throw data_error("model file: bad count '" + t + "'");
    }
    return v;
}

inline std::int64_t read_int(std::istream& in) {
    const auto t = token(in);
    char* end = nullptr;
    const auto v = std::strtoll(t.c_str(), &end, 10);
    if (t.empty() || end != t.c_str() + t.size()) {
        throw data_error("model file: bad integer '" + t + "'");
    }
    return v;
}

}  // namespace cmc::serial
