#pragma once

#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace fairfront {

inline double sigmoid(double z) noexcept
{
    // split on sign so exp never overflows
    if (z >= 0.0) {
        return 1.0 / (1.0 + std::exp(-z));
    }
    const double e = std::exp(z);
    return e / (1.0 + e);
}

// numpy.linspace semantics: both endpoints included.
inline std::vector<double> linspace(double lo, double hi, std::size_t count)
{
    std::vector<double> out;
    out.reserve(count);
    if (count == 0) {
        return out;
    }
    if (count == 1) {
        out.push_back(lo);
        return out;
    }
    const double step = (hi - lo) / static_cast<double>(count - 1);
    for (std::size_t i = 0; i < count; ++i) {
        out.push_back(lo + step * static_cast<double>(i));
    }
    out.back() = hi;
    return out;
}

inline std::uint64_t fnv1a64(std::string_view text) noexcept
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::string hex64(std::uint64_t v)
{
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

// 17 significant digits: enough for every double to round-trip exactly.
inline std::string format_double(double v)
{
    if (std::isinf(v)) {
        return v > 0 ? "inf" : "-inf";
    }
    if (std::isnan(v)) {
        return "nan";
    }
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// Full-consumption parse. Subnormal results are kept rather than rejected.
inline double parse_double(const std::string& text)
{
    if (text.empty() || std::isspace(static_cast<unsigned char>(text.front()))) {
        throw std::invalid_argument("not a number: '" + text + "'");
    }
    char* end = nullptr;
    const double v = std::strtod(text.c_str(), &end);
    if (end != text.c_str() + text.size()) {
        throw std::invalid_argument("not a number: '" + text + "'");
    }
    return v;
}

} // namespace fairfront
