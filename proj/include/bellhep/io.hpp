#pragma once

#include <cstdint>
#include <cstdio>
#include <string>

#include "bellhep/kaon.hpp"

namespace bellhep::io {

/// 17 significant digits: enough for bit-exact re-parsing, '.' decimal
/// point regardless of locale machinery elsewhere.
inline std::string format_double(double value) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", value);
    return buf;
}

inline std::uint64_t fnv1a(const std::string& data) {
    std::uint64_t hash = 0xCBF29CE484222325ULL;
    for (unsigned char c : data) {
        hash ^= c;
        hash *= 0x100000001B3ULL;
    }
    return hash;
}

/// Stable fingerprint of a constants record, for scan summaries.
inline std::string constants_hash(const kaon::KaonConstants& c) {
    const std::string canonical = format_double(c.gamma_S) + ";" + format_double(c.gamma_L) +
                                  ";" + format_double(c.delta_m()) + ";" +
                                  format_double(c.epsilon.real()) + ";" +
                                  format_double(c.epsilon.imag());
    char buf[24];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a(canonical)));
    return buf;
}

} // namespace bellhep::io
