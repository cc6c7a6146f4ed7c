#pragma once

#include <cstdint>
#include <string>

#include "ergodec/errors.hpp"

namespace ergodec {

// Angles on the circle are stored as 64-bit fixed point: value = bits / 2^64
// in [0,1). Addition mod 1 is exact (native wrap-around), so rotation orbits
// carry no accumulated roundoff beyond the representation of alpha itself.
using Angle64 = std::uint64_t;

inline double angle_to_double(Angle64 a) {
    return double(a >> 11) * 0x1.0p-53;
}

// Nearest fixed-point representation of p/q (alpha in [0,1), q > 0).
inline Angle64 fraction_to_angle(std::uint64_t p, std::uint64_t q) {
    if (q == 0) throw ConfigError("fraction_to_angle: zero denominator");
    p %= q;
    unsigned __int128 num = (unsigned __int128)p << 64;
    unsigned __int128 quot = num / q;
    unsigned __int128 rem = num % q;
    if (2 * rem >= q) quot += 1; // round to nearest
    return Angle64(quot); // wraps to 0 when p/q rounds up to 1, i.e. never for q>1
}

inline Angle64 double_to_angle(double x) {
    x -= static_cast<std::int64_t>(x); // into (-1,1)
    if (x < 0) x += 1.0;
    long double scaled = (long double)x * 18446744073709551616.0L;
    if (scaled >= 18446744073709551615.0L) return 0;
    return Angle64(scaled);
}

// Parses "golden", "p/q", or a decimal string.
inline Angle64 parse_angle(const std::string& s);

// frac(golden ratio) = (sqrt(5)-1)/2 to 64 fractional bits.
inline constexpr Angle64 kGoldenAngle = 0x9E3779B97F4A7C15ULL;

inline Angle64 parse_angle(const std::string& s) {
    if (s == "golden") return kGoldenAngle;
    auto slash = s.find('/');
    if (slash != std::string::npos) {
        std::uint64_t p = 0, q = 0;
        try {
            p = std::stoull(s.substr(0, slash));
            q = std::stoull(s.substr(slash + 1));
        } catch (const std::exception&) {
            throw ConfigError("parse_angle: bad fraction '" + s + "'");
        }
        return fraction_to_angle(p, q);
    }
    try {
        return double_to_angle(std::stod(s));
    } catch (const std::exception&) {
        throw ConfigError("parse_angle: bad angle '" + s + "'");
    }
}

} // namespace ergodec
