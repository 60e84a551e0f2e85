#pragma once

#include <boost/multiprecision/cpp_int.hpp>
#include <complex>
#include <cstdint>
#include <string>

#include "errors.hpp"

namespace padlev {

using BigInt = boost::multiprecision::cpp_int;
using BigRational = boost::multiprecision::cpp_rational;
using Complex = std::complex<double>;

inline constexpr double kPi = 3.14159265358979323846264338327950288;
inline constexpr double kTwoPi = 2.0 * kPi;

// p^e for e >= 0.
inline BigInt pow_big(long long p, long long e) {
    if (e < 0) throw InvalidParams("pow_big: negative exponent");
    BigInt r = 1, base = p;
    while (e > 0) {
        if (e & 1) r *= base;
        base *= base;
        e >>= 1;
    }
    return r;
}

// p^e as an exact rational, any sign of e.
inline BigRational pow_rational(long long p, long long e) {
    if (e >= 0) return BigRational(pow_big(p, e));
    return BigRational(1, pow_big(p, -e));
}

inline double to_double(const BigRational& r) { return r.convert_to<double>(); }

inline bool is_integer(const BigRational& r) { return denominator(r) == 1; }

// FNV-1a, used for config hashes in output headers.
inline std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

inline std::string hex64(std::uint64_t v) {
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<size_t>(i)] = digits[v & 0xf];
        v >>= 4;
    }
    return out;
}

} // namespace padlev
