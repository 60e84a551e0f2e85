#pragma once

// Test-side helpers. The RNG and the rational readback oracle here are kept
// independent of the library's sampling and digit-carry code on purpose.

#include <cstdint>
#include <vector>

#include <padlev/field.hpp>

namespace testutil {

using padlev::BigInt;
using padlev::BigRational;
using padlev::FieldKind;
using padlev::FieldSpec;
using padlev::PElement;
using padlev::PVector;

struct TestRng {
    std::uint64_t state;

    explicit TestRng(std::uint64_t seed) : state(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    int uniform_int(int lo, int hi) { // inclusive
        return lo + static_cast<int>(next() % static_cast<std::uint64_t>(hi - lo + 1));
    }

    double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
};

inline PElement random_element(const FieldSpec& spec, TestRng& rng, int vmin, int vmax) {
    int val = rng.uniform_int(vmin, vmax);
    std::vector<int> digits(static_cast<size_t>(spec.precision - val));
    for (auto& d : digits) d = rng.uniform_int(0, spec.p - 1);
    if (!digits.empty()) digits[0] = rng.uniform_int(1, spec.p - 1);
    return PElement::from_window(spec, val, std::move(digits));
}

inline PElement random_or_zero(const FieldSpec& spec, TestRng& rng, int vmin, int vmax) {
    if (rng.uniform_int(0, 9) == 0) return PElement::zero(spec);
    return random_element(spec, rng, vmin, vmax);
}

// Exact rational value of the stored digit window; no carry logic involved.
inline BigRational window_value(const PElement& e) {
    if (e.is_zero()) return BigRational(0);
    BigRational acc(0);
    int val = e.valuation();
    for (size_t i = 0; i < e.digits().size(); ++i)
        acc += BigRational(e.digits()[i]) *
               padlev::pow_rational(e.spec().p, val + static_cast<int>(i));
    return acc;
}

// p-adic valuation of an exact rational; large sentinel for 0.
inline int rational_vp(const BigRational& r, int p) {
    if (r == 0) return 1 << 20;
    BigInt n = numerator(r), d = denominator(r);
    int v = 0;
    while (n % p == 0) {
        n /= p;
        ++v;
    }
    while (d % p == 0) {
        d /= p;
        --v;
    }
    return v;
}

} // namespace testutil
