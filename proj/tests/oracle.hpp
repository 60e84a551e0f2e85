#pragma once

// Brute-force enumeration helpers used to cross-check the library's
// integration paths. Everything here walks full digit grids at a fixed
// refinement depth chosen by the test; no coset refinement logic, no
// closed forms, no shared code with the engine under test.

#include <complex>
#include <functional>
#include <vector>

#include <padlev/field.hpp>
#include <padlev/measure.hpp>

namespace oracle {

using padlev::Complex;
using padlev::FieldSpec;
using padlev::PElement;
using padlev::PVector;
using padlev::StepMeasure;

// All points of B(0, p^k)^n modulo p^(-r): digit grid at exponents [-k, -r).
inline void for_each_rep(const FieldSpec& spec, int n, int k, int r,
                         const std::function<void(const PVector&)>& cb) {
    int levels = k - r;
    if (levels < 0) levels = 0;
    std::vector<int> g(static_cast<size_t>(n) * levels, 0);
    while (true) {
        std::vector<PElement> coords;
        for (int i = 0; i < n; ++i) {
            std::vector<int> digits(static_cast<size_t>(spec.precision + k), 0);
            for (int l = 0; l < levels; ++l)
                digits[static_cast<size_t>(l)] = g[static_cast<size_t>(i) * levels + l];
            coords.push_back(PElement::from_window(spec, -k, digits));
        }
        cb(PVector(spec, coords));
        size_t t = 0;
        while (t < g.size() && ++g[t] == spec.p) {
            g[t] = 0;
            ++t;
        }
        if (t == g.size()) break;
        if (g.empty()) break;
    }
}

// Riemann-style sum of f against the measure, sampling each piece on the
// grid of radius-p^r cosets and weighting by density * |rep|^e * p^(rn).
inline Complex measure_integral(const std::function<Complex(const PVector&)>& f,
                                const StepMeasure& m, int r) {
    Complex acc{0, 0};
    for (const auto& a : m.atoms()) acc += a.mass * f(a.point);
    for (const auto& pc : m.pieces()) {
        double coset_mass =
            padlev::to_double(padlev::pow_rational(m.spec().p,
                                                   r * static_cast<long long>(m.dim())));
        Complex piece{0, 0};
        for_each_rep(m.spec(), m.dim(), pc.region.radius_log, r, [&](const PVector& off) {
            PVector x = pc.region.center + off;
            if (!pc.region.contains(x)) return;
            double w = 1.0;
            if (pc.radial_exponent != 0)
                w = std::pow(padlev::to_double(x.norm()), pc.radial_exponent);
            piece += w * f(x);
        });
        acc += pc.density * coset_mass * piece;
    }
    return acc;
}

inline Complex char_at(const PVector& s, const PVector& x) {
    return std::polar(1.0, padlev::char_angle(s, x).radians());
}

// Full-grid character sum over B(0, p^k)^n at refinement r.
inline Complex char_ball(const PVector& s, int k, int r) {
    Complex acc{0, 0};
    for_each_rep(s.spec(), s.dim(), k, r,
                 [&](const PVector& x) { acc += char_at(s, x); });
    double mass = padlev::to_double(
        padlev::pow_rational(s.spec().p, r * static_cast<long long>(s.dim())));
    return acc * mass;
}

} // namespace oracle
