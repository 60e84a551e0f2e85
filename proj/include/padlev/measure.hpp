#pragma once

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "field.hpp"

namespace padlev {

// Ball |x - center| <= p^radius_log, optionally minus the concentric ball
// |x - center| <= p^inner_radius_log.
struct BallRegion {
    PVector center;
    int radius_log = 0;
    std::optional<int> inner_radius_log;

    BallRegion() = default;
    BallRegion(PVector c, int k, std::optional<int> inner = std::nullopt)
        : center(std::move(c)), radius_log(k), inner_radius_log(inner) {
        if (inner_radius_log && *inner_radius_log >= radius_log)
            throw InvalidParams("annulus: inner radius must be smaller");
    }

    int dim() const { return center.dim(); }
    const FieldSpec& spec() const { return center.spec(); }

    bool contains(const PVector& x) const {
        BigRational d = (x - center).norm();
        if (d > pow_rational(spec().p, radius_log)) return false;
        if (inner_radius_log && d <= pow_rational(spec().p, *inner_radius_log))
            return false;
        return true;
    }

    bool contains_zero() const { return contains(PVector::zero(spec(), dim())); }
};

inline BigRational haar_mass(const BallRegion& r) {
    long long n = r.dim();
    BigRational m = pow_rational(r.spec().p, r.radius_log * n);
    if (r.inner_radius_log)
        m -= pow_rational(r.spec().p, *r.inner_radius_log * n);
    return m;
}

// Mass of |x|^e d(Haar) over a centered ball or annulus in K^n.
// floor = nullopt means the full ball down to 0 (geometric tail).
inline BigRational radial_mass(const FieldSpec& spec, int n, int outer_log,
                               std::optional<int> floor_log, int e) {
    if (e == 0) {
        BigRational m = pow_rational(spec.p, outer_log * static_cast<long long>(n));
        if (floor_log)
            m -= pow_rational(spec.p, *floor_log * static_cast<long long>(n));
        return m;
    }
    long long q = e + n; // sphere masses scale like p^(j q)
    BigRational shell(1);
    shell -= pow_rational(spec.p, -n);
    if (!floor_log) {
        if (q <= 0) throw DivergentMass("radial mass diverges toward 0");
        // sum_{j <= k} p^(jq) = p^(kq) / (1 - p^-q)
        BigRational s = pow_rational(spec.p, outer_log * q);
        s /= BigRational(1) - pow_rational(spec.p, -q);
        return shell * s;
    }
    // finite sum j in (floor, outer]
    BigRational acc(0);
    for (int j = *floor_log + 1; j <= outer_log; ++j)
        acc += pow_rational(spec.p, j * q);
    return shell * acc;
}

// Process-wide refinement cap; the CLI seeds it from PADIC_LEVY_COSET_CAP.
inline std::atomic<long long>& integration_cap_slot() {
    static std::atomic<long long> cap{10'000'000};
    return cap;
}
inline long long integration_cap() { return integration_cap_slot().load(); }
inline void set_integration_cap(long long v) {
    if (v < 1) throw InvalidParams("integration cap must be positive");
    integration_cap_slot().store(v);
}

// f(x) = coeff * |x|^exponent on 0 < |x| <= p^ball_log; coeff 0 declares a
// vanishing ball.
struct RadialTail {
    int ball_log;
    Complex coeff;
    int exponent = 0;
};

// Locally constant integrand: constant on B(z, p^constancy_log(z)).
// constancy_log may return kUndefinedRadius where no radius is known (at 0
// for singular integrands); then a tail declaration is required to integrate
// across 0.
struct LocallyConstantFn {
    static constexpr int kUndefinedRadius = std::numeric_limits<int>::min();

    std::function<Complex(const PVector&)> eval;
    std::function<int(const PVector&)> constancy_log;
    std::optional<RadialTail> tail;
};

struct Atom {
    PVector point;
    double mass;
};

// density * |x|^radial_exponent * Haar restricted to region.
// radial_exponent != 0 requires a region centered at 0.
struct Piece {
    BallRegion region;
    double density;
    int radial_exponent = 0;
};

class StepMeasure {
public:
    StepMeasure(FieldSpec spec, int n, std::vector<Atom> atoms, std::vector<Piece> pieces)
        : spec_(spec), dim_(n) {
        if (n < 1) throw DimensionMismatch("measure: dimension must be >= 1");
        for (auto& a : atoms) {
            require_compatible(spec_, a.point.spec());
            if (a.point.dim() != n) throw DimensionMismatch("atom dimension");
            if (!(a.mass >= 0) || !std::isfinite(a.mass))
                throw InvalidParams("atom mass must be finite and >= 0");
        }
        for (auto& pc : pieces) {
            require_compatible(spec_, pc.region.spec());
            if (pc.region.dim() != n) throw DimensionMismatch("piece dimension");
            if (!(pc.density >= 0) || !std::isfinite(pc.density))
                throw InvalidParams("piece density must be finite and >= 0");
            // canonical form: a region whose outer ball contains 0 is
            // recentered at 0, so its hole must be concentric with 0 too
            BallRegion& r = pc.region;
            if (!r.center.is_zero() &&
                r.center.norm() <= pow_rational(spec_.p, r.radius_log)) {
                if (r.inner_radius_log &&
                    r.center.norm() > pow_rational(spec_.p, *r.inner_radius_log))
                    throw InvalidParams("annulus hole off-center from 0 inside "
                                        "a ball containing 0");
                r.center = PVector::zero(spec_, n);
            }
            if (pc.radial_exponent != 0 && !r.center.is_zero())
                throw InvalidParams("radial piece must be centered at 0");
        }
        // dedup atoms by exact point equality
        for (auto& a : atoms) {
            if (a.mass == 0) continue;
            bool merged = false;
            for (auto& b : atoms_)
                if (b.point == a.point) {
                    b.mass += a.mass;
                    merged = true;
                    break;
                }
            if (!merged) atoms_.push_back(a);
        }
        // merge pieces with identical geometry; distinct overlapping pieces
        // keep sum semantics (needed for mixed radial exponents)
        for (auto& pc : pieces) {
            if (pc.density == 0) continue;
            bool merged = false;
            for (auto& q : pieces_)
                if (q.radial_exponent == pc.radial_exponent &&
                    q.region.radius_log == pc.region.radius_log &&
                    q.region.inner_radius_log == pc.region.inner_radius_log &&
                    q.region.center == pc.region.center) {
                    q.density += pc.density;
                    merged = true;
                    break;
                }
            if (!merged) pieces_.push_back(pc);
        }
    }

    static StepMeasure dirac(const PVector& point, double mass = 1.0) {
        return StepMeasure(point.spec(), point.dim(), {Atom{point, mass}}, {});
    }

    static StepMeasure haar_ball(const FieldSpec& spec, int n, int radius_log,
                                 double total = 1.0) {
        BallRegion r(PVector::zero(spec, n), radius_log);
        double density = total / to_double(haar_mass(r));
        return StepMeasure(spec, n, {}, {Piece{r, density, 0}});
    }

    static StepMeasure zero_measure(const FieldSpec& spec, int n) {
        return StepMeasure(spec, n, {}, {});
    }

    const FieldSpec& spec() const { return spec_; }
    int dim() const { return dim_; }
    const std::vector<Atom>& atoms() const { return atoms_; }
    const std::vector<Piece>& pieces() const { return pieces_; }
    bool is_atomic() const { return pieces_.empty(); }
    bool is_empty() const { return atoms_.empty() && pieces_.empty(); }

    double total_mass() const {
        double t = 0;
        for (const auto& a : atoms_) t += a.mass;
        for (const auto& pc : pieces_) t += pc.density * to_double(piece_haar(pc));
        return t;
    }

    double mass_at_zero() const {
        for (const auto& a : atoms_)
            if (a.point.is_zero()) return a.mass;
        return 0.0;
    }

    StepMeasure scaled(double c) const {
        if (!(c >= 0) || !std::isfinite(c)) throw InvalidParams("scale must be >= 0");
        auto atoms = atoms_;
        auto pieces = pieces_;
        for (auto& a : atoms) a.mass *= c;
        for (auto& pc : pieces) pc.density *= c;
        return StepMeasure(spec_, dim_, std::move(atoms), std::move(pieces));
    }

    StepMeasure operator+(const StepMeasure& o) const {
        require_compatible(spec_, o.spec_);
        if (dim_ != o.dim_) throw DimensionMismatch("measure sum");
        auto atoms = atoms_;
        atoms.insert(atoms.end(), o.atoms_.begin(), o.atoms_.end());
        auto pieces = pieces_;
        pieces.insert(pieces.end(), o.pieces_.begin(), o.pieces_.end());
        return StepMeasure(spec_, dim_, std::move(atoms), std::move(pieces));
    }

    // restriction to B(0, p^eps_log)
    StepMeasure restricted_inside(int eps_log) const {
        std::vector<Atom> atoms;
        std::vector<Piece> pieces;
        BigRational eps = pow_rational(spec_.p, eps_log);
        for (const auto& a : atoms_)
            if (a.point.norm() <= eps) atoms.push_back(a);
        for (const auto& pc : pieces_) {
            const BallRegion& r = pc.region;
            if (r.center.is_zero() || r.center.norm() <= pow_rational(spec_.p, r.radius_log)) {
                // ball through 0; clip radii at eps
                int k = std::min(r.radius_log, eps_log);
                if (r.inner_radius_log && *r.inner_radius_log >= k) continue;
                pieces.push_back(Piece{BallRegion(PVector::zero(spec_, dim_), k,
                                                  r.inner_radius_log),
                                       pc.density, pc.radial_exponent});
            } else if (r.center.norm() <= eps) {
                pieces.push_back(pc); // |x| = |center| on the whole region
            }
        }
        return StepMeasure(spec_, dim_, std::move(atoms), std::move(pieces));
    }

    // restriction to the complement of B(0, p^eps_log)
    StepMeasure restricted_outside(int eps_log) const {
        std::vector<Atom> atoms;
        std::vector<Piece> pieces;
        BigRational eps = pow_rational(spec_.p, eps_log);
        for (const auto& a : atoms_)
            if (a.point.norm() > eps) atoms.push_back(a);
        for (const auto& pc : pieces_) {
            const BallRegion& r = pc.region;
            if (r.center.is_zero() || r.center.norm() <= pow_rational(spec_.p, r.radius_log)) {
                if (r.radius_log <= eps_log) continue;
                int inner = std::max(r.inner_radius_log.value_or(eps_log), eps_log);
                if (inner >= r.radius_log) continue;
                pieces.push_back(Piece{BallRegion(PVector::zero(spec_, dim_),
                                                  r.radius_log, inner),
                                       pc.density, pc.radial_exponent});
            } else if (r.center.norm() > eps) {
                pieces.push_back(pc);
            }
        }
        return StepMeasure(spec_, dim_, std::move(atoms), std::move(pieces));
    }

private:
    BigRational piece_haar(const Piece& pc) const {
        if (pc.radial_exponent == 0) return haar_mass(pc.region);
        return radial_mass(spec_, dim_, pc.region.radius_log,
                           pc.region.inner_radius_log, pc.radial_exponent);
    }

    FieldSpec spec_;
    int dim_;
    std::vector<Atom> atoms_;
    std::vector<Piece> pieces_;
};

namespace detail {

// Digit offsets d * p^(-k) per coordinate; calls cb for each of the p^n
// (or p^n - 1 when skip_zero) patterns, added to base.
inline void for_each_offset(const PVector& base, int k, bool skip_zero,
                            const std::function<void(const PVector&)>& cb) {
    const FieldSpec& spec = base.spec();
    int n = base.dim();
    std::vector<int> digit(static_cast<size_t>(n), 0);
    while (true) {
        bool all_zero = std::all_of(digit.begin(), digit.end(), [](int d) { return d == 0; });
        if (!(skip_zero && all_zero)) {
            std::vector<PElement> coords;
            coords.reserve(static_cast<size_t>(n));
            for (int i = 0; i < n; ++i) {
                if (digit[static_cast<size_t>(i)] == 0) {
                    coords.push_back(base[i]);
                } else {
                    std::vector<int> w(static_cast<size_t>(spec.precision + k), 0);
                    w[0] = digit[static_cast<size_t>(i)];
                    PElement off = PElement::from_window(spec, -k, std::move(w));
                    coords.push_back(base[i] + off);
                }
            }
            cb(PVector(spec, std::move(coords)));
        }
        int t = 0;
        while (t < n && ++digit[static_cast<size_t>(t)] == spec.p) {
            digit[static_cast<size_t>(t)] = 0;
            ++t;
        }
        if (t == n) break;
    }
}

class Integrator {
public:
    Integrator(const LocallyConstantFn& f, const FieldSpec& spec, int n, long long cap)
        : f_(f), spec_(spec), n_(n), cap_(cap), zero_(PVector::zero(spec, n)) {}

    Complex run(const StepMeasure& m) {
        Complex acc{0, 0};
        for (const auto& a : m.atoms()) acc += a.mass * value_at_atom(a.point);
        for (const auto& pc : m.pieces()) acc += pc.density * piece_integral(pc);
        return acc;
    }

private:
    Complex value_at_atom(const PVector& x) {
        if (f_.tail) {
            BigRational nx = x.norm();
            if (x.is_zero()) {
                if (f_.tail->coeff == Complex{0, 0} || f_.tail->exponent > 0)
                    return {0, 0};
                throw SingularAtZero("integrand singular at an atom at 0");
            }
            if (nx <= pow_rational(spec_.p, f_.tail->ball_log))
                return f_.tail->coeff *
                       std::pow(to_double(nx), f_.tail->exponent);
        }
        return f_.eval(x);
    }

    Complex piece_integral(const Piece& pc) {
        const BallRegion& r = pc.region;
        bool through0 =
            r.center.is_zero() || r.center.norm() <= pow_rational(spec_.p, r.radius_log);
        if (through0)
            return ball_at_zero(pc.radial_exponent, r.radius_log, r.inner_radius_log);
        // |x| is constant on the region; fold the radial factor out
        double scale = 1.0;
        if (pc.radial_exponent != 0)
            scale = std::pow(to_double(r.center.norm()), pc.radial_exponent);
        Complex v = ball_off_zero(r.center, r.radius_log);
        if (r.inner_radius_log) v -= ball_off_zero(r.center, *r.inner_radius_log);
        return scale * v;
    }

    // Ball not containing 0.
    Complex ball_off_zero(const PVector& c, int k) {
        if (++used_ > cap_)
            throw RefinementExplosion("coset refinement exceeded cap " +
                                      std::to_string(cap_));
        if (f_.tail && c.norm() <= pow_rational(spec_.p, f_.tail->ball_log)) {
            if (f_.tail->coeff == Complex{0, 0}) return {0, 0};
            double w = std::pow(to_double(c.norm()), f_.tail->exponent);
            return f_.tail->coeff * w *
                   to_double(pow_rational(spec_.p, k * static_cast<long long>(n_)));
        }
        int r = f_.constancy_log(c);
        if (r == LocallyConstantFn::kUndefinedRadius)
            throw UndefinedAtZero("integrand has no constancy radius at a point off 0");
        if (r >= k)
            return f_.eval(c) *
                   to_double(pow_rational(spec_.p, k * static_cast<long long>(n_)));
        Complex acc{0, 0};
        for_each_offset(c, k, false,
                        [&](const PVector& sub) { acc += ball_off_zero(sub, k - 1); });
        return acc;
    }

    // Centered ball or annulus; walks spheres toward 0 and exits through the
    // declared tail or a constancy radius at 0. floor set = annulus.
    Complex ball_at_zero(int e, int k, std::optional<int> floor) {
        Complex acc{0, 0};
        int j = k;
        while (true) {
            if (floor && j <= *floor) break;
            if (f_.tail && j <= f_.tail->ball_log) {
                if (f_.tail->coeff != Complex{0, 0})
                    acc += f_.tail->coeff *
                           to_double(radial_mass(spec_, n_, j, floor,
                                                 e + f_.tail->exponent));
                break;
            }
            int r0 = f_.constancy_log(zero_);
            if (r0 != LocallyConstantFn::kUndefinedRadius && r0 >= j) {
                acc += f_.eval(zero_) * to_double(radial_mass(spec_, n_, j, floor, e));
                break;
            }
            if (r0 == LocallyConstantFn::kUndefinedRadius && !f_.tail)
                throw UndefinedAtZero(
                    "integrand singular at 0 with no declared vanishing ball");
            // sphere |x| = p^j, split into first-digit cosets
            double scale = e == 0 ? 1.0 : std::pow(static_cast<double>(spec_.p),
                                                   static_cast<double>(e) * j);
            Complex s{0, 0};
            for_each_offset(zero_, j, true,
                            [&](const PVector& c) { s += ball_off_zero(c, j - 1); });
            acc += scale * s;
            --j;
        }
        return acc;
    }

    const LocallyConstantFn& f_;
    FieldSpec spec_;
    int n_;
    long long cap_;
    long long used_ = 0;
    PVector zero_;
};

} // namespace detail

inline Complex integrate_locally_constant(const LocallyConstantFn& f,
                                          const StepMeasure& m,
                                          long long cap = -1) {
    if (cap < 0) cap = integration_cap();
    detail::Integrator engine(f, m.spec(), m.dim(), cap);
    return engine.run(m);
}

// Exact value of the character integral over B(0, p^k): p^(kn) for
// |s| <= p^-k and 0 for |s| >= p^(1-k).
inline BigRational ball_character_closed_form(const PVector& s, int radius_log) {
    long long n = s.dim();
    if (s.is_zero() || s.norm() <= pow_rational(s.spec().p, -radius_log))
        return pow_rational(s.spec().p, radius_log * n);
    return BigRational(0);
}

// Brute coset summation of the same integral. Enumerates cosets of the
// coarsest radius on which chi_s is constant and accumulates exact turn
// angles over a common denominator.
inline Complex ball_character_integral(const PVector& s, int radius_log,
                                       long long cap = -1) {
    if (cap < 0) cap = integration_cap();
    const FieldSpec& spec = s.spec();
    int n = s.dim();
    int k = radius_log;
    int ns = s.is_zero() ? PElement::kInfOrd : s.min_ord();
    if (s.is_zero() || ns >= k)
        return {to_double(pow_rational(spec.p, k * static_cast<long long>(n))), 0.0};

    int levels = k - ns;                  // digits per coordinate
    int mmax = levels;                    // common denominator p^mmax
    BigInt total_big = pow_big(spec.p, static_cast<long long>(n) * levels);
    if (total_big > cap)
        throw RefinementExplosion("character integral needs " + total_big.str() +
                                  " cosets, cap " + std::to_string(cap));
    long long total = total_big.convert_to<long long>();
    long long D = pow_big(spec.p, mmax).convert_to<long long>();

    // angle numerators of s_i p^e over denominator D, plus rollback deltas
    std::vector<long long> step(static_cast<size_t>(n) * levels, 0);
    std::vector<long long> back(step.size(), 0);
    for (int i = 0; i < n; ++i) {
        for (int l = 0; l < levels; ++l) {
            int e = -k + l;
            TurnAngle ang = s[i].shifted(e).frac_part();
            BigInt num = ang.numerator() * pow_big(spec.p, mmax - ang.exponent());
            long long a = (num % D).convert_to<long long>();
            step[static_cast<size_t>(i) * levels + l] = a;
            back[static_cast<size_t>(i) * levels + l] =
                (D - (a * spec.p) % D) % D;
        }
    }

    std::vector<double> counts(static_cast<size_t>(D), 0.0);
    std::vector<int> digit(step.size(), 0);
    long long angle = 0;
    for (long long it = 0;; ++it) {
        counts[static_cast<size_t>(angle)] += 1.0;
        if (it + 1 == total) break;
        size_t t = 0;
        while (true) {
            angle += step[t];
            if (angle >= D) angle -= D;
            if (++digit[t] < spec.p) break;
            digit[t] = 0;
            angle += back[t];
            if (angle >= D) angle -= D;
            ++t;
        }
    }

    double mass = to_double(pow_rational(spec.p, ns * static_cast<long long>(n)));
    double mean = static_cast<double>(total) / static_cast<double>(D);
    Complex acc{0, 0};
    for (long long a = 0; a < D; ++a) {
        double c = counts[static_cast<size_t>(a)] - mean;
        if (c == 0) continue;
        acc += c * TurnAngle(spec.p, a, mmax).to_complex();
    }
    return acc * mass;
}

// Fourier transform of the measure at s, exact geometry throughout.
inline Complex charfn_of_measure(const StepMeasure& m, const PVector& s) {
    require_compatible(m.spec(), s.spec());
    if (s.dim() != m.dim()) throw DimensionMismatch("charfn: dimension mismatch");
    const FieldSpec& spec = m.spec();
    int n = m.dim();
    Complex acc{0, 0};
    for (const auto& a : m.atoms())
        acc += a.mass * char_angle(s, a.point).to_complex();
    int ns = s.is_zero() ? PElement::kInfOrd : s.min_ord();
    for (const auto& pc : m.pieces()) {
        const BallRegion& r = pc.region;
        bool through0 =
            r.center.is_zero() || r.center.norm() <= pow_rational(spec.p, r.radius_log);
        if (!through0) {
            double scale = pc.radial_exponent == 0
                               ? 1.0
                               : std::pow(to_double(r.center.norm()), pc.radial_exponent);
            Complex v = ball_character_integral(s, r.radius_log);
            if (r.inner_radius_log) v -= ball_character_integral(s, *r.inner_radius_log);
            acc += pc.density * scale * char_angle(s, r.center).to_complex() * v;
            continue;
        }
        // centered region: chi = 1 below p^ns, sphere sums above
        int lo = r.inner_radius_log.value_or(std::numeric_limits<int>::min());
        Complex v{0, 0};
        int flat = std::min(r.radius_log, ns == PElement::kInfOrd ? r.radius_log : ns);
        if (!r.inner_radius_log || *r.inner_radius_log < flat) {
            std::optional<int> fl = r.inner_radius_log;
            v += to_double(radial_mass(spec, n, flat, fl, pc.radial_exponent));
        }
        for (int j = std::max(flat + 1, lo == std::numeric_limits<int>::min()
                                            ? flat + 1
                                            : std::max(flat, lo) + 1);
             j <= r.radius_log; ++j) {
            double scale = pc.radial_exponent == 0
                               ? 1.0
                               : std::pow(static_cast<double>(spec.p),
                                          static_cast<double>(pc.radial_exponent) * j);
            Complex sphere = ball_character_integral(s, j) -
                             ball_character_integral(s, j - 1);
            v += scale * sphere;
        }
        acc += pc.density * v;
    }
    return acc;
}

// Convolution of purely atomic measures; points add in the field.
inline StepMeasure convolve(const StepMeasure& a, const StepMeasure& b) {
    if (!a.is_atomic() || !b.is_atomic())
        throw UnsupportedDensityConvolution("convolve needs atomic measures");
    require_compatible(a.spec(), b.spec());
    if (a.dim() != b.dim()) throw DimensionMismatch("convolve: dimension mismatch");
    std::vector<Atom> atoms;
    for (const auto& x : a.atoms())
        for (const auto& y : b.atoms())
            atoms.push_back(Atom{x.point + y.point, x.mass * y.mass});
    return StepMeasure(a.spec(), a.dim(), std::move(atoms), {});
}

inline StepMeasure convolve_power(const StepMeasure& m, int k) {
    if (k < 1) throw InvalidParams("convolve_power: k must be >= 1");
    StepMeasure acc = m;
    for (int i = 1; i < k; ++i) acc = convolve(acc, m);
    return acc;
}

enum class WeightSpec {
    One,                     // w(x) = 1
    Square,                  // w(x) = |x|^2
    InverseSquare,           // w(x) = |x|^{-2}
    SquareOverOnePlusSquare, // w(x) = |x|^2 / (1 + |x|^2)
    OnePlusSquareOverSquare  // w(x) = (1 + |x|^2) / |x|^2
};

// (w(x)/v) dm. Exact except for the non-power weight on balls through 0,
// where spheres are split off until the remaining tail is below double
// resolution and closed with the |x|^2 approximation.
inline StepMeasure reweight(const StepMeasure& m, WeightSpec w, double v) {
    if (!(v > 0) || !std::isfinite(v)) throw InvalidParams("reweight: v must be > 0");
    const FieldSpec& spec = m.spec();
    int n = m.dim();
    auto weight_at = [&](const BigRational& norm) -> double {
        double r2 = to_double(norm * norm);
        switch (w) {
            case WeightSpec::One: return 1.0;
            case WeightSpec::Square: return r2;
            case WeightSpec::InverseSquare: return 1.0 / r2;
            case WeightSpec::SquareOverOnePlusSquare: return r2 / (1.0 + r2);
            case WeightSpec::OnePlusSquareOverSquare: return (1.0 + r2) / r2;
        }
        return 0.0;
    };
    std::vector<Atom> atoms;
    std::vector<Piece> pieces;
    for (const auto& a : m.atoms()) {
        if (a.point.is_zero()) {
            if (w == WeightSpec::OnePlusSquareOverSquare || w == WeightSpec::InverseSquare)
                throw SingularAtZero("weight singular at an atom at 0");
            if (w == WeightSpec::One) atoms.push_back(Atom{a.point, a.mass / v});
            continue; // |0|^2 weights kill the atom
        }
        atoms.push_back(Atom{a.point, a.mass * weight_at(a.point.norm()) / v});
    }
    for (const auto& pc : m.pieces()) {
        const BallRegion& r = pc.region;
        bool through0 =
            r.center.is_zero() || r.center.norm() <= pow_rational(spec.p, r.radius_log);
        if (!through0) {
            // |x| constant on the region
            pieces.push_back(
                Piece{r, pc.density * weight_at(r.center.norm()) / v, pc.radial_exponent});
            continue;
        }
        BallRegion centered(PVector::zero(spec, n), r.radius_log, r.inner_radius_log);
        switch (w) {
            case WeightSpec::One:
                pieces.push_back(Piece{centered, pc.density / v, pc.radial_exponent});
                break;
            case WeightSpec::Square:
                pieces.push_back(Piece{centered, pc.density / v, pc.radial_exponent + 2});
                break;
            case WeightSpec::InverseSquare:
                pieces.push_back(Piece{centered, pc.density / v, pc.radial_exponent - 2});
                break;
            case WeightSpec::OnePlusSquareOverSquare:
                pieces.push_back(Piece{centered, pc.density / v, pc.radial_exponent});
                pieces.push_back(Piece{centered, pc.density / v, pc.radial_exponent - 2});
                break;
            case WeightSpec::SquareOverOnePlusSquare: {
                // exact spheres down to a floor, then the |x|^2 tail
                int floor_log = r.radius_log -
                                std::max(1, static_cast<int>(std::ceil(
                                                64.0 / ((4.0 + n) * std::log2(spec.p)))));
                int lo = r.inner_radius_log.value_or(floor_log);
                for (int j = r.radius_log; j > std::max(lo, floor_log); --j) {
                    BallRegion sphere(PVector::zero(spec, n), j, j - 1);
                    double r2 = to_double(pow_rational(spec.p, 2 * j));
                    pieces.push_back(Piece{sphere, pc.density * (r2 / (1.0 + r2)) / v,
                                           pc.radial_exponent});
                }
                if (!r.inner_radius_log || *r.inner_radius_log < floor_log) {
                    BallRegion tail(PVector::zero(spec, n), floor_log,
                                    r.inner_radius_log);
                    pieces.push_back(
                        Piece{tail, pc.density / v, pc.radial_exponent + 2});
                }
                break;
            }
        }
    }
    return StepMeasure(spec, n, std::move(atoms), std::move(pieces));
}

} // namespace padlev
