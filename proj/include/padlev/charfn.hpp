#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <optional>
#include <utility>
#include <vector>

#include "measure.hpp"

namespace padlev {

// ---------------------------------------------------------------------------
// Bracket cocycles
// ---------------------------------------------------------------------------

// Exact defect value together with the arithmetic facts guaranteed for it:
// a denominator bound and a size bound.
struct CocycleReport {
    BigRational value;
    bool integrality_ok = false;
    bool bound_ok = false;
};

namespace detail {

inline BigRational frac_turns(const PElement& e) { return e.frac_part().turns(); }

} // namespace detail

// Additivity defect of the fractional part along the pairing with x:
// value = [(y+z, x)] - [(y, x)] - [(z, x)].
// In characteristic 0 the value is an integer; in characteristic p it is a
// multiple of 1/p. It always lies in [-2, 1] and vanishes whenever both
// pairings land in the unit ball.
inline CocycleReport f1_cocycle(const PVector& y, const PVector& z, const PVector& x) {
    require_compatible(y.spec(), x.spec());
    require_compatible(z.spec(), x.spec());
    if (y.dim() != x.dim() || z.dim() != x.dim())
        throw DimensionMismatch("f1_cocycle: dimension mismatch");
    PElement a = pairing(y, x);
    PElement b = pairing(z, x);
    BigRational value =
        detail::frac_turns(a + b) - detail::frac_turns(a) - detail::frac_turns(b);
    CocycleReport rep;
    rep.value = value;
    rep.integrality_ok = x.spec().kind == FieldKind::CharZero
                             ? is_integer(value)
                             : is_integer(value * x.spec().p);
    rep.bound_ok = value >= BigRational(-2) && value <= BigRational(1);
    return rep;
}

// Scaling defect of the fractional part: value = [beta*gamma] - [beta][gamma].
// In characteristic 0 its denominator divides p^max(0, -min(ord beta, ord gamma));
// in characteristic p it is a multiple of 1/p^2. It always lies in [-1, 1]
// and vanishes whenever gamma is small enough that both products are integral.
inline CocycleReport f2_cocycle(const PElement& beta, const PElement& gamma) {
    require_compatible(beta.spec(), gamma.spec());
    BigRational value = detail::frac_turns(beta * gamma) -
                        detail::frac_turns(beta) * detail::frac_turns(gamma);
    CocycleReport rep;
    rep.value = value;
    if (beta.spec().kind == FieldKind::CharZero) {
        int nmin = 0;
        if (!beta.is_zero() && !gamma.is_zero())
            nmin = std::min({0, beta.valuation(), gamma.valuation()});
        rep.integrality_ok = is_integer(value * pow_big(beta.spec().p, -nmin));
    } else {
        rep.integrality_ok = is_integer(value * pow_big(beta.spec().p, 2));
    }
    rep.bound_ok = value >= BigRational(-1) && value <= BigRational(1);
    return rep;
}

// ---------------------------------------------------------------------------
// Integrand factories
// ---------------------------------------------------------------------------

namespace detail {

// <(y, x)> as a function of x. Constant on cosets of radius p^min_ord(y) and
// identically 0 on the ball of that radius around 0.
inline LocallyConstantFn bracket_integrand(const PVector& y) {
    int ny = y.min_ord();
    LocallyConstantFn f;
    f.eval = [y](const PVector& x) {
        return Complex{char_angle(y, x).radians(), 0.0};
    };
    f.constancy_log = [ny](const PVector&) { return ny; };
    f.tail = RadialTail{ny, Complex{0.0, 0.0}, 0};
    return f;
}

// <(y, x)> <(z, x)>.
inline LocallyConstantFn bracket_pair_integrand(const PVector& y, const PVector& z) {
    int r = std::min(y.min_ord(), z.min_ord());
    LocallyConstantFn f;
    f.eval = [y, z](const PVector& x) {
        return Complex{char_angle(y, x).radians() * char_angle(z, x).radians(), 0.0};
    };
    f.constancy_log = [r](const PVector&) { return r; };
    f.tail = RadialTail{r, Complex{0.0, 0.0}, 0};
    return f;
}

// Fully compensated jump integrand against the small-jump weight
// (1 + |x|^2) / |x|^2, with theta = <(y, x)>:
//   (chi - 1 - i theta / (1 + |x|^2) + theta^2 / (2 (1 + |x|^2))) (1 + |x|^2)/|x|^2.
// Vanishes identically on the ball where theta = 0, which tames the weight's
// singularity at 0.
inline LocallyConstantFn compensated_jump_integrand(const PVector& y) {
    int ny = y.min_ord();
    LocallyConstantFn f;
    f.eval = [y](const PVector& x) -> Complex {
        if (x.is_zero()) return {0.0, 0.0};
        double th = char_angle(y, x).radians();
        double r2 = to_double(x.norm() * x.norm());
        Complex chi = std::polar(1.0, th);
        Complex core = chi - Complex{1.0, 0.0} - Complex{0.0, th / (1.0 + r2)} +
                       Complex{0.5 * th * th / (1.0 + r2), 0.0};
        return ((1.0 + r2) / r2) * core;
    };
    f.constancy_log = [ny](const PVector& x) {
        if (x.is_zero()) return LocallyConstantFn::kUndefinedRadius;
        return std::min(ny, x.min_ord() - 1);
    };
    f.tail = RadialTail{ny, Complex{0.0, 0.0}, 0};
    return f;
}

// chi - 1 - i theta + theta^2 / 2, the small-jump integrand of the truncated
// form. Vanishes where theta does.
inline LocallyConstantFn truncated_inner_integrand(const PVector& y) {
    int ny = y.min_ord();
    LocallyConstantFn f;
    f.eval = [y](const PVector& x) {
        double th = char_angle(y, x).radians();
        Complex chi = std::polar(1.0, th);
        return chi - Complex{1.0, 0.0} - Complex{0.0, th} + Complex{0.5 * th * th, 0.0};
    };
    f.constancy_log = [ny](const PVector&) { return ny; };
    f.tail = RadialTail{ny, Complex{0.0, 0.0}, 0};
    return f;
}

// chi - 1, the large-jump integrand.
inline LocallyConstantFn chi_minus_one_integrand(const PVector& y) {
    int ny = y.min_ord();
    LocallyConstantFn f;
    f.eval = [y](const PVector& x) {
        return char_value(y, x) - Complex{1.0, 0.0};
    };
    f.constancy_log = [ny](const PVector&) { return ny; };
    f.tail = RadialTail{ny, Complex{0.0, 0.0}, 0};
    return f;
}

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

// h y for a square matrix over the field.
inline PVector apply_field_form(const std::vector<std::vector<PElement>>& h,
                                const PVector& y) {
    std::vector<PElement> out;
    out.reserve(h.size());
    for (const auto& row : h) {
        PElement acc = row[0] * y[0];
        for (int j = 1; j < y.dim(); ++j)
            acc = acc + row[static_cast<size_t>(j)] * y[j];
        out.push_back(acc);
    }
    return PVector(y.spec(), std::move(out));
}

// (b u, w) for a real square matrix.
inline double real_form_value(const std::vector<std::vector<double>>& b,
                              const std::vector<double>& u,
                              const std::vector<double>& w) {
    double s = 0.0;
    for (size_t i = 0; i < b.size(); ++i)
        for (size_t j = 0; j < b[i].size(); ++j) s += b[i][j] * u[j] * w[i];
    return s;
}

// Smallest eigenvalue of a symmetric matrix by cyclic Jacobi rotations.
inline double symmetric_min_eigenvalue(std::vector<std::vector<double>> a) {
    size_t n = a.size();
    for (int sweep = 0; sweep < 64; ++sweep) {
        double off = 0.0;
        for (size_t i = 0; i < n; ++i)
            for (size_t j = i + 1; j < n; ++j) off += a[i][j] * a[i][j];
        if (off < 1e-28) break;
        for (size_t p = 0; p < n; ++p) {
            for (size_t q = p + 1; q < n; ++q) {
                if (std::abs(a[p][q]) < 1e-300) continue;
                double phi = 0.5 * std::atan2(2.0 * a[p][q], a[q][q] - a[p][p]);
                double c = std::cos(phi);
                double s = std::sin(phi);
                for (size_t k = 0; k < n; ++k) {
                    double akp = a[k][p];
                    double akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for (size_t k = 0; k < n; ++k) {
                    double apk = a[p][k];
                    double aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    double lo = a[0][0];
    for (size_t i = 1; i < n; ++i) lo = std::min(lo, a[i][i]);
    return lo;
}

inline void validate_field_form(const std::vector<std::vector<PElement>>& h,
                                const FieldSpec& spec, int n) {
    if (static_cast<int>(h.size()) != n)
        throw DimensionMismatch("quadratic form must be square of the jump dimension");
    for (const auto& row : h)
        if (static_cast<int>(row.size()) != n)
            throw DimensionMismatch("quadratic form must be square of the jump dimension");
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            const PElement& e = h[static_cast<size_t>(i)][static_cast<size_t>(j)];
            require_compatible(e.spec(), spec);
            if (!(e == h[static_cast<size_t>(j)][static_cast<size_t>(i)]))
                throw InvalidParams("field-valued quadratic form must be symmetric");
        }
}

inline void validate_real_form(const std::vector<std::vector<double>>& b, int n) {
    if (static_cast<int>(b.size()) != n)
        throw DimensionMismatch("quadratic form must be square of the jump dimension");
    for (const auto& row : b)
        if (static_cast<int>(row.size()) != n)
            throw DimensionMismatch("quadratic form must be square of the jump dimension");
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            double e = b[static_cast<size_t>(i)][static_cast<size_t>(j)];
            if (!std::isfinite(e))
                throw InvalidParams("real quadratic form entries must be finite");
            if (std::abs(e - b[static_cast<size_t>(j)][static_cast<size_t>(i)]) > 1e-12)
                throw InvalidParams("real quadratic form must be symmetric");
        }
    if (n > 0 && symmetric_min_eigenvalue(b) < -1e-12)
        throw InvalidParams("real quadratic form must be positive semidefinite");
}

} // namespace detail

// ---------------------------------------------------------------------------
// Drift and diffusion functionals
// ---------------------------------------------------------------------------

// Integral of <(y, x)> against mu. Finite for every step measure because the
// bracket vanishes on a ball around 0.
inline double bracket_integral(const PVector& y, const StepMeasure& mu) {
    require_compatible(y.spec(), mu.spec());
    if (y.dim() != mu.dim())
        throw DimensionMismatch("bracket_integral: dimension mismatch");
    if (y.is_zero() || mu.is_empty()) return 0.0;
    return integrate_locally_constant(detail::bracket_integrand(y), mu).real();
}

// Integral of <(y, x)> <(z, x)> against mu.
inline double bracket_pair_integral(const PVector& y, const PVector& z,
                                    const StepMeasure& mu) {
    require_compatible(y.spec(), mu.spec());
    require_compatible(z.spec(), mu.spec());
    if (y.dim() != mu.dim() || z.dim() != mu.dim())
        throw DimensionMismatch("bracket_pair_integral: dimension mismatch");
    if (y.is_zero() || z.is_zero() || mu.is_empty()) return 0.0;
    return integrate_locally_constant(detail::bracket_pair_integrand(y, z), mu).real();
}

// Drift functional of a compensated jump measure nu: the bracket integral
// against the inverse-square reweighting of nu.
inline double A_functional(const StepMeasure& nu, const PVector& y) {
    require_compatible(y.spec(), nu.spec());
    if (y.dim() != nu.dim())
        throw DimensionMismatch("A_functional: dimension mismatch");
    if (y.is_zero() || nu.is_empty()) return 0.0;
    return bracket_integral(y, reweight(nu, WeightSpec::InverseSquare, 1.0));
}

// Diffusion functional of a compensated jump measure nu.
inline double B_functional(const StepMeasure& nu, const PVector& y, const PVector& z) {
    require_compatible(y.spec(), nu.spec());
    require_compatible(z.spec(), nu.spec());
    if (y.dim() != nu.dim() || z.dim() != nu.dim())
        throw DimensionMismatch("B_functional: dimension mismatch");
    if (y.is_zero() || z.is_zero() || nu.is_empty()) return 0.0;
    return bracket_pair_integral(y, z, reweight(nu, WeightSpec::InverseSquare, 1.0));
}

// ---------------------------------------------------------------------------
// Correction integrals for the functional laws of A and B
// ---------------------------------------------------------------------------

// 2 pi Int f1(y, z; x) mu(dx): the radian-scaled correction by which the
// drift functional fails to be additive in y.
inline double f1_correction(const PVector& y, const PVector& z, const StepMeasure& mu) {
    require_compatible(y.spec(), mu.spec());
    require_compatible(z.spec(), mu.spec());
    if (y.dim() != mu.dim() || z.dim() != mu.dim())
        throw DimensionMismatch("f1_correction: dimension mismatch");
    if (y.is_zero() || z.is_zero() || mu.is_empty()) return 0.0;
    int r = std::min(y.min_ord(), z.min_ord());
    LocallyConstantFn f;
    f.eval = [y, z](const PVector& x) {
        return Complex{to_double(f1_cocycle(y, z, x).value), 0.0};
    };
    f.constancy_log = [r](const PVector&) { return r; };
    f.tail = RadialTail{r, Complex{0.0, 0.0}, 0};
    return kTwoPi * integrate_locally_constant(f, mu).real();
}

// 2 pi Int f2(beta, (y, x)) mu(dx): the radian-scaled correction by which the
// drift functional fails to scale by [beta].
inline double f2_correction(const PElement& beta, const PVector& y,
                            const StepMeasure& mu) {
    require_compatible(beta.spec(), mu.spec());
    require_compatible(y.spec(), mu.spec());
    if (y.dim() != mu.dim())
        throw DimensionMismatch("f2_correction: dimension mismatch");
    if (beta.is_zero() || y.is_zero() || mu.is_empty()) return 0.0;
    int nc = y.min_ord() + std::min(0, beta.valuation());
    LocallyConstantFn f;
    f.eval = [beta, y](const PVector& x) {
        return Complex{to_double(f2_cocycle(beta, pairing(y, x)).value), 0.0};
    };
    f.constancy_log = [nc](const PVector&) { return nc; };
    f.tail = RadialTail{nc, Complex{0.0, 0.0}, 0};
    return kTwoPi * integrate_locally_constant(f, mu).real();
}

// 2 pi Int f1(q, y; x) <(z, x)> mu(dx): additivity correction for the
// diffusion functional in its first slot.
inline double f1_bracket_correction(const PVector& q, const PVector& y,
                                    const PVector& z, const StepMeasure& mu) {
    require_compatible(q.spec(), mu.spec());
    require_compatible(y.spec(), mu.spec());
    require_compatible(z.spec(), mu.spec());
    if (q.dim() != mu.dim() || y.dim() != mu.dim() || z.dim() != mu.dim())
        throw DimensionMismatch("f1_bracket_correction: dimension mismatch");
    if (q.is_zero() || y.is_zero() || z.is_zero() || mu.is_empty()) return 0.0;
    int rv = std::min(q.min_ord(), y.min_ord());
    int r = std::min(rv, z.min_ord());
    LocallyConstantFn f;
    f.eval = [q, y, z](const PVector& x) {
        return Complex{to_double(f1_cocycle(q, y, x).value) *
                           char_angle(z, x).radians(),
                       0.0};
    };
    f.constancy_log = [r](const PVector&) { return r; };
    f.tail = RadialTail{rv, Complex{0.0, 0.0}, 0};
    return kTwoPi * integrate_locally_constant(f, mu).real();
}

// 2 pi Int f2(beta, (y, x)) <(z, x)> mu(dx): scaling correction for the
// diffusion functional in its first slot.
inline double f2_bracket_correction(const PElement& beta, const PVector& y,
                                    const PVector& z, const StepMeasure& mu) {
    require_compatible(beta.spec(), mu.spec());
    require_compatible(y.spec(), mu.spec());
    require_compatible(z.spec(), mu.spec());
    if (y.dim() != mu.dim() || z.dim() != mu.dim())
        throw DimensionMismatch("f2_bracket_correction: dimension mismatch");
    if (beta.is_zero() || y.is_zero() || z.is_zero() || mu.is_empty()) return 0.0;
    int nc = y.min_ord() + std::min(0, beta.valuation());
    int r = std::min(nc, z.min_ord());
    LocallyConstantFn f;
    f.eval = [beta, y, z](const PVector& x) {
        return Complex{to_double(f2_cocycle(beta, pairing(y, x)).value) *
                           char_angle(z, x).radians(),
                       0.0};
    };
    f.constancy_log = [r](const PVector&) { return r; };
    f.tail = RadialTail{nc, Complex{0.0, 0.0}, 0};
    return kTwoPi * integrate_locally_constant(f, mu).real();
}

// ---------------------------------------------------------------------------
// Generating triplets
// ---------------------------------------------------------------------------

enum class TripletForm {
    Compensated, // jump measure nu, compensation weighted by (1+|x|^2)/|x|^2
    Truncated    // jump measure eta, compensation inside the ball B(0, p^eps)
};

enum class DriftKind { NoDrift, FieldDrift, RealDrift };
enum class DiffusionKind { NoDiffusion, FieldForm, RealForm };

// Drift + diffusion + jump data of an infinitely divisible law. Value type;
// builders return modified copies and validate eagerly.
class LevyTriplet {
public:
    static LevyTriplet compensated(StepMeasure jump) {
        LevyTriplet t(std::move(jump), TripletForm::Compensated, 0);
        t.validate();
        return t;
    }

    static LevyTriplet truncated(StepMeasure jump, int epsilon_log) {
        LevyTriplet t(std::move(jump), TripletForm::Truncated, epsilon_log);
        t.validate();
        return t;
    }

    LevyTriplet with_field_drift(PVector a, double q) const {
        LevyTriplet t(*this);
        t.drift_kind_ = DriftKind::FieldDrift;
        t.a_ = std::move(a);
        t.q_ = q;
        t.v_.clear();
        t.validate();
        return t;
    }

    LevyTriplet with_real_drift(std::vector<double> v, double q) const {
        LevyTriplet t(*this);
        t.drift_kind_ = DriftKind::RealDrift;
        t.v_ = std::move(v);
        t.q_ = q;
        t.a_.reset();
        t.validate();
        return t;
    }

    LevyTriplet with_field_form(std::vector<std::vector<PElement>> h) const {
        LevyTriplet t(*this);
        t.diffusion_kind_ = DiffusionKind::FieldForm;
        t.h_ = std::move(h);
        t.b_.clear();
        t.validate();
        return t;
    }

    LevyTriplet with_real_form(std::vector<std::vector<double>> b) const {
        LevyTriplet t(*this);
        t.diffusion_kind_ = DiffusionKind::RealForm;
        t.b_ = std::move(b);
        t.h_.clear();
        t.validate();
        return t;
    }

    TripletForm form() const { return form_; }
    int epsilon_log() const { return eps_log_; }
    const StepMeasure& jump() const { return jump_; }
    DriftKind drift_kind() const { return drift_kind_; }
    DiffusionKind diffusion_kind() const { return diffusion_kind_; }
    double drift_rate() const { return q_; }
    const PVector& field_drift() const {
        if (!a_) throw InvalidParams("LevyTriplet: no field drift present");
        return *a_;
    }
    const std::vector<double>& real_drift() const { return v_; }
    const std::vector<std::vector<PElement>>& field_form() const { return h_; }
    const std::vector<std::vector<double>>& real_form() const { return b_; }

    // Linear drift part of the exponent, in radians.
    double drift_term(const PVector& y) const {
        switch (drift_kind_) {
            case DriftKind::NoDrift:
                return 0.0;
            case DriftKind::FieldDrift:
                return q_ * char_angle(*a_, y).radians();
            case DriftKind::RealDrift:
                return q_ * detail::dot(v_, bracket_vector(y));
        }
        return 0.0;
    }

    // Quadratic diffusion part of the exponent, symmetric and nonnegative
    // on the diagonal.
    double diffusion_term(const PVector& y, const PVector& z) const {
        switch (diffusion_kind_) {
            case DiffusionKind::NoDiffusion:
                return 0.0;
            case DiffusionKind::FieldForm:
                return char_angle(detail::apply_field_form(h_, y), z).radians();
            case DiffusionKind::RealForm:
                return detail::real_form_value(b_, bracket_vector(y),
                                               bracket_vector(z));
        }
        return 0.0;
    }

private:
    LevyTriplet(StepMeasure jump, TripletForm form, int eps_log)
        : form_(form), eps_log_(eps_log), jump_(std::move(jump)) {}

    void validate() const {
        if (jump_.mass_at_zero() != 0.0)
            throw InvalidParams("LevyTriplet: jump measure must not charge 0");
        int n = jump_.dim();
        if (drift_kind_ == DriftKind::FieldDrift) {
            require_compatible(a_->spec(), jump_.spec());
            if (a_->dim() != n)
                throw DimensionMismatch("LevyTriplet: drift dimension mismatch");
            if (!(q_ > 0.0) || !std::isfinite(q_))
                throw InvalidParams("LevyTriplet: drift rate must be > 0");
        }
        if (drift_kind_ == DriftKind::RealDrift) {
            if (static_cast<int>(v_.size()) != n)
                throw DimensionMismatch("LevyTriplet: drift dimension mismatch");
            for (double c : v_)
                if (!(c >= 0.0 && c <= 1.0))
                    throw InvalidParams(
                        "LevyTriplet: real drift coefficients must lie in [0, 1]");
            if (!(q_ > 0.0) || !std::isfinite(q_))
                throw InvalidParams("LevyTriplet: drift rate must be > 0");
        }
        if (diffusion_kind_ == DiffusionKind::FieldForm)
            detail::validate_field_form(h_, jump_.spec(), n);
        if (diffusion_kind_ == DiffusionKind::RealForm)
            detail::validate_real_form(b_, n);
        bool field_side = drift_kind_ == DriftKind::FieldDrift ||
                          diffusion_kind_ == DiffusionKind::FieldForm;
        bool real_side = drift_kind_ == DriftKind::RealDrift ||
                         diffusion_kind_ == DiffusionKind::RealForm;
        if (field_side && real_side)
            throw InvalidParams(
                "LevyTriplet: field-valued and real-valued parts cannot be mixed");
    }

    TripletForm form_;
    int eps_log_;
    StepMeasure jump_;
    DriftKind drift_kind_ = DriftKind::NoDrift;
    std::optional<PVector> a_;
    double q_ = 1.0;
    std::vector<double> v_;
    DiffusionKind diffusion_kind_ = DiffusionKind::NoDiffusion;
    std::vector<std::vector<PElement>> h_;
    std::vector<std::vector<double>> b_;
};

// ---------------------------------------------------------------------------
// Exponents and the characteristic functional
// ---------------------------------------------------------------------------

// Total drift and diffusion of a truncated triplet at (y, z): the declared
// terms plus the bracket integrals of the jump measure inside the cutoff ball.
inline std::pair<double, double> ab_truncated(const LevyTriplet& tr, const PVector& y,
                                              const PVector& z) {
    if (tr.form() != TripletForm::Truncated)
        throw InvalidParams("ab_truncated: triplet is not in truncated form");
    StepMeasure inner = tr.jump().restricted_inside(tr.epsilon_log());
    double a = tr.drift_term(y) + bracket_integral(y, inner);
    double b = tr.diffusion_term(y, z) + bracket_pair_integral(y, z, inner);
    return {a, b};
}

// Exponent of a compensated triplet: i A - B/2 plus the fully compensated
// jump integral against nu.
inline Complex exponent_compensated(const LevyTriplet& tr, const PVector& y) {
    if (tr.form() != TripletForm::Compensated)
        throw InvalidParams("exponent_compensated: triplet is not in compensated form");
    require_compatible(y.spec(), tr.jump().spec());
    if (y.dim() != tr.jump().dim())
        throw DimensionMismatch("exponent_compensated: dimension mismatch");
    if (y.is_zero()) return {0.0, 0.0};
    double a = tr.drift_term(y) + A_functional(tr.jump(), y);
    double b = tr.diffusion_term(y, y) + B_functional(tr.jump(), y, y);
    Complex jump_part = tr.jump().is_empty()
                            ? Complex{0.0, 0.0}
                            : integrate_locally_constant(
                                  detail::compensated_jump_integrand(y), tr.jump());
    return Complex{-0.5 * b, a} + jump_part;
}

// Exponent of a truncated triplet: i A - B/2 plus the small-jump integral
// inside the cutoff ball and the plain chi - 1 integral outside it.
inline Complex exponent_truncated(const LevyTriplet& tr, const PVector& y) {
    if (tr.form() != TripletForm::Truncated)
        throw InvalidParams("exponent_truncated: triplet is not in truncated form");
    require_compatible(y.spec(), tr.jump().spec());
    if (y.dim() != tr.jump().dim())
        throw DimensionMismatch("exponent_truncated: dimension mismatch");
    if (y.is_zero()) return {0.0, 0.0};
    StepMeasure inner = tr.jump().restricted_inside(tr.epsilon_log());
    StepMeasure outer = tr.jump().restricted_outside(tr.epsilon_log());
    double a = tr.drift_term(y) + bracket_integral(y, inner);
    double b = tr.diffusion_term(y, y) + bracket_pair_integral(y, y, inner);
    Complex small = inner.is_empty()
                        ? Complex{0.0, 0.0}
                        : integrate_locally_constant(
                              detail::truncated_inner_integrand(y), inner);
    Complex large = outer.is_empty()
                        ? Complex{0.0, 0.0}
                        : integrate_locally_constant(
                              detail::chi_minus_one_integrand(y), outer);
    return Complex{-0.5 * b, a} + small + large;
}

inline Complex levy_exponent(const LevyTriplet& tr, const PVector& y) {
    return tr.form() == TripletForm::Compensated ? exponent_compensated(tr, y)
                                                 : exponent_truncated(tr, y);
}

// Characteristic functional psi(t, y) = exp(t g(y)).
inline Complex psi(const LevyTriplet& tr, double t, const PVector& y) {
    if (!(t >= 0.0) || !std::isfinite(t))
        throw InvalidParams("psi: t must be >= 0");
    return std::exp(t * levy_exponent(tr, y));
}

// ---------------------------------------------------------------------------
// Classic process families with closed-form characteristic functionals
// ---------------------------------------------------------------------------

enum class ModelKind { DriftK, DriftR, GaussK, GaussR, Poisson, CompoundPoisson };

// Parameter bundle for the classic families. Factories fill in the fields a
// family needs; everything else stays empty.
struct ClassicModel {
    ModelKind kind = ModelKind::DriftK;
    FieldSpec spec;
    int n = 1;
    std::optional<PVector> a;             // field-valued drift direction
    std::vector<double> v;                // real drift coefficients in [0, 1]
    double q = 1.0;                       // drift rate, or jump rate for Poisson
    std::vector<std::vector<PElement>> h; // field-valued symmetric form
    std::vector<std::vector<double>> b;   // real symmetric nonnegative form
    std::optional<PVector> z0;            // single jump site
    double w = 0.0;                       // compound jump intensity
    std::optional<StepMeasure> lambda;    // compound jump distribution

    static ClassicModel drift_k(PVector a, double q) {
        ClassicModel m;
        m.kind = ModelKind::DriftK;
        m.spec = a.spec();
        m.n = a.dim();
        m.a = std::move(a);
        m.q = q;
        return m;
    }

    static ClassicModel drift_r(FieldSpec spec, std::vector<double> v, double q) {
        ClassicModel m;
        m.kind = ModelKind::DriftR;
        m.spec = spec;
        m.n = static_cast<int>(v.size());
        m.v = std::move(v);
        m.q = q;
        return m;
    }

    static ClassicModel gauss_k(PVector a, double q,
                                std::vector<std::vector<PElement>> h) {
        ClassicModel m;
        m.kind = ModelKind::GaussK;
        m.spec = a.spec();
        m.n = a.dim();
        m.a = std::move(a);
        m.q = q;
        m.h = std::move(h);
        return m;
    }

    static ClassicModel gauss_r(FieldSpec spec, std::vector<double> v,
                                std::vector<std::vector<double>> b) {
        ClassicModel m;
        m.kind = ModelKind::GaussR;
        m.spec = spec;
        m.n = static_cast<int>(v.size());
        m.v = std::move(v);
        m.b = std::move(b);
        return m;
    }

    static ClassicModel poisson(PVector z0, double rate) {
        ClassicModel m;
        m.kind = ModelKind::Poisson;
        m.spec = z0.spec();
        m.n = z0.dim();
        m.z0 = std::move(z0);
        m.q = rate;
        return m;
    }

    static ClassicModel compound_poisson(StepMeasure lambda, double w) {
        ClassicModel m;
        m.kind = ModelKind::CompoundPoisson;
        m.spec = lambda.spec();
        m.n = lambda.dim();
        m.lambda = std::move(lambda);
        m.w = w;
        return m;
    }

    ClassicModel& with_drift_k(PVector drift, double rate) {
        a = std::move(drift);
        v.clear();
        q = rate;
        return *this;
    }

    ClassicModel& with_drift_r(std::vector<double> drift, double rate) {
        v = std::move(drift);
        a.reset();
        q = rate;
        return *this;
    }
};

namespace detail {

inline void validate_classic_model(const ClassicModel& m) {
    auto check_rate = [](double r) {
        if (!(r > 0.0) || !std::isfinite(r))
            throw InvalidParams("classic model: rate must be > 0");
    };
    auto check_field_drift = [&](bool required) {
        if (!m.a) {
            if (required) throw InvalidParams("classic model: drift vector missing");
            return;
        }
        require_compatible(m.a->spec(), m.spec);
        if (m.a->dim() != m.n)
            throw DimensionMismatch("classic model: drift dimension mismatch");
        check_rate(m.q);
    };
    auto check_real_drift = [&](bool required) {
        if (m.v.empty()) {
            if (required) throw InvalidParams("classic model: drift coefficients missing");
            return;
        }
        if (static_cast<int>(m.v.size()) != m.n)
            throw DimensionMismatch("classic model: drift dimension mismatch");
        for (double c : m.v)
            if (!(c >= 0.0 && c <= 1.0))
                throw InvalidParams(
                    "classic model: real drift coefficients must lie in [0, 1]");
        check_rate(m.q);
    };
    switch (m.kind) {
        case ModelKind::DriftK:
            check_field_drift(true);
            break;
        case ModelKind::DriftR:
            check_real_drift(true);
            break;
        case ModelKind::GaussK:
            check_field_drift(true);
            validate_field_form(m.h, m.spec, m.n);
            break;
        case ModelKind::GaussR:
            check_real_drift(true);
            validate_real_form(m.b, m.n);
            break;
        case ModelKind::Poisson:
            if (!m.z0) throw InvalidParams("classic model: jump site missing");
            require_compatible(m.z0->spec(), m.spec);
            if (m.z0->dim() != m.n)
                throw DimensionMismatch("classic model: jump site dimension mismatch");
            if (m.z0->is_zero())
                throw InvalidParams("classic model: jump site must not be 0");
            check_rate(m.q);
            break;
        case ModelKind::CompoundPoisson: {
            if (!m.lambda) throw InvalidParams("classic model: jump distribution missing");
            require_compatible(m.lambda->spec(), m.spec);
            if (m.lambda->dim() != m.n)
                throw DimensionMismatch(
                    "classic model: jump distribution dimension mismatch");
            if (!(m.w > 0.0) || !std::isfinite(m.w))
                throw InvalidParams("classic model: jump intensity must be > 0");
            double total = to_double(m.lambda->total_mass());
            if (std::abs(total - 1.0) > 1e-9)
                throw NotNormalized("classic model: jump distribution must have mass 1");
            if (m.a && !m.v.empty())
                throw InvalidParams("classic model: at most one drift kind");
            check_field_drift(false);
            check_real_drift(false);
            break;
        }
    }
}

} // namespace detail

// Closed-form characteristic functional of a classic model, evaluated
// directly from the family's explicit formula.
inline Complex closed_form_charfn(const ClassicModel& m, double t, const PVector& y) {
    detail::validate_classic_model(m);
    if (!(t >= 0.0) || !std::isfinite(t))
        throw InvalidParams("closed_form_charfn: t must be >= 0");
    require_compatible(m.spec, y.spec());
    if (y.dim() != m.n)
        throw DimensionMismatch("closed_form_charfn: dimension mismatch");
    switch (m.kind) {
        case ModelKind::DriftK:
            return std::polar(1.0, t * m.q * char_angle(*m.a, y).radians());
        case ModelKind::DriftR:
            return std::polar(1.0, t * m.q * detail::dot(m.v, bracket_vector(y)));
        case ModelKind::GaussK: {
            double quad = char_angle(detail::apply_field_form(m.h, y), y).radians();
            double angle = t * m.q * char_angle(*m.a, y).radians();
            return std::exp(Complex{-0.5 * t * quad, angle});
        }
        case ModelKind::GaussR: {
            std::vector<double> br = bracket_vector(y);
            double quad = detail::real_form_value(m.b, br, br);
            double angle = t * detail::dot(m.v, br);
            return std::exp(Complex{-0.5 * t * quad, angle});
        }
        case ModelKind::Poisson: {
            Complex chi = std::polar(1.0, char_angle(y, *m.z0).radians());
            return std::exp(m.q * t * (chi - Complex{1.0, 0.0}));
        }
        case ModelKind::CompoundPoisson: {
            Complex lam_hat = charfn_of_measure(*m.lambda, y);
            double mean = m.w * t;
            double pmf = std::exp(-mean);
            double cum = pmf;
            Complex power{1.0, 0.0};
            Complex series = pmf * power;
            for (int k = 1; k <= 200000; ++k) {
                power *= lam_hat;
                pmf *= mean / k;
                series += pmf * power;
                cum += pmf;
                if (1.0 - cum < 1e-14 && static_cast<double>(k) > mean) break;
            }
            double angle = 0.0;
            if (m.a)
                angle = m.q * char_angle(*m.a, y).radians();
            else if (!m.v.empty())
                angle = m.q * detail::dot(m.v, bracket_vector(y));
            return std::polar(1.0, t * angle) * series;
        }
    }
    throw InvalidParams("closed_form_charfn: unknown model kind");
}

// Generating triplet of a classic model, for evaluation through the generic
// exponent pipeline.
inline LevyTriplet model_triplet(const ClassicModel& m) {
    detail::validate_classic_model(m);
    switch (m.kind) {
        case ModelKind::DriftK:
            return LevyTriplet::compensated(StepMeasure::zero_measure(m.spec, m.n))
                .with_field_drift(*m.a, m.q);
        case ModelKind::DriftR:
            return LevyTriplet::compensated(StepMeasure::zero_measure(m.spec, m.n))
                .with_real_drift(m.v, m.q);
        case ModelKind::GaussK:
            return LevyTriplet::compensated(StepMeasure::zero_measure(m.spec, m.n))
                .with_field_drift(*m.a, m.q)
                .with_field_form(m.h);
        case ModelKind::GaussR: {
            LevyTriplet tr =
                LevyTriplet::compensated(StepMeasure::zero_measure(m.spec, m.n))
                    .with_real_form(m.b);
            bool zero_v = std::all_of(m.v.begin(), m.v.end(),
                                      [](double c) { return c == 0.0; });
            if (!zero_v) tr = tr.with_real_drift(m.v, 1.0);
            return tr;
        }
        case ModelKind::Poisson: {
            // cutoff just below |z0| so the single jump is a large jump
            int eps = -m.z0->min_ord() - 1;
            return LevyTriplet::truncated(StepMeasure::dirac(*m.z0, m.q), eps);
        }
        case ModelKind::CompoundPoisson: {
            StepMeasure eta = m.lambda->scaled(m.w);
            // a jump of size 0 does not move the path and adds nothing to the
            // exponent, so an atom at the origin is dropped rather than rejected
            std::vector<Atom> atoms;
            for (const auto& at : eta.atoms())
                if (!at.point.is_zero()) atoms.push_back(at);
            StepMeasure pruned(eta.spec(), eta.dim(), std::move(atoms), eta.pieces());
            LevyTriplet tr = LevyTriplet::truncated(std::move(pruned), 0);
            if (m.a)
                tr = tr.with_field_drift(*m.a, m.q);
            else if (!m.v.empty())
                tr = tr.with_real_drift(m.v, m.q);
            return tr;
        }
    }
    throw InvalidParams("model_triplet: unknown model kind");
}

// ---------------------------------------------------------------------------
// Derivative recovery of A and B
// ---------------------------------------------------------------------------

// phi(beta) = Int exp(i <(y, x)> beta) mu(dx) for mu the inverse-square
// reweighting of nu. Requires the total mass J of mu to be finite.
inline Complex phi_functional(const StepMeasure& nu, double beta, const PVector& y) {
    if (!(beta > -1.0 && beta < 1.0))
        throw InvalidParams("phi_functional: beta must lie in (-1, 1)");
    require_compatible(y.spec(), nu.spec());
    if (y.dim() != nu.dim())
        throw DimensionMismatch("phi_functional: dimension mismatch");
    if (nu.is_empty()) return {0.0, 0.0};
    StepMeasure mu = reweight(nu, WeightSpec::InverseSquare, 1.0);
    BigRational j_mass;
    try {
        j_mass = mu.total_mass();
    } catch (const DivergentMass&) {
        throw DivergentJ("phi_functional: inverse-square moment of nu diverges");
    }
    if (y.is_zero() || beta == 0.0) return {to_double(j_mass), 0.0};
    int ny = y.min_ord();
    LocallyConstantFn f;
    f.eval = [y, beta](const PVector& x) {
        return std::polar(1.0, beta * char_angle(y, x).radians());
    };
    f.constancy_log = [ny](const PVector&) { return ny; };
    return integrate_locally_constant(f, mu);
}

struct PhiDerivativeReport {
    double step = 0.0;
    double j_value = 0.0;  // phi(0), the total inverse-square-weighted mass
    double a_exact = 0.0;
    double b_exact = 0.0;
    double a_central = 0.0; // Im phi'(0) by central difference at the step
    double b_central = 0.0; // -phi''(0) by central second difference
    double a_refined = 0.0; // one extrapolation level using step and step/2
    double b_refined = 0.0;
    double a_gap = 0.0;     // |a_central - a_exact|
    double b_gap = 0.0;
};

// Recovers A and B from phi by finite differences at 0 and compares with the
// directly integrated values. The central-difference error is O(step^2).
inline PhiDerivativeReport check_phi_derivatives(const StepMeasure& nu,
                                                 const PVector& y, double step) {
    if (!(step > 0.0) || !(step < 0.5))
        throw InvalidParams("check_phi_derivatives: step must lie in (0, 0.5)");
    PhiDerivativeReport r;
    r.step = step;
    Complex p0 = phi_functional(nu, 0.0, y);
    r.j_value = p0.real();
    auto central = [&](double h) {
        Complex ph = phi_functional(nu, h, y);
        Complex pm = phi_functional(nu, -h, y);
        double a = std::imag(ph - pm) / (2.0 * h);
        double b = -std::real(ph - 2.0 * p0 + pm) / (h * h);
        return std::pair<double, double>{a, b};
    };
    auto [a1, b1] = central(step);
    auto [a2, b2] = central(0.5 * step);
    r.a_central = a1;
    r.b_central = b1;
    r.a_refined = (4.0 * a2 - a1) / 3.0;
    r.b_refined = (4.0 * b2 - b1) / 3.0;
    r.a_exact = A_functional(nu, y);
    r.b_exact = B_functional(nu, y, y);
    r.a_gap = std::abs(r.a_central - r.a_exact);
    r.b_gap = std::abs(r.b_central - r.b_exact);
    return r;
}

// ---------------------------------------------------------------------------
// Closed forms for Haar jump measures on the unit ball, n = 1
// ---------------------------------------------------------------------------

enum class UnitBallModel {
    WeightedHaar, // |x|^{-2} nu = q * Haar on B(0, 1)
    PlainHaar     // nu = q * Haar on B(0, 1)
};

// A and B for the two Haar families, computed by an independent substitution:
// brackets are read off digit patterns sphere by sphere in the scaled
// variable, so no coset refinement machinery is involved. Both vanish for
// |y| <= 1.
inline std::pair<double, double> unit_ball_haar_AB(double q, const PVector& y,
                                                   UnitBallModel variant) {
    if (y.dim() != 1)
        throw DimensionMismatch("unit_ball_haar_AB: scalar y required");
    if (!(q > 0.0) || !std::isfinite(q))
        throw InvalidParams("unit_ball_haar_AB: q must be > 0");
    if (y.is_zero() || y.norm() <= BigRational(1)) return {0.0, 0.0};
    const FieldSpec& spec = y.spec();
    int m = -y.min_ord();
    double norm_y = to_double(pow_rational(spec.p, m));
    double a_sum = 0.0;
    double b_sum = 0.0;
    std::vector<int> d;
    for (int j = 1; j <= m; ++j) {
        // unit cosets of the sphere |z| = p^j: digits at exponents -j..-1,
        // leading digit nonzero, each coset of Haar mass 1
        d.assign(static_cast<size_t>(j), 0);
        d[0] = 1;
        double weight = variant == UnitBallModel::WeightedHaar
                            ? q / norm_y
                            : q * norm_y * to_double(pow_rational(spec.p, -2 * j));
        while (true) {
            BigRational frac(0);
            if (spec.kind == FieldKind::CharZero) {
                for (int l = 0; l < j; ++l)
                    frac += BigRational(d[static_cast<size_t>(l)]) /
                            pow_big(spec.p, j - l);
            } else {
                frac = BigRational(d[static_cast<size_t>(j - 1)]) / spec.p;
            }
            double theta = kTwoPi * to_double(frac);
            a_sum += weight * theta;
            b_sum += weight * theta * theta;
            int t = j - 1;
            while (t >= 1 && ++d[static_cast<size_t>(t)] == spec.p) {
                d[static_cast<size_t>(t)] = 0;
                --t;
            }
            if (t == 0 && ++d[0] == spec.p) break;
        }
    }
    return {a_sum, b_sum};
}

} // namespace padlev
