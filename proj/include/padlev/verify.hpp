#pragma once

#include <cmath>
#include <functional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "process.hpp"
#include "serialize.hpp"

namespace padlev {

struct CheckResult {
    std::string name;
    bool pass = false;
    std::string detail; // summary stats when passing, counterexample when not
};

struct SuiteReport {
    std::string suite;
    std::uint64_t seed = 0;
    std::vector<CheckResult> checks;
    bool all_pass = true;
};

// Knobs for deliberately corrupting a reference value, so tests can prove the
// harness actually detects disagreement instead of vacuously passing.
struct VerifyOptions {
    double ball_closed_form_skew = 0.0;
};

namespace detail {

// pass flag plus a human-readable payload
using CheckOutcome = std::pair<bool, std::string>;

inline void run_check(SuiteReport& rep, const std::string& name,
                      const std::function<CheckOutcome()>& body) {
    CheckResult r;
    r.name = name;
    try {
        auto [ok, info] = body();
        r.pass = ok;
        r.detail = info;
    } catch (const std::exception& e) {
        r.pass = false;
        r.detail = std::string("exception: ") + e.what();
    }
    rep.all_pass = rep.all_pass && r.pass;
    rep.checks.push_back(std::move(r));
}

inline std::string fmt(double v) {
    std::ostringstream out;
    out.precision(6);
    out << v;
    return out.str();
}

inline PElement verify_element(const FieldSpec& spec, RngStream& rng, int vmin, int vmax) {
    int val = static_cast<int>(rng.uniform_int(vmin, vmax));
    std::vector<int> digits(static_cast<size_t>(spec.precision - val));
    digits[0] = static_cast<int>(rng.uniform_int(1, spec.p - 1));
    for (size_t i = 1; i < digits.size(); ++i)
        digits[i] = static_cast<int>(rng.uniform_int(0, spec.p - 1));
    return PElement::from_window(spec, val, std::move(digits));
}

inline PElement verify_element_or_zero(const FieldSpec& spec, RngStream& rng, int vmin,
                                       int vmax) {
    if (rng.uniform_int(0, 9) == 0) return PElement::zero(spec);
    return verify_element(spec, rng, vmin, vmax);
}

inline PVector verify_vector(const FieldSpec& spec, int n, RngStream& rng, int vmin,
                             int vmax) {
    std::vector<PElement> coords;
    coords.reserve(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) coords.push_back(verify_element(spec, rng, vmin, vmax));
    return PVector(spec, std::move(coords));
}

inline std::vector<FieldSpec> verify_specs() {
    return {make_field(2, FieldKind::CharZero), make_field(3, FieldKind::CharZero),
            make_field(5, FieldKind::CharZero), make_field(2, FieldKind::CharP),
            make_field(3, FieldKind::CharP)};
}

// Atoms at nonzero points only, so inverse-square reweightings stay finite.
inline StepMeasure verify_atomic(const FieldSpec& spec, int n, RngStream& rng) {
    std::vector<Atom> atoms;
    int k = static_cast<int>(rng.uniform_int(1, 4));
    for (int i = 0; i < k; ++i)
        atoms.push_back(
            Atom{verify_vector(spec, n, rng, -3, 1), 0.1 + 0.9 * rng.uniform01()});
    return StepMeasure(spec, n, std::move(atoms), {});
}

} // namespace detail

inline SuiteReport verify_field(std::uint64_t seed) {
    SuiteReport rep;
    rep.suite = "field";
    rep.seed = seed;
    RngStream rng(seed, 11);

    detail::run_check(rep, "ultrametric norm inequality", [&]() -> detail::CheckOutcome {
        for (const FieldSpec& spec : detail::verify_specs()) {
            for (int i = 0; i < 2000; ++i) {
                PElement x = detail::verify_element_or_zero(spec, rng, -4, 4);
                PElement y = detail::verify_element_or_zero(spec, rng, -4, 4);
                BigRational lhs = (x + y).norm();
                BigRational cap = std::max(x.norm(), y.norm());
                if (lhs > cap)
                    return {false, "norm(x+y) exceeds max at p=" + std::to_string(spec.p)};
                if (x.norm() != y.norm() && lhs != cap)
                    return {false,
                            "strict triangle violated at p=" + std::to_string(spec.p)};
                if (!x.is_zero() && !y.is_zero() && (x * y).norm() != x.norm() * y.norm())
                    return {false,
                            "norm not multiplicative at p=" + std::to_string(spec.p)};
            }
        }
        return {true, "10000 random pairs, exact"};
    });

    detail::run_check(rep, "character angle is additive", [&]() -> detail::CheckOutcome {
        for (const FieldSpec& spec : detail::verify_specs()) {
            for (int i = 0; i < 2000; ++i) {
                PVector s = detail::verify_vector(spec, 1, rng, -3, 2);
                PVector z = detail::verify_vector(spec, 1, rng, -3, 2);
                PVector v = detail::verify_vector(spec, 1, rng, -3, 2);
                BigRational gap = char_angle(s, z + v).turns() - char_angle(s, z).turns() -
                                  char_angle(s, v).turns();
                if (!is_integer(gap))
                    return {false,
                            "angle sum defect not integral at p=" + std::to_string(spec.p)};
            }
        }
        return {true, "10000 random triples, exact mod 1"};
    });

    detail::run_check(rep, "fractional part defect scale", [&]() -> detail::CheckOutcome {
        for (const FieldSpec& spec : detail::verify_specs()) {
            BigRational scale(spec.kind == FieldKind::CharZero ? 1 : spec.p);
            for (int i = 0; i < 2000; ++i) {
                PElement x = detail::verify_element(spec, rng, -4, 2);
                PElement y = detail::verify_element(spec, rng, -4, 2);
                BigRational defect = (x + y).frac_part().turns() - x.frac_part().turns() -
                                     y.frac_part().turns();
                if (!is_integer(defect * scale))
                    return {false,
                            "defect outside the lattice at p=" + std::to_string(spec.p)};
            }
        }
        return {true, "integer (char 0) or 1/p lattice (char p) defects"};
    });

    detail::run_check(rep, "char-p addition has exponent p", [&]() -> detail::CheckOutcome {
        for (int p : {2, 3}) {
            FieldSpec spec = make_field(p, FieldKind::CharP);
            for (int i = 0; i < 500; ++i) {
                PElement x = detail::verify_element(spec, rng, -4, 4);
                PElement acc = PElement::zero(spec);
                for (int k = 0; k < p; ++k) acc = acc + x;
                if (!acc.is_zero())
                    return {false, "p-fold sum nonzero at p=" + std::to_string(p)};
            }
        }
        return {true, "1000 elements cancel"};
    });

    detail::run_check(rep, "element serialization round-trips",
                      [&]() -> detail::CheckOutcome {
        for (const FieldSpec& spec : detail::verify_specs()) {
            for (int i = 0; i < 200; ++i) {
                PElement e = detail::verify_element_or_zero(spec, rng, -4, 4);
                if (element_from_json(spec, element_to_json(e)) != e)
                    return {false, "JSON round-trip changed " + element_to_text(e)};
                if (element_from_text(spec, element_to_text(e)) != e)
                    return {false, "text round-trip changed " + element_to_text(e)};
            }
        }
        return {true, "JSON and text forms, 1000 elements"};
    });

    return rep;
}

inline SuiteReport verify_measure(std::uint64_t seed, const VerifyOptions& opt = {}) {
    SuiteReport rep;
    rep.suite = "measure";
    rep.seed = seed;
    RngStream rng(seed, 22);

    detail::run_check(rep, "ball character transform closed form",
                      [&]() -> detail::CheckOutcome {
        double worst = 0.0;
        for (int p : {2, 3, 5}) {
            for (FieldKind kind : {FieldKind::CharZero, FieldKind::CharP}) {
                FieldSpec spec = make_field(p, kind);
                for (int n = 1; n <= 2; ++n) {
                    for (int k = -2; k <= 2; ++k) {
                        for (int sv = -3; sv <= 3; ++sv) {
                            std::vector<PElement> cs(static_cast<size_t>(n),
                                                     PElement::zero(spec));
                            cs[0] = detail::verify_element(spec, rng, sv, sv);
                            PVector s(spec, std::move(cs));
                            Complex got = ball_character_integral(s, k);
                            double want = to_double(ball_character_closed_form(s, k)) +
                                          opt.ball_closed_form_skew;
                            double gap = std::abs(got - Complex{want, 0.0});
                            worst = std::max(worst, gap);
                            if (gap > 1e-12)
                                return {false,
                                        "gap " + detail::fmt(gap) + " at p=" +
                                            std::to_string(p) + " kind=" +
                                            field_kind_name(kind) + " n=" +
                                            std::to_string(n) + " k=" +
                                            std::to_string(k) +
                                            " ord(s)=" + std::to_string(sv)};
                        }
                    }
                }
            }
        }
        return {true, "max gap " + detail::fmt(worst)};
    });

    detail::run_check(rep, "transform of a convolution factorizes",
                      [&]() -> detail::CheckOutcome {
        double worst = 0.0;
        for (const FieldSpec& spec : detail::verify_specs()) {
            StepMeasure a = detail::verify_atomic(spec, 1, rng);
            StepMeasure b = detail::verify_atomic(spec, 1, rng);
            StepMeasure c = convolve(a, b);
            if (std::abs(c.total_mass() - a.total_mass() * b.total_mass()) > 1e-9)
                return {false, "total mass is not multiplicative"};
            for (int i = 0; i < 20; ++i) {
                PVector s = detail::verify_vector(spec, 1, rng, -3, 2);
                double gap = std::abs(charfn_of_measure(c, s) -
                                      charfn_of_measure(a, s) * charfn_of_measure(b, s));
                worst = std::max(worst, gap);
                if (gap > 1e-9)
                    return {false, "factorization gap " + detail::fmt(gap) + " at p=" +
                                       std::to_string(spec.p)};
            }
        }
        return {true, "100 dual points, max gap " + detail::fmt(worst)};
    });

    detail::run_check(rep, "trivial reweight is the identity", [&]() -> detail::CheckOutcome {
        FieldSpec spec = make_field(2, FieldKind::CharZero);
        StepMeasure m(spec, 1, {Atom{detail::verify_vector(spec, 1, rng, -2, 1), 0.7}},
                      {Piece{BallRegion(PVector::zero(spec, 1), 1), 0.25, 0}});
        StepMeasure w = reweight(m, WeightSpec::One, 1.0);
        if (std::abs(w.total_mass() - m.total_mass()) > 1e-12)
            return {false, "total mass changed"};
        for (int i = 0; i < 20; ++i) {
            PVector s = detail::verify_vector(spec, 1, rng, -3, 2);
            double gap = std::abs(charfn_of_measure(w, s) - charfn_of_measure(m, s));
            if (gap > 1e-12) return {false, "transform changed by " + detail::fmt(gap)};
        }
        return {true, "mass and transform preserved"};
    });

    detail::run_check(rep, "translation shifts the transform by a character",
                      [&]() -> detail::CheckOutcome {
        double worst = 0.0;
        for (const FieldSpec& spec : detail::verify_specs()) {
            PVector c = detail::verify_vector(spec, 1, rng, -2, 1);
            StepMeasure centered = StepMeasure::haar_ball(spec, 1, -1, 1.0);
            StepMeasure shifted(
                spec, 1, {},
                {Piece{BallRegion(c, -1), centered.pieces()[0].density, 0}});
            for (int i = 0; i < 10; ++i) {
                PVector s = detail::verify_vector(spec, 1, rng, -2, 2);
                Complex lhs = charfn_of_measure(shifted, s);
                Complex rhs = char_value(s, c) * charfn_of_measure(centered, s);
                worst = std::max(worst, std::abs(lhs - rhs));
                if (std::abs(lhs - rhs) > 1e-12)
                    return {false, "translation gap " + detail::fmt(std::abs(lhs - rhs))};
            }
        }
        return {true, "max gap " + detail::fmt(worst)};
    });

    detail::run_check(rep, "integration is refinement stable", [&]() -> detail::CheckOutcome {
        FieldSpec spec = make_field(3, FieldKind::CharZero);
        StepMeasure m(spec, 1, {Atom{detail::verify_vector(spec, 1, rng, -1, 1), 0.3}},
                      {Piece{BallRegion(PVector::zero(spec, 1), 2), 0.4, 0},
                       Piece{BallRegion(detail::verify_vector(spec, 1, rng, -4, -4), -1),
                             1.1, 0}});
        double worst = 0.0;
        for (int i = 0; i < 5; ++i) {
            PVector y = detail::verify_vector(spec, 1, rng, -3, -2);
            LocallyConstantFn coarse = detail::bracket_integrand(y);
            LocallyConstantFn fine = coarse;
            fine.constancy_log = [inner = coarse.constancy_log](const PVector& x) {
                return inner(x) - 2;
            };
            double gap = std::abs(integrate_locally_constant(coarse, m) -
                                  integrate_locally_constant(fine, m));
            worst = std::max(worst, gap);
            if (gap > 1e-12)
                return {false, "refinement changed the integral by " + detail::fmt(gap)};
        }
        return {true, "forced refinement, max gap " + detail::fmt(worst)};
    });

    return rep;
}

inline SuiteReport verify_charfn(std::uint64_t seed) {
    SuiteReport rep;
    rep.suite = "charfn";
    rep.seed = seed;
    RngStream rng(seed, 33);

    detail::run_check(rep, "defect certificates hold", [&]() -> detail::CheckOutcome {
        for (const FieldSpec& spec : detail::verify_specs()) {
            for (int i = 0; i < 400; ++i) {
                PVector y = detail::verify_vector(spec, 1, rng, -3, 2);
                PVector z = detail::verify_vector(spec, 1, rng, -3, 2);
                PVector x = detail::verify_vector(spec, 1, rng, -3, 2);
                CocycleReport f1 = f1_cocycle(y, z, x);
                if (!f1.integrality_ok || !f1.bound_ok)
                    return {false, "additivity defect certificate failed at p=" +
                                       std::to_string(spec.p)};
                PElement beta = detail::verify_element(spec, rng, -2, 2);
                PElement gamma = detail::verify_element(spec, rng, -2, 2);
                CocycleReport f2 = f2_cocycle(beta, gamma);
                if (!f2.integrality_ok || !f2.bound_ok)
                    return {false, "scaling defect certificate failed at p=" +
                                       std::to_string(spec.p)};
                if (beta.norm() <= BigRational(1) && gamma.norm() <= BigRational(1) &&
                    f2.value != BigRational(0))
                    return {false, "scaling defect must vanish on the unit ball"};
            }
        }
        return {true, "2000 sampled defects certified"};
    });

    detail::run_check(rep, "drift laws under defect corrections",
                      [&]() -> detail::CheckOutcome {
        double worst = 0.0;
        for (const FieldSpec& spec : detail::verify_specs()) {
            StepMeasure nu = detail::verify_atomic(spec, 1, rng);
            StepMeasure mu = reweight(nu, WeightSpec::InverseSquare, 1.0);
            for (int i = 0; i < 4; ++i) {
                PVector y = detail::verify_vector(spec, 1, rng, -2, 1);
                PVector z = detail::verify_vector(spec, 1, rng, -2, 1);
                double lhs_add = A_functional(nu, y + z);
                double rhs_add =
                    A_functional(nu, y) + A_functional(nu, z) + f1_correction(y, z, mu);
                worst = std::max(worst, std::abs(lhs_add - rhs_add));
                PElement beta = detail::verify_element(spec, rng, -2, 2);
                double lhs_scale = A_functional(nu, y.scaled(beta));
                double rhs_scale =
                    to_double(beta.frac_part().turns()) * A_functional(nu, y) +
                    f2_correction(beta, y, mu);
                worst = std::max(worst, std::abs(lhs_scale - rhs_scale));
                if (worst > 1e-9) return {false, "drift law gap " + detail::fmt(worst)};
            }
        }
        return {true, "max gap " + detail::fmt(worst)};
    });

    detail::run_check(rep, "diffusion laws under defect corrections",
                      [&]() -> detail::CheckOutcome {
        double worst = 0.0;
        for (const FieldSpec& spec : detail::verify_specs()) {
            StepMeasure nu = detail::verify_atomic(spec, 1, rng);
            StepMeasure mu = reweight(nu, WeightSpec::InverseSquare, 1.0);
            for (int i = 0; i < 3; ++i) {
                PVector q = detail::verify_vector(spec, 1, rng, -2, 1);
                PVector y = detail::verify_vector(spec, 1, rng, -2, 1);
                PVector z = detail::verify_vector(spec, 1, rng, -2, 1);
                if (std::abs(B_functional(nu, y, z) - B_functional(nu, z, y)) > 1e-12)
                    return {false, "asymmetric second form"};
                if (B_functional(nu, y, y) < -1e-12) return {false, "negative diagonal"};
                double lhs_add = B_functional(nu, q + y, z);
                double rhs_add = B_functional(nu, q, z) + B_functional(nu, y, z) +
                                 f1_bracket_correction(q, y, z, mu);
                worst = std::max(worst, std::abs(lhs_add - rhs_add));
                PElement beta = detail::verify_element(spec, rng, -2, 2);
                double lhs_scale = B_functional(nu, y.scaled(beta), z);
                double rhs_scale =
                    to_double(beta.frac_part().turns()) * B_functional(nu, y, z) +
                    f2_bracket_correction(beta, y, z, mu);
                worst = std::max(worst, std::abs(lhs_scale - rhs_scale));
                if (worst > 1e-9) return {false, "diffusion law gap " + detail::fmt(worst)};
            }
        }
        return {true, "max gap " + detail::fmt(worst)};
    });

    detail::run_check(rep, "compensated and truncated exponents agree",
                      [&]() -> detail::CheckOutcome {
        double worst = 0.0;
        for (const FieldSpec& spec : detail::verify_specs()) {
            StepMeasure nu = detail::verify_atomic(spec, 1, rng);
            LevyTriplet comp = LevyTriplet::compensated(nu);
            StepMeasure eta = reweight(nu, WeightSpec::OnePlusSquareOverSquare, 1.0);
            for (int eps : {-1, 0, 1}) {
                LevyTriplet trunc = LevyTriplet::truncated(eta, eps);
                for (int i = 0; i < 4; ++i) {
                    PVector y = detail::verify_vector(spec, 1, rng, -2, 1);
                    double gap =
                        std::abs(levy_exponent(comp, y) - levy_exponent(trunc, y));
                    worst = std::max(worst, gap);
                    if (gap > 1e-9)
                        return {false, "mode gap " + detail::fmt(gap) + " at p=" +
                                           std::to_string(spec.p)};
                }
            }
        }
        return {true, "max gap " + detail::fmt(worst)};
    });

    detail::run_check(rep, "transforms admit m-th roots", [&]() -> detail::CheckOutcome {
        double worst = 0.0;
        FieldSpec spec = make_field(2, FieldKind::CharZero);
        StepMeasure nu = detail::verify_atomic(spec, 1, rng);
        LevyTriplet tr = LevyTriplet::compensated(nu);
        for (int m : {2, 3, 5, 7}) {
            for (int i = 0; i < 5; ++i) {
                PVector y = detail::verify_vector(spec, 1, rng, -2, 1);
                double t = 0.3 + 2.0 * rng.uniform01();
                Complex whole = psi(tr, t, y);
                Complex root = psi(tr, t / m, y);
                Complex powed{1.0, 0.0};
                for (int k = 0; k < m; ++k) powed *= root;
                worst = std::max(worst, std::abs(powed - whole));
                if (std::abs(powed - whole) > 1e-12)
                    return {false, "root gap " + detail::fmt(std::abs(powed - whole))};
            }
        }
        return {true, "max gap " + detail::fmt(worst)};
    });

    detail::run_check(rep, "classic families match the pipeline",
                      [&]() -> detail::CheckOutcome {
        double worst = 0.0;
        FieldSpec spec = make_field(2, FieldKind::CharZero);
        PVector a = detail::verify_vector(spec, 1, rng, -2, 0);
        PVector z0 = detail::verify_vector(spec, 1, rng, -2, -1);
        StepMeasure lam(spec, 1,
                        {Atom{detail::verify_vector(spec, 1, rng, -2, 0), 0.5},
                         Atom{detail::verify_vector(spec, 1, rng, -1, 1), 0.5}},
                        {});
        std::vector<ClassicModel> models{
            ClassicModel::drift_k(a, 1.5), ClassicModel::drift_r(spec, {0.3}, 2.0),
            ClassicModel::poisson(z0, 1.2), ClassicModel::compound_poisson(lam, 0.8)};
        for (const auto& m : models) {
            LevyTriplet tr = model_triplet(m);
            for (double t : {0.0, 0.7, 2.1}) {
                for (int i = 0; i < 4; ++i) {
                    PVector y = detail::verify_vector(spec, 1, rng, -2, 1);
                    double gap = std::abs(closed_form_charfn(m, t, y) - psi(tr, t, y));
                    worst = std::max(worst, gap);
                    if (gap > 1e-9) return {false, "closed form gap " + detail::fmt(gap)};
                }
            }
        }
        return {true, "max gap " + detail::fmt(worst)};
    });

    detail::run_check(rep, "unit ball functionals match the quadrature",
                      [&]() -> detail::CheckOutcome {
        FieldSpec q2 = make_field(2, FieldKind::CharZero);
        PVector half(q2, {PElement::one(q2).shifted(-1)});
        auto [a0, b0] = unit_ball_haar_AB(1.0, half, UnitBallModel::WeightedHaar);
        if (std::abs(a0 - kPi / 2.0) > 1e-12 || std::abs(b0 - kPi * kPi / 2.0) > 1e-12)
            return {false, "frozen half-point values moved"};
        double worst = 0.0;
        for (int p : {2, 3}) {
            FieldSpec spec = make_field(p, FieldKind::CharZero);
            BallRegion unit(PVector::zero(spec, 1), 0);
            double q = 0.5 + 2.0 * rng.uniform01();
            StepMeasure weighted(spec, 1, {}, {Piece{unit, q, 2}});
            StepMeasure plain(spec, 1, {}, {Piece{unit, q, 0}});
            for (int m = 0; m <= 2; ++m) {
                PVector y(spec, {PElement::one(spec).shifted(-m - 1)});
                auto [aw, bw] = unit_ball_haar_AB(q, y, UnitBallModel::WeightedHaar);
                worst = std::max(worst, std::abs(aw - A_functional(weighted, y)));
                worst = std::max(worst, std::abs(bw - B_functional(weighted, y, y)));
                auto [ap, bp] = unit_ball_haar_AB(q, y, UnitBallModel::PlainHaar);
                worst = std::max(worst, std::abs(ap - A_functional(plain, y)));
                worst = std::max(worst, std::abs(bp - B_functional(plain, y, y)));
                if (worst > 1e-9) return {false, "quadrature gap " + detail::fmt(worst)};
            }
        }
        return {true, "max gap " + detail::fmt(worst)};
    });

    detail::run_check(rep, "derivative recovery stays within its error budget",
                      [&]() -> detail::CheckOutcome {
        FieldSpec spec = make_field(2, FieldKind::CharZero);
        StepMeasure nu = detail::verify_atomic(spec, 1, rng);
        PVector y = detail::verify_vector(spec, 1, rng, -2, 0);
        double worst = 0.0;
        for (double step : {1e-2, 1e-3}) {
            PhiDerivativeReport r = check_phi_derivatives(nu, y, step);
            worst = std::max(worst, std::max(r.a_gap, r.b_gap) / (step * step));
            if (r.a_gap > 10.0 * step * step || r.b_gap > 10.0 * step * step)
                return {false,
                        "derivative gap beyond 10 step^2 at step " + detail::fmt(step)};
        }
        return {true, "max gap over step^2 " + detail::fmt(worst)};
    });

    detail::run_check(rep, "triplet serialization round-trips",
                      [&]() -> detail::CheckOutcome {
        FieldSpec spec = make_field(2, FieldKind::CharZero);
        StepMeasure nu = detail::verify_atomic(spec, 1, rng);
        LevyTriplet tr =
            LevyTriplet::truncated(nu, 0)
                .with_field_drift(detail::verify_vector(spec, 1, rng, -2, 0), 1.5)
                .with_field_form({{detail::verify_element(spec, rng, -1, 1)}});
        Json j = triplet_to_json(tr);
        LevyTriplet back = triplet_from_json(spec, 1, j);
        if (triplet_to_json(back) != j) return {false, "canonical form changed"};
        PVector y = detail::verify_vector(spec, 1, rng, -2, 0);
        if (std::abs(levy_exponent(tr, y) - levy_exponent(back, y)) > 1e-15)
            return {false, "round-trip changed the exponent"};
        return {true, "canonical JSON identity"};
    });

    return rep;
}

inline SuiteReport verify_process(std::uint64_t seed) {
    SuiteReport rep;
    rep.suite = "process";
    rep.seed = seed;

    detail::run_check(rep, "streams replay deterministically", [&]() -> detail::CheckOutcome {
        RngStream a(seed, 1);
        RngStream b(seed, 1);
        for (int i = 0; i < 256; ++i)
            if (a.next_u64() != b.next_u64()) return {false, "same seed diverged"};
        RngStream c = a.child(5);
        RngStream d = b.child(5);
        for (int i = 0; i < 64; ++i)
            if (c.next_u64() != d.next_u64()) return {false, "child streams diverged"};
        return {true, "320 draws bit-identical"};
    });

    detail::run_check(rep, "ball sampler spreads digits evenly",
                      [&]() -> detail::CheckOutcome {
        const int n = 20000;
        for (int p : {2, 3}) {
            FieldSpec spec = make_field(p, FieldKind::CharZero);
            RngStream rng(seed, 100 + static_cast<std::uint64_t>(p));
            BallRegion unit(PVector::zero(spec, 1), 0);
            std::vector<long long> counts(static_cast<size_t>(p), 0);
            for (int i = 0; i < n; ++i)
                ++counts[static_cast<size_t>(
                    sample_uniform_ball(unit, rng)[0].digit_at(0))];
            double crit = p == 2 ? 10.8276 : 13.8155;
            double stat = chi_square_statistic(
                counts,
                std::vector<double>(static_cast<size_t>(p), static_cast<double>(n) / p));
            if (stat > crit)
                return {false,
                        "chi-square " + detail::fmt(stat) + " at p=" + std::to_string(p)};
        }
        return {true, "first digits pass chi-square at 1e-3"};
    });

    detail::run_check(rep, "measure sampler matches its transform",
                      [&]() -> detail::CheckOutcome {
        FieldSpec spec = make_field(2, FieldKind::CharZero);
        RngStream rng(seed, 200);
        StepMeasure mu(spec, 1,
                       {Atom{PVector(spec, {PElement::from_rational(spec, 1, 4)}), 0.35},
                        Atom{PVector(spec, {PElement::from_rational(spec, 3, 1)}), 0.25}},
                       {Piece{BallRegion(PVector::zero(spec, 1), 0), 0.4, 0}});
        StepSampler sampler(mu);
        const int n = 20000;
        std::vector<PVector> xs;
        xs.reserve(n);
        for (int i = 0; i < n; ++i) xs.push_back(sampler.draw(rng));
        double band = 4.0 / std::sqrt(static_cast<double>(n));
        double worst = 0.0;
        for (int k = 1; k <= 20; ++k) {
            PVector y(spec, {PElement::from_rational(spec, k, 8)});
            double gap =
                std::abs(empirical_charfn(xs, y).estimate - charfn_of_measure(mu, y));
            worst = std::max(worst, gap);
            if (gap > band)
                return {false, "transform gap " + detail::fmt(gap) + " beyond " +
                                   detail::fmt(band) + " at k=" + std::to_string(k)};
        }
        return {true, "20 dual points, max gap " + detail::fmt(worst) + " < " +
                          detail::fmt(band)};
    });

    detail::run_check(rep, "paths divide and move continuously",
                      [&]() -> detail::CheckOutcome {
        FieldSpec spec = make_field(2, FieldKind::CharZero);
        StepSampler jumps(
            StepMeasure::dirac(PVector(spec, {PElement::from_rational(spec, 1, 2)})));
        RngStream rng(seed, 300);
        const int n = 10000;
        const double w = 2.0;
        std::vector<PVector> split_sums;
        split_sums.reserve(n);
        long long moved = 0;
        for (int i = 0; i < n; ++i) {
            PVector acc = PVector::zero(spec, 1);
            for (int j = 0; j < 4; ++j)
                acc = acc + sample_compound_poisson(w / 4, jumps, 1.0, rng).final_value();
            split_sums.push_back(acc);
            SamplePath path = sample_compound_poisson(w, jumps, 1.0, rng);
            moved += path.value_at(0.55) == path.value_at(0.5) ? 0 : 1;
        }
        double band = 4.0 / std::sqrt(static_cast<double>(n));
        StepMeasure lam = jumps.measure();
        for (long long k : {1LL, 3LL}) {
            PVector y(spec, {PElement::from_rational(spec, k, 2)});
            Complex want = std::exp(w * (charfn_of_measure(lam, y) - Complex{1.0, 0.0}));
            if (std::abs(empirical_charfn(split_sums, y).estimate - want) > band)
                return {false, "split-path transform outside the band"};
        }
        double bound = 1.0 - std::exp(-w * 0.05) + band;
        if (moved / static_cast<double>(n) > bound)
            return {false, "jump frequency " + detail::fmt(moved / static_cast<double>(n)) +
                               " above " + detail::fmt(bound)};
        return {true, "division and small-window movement within bands"};
    });

    detail::run_check(rep, "two-torsion parity matches both laws",
                      [&]() -> detail::CheckOutcome {
        const int n = 20000;
        const double w = 3.0, t = 0.8;
        double even = (1.0 + std::exp(-2.0 * w * t)) / 2.0;
        double band = 4.0 * 0.5 / std::sqrt(static_cast<double>(n));
        FieldSpec q2 = make_field(2, FieldKind::CharZero);
        FieldSpec f2 = make_field(2, FieldKind::CharP);
        StepSampler jq(
            StepMeasure::dirac(PVector(q2, {PElement::from_rational(q2, 1, 2)})));
        std::vector<int> d(static_cast<size_t>(f2.precision + 1), 0);
        d[0] = 1;
        StepSampler jf(StepMeasure::dirac(
            PVector(f2, {PElement::from_window(f2, -1, std::move(d))})));
        RngStream rq(seed, 400);
        RngStream rf(seed, 401);
        long long ball_q = 0, zero_f = 0;
        for (int i = 0; i < n; ++i) {
            ball_q += sample_compound_poisson(w, jq, t, rq).final_value().norm() <=
                              BigRational(1)
                          ? 1
                          : 0;
            zero_f += sample_compound_poisson(w, jf, t, rf).final_value().is_zero() ? 1 : 0;
        }
        double gq = std::abs(ball_q / static_cast<double>(n) - even);
        double gf = std::abs(zero_f / static_cast<double>(n) - even);
        if (gq > band) return {false, "char-0 parity off by " + detail::fmt(gq)};
        if (gf > band) return {false, "char-p parity off by " + detail::fmt(gf)};
        return {true, "both parities within 4 standard errors"};
    });

    detail::run_check(rep, "triangular rows shrink toward the limit",
                      [&]() -> detail::CheckOutcome {
        FieldSpec spec = make_field(2, FieldKind::CharZero);
        StepMeasure lam =
            StepMeasure::dirac(PVector(spec, {PElement::from_rational(spec, 1, 2)}));
        std::vector<PVector> grid{PVector(spec, {PElement::from_rational(spec, 1, 1)}),
                                  PVector(spec, {PElement::from_rational(spec, 1, 2)})};
        RngStream rng(seed, 500);
        TriangularReport tri =
            triangular_array_experiment(2.0, lam, 1.0, {2, 8, 32}, grid, 4000, rng);
        for (size_t i = 0; i < tri.rows.size(); ++i) {
            const TriangularRow& row = tri.rows[i];
            if (row.analytic_gap > 2.0 * 4.0 / row.m + 1e-12)
                return {false, "analytic gap above the C/m envelope at m=" +
                                   std::to_string(row.m)};
            if (row.empirical_gap > row.analytic_gap + tri.noise_band)
                return {false, "empirical gap outside the noise band at m=" +
                                   std::to_string(row.m)};
            if (i > 0 && row.analytic_gap > tri.rows[i - 1].analytic_gap + 1e-12)
                return {false, "analytic gap increased at m=" + std::to_string(row.m)};
        }
        return {true, "gaps decay within bands"};
    });

    detail::run_check(rep, "independence detector separates couplings",
                      [&]() -> detail::CheckOutcome {
        FieldSpec spec = make_field(2, FieldKind::CharZero);
        StepMeasure mu(spec, 1,
                       {Atom{PVector::zero(spec, 1), 0.5},
                        Atom{PVector(spec, {PElement::from_rational(spec, 1, 2)}), 0.5}},
                       {});
        StepSampler sampler(mu);
        PVector one(spec, {PElement::one(spec)});
        std::vector<std::pair<PVector, PVector>> grid{{one, one}};
        RngStream r1(seed, 600);
        IndependenceReport ind = independence_test(
            [&sampler](RngStream& r) {
                PVector a = sampler.draw(r);
                PVector b = sampler.draw(r);
                return std::make_pair(a, b);
            },
            grid, 10000, r1);
        if (!ind.pass) return {false, "independent pair flagged as coupled"};
        RngStream r2(seed, 601);
        IndependenceReport dep = independence_test(
            [&sampler](RngStream& r) {
                PVector a = sampler.draw(r);
                return std::make_pair(a, a);
            },
            grid, 10000, r2);
        if (dep.pass || dep.max_gap < 0.5)
            return {false, "coupled pair not detected, gap " + detail::fmt(dep.max_gap)};
        return {true, "pass gap " + detail::fmt(ind.max_gap) + ", coupled gap " +
                          detail::fmt(dep.max_gap)};
    });

    detail::run_check(rep, "distinct atomic laws separate on the dual grid",
                      [&]() -> detail::CheckOutcome {
        RngStream rng(seed, 700);
        FieldSpec spec = make_field(2, FieldKind::CharZero);
        long long pm = 4, cells = 16;
        for (int trial = 0; trial < 20; ++trial) {
            long long ca = rng.uniform_int(0, cells - 1);
            long long cb = rng.uniform_int(0, cells - 1);
            if (ca == cb) {
                --trial;
                continue;
            }
            StepMeasure mu = StepMeasure::dirac(
                PVector(spec, {PElement::from_rational(spec, ca, pm)}));
            StepMeasure nu = StepMeasure::dirac(
                PVector(spec, {PElement::from_rational(spec, cb, pm)}));
            double best = 0.0;
            for (long long c = 1; c < cells * 2 && best < 1e-6; ++c) {
                PVector s(spec, {PElement::from_rational(spec, c, pm * 2)});
                best = std::max(best, std::abs(charfn_of_measure(mu, s) -
                                               charfn_of_measure(nu, s)));
            }
            if (best < 1e-6) return {false, "transforms coincide on the dual grid"};
        }
        return {true, "20 pairs separated by at least 1e-6"};
    });

    return rep;
}

inline std::vector<SuiteReport> verify_suites(const std::string& which, std::uint64_t seed,
                                              const VerifyOptions& opt = {}) {
    std::vector<SuiteReport> out;
    bool all = which == "all";
    if (all || which == "field") out.push_back(verify_field(seed));
    if (all || which == "measure") out.push_back(verify_measure(seed, opt));
    if (all || which == "charfn") out.push_back(verify_charfn(seed));
    if (all || which == "process") out.push_back(verify_process(seed));
    if (out.empty())
        throw InvalidParams("unknown suite \"" + which +
                            "\"; expected field, measure, charfn, process or all");
    return out;
}

inline Json report_to_json(const SuiteReport& rep) {
    Json checks = Json::array();
    for (const auto& c : rep.checks)
        checks.push_back(Json{{"name", c.name}, {"pass", c.pass}, {"detail", c.detail}});
    return Json{{"suite", rep.suite},
                {"seed", rep.seed},
                {"all_pass", rep.all_pass},
                {"checks", std::move(checks)}};
}

inline Json reports_to_json(const std::vector<SuiteReport>& reps) {
    bool all = true;
    Json suites = Json::array();
    for (const auto& r : reps) {
        all = all && r.all_pass;
        suites.push_back(report_to_json(r));
    }
    return Json{{"all_pass", all}, {"suites", std::move(suites)}};
}

} // namespace padlev
