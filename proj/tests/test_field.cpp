#include <catch2/catch_amalgamated.hpp>

#include <padlev/field.hpp>

#include "util.hpp"

using namespace padlev;
using testutil::TestRng;
using testutil::random_element;
using testutil::random_or_zero;
using testutil::rational_vp;
using testutil::window_value;

namespace {
const FieldSpec Q2 = make_field(2, FieldKind::CharZero);
const FieldSpec Q3 = make_field(3, FieldKind::CharZero);
const FieldSpec Q5 = make_field(5, FieldKind::CharZero);
const FieldSpec F2 = make_field(2, FieldKind::CharP);
const FieldSpec F3 = make_field(3, FieldKind::CharP);

PVector vec1(const PElement& a) { return PVector(a.spec(), {a}); }
} // namespace

TEST_CASE("field spec validation") {
    CHECK_THROWS_AS(make_field(4, FieldKind::CharZero), InvalidParams);
    CHECK_THROWS_AS(make_field(1, FieldKind::CharP), InvalidParams);
    CHECK_THROWS_AS(make_field(2, FieldKind::CharZero, 0), InvalidParams);
    CHECK(make_field(7, FieldKind::CharZero).p == 7);
}

TEST_CASE("integer embedding and canonical digits") {
    PElement four = PElement::from_integer(Q3, 4);
    REQUIRE(four.valuation() == 0);
    CHECK(four.digit_at(0) == 1);
    CHECK(four.digit_at(1) == 1);
    CHECK(four.digit_at(2) == 0);

    PElement two = PElement::from_integer(Q2, 2);
    CHECK(two.valuation() == 1);
    CHECK(two.digit_at(1) == 1);

    // char p embeds integers through the residue field
    CHECK(PElement::from_integer(F3, 5).digit_at(0) == 2);
    CHECK(PElement::from_integer(F2, 6).is_zero());
    CHECK(PElement::from_integer(Q5, 0).is_zero());
}

TEST_CASE("addition with and without carries") {
    PElement s = PElement::from_integer(Q3, 2) + PElement::from_integer(Q3, 2);
    CHECK(s == PElement::from_integer(Q3, 4));

    CHECK(PElement::from_integer(Q2, 1) + PElement::from_integer(Q2, 1) ==
          PElement::from_integer(Q2, 2));

    // characteristic 2: x + x = 0
    PElement one = PElement::one(F2);
    CHECK((one + one).is_zero());
    CHECK((PElement::from_integer(F3, 2) + PElement::from_integer(F3, 2)).digit_at(0) == 1);
}

TEST_CASE("negation and subtraction") {
    PElement m1 = -PElement::one(Q2);
    REQUIRE(m1.valuation() == 0);
    for (int e = 0; e < m1.precision(); ++e) CHECK(m1.digit_at(e) == 1);
    CHECK((PElement::one(Q2) + m1).is_zero());

    CHECK((-PElement::one(F3)).digit_at(0) == 2);
    PElement x = PElement::from_rational(Q5, 7, 25);
    CHECK((x - x).is_zero());
}

TEST_CASE("multiplication basics") {
    PElement half = PElement::from_rational(Q2, 1, 2);
    REQUIRE(half.valuation() == -1);
    CHECK(half.digit_at(-1) == 1);

    PElement th = PElement::from_integer(Q2, 3) * half; // 3/2 = 1/2 + 1
    CHECK(th.valuation() == -1);
    CHECK(th.digit_at(-1) == 1);
    CHECK(th.digit_at(0) == 1);
    CHECK(th.digit_at(1) == 0);

    PElement q = half * half;
    CHECK(q.valuation() == -2);
    CHECK(q.norm() == BigRational(4));

    // theta shifts are exact
    PElement t = PElement::one(F3).shifted(-2);
    CHECK((t * t).valuation() == -4);
}

TEST_CASE("inverse by Newton lifting") {
    PElement three = PElement::from_integer(Q2, 3);
    PElement inv = three.inverse();
    CHECK((three * inv - PElement::one(Q2)).is_zero());

    PElement x = PElement::from_rational(Q5, 7, 10);
    CHECK((x * x.inverse() - PElement::one(Q5)).is_zero());

    CHECK_THROWS_AS(PElement::zero(Q2).inverse(), DivisionByZero);

    // 1/3 is a 2-adic unit: valuation 0
    CHECK(inv.valuation() == 0);
    CHECK(inv.digit_at(0) == 1);
}

TEST_CASE("norms are exact rationals") {
    CHECK(PElement::from_integer(Q2, 8).norm() == BigRational(1, 8));
    CHECK(PElement::from_rational(Q3, 2, 9).norm() == BigRational(9));
    CHECK(PElement::zero(Q2).norm() == 0);
    CHECK(PElement::one(F3).shifted(2).norm() == BigRational(1, 9));

    PVector v(Q2, {PElement::from_integer(Q2, 4), PElement::from_rational(Q2, 1, 2)});
    CHECK(v.norm() == BigRational(2));
    CHECK(v.min_ord() == -1);
}

TEST_CASE("fractional part reads digits below zero") {
    CHECK(PElement::from_rational(Q2, 3, 4).frac_part().turns() == BigRational(3, 4));
    CHECK(PElement::from_integer(Q5, 7).frac_part().is_zero());
    // 1/3 is a 2-adic integer, so its fractional part vanishes
    CHECK(PElement::from_rational(Q2, 1, 3).frac_part().is_zero());

    // char p: only the digit at exponent -1 contributes
    PElement x = PElement::from_window(F3, -1, {2, 0, 0, 1, 0, 0, 0});
    CHECK(x.frac_part().turns() == BigRational(2, 3));
    CHECK(PElement::one(F2).shifted(-2).frac_part().is_zero());

    PElement deep = PElement::from_window(Q2, -3, {1, 0, 1, 0});
    CHECK(deep.frac_part().turns() == BigRational(5, 8));
}

TEST_CASE("fractional part requires the window to reach exponent 0") {
    PElement x = PElement::from_window(Q2, -6, {1, 0, 1}); // known mod 2^-3 only
    CHECK_THROWS_AS(x.frac_part(), PrecisionExhausted);
    CHECK_THROWS_AS(PElement::zero(Q2, -2).frac_part(), PrecisionExhausted);
}

TEST_CASE("turn angle arithmetic is exact") {
    TurnAngle a(2, 1, 1); // 1/2
    CHECK((a + a).is_zero());
    TurnAngle b(2, 3, 2); // 3/4
    CHECK((b + TurnAngle(2, 1, 2)).is_zero());
    CHECK((b + b) == TurnAngle(2, 1, 1));
    CHECK(TurnAngle(2, 2, 2) == TurnAngle(2, 1, 1)); // reduction
    CHECK((TurnAngle(3, 1, 1) + TurnAngle(3, 2, 1)).is_zero());
    CHECK((-TurnAngle(5, 2, 1)) == TurnAngle(5, 3, 1));
    CHECK(TurnAngle(3, 1, 2).scaled(3) == TurnAngle(3, 1, 1));

    CHECK(TurnAngle(2, 1, 1).to_complex() == Complex{-1.0, 0.0});
    CHECK(TurnAngle(2, 1, 2).to_complex() == Complex{0.0, 1.0});
    CHECK(TurnAngle(3, 1, 1).to_complex().real() == Catch::Approx(-0.5));
    CHECK_THROWS_AS(TurnAngle(2, 1, 1) + TurnAngle(3, 1, 1), FieldMismatch);
}

TEST_CASE("characters at points") {
    PVector s = vec1(PElement::one(Q2));
    PVector z = vec1(PElement::from_rational(Q2, 1, 2));
    CHECK(char_angle(s, z).turns() == BigRational(1, 2));
    CHECK(char_value(s, z) == Complex{-1.0, 0.0});

    // |s z| <= 1 kills the angle
    CHECK(char_angle(vec1(PElement::from_integer(Q3, 3)),
                     vec1(PElement::from_rational(Q3, 1, 3)))
              .is_zero());

    // two coordinates interact through carries: 1/2 + 1/2 = 1
    PVector s2(Q2, {PElement::one(Q2), PElement::from_rational(Q2, 1, 2)});
    PVector z2(Q2, {PElement::from_rational(Q2, 1, 2), PElement::one(Q2)});
    CHECK(char_angle(s2, z2).is_zero());

    // char p analog is carry-free
    PVector sf(F2, {PElement::one(F2), PElement::one(F2).shifted(-1)});
    PVector zf(F2, {PElement::one(F2).shifted(-1), PElement::one(F2)});
    CHECK(char_angle(sf, zf).is_zero());
    PVector sf2(F2, {PElement::one(F2).shifted(-1), PElement::one(F2)});
    PVector zf2(F2, {PElement::one(F2), PElement::one(F2)});
    CHECK(char_angle(sf2, zf2).turns() == BigRational(1, 2));
}

TEST_CASE("field mismatch and dimension mismatch are rejected") {
    CHECK_THROWS_AS(PElement::one(Q2) + PElement::one(Q3), FieldMismatch);
    CHECK_THROWS_AS(PElement::one(Q2) * PElement::one(F2), FieldMismatch);
    PVector a(Q2, {PElement::one(Q2)});
    PVector b(Q2, {PElement::one(Q2), PElement::one(Q2)});
    CHECK_THROWS_AS(pairing(a, b), DimensionMismatch);
}

TEST_CASE("addition against the rational readback oracle") {
    for (auto spec : {Q2, Q3, Q5}) {
        TestRng rng(1234 + spec.p);
        for (int i = 0; i < 2000; ++i) {
            PElement x = random_or_zero(spec, rng, -4, 4);
            PElement y = random_or_zero(spec, rng, -4, 4);
            PElement s = x + y;
            auto gap = window_value(x) + window_value(y) - window_value(s);
            CHECK(rational_vp(gap, spec.p) >= s.precision());
        }
    }
}

TEST_CASE("multiplication against the rational readback oracle") {
    for (auto spec : {Q2, Q3, Q5}) {
        TestRng rng(99 + spec.p);
        for (int i = 0; i < 1500; ++i) {
            PElement x = random_element(spec, rng, -4, 4);
            PElement y = random_element(spec, rng, -4, 4);
            PElement m = x * y;
            auto gap = window_value(x) * window_value(y) - window_value(m);
            CHECK(rational_vp(gap, spec.p) >= m.precision());
            CHECK(m.precision() ==
                  std::min(x.valuation() + y.precision(), y.valuation() + x.precision()));
        }
    }
}

TEST_CASE("inverse against the rational readback oracle") {
    for (auto spec : {Q2, Q3, Q5, F2, F3}) {
        TestRng rng(7 + spec.p + (spec.kind == FieldKind::CharP ? 100 : 0));
        for (int i = 0; i < 400; ++i) {
            PElement x = random_element(spec, rng, -3, 3);
            PElement z = x.inverse();
            if (spec.kind == FieldKind::CharZero) {
                auto gap = window_value(x) * window_value(z) - 1;
                CHECK(rational_vp(gap, spec.p) >= x.precision() - x.valuation());
            } else {
                CHECK((x * z - PElement::one(spec)).is_zero());
            }
        }
    }
}

TEST_CASE("ultrametric inequality with equality off the diagonal") {
    for (auto spec : {Q2, Q5, F2, F3}) {
        TestRng rng(31 + spec.p);
        for (int i = 0; i < 2500; ++i) {
            PElement x = random_or_zero(spec, rng, -4, 4);
            PElement y = random_or_zero(spec, rng, -4, 4);
            BigRational nx = x.norm(), ny = y.norm();
            BigRational ns = (x + y).norm();
            BigRational mx = std::max(nx, ny);
            CHECK(ns <= mx);
            if (nx != ny) CHECK(ns == mx);
        }
    }
}

TEST_CASE("norm multiplicativity") {
    for (auto spec : {Q2, Q3, F3}) {
        TestRng rng(57 + spec.p);
        for (int i = 0; i < 2000; ++i) {
            PElement x = random_element(spec, rng, -4, 4);
            PElement y = random_element(spec, rng, -4, 4);
            CHECK((x * y).norm() == x.norm() * y.norm());
        }
    }
}

TEST_CASE("character is a homomorphism in exact angles") {
    for (auto spec : {Q2, Q3, F2, F3}) {
        TestRng rng(77 + spec.p);
        for (int i = 0; i < 2000; ++i) {
            PVector s = vec1(random_or_zero(spec, rng, -3, 3));
            PVector z = vec1(random_or_zero(spec, rng, -3, 3));
            PVector w = vec1(random_or_zero(spec, rng, -3, 3));
            TurnAngle lhs = char_angle(s, z + w);
            TurnAngle rhs = char_angle(s, z) + char_angle(s, w);
            CHECK(lhs == rhs);
        }
    }
}

TEST_CASE("fractional part cocycle lands in the right lattice") {
    for (auto spec : {Q2, Q5, F2, F3}) {
        TestRng rng(13 + spec.p);
        for (int i = 0; i < 2000; ++i) {
            PElement x = random_or_zero(spec, rng, -4, 4);
            PElement y = random_or_zero(spec, rng, -4, 4);
            BigRational d = (x + y).frac_part().turns() - x.frac_part().turns() -
                            y.frac_part().turns();
            if (spec.kind == FieldKind::CharZero) CHECK(is_integer(d));
            else CHECK(is_integer(d * spec.p));
        }
    }
}

TEST_CASE("char p additive order") {
    for (auto spec : {F2, F3}) {
        TestRng rng(41 + spec.p);
        for (int i = 0; i < 500; ++i) {
            PElement x = random_element(spec, rng, -4, 4);
            PElement acc = x;
            for (int k = 1; k < spec.p; ++k) acc = acc + x;
            CHECK(acc.is_zero());
        }
    }
}

TEST_CASE("precision bookkeeping through arithmetic") {
    PElement x = PElement::from_window(Q2, -2, {1, 1, 0, 1, 1, 0});
    PElement y = PElement::from_window(Q2, 0, {1, 1});
    CHECK((x + y).precision() == 2);
    PElement prod = x * y;
    CHECK(prod.precision() == std::min(-2 + 2, 0 + 4));
    CHECK(x.inverse().precision() == 8); // M - 2N with M=4, N=-2

    PElement t = x.truncated(1);
    CHECK(t.precision() == 1);
    CHECK(t.digit_at(0) == 0);
    CHECK_THROWS_AS(x.digit_at(10), PrecisionExhausted);
}
