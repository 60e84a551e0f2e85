#include <catch2/catch_amalgamated.hpp>

#include <padlev/serialize.hpp>
#include <padlev/verify.hpp>

#include <algorithm>
#include <set>

#include "util.hpp"

using namespace padlev;
using testutil::TestRng;
using testutil::random_element;
using testutil::random_or_zero;

namespace {
const FieldSpec Q2 = make_field(2, FieldKind::CharZero);
const FieldSpec Q3 = make_field(3, FieldKind::CharZero);
const FieldSpec F2 = make_field(2, FieldKind::CharP);
const FieldSpec F3 = make_field(3, FieldKind::CharP);

PVector vec1(const PElement& a) { return PVector(a.spec(), {a}); }
} // namespace

TEST_CASE("field spec serialization round-trips and rejects junk") {
    for (const FieldSpec& spec : {Q2, Q3, F2, F3, make_field(5, FieldKind::CharZero, 12)}) {
        Json j = field_to_json(spec);
        FieldSpec back = field_from_json(j);
        CHECK(back == spec);
        CHECK(field_to_json(back) == j);
    }
    CHECK(field_to_json(Q2)["kind"] == "qp");
    CHECK(field_to_json(F3)["kind"] == "fptheta");

    CHECK_THROWS_AS(field_from_json(Json{{"p", 2}, {"kind", "qp"}}), ParseError);
    CHECK_THROWS_AS(
        field_from_json(Json{{"p", 2}, {"kind", "real"}, {"precision", 32}}), ParseError);
    CHECK_THROWS_AS(
        field_from_json(Json{{"p", 4}, {"kind", "qp"}, {"precision", 32}}), ParseError);
    CHECK_THROWS_AS(
        field_from_json(Json{{"p", 2}, {"kind", "qp"}, {"precision", 0}}), ParseError);
    CHECK_THROWS_AS(field_from_json(Json::array()), ParseError);
}

TEST_CASE("element json and text forms round-trip") {
    TestRng rng(0x5e41a11ull);
    for (const FieldSpec& spec : {Q2, Q3, F2, F3}) {
        for (int i = 0; i < 300; ++i) {
            PElement e = random_or_zero(spec, rng, -5, 5);
            Json j = element_to_json(e);
            PElement back = element_from_json(spec, j);
            REQUIRE(back == e);
            REQUIRE(element_to_json(back) == j);
            PElement back2 = element_from_text(spec, element_to_text(e));
            REQUIRE(back2 == e);
        }
    }

    // pinned shapes
    PElement five_eighths = PElement::from_rational(Q2, 5, 8);
    Json j = element_to_json(five_eighths);
    CHECK(j["val"] == -3);
    // inverting 8 costs its valuation twice: 32 - 2 * 3 digits survive
    CHECK(j["prec"] == 26);
    CHECK(j["digits"][0] == 1);
    CHECK(j["digits"][1] == 0);
    CHECK(j["digits"][2] == 1);
    CHECK(element_to_text(five_eighths).rfind("-3|1 0 1", 0) == 0);

    PElement z = PElement::zero(Q3, 7);
    CHECK(element_to_json(z) == Json{{"val", nullptr}, {"digits", Json::array()}, {"prec", 7}});
    CHECK(element_to_text(z) == "inf||7");
    CHECK(element_from_text(Q3, "inf||7") == z);
}

TEST_CASE("element parsers reject malformed input") {
    CHECK_THROWS_AS(element_from_text(Q2, "nonsense"), ParseError);
    CHECK_THROWS_AS(element_from_text(Q2, "0|1 1|"), ParseError);
    CHECK_THROWS_AS(element_from_text(Q2, "0|1 x|3"), ParseError);
    CHECK_THROWS_AS(element_from_text(Q2, "0|0 1|2"), ParseError); // leading zero digit
    CHECK_THROWS_AS(element_from_text(Q2, "0|1 5|2"), ParseError); // digit out of range
    CHECK_THROWS_AS(element_from_text(Q2, "0|1 1|7"), ParseError); // window mismatch
    CHECK_THROWS_AS(element_from_text(Q2, "inf|1|3"), ParseError);

    CHECK_THROWS_AS(element_from_json(Q2, Json::array()), ParseError);
    CHECK_THROWS_AS(element_from_json(Q2, Json{{"val", 0}, {"prec", 2}}), ParseError);
    CHECK_THROWS_AS(
        element_from_json(Q2, Json{{"val", nullptr}, {"digits", {1}}, {"prec", 2}}),
        ParseError);
    CHECK_THROWS_AS(
        element_from_json(Q2, Json{{"val", 0}, {"digits", {0, 1}}, {"prec", 2}}),
        ParseError);
    CHECK_THROWS_AS(
        element_from_json(Q2, Json{{"val", 0.5}, {"digits", {1}}, {"prec", 1}}),
        ParseError);
}

TEST_CASE("vector text cells join coordinates with semicolons") {
    TestRng rng(0x7ec7012ull);
    for (const FieldSpec& spec : {Q2, F3}) {
        for (int i = 0; i < 50; ++i) {
            std::vector<PElement> coords{random_element(spec, rng, -3, 3),
                                         random_or_zero(spec, rng, -3, 3),
                                         random_element(spec, rng, -3, 3)};
            PVector v(spec, coords);
            std::string cell = vector_to_text(v);
            CHECK(std::count(cell.begin(), cell.end(), ';') == 2);
            CHECK(vector_from_text(spec, cell) == v);
            CHECK(vector_from_json(spec, vector_to_json(v)) == v);
        }
    }
    CHECK_THROWS_AS(vector_from_json(Q2, Json::array()), ParseError);
}

TEST_CASE("measure serialization is canonical") {
    TestRng rng(0x3a51e5ull);
    for (const FieldSpec& spec : {Q2, F3}) {
        StepMeasure m(
            spec, 1,
            {Atom{vec1(random_element(spec, rng, -2, 1)), 0.4},
             Atom{vec1(PElement::zero(spec)), 0.1}},
            {Piece{BallRegion(vec1(random_element(spec, rng, -1, 0)), 1), 0.5, 0},
             Piece{BallRegion(PVector::zero(spec, 1), 2, 0), 0.25, 0},
             Piece{BallRegion(PVector::zero(spec, 1), 0), 1.5, 2}});
        Json j = measure_to_json(m);
        StepMeasure back = measure_from_json(spec, 1, j);
        REQUIRE(measure_to_json(back) == j);
        CHECK(back.atoms().size() == 2);
        CHECK(back.pieces().size() == 3);
        CHECK(back.total_mass() == Catch::Approx(m.total_mass()).margin(1e-15));
        TestRng srng(0x11ull);
        for (int i = 0; i < 30; ++i) {
            PVector s = vec1(random_element(spec, srng, -3, 2));
            CHECK(std::abs(charfn_of_measure(back, s) - charfn_of_measure(m, s)) < 1e-15);
        }

        // the plain piece omits its radial exponent, the weighted one carries it
        CHECK_FALSE(j["pieces"][0].contains("radial_exponent"));
        CHECK(j["pieces"][2]["radial_exponent"] == 2);
        CHECK(j["pieces"][0]["inner_radius_log"].is_null());
        CHECK(j["pieces"][1]["inner_radius_log"] == 0);
    }

    CHECK_THROWS_AS(measure_from_json(Q2, 1, Json{{"atoms", Json::array()}}), ParseError);
    CHECK_THROWS_AS(
        measure_from_json(
            Q2, 1,
            Json{{"atoms", Json::array()},
                 {"pieces",
                  {Json{{"center", vector_to_json(PVector::zero(Q2, 1))},
                        {"radius_log", 0},
                        {"inner_radius_log", 1}, // inner above outer
                        {"density", 1.0}}}}}),
        ParseError);
}

TEST_CASE("triplet serialization is canonical in every mode") {
    TestRng rng(0x7119137ull);
    StepMeasure nu(Q2, 1,
                   {Atom{vec1(random_element(Q2, rng, -2, 0)), 0.6},
                    Atom{vec1(random_element(Q2, rng, -1, 1)), 0.4}},
                   {});

    LevyTriplet plain = LevyTriplet::compensated(nu);
    Json j0 = triplet_to_json(plain);
    CHECK(j0["mode"] == "compensated");
    CHECK_FALSE(j0.contains("epsilon_log"));
    CHECK(j0["drift"]["type"] == "none");
    CHECK(j0["diffusion"]["type"] == "none");
    CHECK(triplet_to_json(triplet_from_json(Q2, 1, j0)) == j0);

    LevyTriplet real_side =
        LevyTriplet::truncated(nu, -1).with_real_drift({0.5}, 2.0).with_real_form({{0.7}});
    Json j1 = triplet_to_json(real_side);
    CHECK(j1["mode"] == "truncated");
    CHECK(j1["epsilon_log"] == -1);
    CHECK(j1["drift"]["type"] == "r");
    CHECK(j1["diffusion"]["type"] == "r");
    LevyTriplet back1 = triplet_from_json(Q2, 1, j1);
    CHECK(triplet_to_json(back1) == j1);

    LevyTriplet field_side =
        LevyTriplet::compensated(nu)
            .with_field_drift(vec1(random_element(Q2, rng, -2, 0)), 1.25)
            .with_field_form({{random_element(Q2, rng, -1, 1)}});
    Json j2 = triplet_to_json(field_side);
    CHECK(j2["drift"]["type"] == "k");
    CHECK(j2["diffusion"]["type"] == "k");
    LevyTriplet back2 = triplet_from_json(Q2, 1, j2);
    CHECK(triplet_to_json(back2) == j2);

    TestRng yrng(0x77ull);
    for (int i = 0; i < 20; ++i) {
        PVector y = vec1(random_element(Q2, yrng, -2, 1));
        for (double t : {0.5, 1.75}) {
            CHECK(std::abs(psi(back1, t, y) - psi(real_side, t, y)) < 1e-15);
            CHECK(std::abs(psi(back2, t, y) - psi(field_side, t, y)) < 1e-15);
        }
    }

    Json bad = j1;
    bad["mode"] = "exact";
    CHECK_THROWS_AS(triplet_from_json(Q2, 1, bad), ParseError);
    bad = j1;
    bad.erase("epsilon_log");
    CHECK_THROWS_AS(triplet_from_json(Q2, 1, bad), ParseError);
    bad = j0;
    bad["drift"] = Json{{"type", "k"}};
    CHECK_THROWS_AS(triplet_from_json(Q2, 1, bad), ParseError);
    bad = j0;
    bad["jump"]["atoms"][0]["point"][0]["digits"] = "garbage";
    CHECK_THROWS_AS(triplet_from_json(Q2, 1, bad), ParseError);
}

TEST_CASE("run config round-trips through its canonical json") {
    Json j;
    j["field"] = Json{{"p", 2}, {"kind", "qp"}, {"precision", 16}};
    j["dimension"] = 1;
    j["measure"] = Json{
        {"atoms",
         {Json{{"point", {Json{{"val", -1}, {"digits", {1}}, {"prec", 0}}}},
               {"mass", 1.0}}}},
        {"pieces", Json::array()}};
    j["rate"] = 2.5;
    j["samples"] = 500;
    j["t"] = {0.5, 1.0};
    j["m"] = {2, 8};
    j["seed"] = 42;
    j["grid"] = Json{{"radius_log", 1}, {"depth", 2}};
    j["out"] = "paths.csv";

    RunConfig cfg = config_from_json(j);
    CHECK(cfg.field.p == 2);
    CHECK(cfg.field.precision == 16);
    CHECK(cfg.dimension == 1);
    CHECK(cfg.measure.has_value());
    CHECK_FALSE(cfg.triplet.has_value());
    CHECK(cfg.rate == 2.5);
    CHECK(cfg.samples == 500);
    CHECK(cfg.t_values == std::vector<double>{0.5, 1.0});
    CHECK(cfg.m_values == std::vector<int>{2, 8});
    CHECK(cfg.seed == 42);
    CHECK(cfg.grid.generated);
    CHECK(cfg.out == "paths.csv");

    Json canon = config_to_json(cfg);
    RunConfig again = config_from_json(canon);
    CHECK(config_to_json(again) == canon);
    CHECK(config_hash(cfg) == config_hash(again));
    CHECK(config_hash(cfg).size() == 16);

    RunConfig bumped = cfg;
    bumped.seed = 43;
    CHECK(config_hash(bumped) != config_hash(cfg));

    Json bad = j;
    bad["dimension"] = 0;
    CHECK_THROWS_AS(config_from_json(bad), ParseError);
    bad = j;
    bad["grid"] = Json{{"depth", 2}};
    CHECK_THROWS_AS(config_from_json(bad), ParseError);
    bad = j;
    bad["t"] = "soon";
    CHECK_THROWS_AS(config_from_json(bad), ParseError);
    bad = j;
    bad.erase("field");
    CHECK_THROWS_AS(config_from_json(bad), ParseError);
}

TEST_CASE("generated grids enumerate digit windows deterministically") {
    RunConfig cfg;
    cfg.field = Q2;
    cfg.dimension = 1;
    cfg.grid.generated = true;
    cfg.grid.radius_log = 1;
    cfg.grid.depth = 3;

    std::vector<PVector> pts = materialize_grid(cfg);
    REQUIRE(pts.size() == 8);
    CHECK(pts[0].is_zero());
    std::set<std::string> seen;
    for (const auto& y : pts) {
        CHECK(y.norm() <= pow_rational(2, 1));
        seen.insert(vector_to_text(y));
    }
    CHECK(seen.size() == 8);
    // same request twice gives the identical ordering
    std::vector<PVector> pts2 = materialize_grid(cfg);
    for (size_t i = 0; i < pts.size(); ++i) REQUIRE(pts[i] == pts2[i]);

    RunConfig two = cfg;
    two.field = Q3;
    two.dimension = 2;
    two.grid.depth = 2;
    std::vector<PVector> pts3 = materialize_grid(two);
    CHECK(pts3.size() == 81);

    RunConfig fat = cfg;
    fat.grid.depth = 25;
    CHECK_THROWS_AS(materialize_grid(fat), InvalidParams);

    RunConfig narrow = cfg;
    narrow.field = make_field(2, FieldKind::CharZero, 4);
    narrow.grid.radius_log = -3;
    narrow.grid.depth = 2;
    CHECK_THROWS_AS(materialize_grid(narrow), PrecisionExhausted);

    RunConfig listed = cfg;
    listed.grid.generated = false;
    listed.grid.points = {PVector::zero(Q2, 1)};
    CHECK(materialize_grid(listed).size() == 1);
}

TEST_CASE("verification suites pass end to end") {
    std::vector<SuiteReport> reps = verify_suites("all", 0x5eedull);
    REQUIRE(reps.size() == 4);
    for (const auto& rep : reps) {
        INFO(rep.suite);
        for (const auto& c : rep.checks) {
            INFO(c.name << ": " << c.detail);
            CHECK(c.pass);
        }
        CHECK(rep.all_pass);
    }
    Json j = reports_to_json(reps);
    CHECK(j["all_pass"] == true);
    CHECK(j["suites"].size() == 4);
    CHECK(j["suites"][0]["suite"] == "field");
    CHECK(j["suites"][0]["checks"].size() >= 5);

    CHECK_THROWS_AS(verify_suites("fields", 1), InvalidParams);
}

TEST_CASE("a corrupted reference value is caught and reported") {
    VerifyOptions opt;
    opt.ball_closed_form_skew = 1e-6;
    SuiteReport rep = verify_measure(0x5eedull, opt);
    CHECK_FALSE(rep.all_pass);
    REQUIRE_FALSE(rep.checks.empty());
    const CheckResult& ball = rep.checks.front();
    CHECK(ball.name == "ball character transform closed form");
    CHECK_FALSE(ball.pass);
    // the counterexample payload names the offending cell
    CHECK(ball.detail.find("p=") != std::string::npos);
    CHECK(ball.detail.find("kind=") != std::string::npos);
    CHECK(ball.detail.find("n=") != std::string::npos);
    CHECK(ball.detail.find("k=") != std::string::npos);
    CHECK(ball.detail.find("ord(s)=") != std::string::npos);
}
