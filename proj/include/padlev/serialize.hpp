#pragma once

#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "charfn.hpp"

namespace padlev {

using Json = nlohmann::json;

inline std::string field_kind_name(FieldKind k) {
    return k == FieldKind::CharZero ? "qp" : "fptheta";
}

inline FieldKind parse_field_kind(const std::string& s) {
    if (s == "qp") return FieldKind::CharZero;
    if (s == "fptheta") return FieldKind::CharP;
    throw ParseError("field kind must be \"qp\" or \"fptheta\", got \"" + s + "\"");
}

namespace detail {

inline const Json& json_field(const Json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end()) throw ParseError(std::string("missing key \"") + key + "\"");
    return *it;
}

inline long long json_int(const Json& j, const char* key) {
    const Json& v = json_field(j, key);
    if (!v.is_number_integer())
        throw ParseError(std::string("key \"") + key + "\" must be an integer");
    return v.get<long long>();
}

inline double json_real(const Json& j, const char* key) {
    const Json& v = json_field(j, key);
    if (!v.is_number())
        throw ParseError(std::string("key \"") + key + "\" must be a number");
    return v.get<double>();
}

inline std::string json_string(const Json& j, const char* key) {
    const Json& v = json_field(j, key);
    if (!v.is_string())
        throw ParseError(std::string("key \"") + key + "\" must be a string");
    return v.get<std::string>();
}

} // namespace detail

inline Json field_to_json(const FieldSpec& spec) {
    return Json{{"p", spec.p}, {"kind", field_kind_name(spec.kind)},
                {"precision", spec.precision}};
}

inline FieldSpec field_from_json(const Json& j) {
    if (!j.is_object()) throw ParseError("field spec must be a JSON object");
    int p = static_cast<int>(detail::json_int(j, "p"));
    FieldKind kind = parse_field_kind(detail::json_string(j, "kind"));
    int prec = static_cast<int>(detail::json_int(j, "precision"));
    try {
        return make_field(p, kind, prec);
    } catch (const Error& e) {
        throw ParseError(std::string("bad field spec: ") + e.what());
    }
}

// {"val": N, "digits": [d_N, ...], "prec": M}; zero is {"val": null, "digits": [], "prec": M}.
inline Json element_to_json(const PElement& e) {
    Json j;
    j["val"] = e.is_zero() ? Json(nullptr) : Json(e.valuation());
    j["digits"] = e.digits();
    j["prec"] = e.precision();
    return j;
}

inline PElement element_from_json(const FieldSpec& spec, const Json& j) {
    if (!j.is_object()) throw ParseError("element must be a JSON object");
    const Json& val = detail::json_field(j, "val");
    const Json& digits = detail::json_field(j, "digits");
    int prec = static_cast<int>(detail::json_int(j, "prec"));
    if (!digits.is_array()) throw ParseError("element digits must be an array");
    if (val.is_null()) {
        if (!digits.empty()) throw ParseError("zero element must have empty digits");
        try {
            return PElement::zero(spec, prec);
        } catch (const Error& e) {
            throw ParseError(std::string("bad element: ") + e.what());
        }
    }
    if (!val.is_number_integer()) throw ParseError("element val must be an integer or null");
    std::vector<int> d;
    d.reserve(digits.size());
    for (const Json& x : digits) {
        if (!x.is_number_integer()) throw ParseError("element digits must be integers");
        d.push_back(x.get<int>());
    }
    if (!d.empty() && d.front() == 0)
        throw ParseError("element digits must start at the valuation");
    try {
        return PElement::from_digits(spec, val.get<int>(), std::move(d), prec);
    } catch (const Error& e) {
        throw ParseError(std::string("bad element: ") + e.what());
    }
}

// Compact text cell "N|d_N d_{N+1} ...|M"; zero is "inf||M".
inline std::string element_to_text(const PElement& e) {
    std::ostringstream out;
    if (e.is_zero()) {
        out << "inf|";
    } else {
        out << e.valuation() << '|';
        for (size_t i = 0; i < e.digits().size(); ++i) {
            if (i) out << ' ';
            out << e.digits()[i];
        }
    }
    out << '|' << e.precision();
    return out.str();
}

inline PElement element_from_text(const FieldSpec& spec, const std::string& text) {
    size_t a = text.find('|');
    size_t b = text.rfind('|');
    if (a == std::string::npos || b == a)
        throw ParseError("element text must look like \"val|digits|prec\"");
    std::string val_part = text.substr(0, a);
    std::string digit_part = text.substr(a + 1, b - a - 1);
    std::string prec_part = text.substr(b + 1);
    try {
        int prec = std::stoi(prec_part);
        if (val_part == "inf") {
            if (!digit_part.empty()) throw ParseError("zero element has no digits");
            return PElement::zero(spec, prec);
        }
        int val = std::stoi(val_part);
        std::vector<int> digits;
        std::istringstream in(digit_part);
        int d;
        while (in >> d) digits.push_back(d);
        if (!in.eof()) throw ParseError("element digits must be integers");
        if (!digits.empty() && digits.front() == 0)
            throw ParseError("element digits must start at the valuation");
        return PElement::from_digits(spec, val, std::move(digits), prec);
    } catch (const ParseError&) {
        throw;
    } catch (const std::exception& e) {
        throw ParseError(std::string("bad element text \"") + text + "\": " + e.what());
    }
}

inline Json vector_to_json(const PVector& v) {
    Json j = Json::array();
    for (int i = 0; i < v.dim(); ++i) j.push_back(element_to_json(v[i]));
    return j;
}

inline PVector vector_from_json(const FieldSpec& spec, const Json& j) {
    if (!j.is_array() || j.empty()) throw ParseError("point must be a non-empty array");
    std::vector<PElement> coords;
    coords.reserve(j.size());
    for (const Json& e : j) coords.push_back(element_from_json(spec, e));
    return PVector(spec, std::move(coords));
}

// Coordinates joined by ';' for CSV cells.
inline std::string vector_to_text(const PVector& v) {
    std::string out;
    for (int i = 0; i < v.dim(); ++i) {
        if (i) out += ';';
        out += element_to_text(v[i]);
    }
    return out;
}

inline PVector vector_from_text(const FieldSpec& spec, const std::string& text) {
    std::vector<PElement> coords;
    size_t start = 0;
    while (true) {
        size_t stop = text.find(';', start);
        coords.push_back(element_from_text(
            spec, text.substr(start, stop == std::string::npos ? stop : stop - start)));
        if (stop == std::string::npos) break;
        start = stop + 1;
    }
    return PVector(spec, std::move(coords));
}

inline Json measure_to_json(const StepMeasure& m) {
    Json atoms = Json::array();
    for (const auto& a : m.atoms())
        atoms.push_back(Json{{"point", vector_to_json(a.point)}, {"mass", a.mass}});
    Json pieces = Json::array();
    for (const auto& pc : m.pieces()) {
        Json p{{"center", vector_to_json(pc.region.center)},
               {"radius_log", pc.region.radius_log},
               {"inner_radius_log", pc.region.inner_radius_log
                                        ? Json(*pc.region.inner_radius_log)
                                        : Json(nullptr)},
               {"density", pc.density}};
        if (pc.radial_exponent != 0) p["radial_exponent"] = pc.radial_exponent;
        pieces.push_back(std::move(p));
    }
    return Json{{"atoms", std::move(atoms)}, {"pieces", std::move(pieces)}};
}

inline StepMeasure measure_from_json(const FieldSpec& spec, int n, const Json& j) {
    if (!j.is_object()) throw ParseError("measure must be a JSON object");
    const Json& ja = detail::json_field(j, "atoms");
    const Json& jp = detail::json_field(j, "pieces");
    if (!ja.is_array() || !jp.is_array())
        throw ParseError("measure atoms and pieces must be arrays");
    std::vector<Atom> atoms;
    for (const Json& a : ja)
        atoms.push_back(Atom{vector_from_json(spec, detail::json_field(a, "point")),
                             detail::json_real(a, "mass")});
    std::vector<Piece> pieces;
    for (const Json& p : jp) {
        PVector center = vector_from_json(spec, detail::json_field(p, "center"));
        int radius = static_cast<int>(detail::json_int(p, "radius_log"));
        std::optional<int> inner;
        const Json& ji = detail::json_field(p, "inner_radius_log");
        if (!ji.is_null()) {
            if (!ji.is_number_integer())
                throw ParseError("inner_radius_log must be an integer or null");
            inner = ji.get<int>();
        }
        int rexp = 0;
        if (p.contains("radial_exponent"))
            rexp = static_cast<int>(detail::json_int(p, "radial_exponent"));
        try {
            pieces.push_back(Piece{BallRegion(std::move(center), radius, inner),
                                   detail::json_real(p, "density"), rexp});
        } catch (const Error& e) {
            throw ParseError(std::string("bad piece: ") + e.what());
        }
    }
    try {
        return StepMeasure(spec, n, std::move(atoms), std::move(pieces));
    } catch (const Error& e) {
        throw ParseError(std::string("bad measure: ") + e.what());
    }
}

inline Json triplet_to_json(const LevyTriplet& tr) {
    Json j;
    j["mode"] = tr.form() == TripletForm::Compensated ? "compensated" : "truncated";
    if (tr.form() == TripletForm::Truncated) j["epsilon_log"] = tr.epsilon_log();
    switch (tr.drift_kind()) {
    case DriftKind::NoDrift:
        j["drift"] = Json{{"type", "none"}};
        break;
    case DriftKind::FieldDrift:
        j["drift"] = Json{{"type", "k"}, {"a", vector_to_json(tr.field_drift())},
                          {"q", tr.drift_rate()}};
        break;
    case DriftKind::RealDrift:
        j["drift"] = Json{{"type", "r"}, {"v", tr.real_drift()}, {"q", tr.drift_rate()}};
        break;
    }
    switch (tr.diffusion_kind()) {
    case DiffusionKind::NoDiffusion:
        j["diffusion"] = Json{{"type", "none"}};
        break;
    case DiffusionKind::FieldForm: {
        Json rows = Json::array();
        for (const auto& row : tr.field_form()) {
            Json r = Json::array();
            for (const auto& e : row) r.push_back(element_to_json(e));
            rows.push_back(std::move(r));
        }
        j["diffusion"] = Json{{"type", "k"}, {"h", std::move(rows)}};
        break;
    }
    case DiffusionKind::RealForm:
        j["diffusion"] = Json{{"type", "r"}, {"b", tr.real_form()}};
        break;
    }
    j["jump"] = measure_to_json(tr.jump());
    return j;
}

inline LevyTriplet triplet_from_json(const FieldSpec& spec, int n, const Json& j) {
    if (!j.is_object()) throw ParseError("triplet must be a JSON object");
    std::string mode = detail::json_string(j, "mode");
    StepMeasure jump = measure_from_json(spec, n, detail::json_field(j, "jump"));
    LevyTriplet tr = [&] {
        try {
            if (mode == "compensated") return LevyTriplet::compensated(std::move(jump));
            if (mode == "truncated")
                return LevyTriplet::truncated(std::move(jump),
                                              static_cast<int>(detail::json_int(j, "epsilon_log")));
            throw ParseError("triplet mode must be \"compensated\" or \"truncated\"");
        } catch (const ParseError&) {
            throw;
        } catch (const Error& e) {
            throw ParseError(std::string("bad triplet: ") + e.what());
        }
    }();

    const Json& jd = detail::json_field(j, "drift");
    std::string dtype = detail::json_string(jd, "type");
    try {
        if (dtype == "k") {
            tr = tr.with_field_drift(vector_from_json(spec, detail::json_field(jd, "a")),
                                     detail::json_real(jd, "q"));
        } else if (dtype == "r") {
            const Json& jv = detail::json_field(jd, "v");
            if (!jv.is_array()) throw ParseError("real drift v must be an array");
            std::vector<double> v;
            for (const Json& x : jv) {
                if (!x.is_number()) throw ParseError("real drift v must hold numbers");
                v.push_back(x.get<double>());
            }
            tr = tr.with_real_drift(std::move(v), detail::json_real(jd, "q"));
        } else if (dtype != "none") {
            throw ParseError("drift type must be \"none\", \"k\" or \"r\"");
        }

        const Json& jf = detail::json_field(j, "diffusion");
        std::string ftype = detail::json_string(jf, "type");
        if (ftype == "k") {
            const Json& jh = detail::json_field(jf, "h");
            if (!jh.is_array()) throw ParseError("field form h must be an array of rows");
            std::vector<std::vector<PElement>> h;
            for (const Json& row : jh) {
                if (!row.is_array()) throw ParseError("field form h rows must be arrays");
                std::vector<PElement> r;
                for (const Json& e : row) r.push_back(element_from_json(spec, e));
                h.push_back(std::move(r));
            }
            tr = tr.with_field_form(std::move(h));
        } else if (ftype == "r") {
            const Json& jb = detail::json_field(jf, "b");
            if (!jb.is_array()) throw ParseError("real form b must be an array of rows");
            std::vector<std::vector<double>> b;
            for (const Json& row : jb) {
                if (!row.is_array()) throw ParseError("real form b rows must be arrays");
                std::vector<double> r;
                for (const Json& x : row) {
                    if (!x.is_number()) throw ParseError("real form b must hold numbers");
                    r.push_back(x.get<double>());
                }
                b.push_back(std::move(r));
            }
            tr = tr.with_real_form(std::move(b));
        } else if (ftype != "none") {
            throw ParseError("diffusion type must be \"none\", \"k\" or \"r\"");
        }
    } catch (const ParseError&) {
        throw;
    } catch (const Error& e) {
        throw ParseError(std::string("bad triplet: ") + e.what());
    }
    return tr;
}

// Either an explicit point list or a digit-window generator: all y whose
// coordinates have digits at exponents -radius_log .. -radius_log+depth-1.
struct GridSpec {
    std::vector<PVector> points;
    bool generated = false;
    int radius_log = 0;
    int depth = 0;
};

struct RunConfig {
    FieldSpec field;
    int dimension = 1;
    std::optional<LevyTriplet> triplet;
    std::optional<StepMeasure> measure;
    double rate = 0.0; // compound-Poisson intensity for sample/limit runs
    int samples = 0;
    std::vector<double> t_values;
    std::vector<int> m_values;
    std::uint64_t seed = 0;
    GridSpec grid;
    std::string out;
};

inline RunConfig config_from_json(const Json& j) {
    if (!j.is_object()) throw ParseError("config must be a JSON object");
    RunConfig cfg;
    cfg.field = field_from_json(detail::json_field(j, "field"));
    cfg.dimension = static_cast<int>(detail::json_int(j, "dimension"));
    if (cfg.dimension < 1) throw ParseError("dimension must be >= 1");
    if (j.contains("triplet"))
        cfg.triplet = triplet_from_json(cfg.field, cfg.dimension, j.at("triplet"));
    if (j.contains("measure"))
        cfg.measure = measure_from_json(cfg.field, cfg.dimension, j.at("measure"));
    if (j.contains("rate")) cfg.rate = detail::json_real(j, "rate");
    if (j.contains("samples")) cfg.samples = static_cast<int>(detail::json_int(j, "samples"));
    if (j.contains("t")) {
        const Json& jt = j.at("t");
        if (!jt.is_array()) throw ParseError("t must be an array of numbers");
        for (const Json& x : jt) {
            if (!x.is_number()) throw ParseError("t must be an array of numbers");
            cfg.t_values.push_back(x.get<double>());
        }
    }
    if (j.contains("m")) {
        const Json& jm = j.at("m");
        if (!jm.is_array()) throw ParseError("m must be an array of integers");
        for (const Json& x : jm) {
            if (!x.is_number_integer()) throw ParseError("m must be an array of integers");
            cfg.m_values.push_back(x.get<int>());
        }
    }
    if (j.contains("seed")) {
        const Json& js = j.at("seed");
        if (!js.is_number_unsigned() && !js.is_number_integer())
            throw ParseError("seed must be an integer");
        cfg.seed = js.get<std::uint64_t>();
    }
    if (j.contains("grid")) {
        const Json& jg = j.at("grid");
        if (!jg.is_object()) throw ParseError("grid must be a JSON object");
        if (jg.contains("points")) {
            const Json& jp = jg.at("points");
            if (!jp.is_array()) throw ParseError("grid points must be an array");
            for (const Json& pt : jp)
                cfg.grid.points.push_back(vector_from_json(cfg.field, pt));
        } else {
            cfg.grid.generated = true;
            cfg.grid.radius_log = static_cast<int>(detail::json_int(jg, "radius_log"));
            cfg.grid.depth = static_cast<int>(detail::json_int(jg, "depth"));
            if (cfg.grid.depth < 1) throw ParseError("grid depth must be >= 1");
        }
    }
    if (j.contains("out")) cfg.out = detail::json_string(j, "out");
    return cfg;
}

inline Json config_to_json(const RunConfig& cfg) {
    Json j;
    j["field"] = field_to_json(cfg.field);
    j["dimension"] = cfg.dimension;
    if (cfg.triplet) j["triplet"] = triplet_to_json(*cfg.triplet);
    if (cfg.measure) j["measure"] = measure_to_json(*cfg.measure);
    if (cfg.rate != 0.0) j["rate"] = cfg.rate;
    if (cfg.samples != 0) j["samples"] = cfg.samples;
    if (!cfg.t_values.empty()) j["t"] = cfg.t_values;
    if (!cfg.m_values.empty()) j["m"] = cfg.m_values;
    if (cfg.seed != 0) j["seed"] = cfg.seed;
    if (cfg.grid.generated)
        j["grid"] = Json{{"radius_log", cfg.grid.radius_log}, {"depth", cfg.grid.depth}};
    else if (!cfg.grid.points.empty()) {
        Json pts = Json::array();
        for (const auto& y : cfg.grid.points) pts.push_back(vector_to_json(y));
        j["grid"] = Json{{"points", std::move(pts)}};
    }
    if (!cfg.out.empty()) j["out"] = cfg.out;
    return j;
}

// Expands a generated grid into concrete points (digit odometer, lexicographic
// and therefore deterministic); explicit point lists pass through unchanged.
inline std::vector<PVector> materialize_grid(const RunConfig& cfg,
                                             long long cap = 200000) {
    if (!cfg.grid.generated) return cfg.grid.points;
    const FieldSpec& spec = cfg.field;
    int d = cfg.grid.depth;
    int n = cfg.dimension;
    long long per_coord = 1;
    for (int i = 0; i < d; ++i) {
        per_coord *= spec.p;
        if (per_coord > cap) throw InvalidParams("grid generator too large");
    }
    long long total = 1;
    for (int i = 0; i < n; ++i) {
        total *= per_coord;
        if (total > cap) throw InvalidParams("grid generator too large");
    }
    int pad = spec.precision + cfg.grid.radius_log;
    if (pad < d) throw PrecisionExhausted("grid digits exceed the precision window");
    std::vector<PVector> out;
    out.reserve(static_cast<size_t>(total));
    std::vector<long long> code(static_cast<size_t>(n), 0);
    for (long long idx = 0; idx < total; ++idx) {
        std::vector<PElement> coords;
        coords.reserve(static_cast<size_t>(n));
        for (int c = 0; c < n; ++c) {
            long long rem = code[static_cast<size_t>(c)];
            std::vector<int> digits(static_cast<size_t>(pad), 0);
            for (int k = 0; k < d; ++k) {
                digits[static_cast<size_t>(k)] = static_cast<int>(rem % spec.p);
                rem /= spec.p;
            }
            coords.push_back(
                PElement::from_window(spec, -cfg.grid.radius_log, std::move(digits)));
        }
        out.push_back(PVector(spec, std::move(coords)));
        for (int c = n - 1; c >= 0; --c) {
            if (++code[static_cast<size_t>(c)] < per_coord) break;
            code[static_cast<size_t>(c)] = 0;
        }
    }
    return out;
}

// Content hash of the canonical config serialization, for output provenance.
inline std::string config_hash(const RunConfig& cfg) {
    return hex64(fnv1a(config_to_json(cfg).dump()));
}

} // namespace padlev
