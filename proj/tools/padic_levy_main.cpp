#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include <padlev/verify.hpp>

namespace {

using namespace padlev;

std::string num(double v) {
    std::ostringstream out;
    out << std::setprecision(17) << v;
    return out.str();
}

// Flags shared by the subcommands; each one binds the subset it understands.
struct CliState {
    std::string config_path;
    std::string out_path;
    std::string suite = "all";
    std::uint64_t seed = 0;
    std::vector<double> t_values;
    std::vector<int> m_values;
    int grid_radius = 0;
    int grid_depth = 0;
    double inject_ball_skew = 0.0;

    bool seed_given = false;
    bool out_given = false;
    bool t_given = false;
    bool m_given = false;
    bool radius_given = false;
    bool depth_given = false;
};

RunConfig load_config(const CliState& st, bool required) {
    RunConfig cfg;
    if (st.config_path.empty()) {
        if (required) throw InvalidParams("this subcommand needs --config");
        cfg.field = make_field(2, FieldKind::CharZero);
    } else {
        std::ifstream in(st.config_path);
        if (!in) throw InvalidParams("cannot open config file " + st.config_path);
        Json j;
        try {
            in >> j;
        } catch (const std::exception& e) {
            throw ParseError("config is not valid JSON: " + std::string(e.what()));
        }
        cfg = config_from_json(j);
    }
    if (st.seed_given) cfg.seed = st.seed;
    if (st.out_given) cfg.out = st.out_path;
    if (st.t_given) cfg.t_values = st.t_values;
    if (st.m_given) cfg.m_values = st.m_values;
    if (st.radius_given != st.depth_given)
        throw InvalidParams("--grid-radius and --grid-depth must be given together");
    if (st.radius_given) {
        cfg.grid = GridSpec{};
        cfg.grid.generated = true;
        cfg.grid.radius_log = st.grid_radius;
        cfg.grid.depth = st.grid_depth;
        if (cfg.grid.depth < 1) throw InvalidParams("--grid-depth must be >= 1");
    }
    return cfg;
}

// Outputs are composed fully in memory and written in one shot, so a failure
// part way through a table never leaves a truncated file behind.
void emit(const RunConfig& cfg, const std::string& body) {
    if (cfg.out.empty()) {
        std::cout << body;
        return;
    }
    std::ofstream out(cfg.out, std::ios::binary | std::ios::trunc);
    if (!out) throw InvalidParams("cannot open output file " + cfg.out);
    out << body;
    out.flush();
    if (!out) throw Error("failed while writing " + cfg.out);
}

// The hash identifies the computation, so the output destination is excluded:
// the same run written to two different paths must report the same hash.
std::string run_hash(const RunConfig& cfg) {
    RunConfig keyed = cfg;
    keyed.out.clear();
    return config_hash(keyed);
}

std::string header_row(const RunConfig& cfg) {
    return "# config " + run_hash(cfg) + " seed " + std::to_string(cfg.seed) + "\n";
}

int cmd_eval(const CliState& st) {
    RunConfig cfg = load_config(st, true);
    if (!cfg.triplet) throw InvalidParams("eval needs a triplet in the config");
    std::vector<PVector> grid = materialize_grid(cfg);
    std::vector<double> ts = cfg.t_values.empty() ? std::vector<double>{1.0} : cfg.t_values;
    std::ostringstream csv;
    csv << header_row(cfg);
    csv << "t,y,re_psi,im_psi,abs_psi\n";
    for (double t : ts) {
        for (const auto& y : grid) {
            Complex v = psi(*cfg.triplet, t, y);
            csv << num(t) << ',' << vector_to_text(y) << ',' << num(v.real()) << ','
                << num(v.imag()) << ',' << num(std::abs(v)) << '\n';
        }
    }
    emit(cfg, csv.str());
    return 0;
}

int cmd_verify(const CliState& st) {
    RunConfig cfg = load_config(st, false);
    VerifyOptions opt;
    opt.ball_closed_form_skew = st.inject_ball_skew;
    std::vector<SuiteReport> reps = verify_suites(st.suite, cfg.seed, opt);
    Json report = reports_to_json(reps);
    report["config"] = run_hash(cfg);
    emit(cfg, report.dump(2) + "\n");
    return report.at("all_pass").get<bool>() ? 0 : 1;
}

int cmd_sample(const CliState& st) {
    RunConfig cfg = load_config(st, true);
    if (!cfg.measure) throw InvalidParams("sample needs a measure in the config");
    if (!(cfg.rate > 0.0)) throw InvalidParams("sample needs a rate > 0");
    int n_paths = cfg.samples > 0 ? cfg.samples : 1;
    double horizon = cfg.t_values.empty() ? 1.0 : cfg.t_values.front();
    StepSampler sampler(*cfg.measure);
    RngStream base(cfg.seed);
    std::ostringstream csv;
    csv << header_row(cfg);
    csv << "path,time,value\n";
    for (int i = 0; i < n_paths; ++i) {
        RngStream stream = base.child(static_cast<std::uint64_t>(i));
        SamplePath path = sample_compound_poisson(cfg.rate, sampler, horizon, stream);
        std::vector<double> times = path.times();
        for (size_t k = 0; k < times.size(); ++k)
            csv << i << ',' << num(times[k]) << ',' << vector_to_text(path.values()[k])
                << '\n';
    }
    emit(cfg, csv.str());
    return 0;
}

int cmd_limit(const CliState& st) {
    RunConfig cfg = load_config(st, true);
    if (!cfg.measure) throw InvalidParams("limit needs a measure in the config");
    if (!(cfg.rate > 0.0)) throw InvalidParams("limit needs a rate > 0");
    double t = cfg.t_values.empty() ? 1.0 : cfg.t_values.front();
    std::vector<int> ms =
        cfg.m_values.empty() ? std::vector<int>{1, 4, 16, 64, 256, 1024} : cfg.m_values;
    int n = cfg.samples > 0 ? cfg.samples : 20000;
    std::vector<PVector> grid = materialize_grid(cfg);
    if (grid.empty()) throw InvalidParams("limit needs a non-empty grid");
    RngStream rng(cfg.seed);
    TriangularReport rep = triangular_array_experiment(cfg.rate, *cfg.measure, t, ms,
                                                       grid, n, rng);
    std::ostringstream csv;
    csv << header_row(cfg);
    csv << "m,empirical_gap,analytic_gap,noise_band,within_noise\n";
    for (const TriangularRow& row : rep.rows)
        csv << row.m << ',' << num(row.empirical_gap) << ',' << num(row.analytic_gap)
            << ',' << num(rep.noise_band) << ','
            << (row.empirical_gap <= row.analytic_gap + rep.noise_band ? 1 : 0) << '\n';
    emit(cfg, csv.str());
    return 0;
}

int cmd_integrals(const CliState& st) {
    RunConfig cfg = load_config(st, false);
    std::ostringstream csv;
    csv << header_row(cfg);
    csv << "table,p,kind,n,param,ord,exact,closed,gap\n";
    for (int p : {2, 3, 5}) {
        for (FieldKind kind : {FieldKind::CharZero, FieldKind::CharP}) {
            FieldSpec spec = make_field(p, kind);
            for (int n = 1; n <= 2; ++n) {
                for (int k = -2; k <= 2; ++k) {
                    for (int ord = -3; ord <= 3; ++ord) {
                        std::vector<PElement> cs(static_cast<size_t>(n),
                                                 PElement::zero(spec));
                        cs[0] = PElement::one(spec).shifted(ord);
                        PVector s(spec, std::move(cs));
                        Complex exact = ball_character_integral(s, k);
                        double closed = to_double(ball_character_closed_form(s, k));
                        double gap = std::abs(exact - Complex{closed, 0.0});
                        csv << "ball_character," << p << ',' << field_kind_name(kind)
                            << ',' << n << ',' << k << ',' << ord << ','
                            << num(exact.real()) << ',' << num(closed) << ','
                            << num(gap) << '\n';
                    }
                }
            }
        }
    }
    for (int p : {2, 3}) {
        FieldSpec spec = make_field(p, FieldKind::CharZero);
        BallRegion unit(PVector::zero(spec, 1), 0);
        const double q = 1.0;
        StepMeasure weighted(spec, 1, {}, {Piece{unit, q, 2}});
        StepMeasure plain(spec, 1, {}, {Piece{unit, q, 0}});
        for (int m = 1; m <= 3; ++m) {
            PVector y(spec, {PElement::one(spec).shifted(-m)});
            auto [aw, bw] = unit_ball_haar_AB(q, y, UnitBallModel::WeightedHaar);
            auto [ap, bp] = unit_ball_haar_AB(q, y, UnitBallModel::PlainHaar);
            struct Row {
                const char* table;
                const char* variant;
                double exact;
                double closed;
            };
            Row rows[] = {{"unit_ball_A", "weighted", A_functional(weighted, y), aw},
                          {"unit_ball_B", "weighted", B_functional(weighted, y, y), bw},
                          {"unit_ball_A", "plain", A_functional(plain, y), ap},
                          {"unit_ball_B", "plain", B_functional(plain, y, y), bp}};
            for (const Row& r : rows)
                csv << r.table << ',' << p << ",qp,1," << r.variant << ',' << m << ','
                    << num(r.exact) << ',' << num(r.closed) << ','
                    << num(std::abs(r.exact - r.closed)) << '\n';
        }
    }
    emit(cfg, csv.str());
    return 0;
}

void apply_env_cap() {
    const char* cap = std::getenv("PADIC_LEVY_COSET_CAP");
    if (!cap || !*cap) return;
    char* end = nullptr;
    long long v = std::strtoll(cap, &end, 10);
    if (!end || *end != '\0')
        throw InvalidParams("PADIC_LEVY_COSET_CAP must be an integer, got \"" +
                            std::string(cap) + "\"");
    set_integration_cap(v);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"exact arithmetic, transforms and samplers for infinitely divisible "
                 "laws over p-adic and Laurent-series fields"};
    app.require_subcommand(1);

    CliState st;
    auto add_common = [&st](CLI::App* sub, bool with_grid) {
        sub->add_option("--config", st.config_path, "JSON run configuration");
        sub->add_option("--out", st.out_path, "output path (default stdout)")
            ->each([&st](const std::string&) { st.out_given = true; });
        sub->add_option("--seed", st.seed, "random seed override")
            ->each([&st](const std::string&) { st.seed_given = true; });
        sub->add_option("--t", st.t_values, "time points override")
            ->delimiter(',')
            ->each([&st](const std::string&) { st.t_given = true; });
        sub->add_option("--m", st.m_values, "row sizes override")
            ->delimiter(',')
            ->each([&st](const std::string&) { st.m_given = true; });
        if (with_grid) {
            sub->add_option("--grid-radius", st.grid_radius,
                            "generated grid: log-radius of |y|")
                ->each([&st](const std::string&) { st.radius_given = true; });
            sub->add_option("--grid-depth", st.grid_depth,
                            "generated grid: digits per coordinate")
                ->each([&st](const std::string&) { st.depth_given = true; });
        }
    };

    CLI::App* eval = app.add_subcommand("eval", "tabulate the characteristic functional");
    add_common(eval, true);
    CLI::App* verify = app.add_subcommand("verify", "run invariant suites");
    add_common(verify, false);
    verify->add_option("--suite", st.suite, "field, measure, charfn, process or all");
    verify
        ->add_option("--inject-ball-skew", st.inject_ball_skew,
                     "corrupt the ball transform reference by this amount")
        ->group(""); // fault-injection hook for the test fixtures, hidden from help
    CLI::App* sample = app.add_subcommand("sample", "draw compound-Poisson paths");
    add_common(sample, false);
    CLI::App* limit = app.add_subcommand("limit", "triangular-array convergence table");
    add_common(limit, true);
    CLI::App* integrals = app.add_subcommand("integrals",
                                             "ball transform and unit-ball tables");
    add_common(integrals, false);

    CLI11_PARSE(app, argc, argv);

    try {
        apply_env_cap();
        if (app.got_subcommand(eval)) return cmd_eval(st);
        if (app.got_subcommand(verify)) return cmd_verify(st);
        if (app.got_subcommand(sample)) return cmd_sample(st);
        if (app.got_subcommand(limit)) return cmd_limit(st);
        if (app.got_subcommand(integrals)) return cmd_integrals(st);
        return 2;
    } catch (const padlev::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    }
}
