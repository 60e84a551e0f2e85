#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include "charfn.hpp"

namespace padlev {

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t& x) {
    x += 0x9e3779b97f4a7c15ull;
    std::uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

inline std::uint64_t rotl64(std::uint64_t v, int k) {
    return (v << k) | (v >> (64 - k));
}

} // namespace detail

// Deterministic pseudo-random stream: xoshiro256++ whose state is filled by a
// splitmix64 chain over (seed, stream id).  Equal seed, id and call order give
// bit-identical output on every platform.  Child streams mix a child id into
// the stream id, so independent substreams can be split off reproducibly.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed, std::uint64_t stream_id = 0)
        : seed_(seed), id_(stream_id) {
        std::uint64_t x = seed ^ (stream_id * 0x9e3779b97f4a7c15ull);
        for (auto& s : state_) s = detail::splitmix64(x);
        if ((state_[0] | state_[1] | state_[2] | state_[3]) == 0) state_[0] = 1;
    }

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream_id() const { return id_; }

    std::uint64_t next_u64() {
        std::uint64_t result = detail::rotl64(state_[0] + state_[3], 23) + state_[0];
        std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = detail::rotl64(state_[3], 45);
        return result;
    }

    // Uniform in [0, 1) with 53 random mantissa bits.
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform integer in [lo, hi], unbiased via rejection.
    long long uniform_int(long long lo, long long hi) {
        if (lo > hi) throw InvalidParams("uniform_int: empty range");
        std::uint64_t range = static_cast<std::uint64_t>(hi - lo) + 1;
        if (range == 0) return lo + static_cast<long long>(next_u64());
        std::uint64_t limit = (~std::uint64_t{0} / range) * range;
        std::uint64_t r;
        do {
            r = next_u64();
        } while (r >= limit);
        return lo + static_cast<long long>(r % range);
    }

    RngStream child(std::uint64_t child_id) const {
        std::uint64_t x = id_ ^ detail::rotl64(child_id + 0x632be59bd9b4e019ull, 17);
        return RngStream(seed_, detail::splitmix64(x));
    }

private:
    std::uint64_t seed_;
    std::uint64_t id_;
    std::uint64_t state_[4];
};

// Exact Poisson count by Knuth's product method, chunked so the running
// product never underflows for large means.
inline long long poisson_count(double mean, RngStream& rng) {
    if (!(mean >= 0.0) || !std::isfinite(mean))
        throw InvalidParams("poisson_count: mean must be finite and >= 0");
    long long total = 0;
    double rem = mean;
    auto knuth = [&rng](double m) {
        double limit = std::exp(-m);
        long long k = -1;
        double prod = 1.0;
        do {
            ++k;
            prod *= rng.uniform01();
        } while (prod > limit);
        return k;
    };
    while (rem > 500.0) {
        total += knuth(500.0);
        rem -= 500.0;
    }
    return total + knuth(rem);
}

// Exact Binomial(m, q) count by walking the inverse CDF from k = 0; expected
// work is O(m q).  Falls back to m Bernoulli draws if (1-q)^m underflows.
inline long long binomial_count(long long m, double q, RngStream& rng) {
    if (m < 0 || !(q >= 0.0) || !(q <= 1.0))
        throw InvalidParams("binomial_count: need m >= 0 and q in [0, 1]");
    if (m == 0 || q == 0.0) return 0;
    if (q == 1.0) return m;
    double prob = std::pow(1.0 - q, static_cast<double>(m));
    if (prob > 0.0) {
        double u = rng.uniform01();
        double cum = prob;
        long long k = 0;
        double ratio = q / (1.0 - q);
        while (u > cum && k < m) {
            prob *= ratio * static_cast<double>(m - k) / static_cast<double>(k + 1);
            ++k;
            cum += prob;
        }
        return k;
    }
    long long count = 0;
    for (long long i = 0; i < m; ++i) count += rng.uniform01() < q ? 1 : 0;
    return count;
}

// Uniform draw from a ball: every coordinate gets i.i.d. uniform digits at
// exponents from -radius_log up to the working precision, added to the center.
// Throws PrecisionExhausted when the precision window cannot hold the radius.
inline PVector sample_uniform_ball(const BallRegion& region, RngStream& rng) {
    if (region.inner_radius_log)
        throw InvalidParams("sample_uniform_ball: region must be a ball, not an annulus");
    const FieldSpec& spec = region.spec();
    int len = spec.precision + region.radius_log;
    if (len <= 0)
        throw PrecisionExhausted("sample_uniform_ball: radius below the precision window");
    std::vector<PElement> coords;
    coords.reserve(static_cast<size_t>(region.dim()));
    for (int i = 0; i < region.dim(); ++i) {
        std::vector<int> digits(static_cast<size_t>(len));
        for (auto& d : digits) d = static_cast<int>(rng.uniform_int(0, spec.p - 1));
        coords.push_back(region.center[i] +
                         PElement::from_window(spec, -region.radius_log, std::move(digits)));
    }
    return PVector(spec, std::move(coords));
}

// Draws from a normalized step measure: an atom or piece is chosen with
// probability equal to its mass, then the point is drawn from the piece's own
// law.  Weighted radial pieces pick a sphere first (geometric in the radius),
// then a uniform point on that sphere by rejection; plain pieces use uniform
// ball draws with rejection for annuli.  Construction precomputes the
// selection table, so bulk draws only pay for digits.
class StepSampler {
public:
    explicit StepSampler(StepMeasure m) : measure_(std::move(m)) {
        double total = to_double(measure_.total_mass());
        if (std::abs(total - 1.0) > 1e-12)
            throw NotNormalized("StepSampler: measure must have total mass 1");
        for (const auto& a : measure_.atoms()) push_weight(a.mass);
        for (const auto& pc : measure_.pieces()) push_weight(piece_mass(pc));
    }

    const StepMeasure& measure() const { return measure_; }

    PVector draw(RngStream& rng) const {
        double u = rng.uniform01() * cum_.back();
        size_t idx = static_cast<size_t>(
            std::upper_bound(cum_.begin(), cum_.end(), u) - cum_.begin());
        if (idx >= cum_.size()) idx = cum_.size() - 1;
        size_t n_atoms = measure_.atoms().size();
        if (idx < n_atoms) return measure_.atoms()[idx].point;
        return draw_piece(measure_.pieces()[idx - n_atoms], rng);
    }

private:
    void push_weight(double w) {
        cum_.push_back((cum_.empty() ? 0.0 : cum_.back()) + w);
    }

    double piece_mass(const Piece& pc) const {
        const BallRegion& r = pc.region;
        BigRational geom =
            r.center.is_zero()
                ? radial_mass(measure_.spec(), measure_.dim(), r.radius_log,
                              r.inner_radius_log, pc.radial_exponent)
                : haar_mass(r);
        return pc.density * to_double(geom);
    }

    PVector draw_piece(const Piece& pc, RngStream& rng) const {
        const BallRegion& r = pc.region;
        if (!r.center.is_zero() || pc.radial_exponent == 0) {
            BallRegion outer(r.center, r.radius_log);
            if (!r.inner_radius_log) return sample_uniform_ball(outer, rng);
            BigRational hole = pow_rational(measure_.spec().p, *r.inner_radius_log);
            for (int trial = 0; trial < 65536; ++trial) {
                PVector x = sample_uniform_ball(outer, rng);
                if ((x - r.center).norm() > hole) return x;
            }
            throw Error("StepSampler: annulus rejection did not terminate");
        }
        // Centered piece with a radial weight: P(sphere j) is proportional to
        // p^(j (e+n)), a geometric law in the level below the outer radius.
        const FieldSpec& spec = measure_.spec();
        long long q_exp = pc.radial_exponent + measure_.dim();
        int level;
        if (r.inner_radius_log) {
            int span = r.radius_log - *r.inner_radius_log;
            std::vector<double> w(static_cast<size_t>(span));
            double ratio = std::pow(static_cast<double>(spec.p),
                                    -static_cast<double>(q_exp));
            w[0] = 1.0;
            for (int l = 1; l < span; ++l) w[static_cast<size_t>(l)] = w[static_cast<size_t>(l - 1)] * ratio;
            double total = 0.0;
            for (double v : w) total += v;
            double u = rng.uniform01() * total;
            level = span - 1;
            for (int l = 0; l < span; ++l) {
                u -= w[static_cast<size_t>(l)];
                if (u <= 0.0) {
                    level = l;
                    break;
                }
            }
        } else {
            if (q_exp <= 0)
                throw DivergentMass("StepSampler: radial weight diverges toward 0");
            double lq = -static_cast<double>(q_exp) * std::log(static_cast<double>(spec.p));
            double u = 1.0 - rng.uniform01(); // in (0, 1]
            level = static_cast<int>(std::floor(std::log(u) / lq));
        }
        int j = r.radius_log - level;
        BigRational radius = pow_rational(spec.p, j);
        BallRegion sphere_ball(PVector::zero(spec, measure_.dim()), j);
        for (int trial = 0; trial < 65536; ++trial) {
            PVector x = sample_uniform_ball(sphere_ball, rng);
            if (x.norm() == radius) return x;
        }
        throw Error("StepSampler: sphere rejection did not terminate");
    }

    StepMeasure measure_;
    std::vector<double> cum_;
};

inline PVector sample_step_measure(const StepMeasure& m, RngStream& rng) {
    return StepSampler(m).draw(rng);
}

struct JumpEvent {
    double time;
    PVector jump;
};

// Piecewise-constant trajectory on [0, horizon] that starts at 0 and changes
// only at logged jump times.
class SamplePath {
public:
    SamplePath(const FieldSpec& spec, int n, double horizon)
        : horizon_(horizon), values_{PVector::zero(spec, n)} {
        if (!(horizon >= 0.0) || !std::isfinite(horizon))
            throw InvalidParams("SamplePath: horizon must be finite and >= 0");
    }

    void add_jump(double time, const PVector& jump) {
        if (!(time >= 0.0) || time > horizon_)
            throw InvalidParams("SamplePath: jump time outside [0, horizon]");
        if (!jumps_.empty() && time < jumps_.back().time)
            throw InvalidParams("SamplePath: jump times must be ascending");
        jumps_.push_back(JumpEvent{time, jump});
        values_.push_back(values_.back() + jump);
    }

    double horizon() const { return horizon_; }
    const std::vector<JumpEvent>& jumps() const { return jumps_; }

    // Ascending sample times: 0 followed by each jump time, aligned with
    // values().
    std::vector<double> times() const {
        std::vector<double> t{0.0};
        t.reserve(jumps_.size() + 1);
        for (const auto& j : jumps_) t.push_back(j.time);
        return t;
    }

    const std::vector<PVector>& values() const { return values_; }
    const PVector& initial_value() const { return values_.front(); }
    const PVector& final_value() const { return values_.back(); }

    const PVector& value_at(double t) const {
        if (!(t >= 0.0) || t > horizon_)
            throw InvalidParams("SamplePath: query time outside [0, horizon]");
        size_t i = 0;
        while (i < jumps_.size() && jumps_[i].time <= t) ++i;
        return values_[i];
    }

private:
    double horizon_ = 0.0;
    std::vector<JumpEvent> jumps_;
    std::vector<PVector> values_;
};

// Compound-Poisson path on [0, t]: the jump count is Poisson(w t), jump times
// are sorted uniforms (order statistics), jump sizes are i.i.d. draws from the
// normalized jump law.
inline SamplePath sample_compound_poisson(double w, const StepSampler& jumps, double t,
                                          RngStream& rng) {
    if (!(w > 0.0) || !std::isfinite(w))
        throw InvalidParams("sample_compound_poisson: rate must be finite and > 0");
    if (!(t >= 0.0) || !std::isfinite(t))
        throw InvalidParams("sample_compound_poisson: horizon must be finite and >= 0");
    SamplePath path(jumps.measure().spec(), jumps.measure().dim(), t);
    long long count = poisson_count(w * t, rng);
    std::vector<double> when(static_cast<size_t>(count));
    for (auto& s : when) s = t * rng.uniform01();
    std::sort(when.begin(), when.end());
    for (double s : when) path.add_jump(s, jumps.draw(rng));
    return path;
}

inline SamplePath sample_compound_poisson(double w, const StepMeasure& lam, double t,
                                          RngStream& rng) {
    return sample_compound_poisson(w, StepSampler(lam), t, rng);
}

struct EmpiricalCF {
    Complex estimate;
    int n_samples = 0;
    double std_error = 0.0; // 1/sqrt(n), the scale of the estimator's noise
};

inline EmpiricalCF empirical_charfn(const std::vector<PVector>& samples, const PVector& y) {
    if (samples.empty()) throw EmptySample("empirical_charfn: no samples");
    Complex acc{0.0, 0.0};
    for (const auto& x : samples) acc += char_value(y, x);
    double n = static_cast<double>(samples.size());
    return EmpiricalCF{acc / n, static_cast<int>(samples.size()), 1.0 / std::sqrt(n)};
}

struct IndependencePoint {
    PVector y1;
    PVector y2;
    Complex joint;
    Complex product;
    double gap = 0.0;
};

struct IndependenceReport {
    std::vector<IndependencePoint> points;
    double max_gap = 0.0;
    double threshold = 0.0;
    int n_samples = 0;
    bool pass = false;
};

// Compares the empirical joint characteristic function of a pair draw with the
// product of its empirical marginals on a grid of dual pairs.  Independent
// pairs should stay within a few standard errors; the threshold is 5/sqrt(n).
inline IndependenceReport independence_test(
    const std::function<std::pair<PVector, PVector>(RngStream&)>& draw_pair,
    const std::vector<std::pair<PVector, PVector>>& grid, int n, RngStream& rng) {
    if (n <= 0) throw EmptySample("independence_test: need at least one sample");
    if (grid.empty()) throw InvalidParams("independence_test: empty grid");
    std::vector<std::pair<PVector, PVector>> samples;
    samples.reserve(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) samples.push_back(draw_pair(rng));
    IndependenceReport rep;
    rep.n_samples = n;
    rep.threshold = 5.0 / std::sqrt(static_cast<double>(n));
    for (const auto& [y1, y2] : grid) {
        Complex joint{0.0, 0.0};
        Complex m1{0.0, 0.0};
        Complex m2{0.0, 0.0};
        for (const auto& [xi, eta] : samples) {
            TurnAngle a1 = char_angle(y1, xi);
            TurnAngle a2 = char_angle(y2, eta);
            joint += (a1 + a2).to_complex();
            m1 += a1.to_complex();
            m2 += a2.to_complex();
        }
        double dn = static_cast<double>(n);
        IndependencePoint pt{y1, y2, joint / dn, (m1 / dn) * (m2 / dn), 0.0};
        pt.gap = std::abs(pt.joint - pt.product);
        rep.max_gap = std::max(rep.max_gap, pt.gap);
        rep.points.push_back(std::move(pt));
    }
    rep.pass = rep.max_gap <= rep.threshold;
    return rep;
}

struct TriangularRow {
    int m = 0;
    double empirical_gap = 0.0; // sup over the grid, empirical row CF vs limit
    double analytic_gap = 0.0;  // same gap for the exact row CF ((1-q) + q lhat)^m
};

struct TriangularReport {
    std::vector<TriangularRow> rows;
    int n_samples = 0;
    double noise_band = 0.0; // 5/sqrt(n) sampling error on each empirical gap
};

// Row m sums m i.i.d. copies of a Bernoulli(w t / m)-thinned jump, so the row
// count is Binomial(m, w t / m) and the rows converge to the compound-Poisson
// law with exponent w t (lhat - 1).  The exact row CF differs from the limit
// by at most 2 (w t)^2 / m (a Le Cam style bound), so the analytic gap decays
// like C/m while the empirical gap adds O(1/sqrt(n)) noise on top.
inline TriangularReport triangular_array_experiment(
    double w, const StepMeasure& lam, double t, const std::vector<int>& m_list,
    const std::vector<PVector>& grid, int n, RngStream& rng) {
    if (!(w > 0.0) || !std::isfinite(w) || !(t > 0.0) || !std::isfinite(t))
        throw InvalidParams("triangular_array_experiment: need finite w > 0 and t > 0");
    if (grid.empty()) throw InvalidParams("triangular_array_experiment: empty grid");
    if (n <= 0) throw EmptySample("triangular_array_experiment: need samples");
    StepSampler jumps(lam);
    TriangularReport rep;
    rep.n_samples = n;
    rep.noise_band = 5.0 / std::sqrt(static_cast<double>(n));
    for (int m : m_list) {
        if (m <= 0) throw InvalidParams("triangular_array_experiment: rows need m >= 1");
        double q = w * t / static_cast<double>(m);
        if (q > 1.0)
            throw InvalidThinning("triangular_array_experiment: thinning probability above 1");
        std::vector<Complex> sums(grid.size(), Complex{0.0, 0.0});
        for (int i = 0; i < n; ++i) {
            long long count = binomial_count(m, q, rng);
            PVector x = PVector::zero(lam.spec(), lam.dim());
            for (long long c = 0; c < count; ++c) x = x + jumps.draw(rng);
            for (size_t g = 0; g < grid.size(); ++g) sums[g] += char_value(grid[g], x);
        }
        TriangularRow row;
        row.m = m;
        for (size_t g = 0; g < grid.size(); ++g) {
            Complex lhat = charfn_of_measure(lam, grid[g]);
            Complex limit = std::exp(w * t * (lhat - Complex{1.0, 0.0}));
            Complex row_cf{1.0, 0.0};
            Complex factor = Complex{1.0 - q, 0.0} + q * lhat;
            for (int c = 0; c < m; ++c) row_cf *= factor;
            row.empirical_gap =
                std::max(row.empirical_gap,
                         std::abs(sums[g] / static_cast<double>(n) - limit));
            row.analytic_gap = std::max(row.analytic_gap, std::abs(row_cf - limit));
        }
        rep.rows.push_back(row);
    }
    return rep;
}

struct BracketMomentReport {
    std::vector<double> times;
    std::vector<std::vector<double>> mean;      // [time][coordinate], fractional parts in [0,1)
    std::vector<std::vector<double>> mean_band; // 5 sd / sqrt(n) per entry
    std::vector<double> slope;                  // least-squares line through the origin
    double max_mean_residual = 0.0;
    bool linear_fit_ok = false;
    std::vector<std::vector<double>> cov;      // trace covariance over coordinates
    std::vector<std::vector<double>> cov_band;
    double b_hat = 0.0; // least-squares fit of cov(s, t) ~ b * min(s, t)
    double max_cov_residual = 0.0;
    bool cov_fit_ok = false;
    int n_samples = 0;
};

// Estimates the mean and covariance of the coordinatewise fractional parts of
// a pure-jump path on a time grid, then fits the affine model "mean = a t,
// cov = b min(s, t)".  Fractional parts are bounded, so for most jump laws the
// true mean curve saturates instead of growing linearly; the report flags fit
// quality rather than asserting it.
inline BracketMomentReport bracket_moments(
    const std::function<SamplePath(RngStream&)>& sampler,
    const std::vector<double>& times, int n, RngStream& rng) {
    if (times.empty()) throw InvalidParams("bracket_moments: empty time grid");
    for (size_t i = 0; i < times.size(); ++i) {
        if (!(times[i] >= 0.0) || !std::isfinite(times[i]))
            throw InvalidParams("bracket_moments: times must be finite and >= 0");
        if (i > 0 && times[i] <= times[i - 1])
            throw InvalidParams("bracket_moments: times must be strictly ascending");
    }
    if (n <= 0) throw EmptySample("bracket_moments: need samples");

    size_t nt = times.size();
    size_t dim = 0;
    std::vector<std::vector<double>> sum, sumsq;      // [time][coord]
    std::vector<std::vector<double>> psum, psumsq;    // [time][time] trace products
    psum.assign(nt, std::vector<double>(nt, 0.0));
    psumsq.assign(nt, std::vector<double>(nt, 0.0));
    std::vector<std::vector<double>> frac(nt);
    for (int rep = 0; rep < n; ++rep) {
        SamplePath path = sampler(rng);
        if (path.horizon() < times.back())
            throw InvalidParams("bracket_moments: path horizon below the last time");
        if (sum.empty()) {
            dim = static_cast<size_t>(path.initial_value().dim());
            sum.assign(nt, std::vector<double>(dim, 0.0));
            sumsq.assign(nt, std::vector<double>(dim, 0.0));
        }
        for (size_t i = 0; i < nt; ++i) {
            const PVector& v = path.value_at(times[i]);
            frac[i].assign(dim, 0.0);
            for (size_t c = 0; c < dim; ++c) {
                double f = to_double(v[static_cast<int>(c)].frac_part().turns());
                frac[i][c] = f;
                sum[i][c] += f;
                sumsq[i][c] += f * f;
            }
        }
        for (size_t i = 0; i < nt; ++i)
            for (size_t j = i; j < nt; ++j) {
                double tr = 0.0;
                for (size_t c = 0; c < dim; ++c) tr += frac[i][c] * frac[j][c];
                psum[i][j] += tr;
                psumsq[i][j] += tr * tr;
            }
    }

    BracketMomentReport out;
    out.times = times;
    out.n_samples = n;
    double dn = static_cast<double>(n);
    double root = std::sqrt(dn);
    out.mean.assign(nt, std::vector<double>(dim, 0.0));
    out.mean_band.assign(nt, std::vector<double>(dim, 0.0));
    for (size_t i = 0; i < nt; ++i)
        for (size_t c = 0; c < dim; ++c) {
            double m = sum[i][c] / dn;
            double var = std::max(0.0, sumsq[i][c] / dn - m * m);
            out.mean[i][c] = m;
            out.mean_band[i][c] = 5.0 * std::sqrt(var) / root;
        }

    out.slope.assign(dim, 0.0);
    double tt = 0.0;
    for (double t : times) tt += t * t;
    for (size_t c = 0; c < dim; ++c) {
        if (tt > 0.0) {
            double tm = 0.0;
            for (size_t i = 0; i < nt; ++i) tm += times[i] * out.mean[i][c];
            out.slope[c] = tm / tt;
        }
    }
    out.linear_fit_ok = true;
    for (size_t i = 0; i < nt; ++i)
        for (size_t c = 0; c < dim; ++c) {
            double resid = std::abs(out.mean[i][c] - out.slope[c] * times[i]);
            out.max_mean_residual = std::max(out.max_mean_residual, resid);
            if (resid > out.mean_band[i][c] + 1e-12) out.linear_fit_ok = false;
        }

    out.cov.assign(nt, std::vector<double>(nt, 0.0));
    out.cov_band.assign(nt, std::vector<double>(nt, 0.0));
    for (size_t i = 0; i < nt; ++i)
        for (size_t j = i; j < nt; ++j) {
            double pm = psum[i][j] / dn;
            double pvar = std::max(0.0, psumsq[i][j] / dn - pm * pm);
            double mm = 0.0;
            double cross = 0.0;
            for (size_t c = 0; c < dim; ++c) {
                mm += out.mean[i][c] * out.mean[j][c];
                cross += std::abs(out.mean[i][c]) * out.mean_band[j][c] +
                         std::abs(out.mean[j][c]) * out.mean_band[i][c];
            }
            out.cov[i][j] = out.cov[j][i] = pm - mm;
            out.cov_band[i][j] = out.cov_band[j][i] =
                5.0 * std::sqrt(pvar) / root + cross;
        }
    double mins = 0.0;
    double mincov = 0.0;
    for (size_t i = 0; i < nt; ++i)
        for (size_t j = 0; j < nt; ++j) {
            double mn = std::min(times[i], times[j]);
            mins += mn * mn;
            mincov += mn * out.cov[i][j];
        }
    if (mins > 0.0) out.b_hat = mincov / mins;
    out.cov_fit_ok = true;
    for (size_t i = 0; i < nt; ++i)
        for (size_t j = 0; j < nt; ++j) {
            double resid =
                std::abs(out.cov[i][j] - out.b_hat * std::min(times[i], times[j]));
            out.max_cov_residual = std::max(out.max_cov_residual, resid);
            if (resid > out.cov_band[i][j] + 1e-12) out.cov_fit_ok = false;
        }
    return out;
}

// Pearson goodness-of-fit statistic for observed counts against expected
// counts; compare with a chi-square quantile at cells - 1 degrees of freedom.
inline double chi_square_statistic(const std::vector<long long>& observed,
                                   const std::vector<double>& expected) {
    if (observed.size() != expected.size() || observed.empty())
        throw InvalidParams("chi_square_statistic: mismatched cell counts");
    double stat = 0.0;
    for (size_t i = 0; i < observed.size(); ++i) {
        if (!(expected[i] > 0.0))
            throw InvalidParams("chi_square_statistic: expected counts must be positive");
        double d = static_cast<double>(observed[i]) - expected[i];
        stat += d * d / expected[i];
    }
    return stat;
}

} // namespace padlev
