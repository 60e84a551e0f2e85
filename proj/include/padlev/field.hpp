#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <numeric>
#include <vector>

#include "errors.hpp"
#include "numeric.hpp"

namespace padlev {

// Two local fields per prime p: the p-adic numbers (digit carries, char 0)
// and formal Laurent series over F_p (carry-free digits, char p).
enum class FieldKind { CharZero, CharP };

struct FieldSpec {
    int p = 2;
    FieldKind kind = FieldKind::CharZero;
    int precision = 32; // default absolute precision window for new elements

    bool compatible(const FieldSpec& o) const { return p == o.p && kind == o.kind; }

    bool operator==(const FieldSpec& o) const {
        return p == o.p && kind == o.kind && precision == o.precision;
    }
};

inline bool is_prime(int p) {
    if (p < 2) return false;
    for (int d = 2; d * d <= p; ++d)
        if (p % d == 0) return false;
    return true;
}

inline FieldSpec make_field(int p, FieldKind kind, int precision = 32) {
    if (!is_prime(p)) throw InvalidParams("field: p must be prime");
    if (precision < 1) throw InvalidParams("field: precision must be >= 1");
    return FieldSpec{p, kind, precision};
}

inline void require_compatible(const FieldSpec& a, const FieldSpec& b) {
    if (!a.compatible(b)) throw FieldMismatch("operands from different fields");
}

// Angle a/p^m of a full turn, kept exact until conversion to complex.
// Invariant: 0 <= num < p^m and p does not divide num unless num = 0, m = 0.
class TurnAngle {
public:
    TurnAngle() : p_(2), num_(0), m_(0) {}

    TurnAngle(int p, BigInt num, int m) : p_(p) {
        if (m < 0) throw InvalidParams("TurnAngle: negative exponent");
        BigInt den = pow_big(p, m);
        num %= den;
        if (num < 0) num += den;
        while (m > 0 && num % p == 0) {
            num /= p;
            den /= p;
            --m;
        }
        if (num == 0) m = 0;
        num_ = num;
        m_ = m;
    }

    int p() const { return p_; }
    const BigInt& numerator() const { return num_; }
    int exponent() const { return m_; }
    bool is_zero() const { return num_ == 0; }

    BigRational turns() const { return BigRational(num_, pow_big(p_, m_)); }
    double radians() const { return kTwoPi * to_double(turns()); }

    TurnAngle operator+(const TurnAngle& o) const {
        check(o);
        int e = std::max(m_, o.m_);
        BigInt n = num_ * pow_big(p_, e - m_) + o.num_ * pow_big(p_, e - o.m_);
        return TurnAngle(p_, n, e);
    }

    TurnAngle operator-() const { return TurnAngle(p_, -num_, m_); }

    TurnAngle operator-(const TurnAngle& o) const { return *this + (-o); }

    TurnAngle scaled(const BigInt& k) const { return TurnAngle(p_, num_ * k, m_); }

    Complex to_complex() const {
        if (num_ == 0) return {1.0, 0.0};
        if (m_ == 1 && p_ == 2) return {-1.0, 0.0};
        if (m_ == 2 && p_ == 2) return num_ == 1 ? Complex{0.0, 1.0} : Complex{0.0, -1.0};
        double t = radians();
        return {std::cos(t), std::sin(t)};
    }

    bool operator==(const TurnAngle& o) const {
        return p_ == o.p_ && m_ == o.m_ && num_ == o.num_;
    }
    bool operator!=(const TurnAngle& o) const { return !(*this == o); }
    bool operator<(const TurnAngle& o) const {
        if (m_ != o.m_) return m_ < o.m_;
        return num_ < o.num_;
    }

private:
    void check(const TurnAngle& o) const {
        if (p_ != o.p_) throw FieldMismatch("TurnAngle: different p");
    }

    int p_;
    BigInt num_;
    int m_;
};

// Element of Q_p or F_p((theta)) known modulo p^prec (theta^prec).
// digits[i] is the digit at exponent val + i; leading digit nonzero.
// Zero is the sentinel valuation with no digits; prec still applies.
class PElement {
public:
    static constexpr int kInfOrd = std::numeric_limits<int>::max();

    PElement() : spec_{}, val_(kInfOrd), prec_(32) {}

    static PElement zero(const FieldSpec& spec, int prec) {
        PElement e;
        e.spec_ = spec;
        e.val_ = kInfOrd;
        e.prec_ = prec;
        return e;
    }

    static PElement zero(const FieldSpec& spec) { return zero(spec, spec.precision); }

    static PElement from_digits(const FieldSpec& spec, int val, std::vector<int> digits,
                                int prec) {
        for (int d : digits)
            if (d < 0 || d >= spec.p) throw InvalidParams("digit out of range");
        if (val + static_cast<int>(digits.size()) != prec && !digits.empty())
            throw InvalidParams("digit window does not match precision");
        size_t lead = 0;
        while (lead < digits.size() && digits[lead] == 0) ++lead;
        if (lead == digits.size()) return zero(spec, prec);
        PElement e;
        e.spec_ = spec;
        e.val_ = val + static_cast<int>(lead);
        e.digits_.assign(digits.begin() + static_cast<long>(lead), digits.end());
        e.prec_ = prec;
        return e;
    }

    // Digit window starting at val, precision implied by the window size.
    static PElement from_window(const FieldSpec& spec, int val, std::vector<int> digits) {
        int prec = val + static_cast<int>(digits.size());
        return from_digits(spec, val, std::move(digits), prec);
    }

    static PElement from_integer(const FieldSpec& spec, long long k) {
        return from_integer(spec, k, spec.precision);
    }

    static PElement from_integer(const FieldSpec& spec, long long k, int prec) {
        if (spec.kind == FieldKind::CharP) {
            long long r = k % spec.p;
            if (r < 0) r += spec.p;
            if (r == 0) return zero(spec, prec);
            if (prec < 1) throw PrecisionExhausted("from_integer: window excludes digit 0");
            std::vector<int> d(static_cast<size_t>(prec), 0);
            d[0] = static_cast<int>(r);
            return from_digits(spec, 0, std::move(d), prec);
        }
        bool neg = k < 0;
        unsigned long long a = neg ? static_cast<unsigned long long>(-(k + 1)) + 1ull
                                   : static_cast<unsigned long long>(k);
        if (a == 0) return zero(spec, prec);
        std::vector<int> d;
        int v = 0;
        while (a % static_cast<unsigned>(spec.p) == 0) {
            a /= static_cast<unsigned>(spec.p);
            ++v;
        }
        while (a > 0 && v + static_cast<int>(d.size()) < prec) {
            d.push_back(static_cast<int>(a % static_cast<unsigned>(spec.p)));
            a /= static_cast<unsigned>(spec.p);
        }
        while (v + static_cast<int>(d.size()) < prec) d.push_back(0);
        PElement e = from_digits(spec, v, std::move(d), prec);
        return neg ? -e : e;
    }

    static PElement from_rational(const FieldSpec& spec, long long num, long long den) {
        if (den == 0) throw DivisionByZero("from_rational: zero denominator");
        PElement n = from_integer(spec, num);
        PElement d = from_integer(spec, den);
        return n * d.inverse();
    }

    static PElement one(const FieldSpec& spec) { return from_integer(spec, 1); }

    const FieldSpec& spec() const { return spec_; }
    bool is_zero() const { return val_ == kInfOrd; }
    int valuation() const { return val_; } // kInfOrd for zero
    int precision() const { return prec_; }
    const std::vector<int>& digits() const { return digits_; }

    // Digit at an absolute exponent; 0 below the valuation, throws above the window.
    int digit_at(int e) const {
        if (e >= prec_) throw PrecisionExhausted("digit beyond precision window");
        if (is_zero() || e < val_) return 0;
        return digits_[static_cast<size_t>(e - val_)];
    }

    BigRational norm() const {
        if (is_zero()) return BigRational(0);
        return pow_rational(spec_.p, -val_);
    }

    PElement operator+(const PElement& o) const {
        require_compatible(spec_, o.spec_);
        int prec = std::min(prec_, o.prec_);
        if (is_zero() && o.is_zero()) return zero(spec_, prec);
        int lo = std::min(is_zero() ? o.val_ : val_, o.is_zero() ? val_ : o.val_);
        if (lo >= prec) return zero(spec_, prec);
        std::vector<int> out(static_cast<size_t>(prec - lo), 0);
        if (spec_.kind == FieldKind::CharZero) {
            int carry = 0;
            for (int e = lo; e < prec; ++e) {
                int s = digit_at(e) + o.digit_at(e) + carry;
                out[static_cast<size_t>(e - lo)] = s % spec_.p;
                carry = s / spec_.p;
            }
        } else {
            for (int e = lo; e < prec; ++e)
                out[static_cast<size_t>(e - lo)] = (digit_at(e) + o.digit_at(e)) % spec_.p;
        }
        return from_digits(spec_, lo, std::move(out), prec);
    }

    PElement operator-() const {
        if (is_zero()) return *this;
        std::vector<int> out(digits_.size());
        if (spec_.kind == FieldKind::CharZero) {
            out[0] = spec_.p - digits_[0];
            for (size_t i = 1; i < digits_.size(); ++i) out[i] = spec_.p - 1 - digits_[i];
        } else {
            for (size_t i = 0; i < digits_.size(); ++i)
                out[i] = (spec_.p - digits_[i]) % spec_.p;
        }
        return from_digits(spec_, val_, std::move(out), prec_);
    }

    PElement operator-(const PElement& o) const { return *this + (-o); }

    PElement operator*(const PElement& o) const {
        require_compatible(spec_, o.spec_);
        if (is_zero() || o.is_zero()) {
            int prec;
            if (is_zero() && o.is_zero()) prec = prec_ + o.prec_;
            else if (is_zero()) prec = prec_ + o.val_;
            else prec = o.prec_ + val_;
            return zero(spec_, prec);
        }
        int rel = std::min(prec_ - val_, o.prec_ - o.val_);
        std::vector<int> out =
            mul_windows(digits_, o.digits_, static_cast<size_t>(rel), spec_);
        return from_digits(spec_, val_ + o.val_, std::move(out), val_ + o.val_ + rel);
    }

    PElement inverse() const {
        if (is_zero()) throw DivisionByZero("inverse of zero");
        size_t rel = digits_.size();
        std::vector<int> z(rel, 0);
        z[0] = mod_inverse(digits_[0], spec_.p);
        size_t len = 1;
        while (len < rel) {
            size_t len2 = std::min(2 * len, rel);
            // z <- z * (2 - u z), doubling the trusted window each pass
            std::vector<int> t = mul_windows(digits_, z, len2, spec_);
            std::vector<int> w(len2, 0);
            if (spec_.kind == FieldKind::CharZero) {
                // u z = 1 mod p keeps t[0] = 1, so 2 - t never overflows a digit
                int borrow = 0;
                for (size_t i = 0; i < len2; ++i) {
                    int c = (i == 0 ? 2 : 0) - t[i] - borrow;
                    borrow = 0;
                    if (c < 0) {
                        c += spec_.p;
                        borrow = 1;
                    }
                    w[i] = c;
                }
            } else {
                for (size_t i = 0; i < len2; ++i) {
                    int c = ((i == 0 ? 2 : 0) - t[i]) % spec_.p;
                    if (c < 0) c += spec_.p;
                    w[i] = c;
                }
            }
            z = mul_windows(z, w, len2, spec_);
            len = len2;
        }
        return from_digits(spec_, -val_, std::move(z),
                           -val_ + static_cast<int>(rel));
    }

    PElement operator/(const PElement& o) const { return *this * o.inverse(); }

    // Exact multiplication by p^k (theta^k).
    PElement shifted(int k) const {
        if (is_zero()) return zero(spec_, prec_ + k);
        PElement e = *this;
        e.val_ += k;
        e.prec_ += k;
        return e;
    }

    // Forget digits at or above new_prec.
    PElement truncated(int new_prec) const {
        if (new_prec >= prec_) {
            if (new_prec == prec_) return *this;
            throw PrecisionExhausted("cannot raise precision");
        }
        if (is_zero() || val_ >= new_prec) return zero(spec_, new_prec);
        std::vector<int> d(digits_.begin(),
                           digits_.begin() + static_cast<long>(new_prec - val_));
        return from_digits(spec_, val_, std::move(d), new_prec);
    }

    // Fractional part as a turn fraction in [0,1).
    // Char 0 reads every digit below exponent 0; char p reads digit -1 only.
    TurnAngle frac_part() const {
        if (prec_ < 0)
            throw PrecisionExhausted("frac_part: window ends below exponent 0");
        if (is_zero() || val_ >= 0) return TurnAngle(spec_.p, 0, 0);
        if (spec_.kind == FieldKind::CharP)
            return TurnAngle(spec_.p, digit_at(-1), 1);
        int m = -val_;
        BigInt num = 0;
        for (int e = -1; e >= val_; --e) num = num * spec_.p + digit_at(e);
        return TurnAngle(spec_.p, num, m);
    }

    bool operator==(const PElement& o) const {
        return spec_ == o.spec_ && val_ == o.val_ && prec_ == o.prec_ &&
               digits_ == o.digits_;
    }
    bool operator!=(const PElement& o) const { return !(*this == o); }

private:
    static int mod_inverse(int a, int p) {
        int t = 0, nt = 1, r = p, nr = a % p;
        while (nr != 0) {
            int q = r / nr;
            int tmp = t - q * nt;
            t = nt;
            nt = tmp;
            tmp = r - q * nr;
            r = nr;
            nr = tmp;
        }
        if (r != 1) throw DivisionByZero("digit not invertible");
        return t < 0 ? t + p : t;
    }

    // Product of two relative digit windows, truncated to len digits.
    static std::vector<int> mul_windows(const std::vector<int>& a,
                                        const std::vector<int>& b, size_t len,
                                        const FieldSpec& spec) {
        std::vector<long long> acc(len, 0);
        for (size_t i = 0; i < a.size() && i < len; ++i) {
            if (a[i] == 0) continue;
            size_t jmax = std::min(b.size(), len - i);
            for (size_t j = 0; j < jmax; ++j) acc[i + j] += 1ll * a[i] * b[j];
        }
        std::vector<int> out(len);
        if (spec.kind == FieldKind::CharZero) {
            long long carry = 0;
            for (size_t i = 0; i < len; ++i) {
                long long s = acc[i] + carry;
                out[i] = static_cast<int>(s % spec.p);
                carry = s / spec.p;
            }
        } else {
            for (size_t i = 0; i < len; ++i)
                out[i] = static_cast<int>(acc[i] % spec.p);
        }
        return out;
    }

    FieldSpec spec_;
    int val_;
    std::vector<int> digits_;
    int prec_;
};

// Point of K^n with a shared field.
class PVector {
public:
    PVector() = default;

    PVector(FieldSpec spec, std::vector<PElement> coords)
        : spec_(spec), coords_(std::move(coords)) {
        if (coords_.empty()) throw DimensionMismatch("PVector: dimension 0");
        for (const auto& c : coords_) require_compatible(spec_, c.spec());
    }

    static PVector zero(const FieldSpec& spec, int n) {
        return PVector(spec, std::vector<PElement>(static_cast<size_t>(n),
                                                   PElement::zero(spec)));
    }

    const FieldSpec& spec() const { return spec_; }
    int dim() const { return static_cast<int>(coords_.size()); }
    const PElement& operator[](int i) const { return coords_[static_cast<size_t>(i)]; }
    const std::vector<PElement>& coords() const { return coords_; }

    bool is_zero() const {
        return std::all_of(coords_.begin(), coords_.end(),
                           [](const PElement& c) { return c.is_zero(); });
    }

    // Max norm; exact rational.
    BigRational norm() const {
        BigRational best(0);
        for (const auto& c : coords_) best = std::max(best, c.norm());
        return best;
    }

    // min coordinate valuation, kInfOrd when zero; norm = p^(-min_ord).
    int min_ord() const {
        int m = PElement::kInfOrd;
        for (const auto& c : coords_)
            if (!c.is_zero()) m = std::min(m, c.valuation());
        return m;
    }

    PVector operator+(const PVector& o) const {
        check_dim(o);
        std::vector<PElement> out;
        out.reserve(coords_.size());
        for (size_t i = 0; i < coords_.size(); ++i) out.push_back(coords_[i] + o.coords_[i]);
        return PVector(spec_, std::move(out));
    }

    PVector operator-() const {
        std::vector<PElement> out;
        out.reserve(coords_.size());
        for (const auto& c : coords_) out.push_back(-c);
        return PVector(spec_, std::move(out));
    }

    PVector operator-(const PVector& o) const { return *this + (-o); }

    PVector scaled(const PElement& b) const {
        std::vector<PElement> out;
        out.reserve(coords_.size());
        for (const auto& c : coords_) out.push_back(c * b);
        return PVector(spec_, std::move(out));
    }

    bool operator==(const PVector& o) const {
        return spec_ == o.spec_ && coords_ == o.coords_;
    }
    bool operator!=(const PVector& o) const { return !(*this == o); }

private:
    void check_dim(const PVector& o) const {
        require_compatible(spec_, o.spec_);
        if (coords_.size() != o.coords_.size())
            throw DimensionMismatch("PVector: dimension mismatch");
    }

    FieldSpec spec_;
    std::vector<PElement> coords_;
};

inline PElement pairing(const PVector& a, const PVector& b) {
    if (a.dim() != b.dim()) throw DimensionMismatch("pairing: dimension mismatch");
    PElement acc = a[0] * b[0];
    for (int i = 1; i < a.dim(); ++i) acc = acc + a[i] * b[i];
    return acc;
}

// Angle of the additive character chi_s at z: the turn fraction of [(s,z)].
inline TurnAngle char_angle(const PVector& s, const PVector& z) {
    return pairing(s, z).frac_part();
}

inline Complex char_value(const PVector& s, const PVector& z) {
    return char_angle(s, z).to_complex();
}

// Radian brackets <y_j> per coordinate, for the real drift/diffusion forms.
inline std::vector<double> bracket_vector(const PVector& y) {
    std::vector<double> out;
    out.reserve(static_cast<size_t>(y.dim()));
    for (int i = 0; i < y.dim(); ++i) out.push_back(y[i].frac_part().radians());
    return out;
}

} // namespace padlev
