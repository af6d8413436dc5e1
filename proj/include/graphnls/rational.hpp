#pragma once

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <ostream>
#include <string>

#include "graphnls/errors.hpp"

namespace graphnls {

/// Exact rational number over int64 with normalized sign and gcd-reduced terms.
/// Edge lengths are stored as Rationals so commensurability is decidable.
class Rational {
public:
    Rational() : num_(0), den_(1) {}
    Rational(std::int64_t n) : num_(n), den_(1) {}
    Rational(std::int64_t n, std::int64_t d) : num_(n), den_(d) { normalize(); }

    std::int64_t num() const { return num_; }
    std::int64_t den() const { return den_; }

    double value() const { return static_cast<double>(num_) / static_cast<double>(den_); }

    bool is_positive() const { return num_ > 0; }
    bool is_zero() const { return num_ == 0; }

    Rational operator+(const Rational& o) const {
        return make_checked(i128(num_) * o.den_ + i128(o.num_) * den_, i128(den_) * o.den_);
    }
    Rational operator-(const Rational& o) const {
        return make_checked(i128(num_) * o.den_ - i128(o.num_) * den_, i128(den_) * o.den_);
    }
    Rational operator*(const Rational& o) const {
        return make_checked(i128(num_) * o.num_, i128(den_) * o.den_);
    }
    Rational operator/(const Rational& o) const {
        if (o.num_ == 0) throw Error(ErrorCode::BadParams, "division of rational by zero");
        return make_checked(i128(num_) * o.den_, i128(den_) * o.num_);
    }
    Rational operator-() const { return Rational(-num_, den_); }

    bool operator==(const Rational& o) const { return num_ == o.num_ && den_ == o.den_; }
    bool operator!=(const Rational& o) const { return !(*this == o); }
    bool operator<(const Rational& o) const { return i128(num_) * o.den_ < i128(o.num_) * den_; }
    bool operator<=(const Rational& o) const { return i128(num_) * o.den_ <= i128(o.num_) * den_; }
    bool operator>(const Rational& o) const { return o < *this; }
    bool operator>=(const Rational& o) const { return o <= *this; }

    /// gcd(a/b, c/d) = gcd(a*d, c*b) / (b*d).
    static Rational gcd(const Rational& a, const Rational& b) {
        if (a.is_zero()) return b;
        if (b.is_zero()) return a;
        i128 g = gcd128(abs128(i128(a.num_) * b.den_), abs128(i128(b.num_) * a.den_));
        return make_checked(g, i128(a.den_) * b.den_);
    }

    /// Exact quotient when divisible to an integer, -1 otherwise.
    std::int64_t integer_quotient(const Rational& unit) const {
        Rational q = *this / unit;
        if (q.den_ != 1 || q.num_ < 0) return -1;
        return q.num_;
    }

    std::string str() const {
        if (den_ == 1) return std::to_string(num_);
        return std::to_string(num_) + "/" + std::to_string(den_);
    }

    /// Parses "p/q" or a plain integer string.
    static Rational parse(const std::string& s) {
        auto slash = s.find('/');
        try {
            if (slash == std::string::npos) return Rational(parse_int(s));
            return Rational(parse_int(s.substr(0, slash)), parse_int(s.substr(slash + 1)));
        } catch (const Error&) {
            throw;
        } catch (const std::exception&) {
            throw Error(ErrorCode::ParseError, "not a rational: '" + s + "'");
        }
    }

    /// Nearest rational to x with |x - p/q| <= tol, via continued fractions.
    static Rational quantize(double x, double tol = 1e-9) {
        if (!(tol > 0)) throw Error(ErrorCode::BadParams, "quantize needs tol > 0");
        bool neg = x < 0;
        double y = neg ? -x : x;
        // continued fraction convergents
        std::int64_t p0 = 0, q0 = 1, p1 = 1, q1 = 0;
        double frac = y;
        for (int it = 0; it < 64; ++it) {
            double a_f = std::floor(frac);
            if (a_f > 9e17) break;
            std::int64_t a = static_cast<std::int64_t>(a_f);
            std::int64_t p2 = a * p1 + p0, q2 = a * q1 + q0;
            if (q2 <= 0) break;
            p0 = p1; q0 = q1; p1 = p2; q1 = q2;
            double approx = static_cast<double>(p1) / static_cast<double>(q1);
            if (std::abs(approx - y) <= tol) break;
            double rem = frac - a_f;
            if (rem < 1e-18) break;
            frac = 1.0 / rem;
        }
        Rational r(neg ? -p1 : p1, q1);
        if (std::abs(r.value() - x) > tol)
            throw Error(ErrorCode::BadParams, "cannot quantize " + std::to_string(x) + " within tolerance");
        return r;
    }

private:
    using i128 = __int128;

    static i128 abs128(i128 v) { return v < 0 ? -v : v; }

    static i128 gcd128(i128 a, i128 b) {
        while (b != 0) { i128 t = a % b; a = b; b = t; }
        return a;
    }

    static Rational make_checked(i128 n, i128 d) {
        if (d == 0) throw Error(ErrorCode::BadParams, "rational with zero denominator");
        if (d < 0) { n = -n; d = -d; }
        i128 g = gcd128(abs128(n), d);
        if (g > 1) { n /= g; d /= g; }
        constexpr i128 lim = INT64_MAX;
        if (n > lim || n < -lim || d > lim)
            throw Error(ErrorCode::BadParams, "rational arithmetic overflow");
        Rational r;
        r.num_ = static_cast<std::int64_t>(n);
        r.den_ = static_cast<std::int64_t>(d);
        return r;
    }

    static std::int64_t parse_int(const std::string& s) {
        if (s.empty()) throw Error(ErrorCode::ParseError, "empty rational component");
        std::size_t pos = 0;
        long long v = std::stoll(s, &pos);
        if (pos != s.size()) throw Error(ErrorCode::ParseError, "trailing characters in '" + s + "'");
        return v;
    }

    void normalize() {
        Rational r = make_checked(num_, den_);
        num_ = r.num_;
        den_ = r.den_;
    }

    std::int64_t num_;
    std::int64_t den_;
};

inline std::ostream& operator<<(std::ostream& os, const Rational& r) { return os << r.str(); }

} // namespace graphnls
