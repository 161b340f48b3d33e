#pragma once

#include <cmath>
#include <compare>
#include <cstdint>
#include <numeric>
#include <string>

#include "svcflow/errors.hpp"

namespace svcflow {

// Exact rational arithmetic for link rates and segment sizes (kbps / kbits).
// Rate equality tests in the flow decomposition are exact, so rates are kept
// rational end to end and only converted to double inside the LP solver.
class Rational {
public:
    constexpr Rational() : num_(0), den_(1) {}
    constexpr Rational(std::int64_t n) : num_(n), den_(1) {}
    Rational(std::int64_t n, std::int64_t d) : num_(n), den_(d) { normalize(); }

    // Snaps a floating-point kbps value to a 1 bps grid (1/1000 kbps).
    static Rational from_kbps(double kbps) {
        if (!std::isfinite(kbps)) fail(ErrorKind::Numerical, "non-finite rate");
        return Rational(static_cast<std::int64_t>(std::llround(kbps * 1000.0)), 1000);
    }

    std::int64_t num() const { return num_; }
    std::int64_t den() const { return den_; }

    double to_double() const { return static_cast<double>(num_) / static_cast<double>(den_); }

    bool is_zero() const { return num_ == 0; }
    bool is_negative() const { return num_ < 0; }
    bool is_integer() const { return den_ == 1; }

    Rational operator-() const { return make_raw(-num_, den_); }

    Rational operator+(const Rational& o) const {
        __int128 n = i128(num_) * o.den_ + i128(o.num_) * den_;
        __int128 d = i128(den_) * o.den_;
        return from_i128(n, d);
    }
    Rational operator-(const Rational& o) const { return *this + (-o); }
    Rational operator*(const Rational& o) const {
        return from_i128(i128(num_) * o.num_, i128(den_) * o.den_);
    }
    Rational operator/(const Rational& o) const {
        if (o.num_ == 0) fail(ErrorKind::Numerical, "rational division by zero");
        __int128 n = i128(num_) * o.den_;
        __int128 d = i128(den_) * o.num_;
        if (d < 0) { n = -n; d = -d; }
        return from_i128(n, d);
    }

    Rational& operator+=(const Rational& o) { return *this = *this + o; }
    Rational& operator-=(const Rational& o) { return *this = *this - o; }
    Rational& operator*=(const Rational& o) { return *this = *this * o; }
    Rational& operator/=(const Rational& o) { return *this = *this / o; }

    bool operator==(const Rational& o) const { return num_ == o.num_ && den_ == o.den_; }
    bool operator!=(const Rational& o) const { return !(*this == o); }
    std::strong_ordering operator<=>(const Rational& o) const {
        __int128 lhs = i128(num_) * o.den_;
        __int128 rhs = i128(o.num_) * den_;
        if (lhs < rhs) return std::strong_ordering::less;
        if (lhs > rhs) return std::strong_ordering::greater;
        return std::strong_ordering::equal;
    }

    std::string str() const {
        if (den_ == 1) return std::to_string(num_);
        return std::to_string(num_) + "/" + std::to_string(den_);
    }

private:
    static __int128 i128(std::int64_t v) { return static_cast<__int128>(v); }

    static Rational from_i128(__int128 n, __int128 d) {
        if (d == 0) fail(ErrorKind::Numerical, "rational with zero denominator");
        if (d < 0) { n = -n; d = -d; }
        __int128 a = n < 0 ? -n : n;
        __int128 g = gcd128(a, d);
        if (g > 1) { n /= g; d /= g; }
        if (n > INT64_MAX || n < INT64_MIN || d > INT64_MAX)
            fail(ErrorKind::Numerical, "rational overflow");
        Rational r;
        r.num_ = static_cast<std::int64_t>(n);
        r.den_ = static_cast<std::int64_t>(d);
        return r;
    }

    static __int128 gcd128(__int128 a, __int128 b) {
        while (b != 0) { __int128 t = a % b; a = b; b = t; }
        return a < 0 ? -a : a;
    }

    static Rational make_raw(std::int64_t n, std::int64_t d) {
        Rational r;
        r.num_ = n;
        r.den_ = d;
        return r;
    }

    void normalize() {
        if (den_ == 0) fail(ErrorKind::Numerical, "rational with zero denominator");
        if (den_ < 0) { num_ = -num_; den_ = -den_; }
        std::int64_t g = std::gcd(num_ < 0 ? -num_ : num_, den_);
        if (g > 1) { num_ /= g; den_ /= g; }
    }

    std::int64_t num_;
    std::int64_t den_;
};

inline Rational operator*(std::int64_t a, const Rational& b) { return Rational(a) * b; }

}  // namespace svcflow
