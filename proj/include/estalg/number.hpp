#pragma once

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <limits>
#include <numeric>
#include <sstream>
#include <string>

namespace estalg {

/// Scalar constant: an exact rational while possible, a double after any
/// transcendental contact or int64 overflow.  Rationals are kept normalized
/// (gcd 1, positive denominator).
class Number {
  public:
    Number() : exact_(true), num_(0), den_(1), val_(0.0) {}
    Number(std::int64_t n) : exact_(true), num_(n), den_(1), val_(double(n)) {}
    Number(int n) : Number(std::int64_t(n)) {}

    static Number rational(std::int64_t num, std::int64_t den) {
        Number r;
        if (den == 0) {
            return from_double(std::numeric_limits<double>::quiet_NaN());
        }
        if (den < 0) {
            num = -num;
            den = -den;
        }
        const std::int64_t g = std::gcd(num < 0 ? -num : num, den);
        if (g > 1) {
            num /= g;
            den /= g;
        }
        r.exact_ = true;
        r.num_ = num;
        r.den_ = den;
        r.val_ = double(num) / double(den);
        return r;
    }

    static Number from_double(double v) {
        Number r;
        r.exact_ = false;
        r.num_ = 0;
        r.den_ = 1;
        r.val_ = v;
        return r;
    }

    bool exact() const { return exact_; }
    std::int64_t num() const { return num_; }
    std::int64_t den() const { return den_; }
    double value() const { return val_; }

    bool is_zero() const { return exact_ ? num_ == 0 : val_ == 0.0; }
    bool is_one() const { return exact_ ? (num_ == 1 && den_ == 1) : val_ == 1.0; }
    bool is_integer() const { return exact_ && den_ == 1; }
    bool negative() const { return exact_ ? num_ < 0 : val_ < 0.0; }

    friend Number operator+(const Number& a, const Number& b) {
        if (a.exact_ && b.exact_) {
            __int128 n = (__int128)a.num_ * b.den_ + (__int128)b.num_ * a.den_;
            __int128 d = (__int128)a.den_ * b.den_;
            Number r;
            if (reduce_fits(n, d, r)) return r;
        }
        return from_double(a.val_ + b.val_);
    }

    friend Number operator-(const Number& a) {
        if (a.exact_) return rational(-a.num_, a.den_);
        return from_double(-a.val_);
    }

    friend Number operator-(const Number& a, const Number& b) { return a + (-b); }

    friend Number operator*(const Number& a, const Number& b) {
        if (a.exact_ && b.exact_) {
            __int128 n = (__int128)a.num_ * b.num_;
            __int128 d = (__int128)a.den_ * b.den_;
            Number r;
            if (reduce_fits(n, d, r)) return r;
        }
        return from_double(a.val_ * b.val_);
    }

    /// Reciprocal; exact zero maps to NaN (callers certify denominators).
    Number reciprocal() const {
        if (exact_ && num_ != 0) return rational(den_, num_);
        return from_double(1.0 / val_);
    }

    friend Number operator/(const Number& a, const Number& b) { return a * b.reciprocal(); }

    /// Integer power; negative exponents go through the reciprocal.
    Number pow_int(int e) const {
        if (e == 0) return Number(1);
        if (e < 0) return reciprocal().pow_int(-e);
        Number base = *this;
        Number acc(1);
        int k = e;
        while (k > 0) {
            if (k & 1) acc = acc * base;
            base = base * base;
            k >>= 1;
        }
        return acc;
    }

    /// Total order used for canonical sorting (exactness first, then value,
    /// then representation so distinct equal-valued forms stay distinct).
    friend int compare(const Number& a, const Number& b) {
        if (a.val_ < b.val_) return -1;
        if (a.val_ > b.val_) return 1;
        if (a.exact_ != b.exact_) return a.exact_ ? -1 : 1;
        if (a.exact_) {
            if (a.num_ != b.num_) return a.num_ < b.num_ ? -1 : 1;
            if (a.den_ != b.den_) return a.den_ < b.den_ ? -1 : 1;
        }
        return 0;
    }

    friend bool operator==(const Number& a, const Number& b) { return compare(a, b) == 0; }

    std::string str() const {
        std::ostringstream os;
        if (exact_) {
            os << num_;
            if (den_ != 1) os << "/" << den_;
        } else {
            os.precision(17);
            os << val_;
        }
        return os.str();
    }

  private:
    static bool reduce_fits(__int128 n, __int128 d, Number& out) {
        if (d < 0) {
            n = -n;
            d = -d;
        }
        __int128 an = n < 0 ? -n : n;
        __int128 g = gcd128(an, d);
        if (g > 1) {
            n /= g;
            d /= g;
        }
        const __int128 lim = std::numeric_limits<std::int64_t>::max();
        if (n > lim || n < -lim || d > lim) return false;
        out = rational(std::int64_t(n), std::int64_t(d));
        return true;
    }

    static __int128 gcd128(__int128 a, __int128 b) {
        while (b != 0) {
            __int128 t = a % b;
            a = b;
            b = t;
        }
        return a;
    }

    bool exact_;
    std::int64_t num_, den_;
    double val_;
};

}  // namespace estalg
