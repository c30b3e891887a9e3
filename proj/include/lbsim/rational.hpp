#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace lbsim {

/// Exact rational arithmetic on 128-bit integers. Big enough for the
/// binomial-ratio dispatch formulas up to N around 100 with small d; not a
/// general bignum.
class Rat {
public:
    using Int = __int128;

    constexpr Rat() : num_(0), den_(1) {}
    constexpr Rat(long long n) : num_(n), den_(1) {}
    Rat(long long n, long long d) : num_(n), den_(d) { normalize(); }

    static Rat raw(Int n, Int d) {
        Rat r;
        r.num_ = n;
        r.den_ = d;
        r.normalize();
        return r;
    }

    Int num() const { return num_; }
    Int den() const { return den_; }

    double to_double() const {
        return static_cast<double>(num_) / static_cast<double>(den_);
    }

    friend Rat operator+(const Rat& a, const Rat& b) {
        return raw(a.num_ * b.den_ + b.num_ * a.den_, a.den_ * b.den_);
    }
    friend Rat operator-(const Rat& a, const Rat& b) {
        return raw(a.num_ * b.den_ - b.num_ * a.den_, a.den_ * b.den_);
    }
    friend Rat operator*(const Rat& a, const Rat& b) {
        return raw(a.num_ * b.num_, a.den_ * b.den_);
    }
    friend Rat operator/(const Rat& a, const Rat& b) {
        if (b.num_ == 0) throw std::domain_error("Rat: division by zero");
        return raw(a.num_ * b.den_, a.den_ * b.num_);
    }
    Rat operator-() const { return raw(-num_, den_); }

    Rat& operator+=(const Rat& o) { return *this = *this + o; }
    Rat& operator-=(const Rat& o) { return *this = *this - o; }
    Rat& operator*=(const Rat& o) { return *this = *this * o; }
    Rat& operator/=(const Rat& o) { return *this = *this / o; }

    friend bool operator==(const Rat& a, const Rat& b) {
        return a.num_ == b.num_ && a.den_ == b.den_;
    }
    friend bool operator!=(const Rat& a, const Rat& b) { return !(a == b); }
    friend bool operator<(const Rat& a, const Rat& b) {
        return a.num_ * b.den_ < b.num_ * a.den_;
    }
    friend bool operator<=(const Rat& a, const Rat& b) { return !(b < a); }
    friend bool operator>(const Rat& a, const Rat& b) { return b < a; }
    friend bool operator>=(const Rat& a, const Rat& b) { return !(a < b); }

    std::string str() const {
        auto dec = [](Int v) {
            bool neg = v < 0;
            unsigned __int128 u = neg ? -static_cast<unsigned __int128>(v) : v;
            std::string s;
            do {
                s.insert(s.begin(), static_cast<char>('0' + static_cast<int>(u % 10)));
                u /= 10;
            } while (u != 0);
            if (neg) s.insert(s.begin(), '-');
            return s;
        };
        if (den_ == 1) return dec(num_);
        return dec(num_) + "/" + dec(den_);
    }

    // Best rational approximation of x with denominator <= max_den
    // (continued fractions). Used to lift config-file rates into exact form.
    static Rat approx(double x, long long max_den = 1'000'000) {
        bool neg = x < 0;
        if (neg) x = -x;
        long long p0 = 0, q0 = 1, p1 = 1, q1 = 0;
        double frac = x;
        for (int it = 0; it < 64; ++it) {
            long long a = static_cast<long long>(frac);
            long long p2 = a * p1 + p0;
            long long q2 = a * q1 + q0;
            if (q2 > max_den) break;
            p0 = p1; q0 = q1; p1 = p2; q1 = q2;
            double rem = frac - static_cast<double>(a);
            if (rem < 1e-15) break;
            frac = 1.0 / rem;
        }
        Rat r(neg ? -p1 : p1, q1 == 0 ? 1 : q1);
        return r;
    }

private:
    static Int gcd128(Int a, Int b) {
        if (a < 0) a = -a;
        if (b < 0) b = -b;
        while (b != 0) {
            Int t = a % b;
            a = b;
            b = t;
        }
        return a;
    }

    void normalize() {
        if (den_ == 0) throw std::domain_error("Rat: zero denominator");
        if (den_ < 0) {
            num_ = -num_;
            den_ = -den_;
        }
        Int g = gcd128(num_, den_);
        if (g > 1) {
            num_ /= g;
            den_ /= g;
        }
        if (num_ == 0) den_ = 1;
    }

    Int num_;
    Int den_;
};

// C(n, k) as an exact rational-friendly integer (0 when out of range).
inline Rat::Int binomial(int n, int k) {
    if (k < 0 || k > n) return 0;
    if (k > n - k) k = n - k;
    Rat::Int r = 1;
    for (int i = 1; i <= k; ++i) {
        r = r * (n - k + i) / i;
    }
    return r;
}

}  // namespace lbsim
