#pragma once

#include <cstdint>
#include <string>

namespace kglab {

// Exact rational with 64-bit parts, always reduced, denominator positive.
// Arithmetic throws invalid_argument on overflow.
class Rational {
public:
    Rational() = default;
    Rational(std::int64_t n, std::int64_t d = 1);

    // Accepts "p/q", integers and finite decimals such as "0.01" or "-1.25".
    static Rational parse(const std::string& s);

    std::int64_t num() const { return n_; }
    std::int64_t den() const { return d_; }
    double to_double() const { return double(n_) / double(d_); }
    std::string str() const;

    friend Rational operator+(const Rational& a, const Rational& b);
    friend Rational operator-(const Rational& a, const Rational& b);
    friend Rational operator*(const Rational& a, const Rational& b);
    friend Rational operator/(const Rational& a, const Rational& b);
    Rational operator-() const { return Rational(-n_, d_); }

    friend bool operator==(const Rational& a, const Rational& b) { return a.n_ == b.n_ && a.d_ == b.d_; }
    friend bool operator<(const Rational& a, const Rational& b);
    friend bool operator<=(const Rational& a, const Rational& b) { return !(b < a); }
    friend bool operator>(const Rational& a, const Rational& b) { return b < a; }
    friend bool operator>=(const Rational& a, const Rational& b) { return !(a < b); }

private:
    std::int64_t n_ = 0;
    std::int64_t d_ = 1;
};

Rational max(const Rational& a, const Rational& b);

} // namespace kglab
