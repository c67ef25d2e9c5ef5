#include "kglab/rational.hpp"

#include <cctype>
#include <numeric>

#include "kglab/error.hpp"

namespace kglab {

namespace {

std::int64_t checked(__int128 v) {
    if (v > INT64_MAX || v < -INT64_MAX) throw Error(ErrorCode::invalid_argument, "rational overflow");
    return static_cast<std::int64_t>(v);
}

Rational make(__int128 n, __int128 d) {
    if (d == 0) throw Error(ErrorCode::invalid_argument, "zero denominator");
    if (d < 0) {
        n = -n;
        d = -d;
    }
    __int128 a = n < 0 ? -n : n, b = d;
    while (b) {
        __int128 t = a % b;
        a = b;
        b = t;
    }
    if (a > 1) {
        n /= a;
        d /= a;
    }
    return Rational(checked(n), checked(d));
}

} // namespace

Rational::Rational(std::int64_t n, std::int64_t d) {
    if (d == 0) throw Error(ErrorCode::invalid_argument, "zero denominator");
    std::int64_t g = std::gcd(n, d);
    if (g == 0) g = 1;
    n_ = n / g;
    d_ = d / g;
    if (d_ < 0) {
        n_ = -n_;
        d_ = -d_;
    }
}

Rational Rational::parse(const std::string& s) {
    auto bad = [&] { return Error(ErrorCode::invalid_argument, "not a rational: '" + s + "'"); };
    auto slash = s.find('/');
    if (slash != std::string::npos) {
        try {
            std::size_t p1 = 0, p2 = 0;
            long long a = std::stoll(s.substr(0, slash), &p1);
            long long b = std::stoll(s.substr(slash + 1), &p2);
            if (p1 != slash || p2 != s.size() - slash - 1) throw bad();
            return Rational(a, b);
        } catch (const Error&) {
            throw;
        } catch (...) {
            throw bad();
        }
    }
    std::size_t i = 0;
    bool neg = false;
    if (i < s.size() && (s[i] == '-' || s[i] == '+')) neg = s[i++] == '-';
    __int128 n = 0, d = 1;
    bool digits = false, dot = false;
    for (; i < s.size(); ++i) {
        char c = s[i];
        if (c == '.' && !dot) {
            dot = true;
            continue;
        }
        if (!std::isdigit(static_cast<unsigned char>(c))) throw bad();
        digits = true;
        n = n * 10 + (c - '0');
        if (dot) d *= 10;
        if (n > INT64_MAX || d > INT64_MAX) throw bad();
    }
    if (!digits) throw bad();
    return make(neg ? -n : n, d);
}

std::string Rational::str() const {
    if (d_ == 1) return std::to_string(n_);
    return std::to_string(n_) + "/" + std::to_string(d_);
}

Rational operator+(const Rational& a, const Rational& b) {
    return make(__int128(a.n_) * b.d_ + __int128(b.n_) * a.d_, __int128(a.d_) * b.d_);
}
Rational operator-(const Rational& a, const Rational& b) { return a + (-b); }
Rational operator*(const Rational& a, const Rational& b) {
    return make(__int128(a.n_) * b.n_, __int128(a.d_) * b.d_);
}
Rational operator/(const Rational& a, const Rational& b) {
    if (b.n_ == 0) throw Error(ErrorCode::invalid_argument, "division by zero");
    return make(__int128(a.n_) * b.d_, __int128(a.d_) * b.n_);
}
bool operator<(const Rational& a, const Rational& b) { return __int128(a.n_) * b.d_ < __int128(b.n_) * a.d_; }

Rational max(const Rational& a, const Rational& b) { return a < b ? b : a; }

} // namespace kglab
