#pragma once

#include <cstdint>

#include "tsn/time_util.hpp"

namespace tsn {

// Exact non-negative rational for precedence metrics. Comparisons go through
// 128-bit cross multiplication so metric sorts never see rounding.
struct Rational {
    std::int64_t num = 0;
    std::int64_t den = 1;

    static Rational of(std::int64_t n, std::int64_t d) {
        Rational r{n, d};
        r.normalize();
        return r;
    }

    void normalize() {
        if (den < 0) {
            num = -num;
            den = -den;
        }
        if (num == 0) {
            den = 1;
            return;
        }
        std::int64_t g = gcd64(num < 0 ? -num : num, den);
        num /= g;
        den /= g;
    }

    friend bool operator==(const Rational& a, const Rational& b) {
        return static_cast<__int128>(a.num) * b.den == static_cast<__int128>(b.num) * a.den;
    }
    friend bool operator<(const Rational& a, const Rational& b) {
        return static_cast<__int128>(a.num) * b.den < static_cast<__int128>(b.num) * a.den;
    }
    friend bool operator>(const Rational& a, const Rational& b) { return b < a; }
    friend bool operator<=(const Rational& a, const Rational& b) { return !(b < a); }
    friend bool operator>=(const Rational& a, const Rational& b) { return !(a < b); }

    double as_double() const { return static_cast<double>(num) / static_cast<double>(den); }
};

} // namespace tsn
