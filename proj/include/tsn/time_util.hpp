#pragma once

#include <cstdint>
#include <stdexcept>

namespace tsn {

// All schedule arithmetic is integer nanoseconds. 64-bit ns covers ~292 years,
// so hyperperiods up to the enforced 10 s cap never overflow.
using Ns = std::int64_t;

inline constexpr Ns kMicro = 1'000;
inline constexpr Ns kMilli = 1'000'000;
inline constexpr Ns kSecond = 1'000'000'000;
inline constexpr Ns kMaxHyperperiod = 10 * kSecond;

constexpr std::int64_t ceil_div(std::int64_t a, std::int64_t b) {
    return (a + b - 1) / b;
}

constexpr std::int64_t gcd64(std::int64_t a, std::int64_t b) {
    while (b != 0) {
        std::int64_t t = a % b;
        a = b;
        b = t;
    }
    return a;
}

// LCM with an explicit cap so pathological period sets fail loudly instead of
// wrapping around.
inline std::int64_t lcm_checked(std::int64_t a, std::int64_t b, std::int64_t cap = kMaxHyperperiod) {
    const std::int64_t g = gcd64(a, b);
    const __int128 v = static_cast<__int128>(a / g) * b;
    if (v > cap) {
        throw std::overflow_error("lcm exceeds supported hyperperiod cap");
    }
    return static_cast<std::int64_t>(v);
}

} // namespace tsn
