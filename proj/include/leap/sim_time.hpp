#pragma once

#include <chrono>
#include <cstdint>

namespace leap {

/// Simulated time since the start of a run.
using SimTime = std::chrono::nanoseconds;

inline constexpr SimTime from_ms(double ms) {
    return SimTime{static_cast<std::int64_t>(ms * 1'000'000.0 + (ms >= 0 ? 0.5 : -0.5))};
}

inline constexpr double to_ms(SimTime t) { return static_cast<double>(t.count()) / 1e6; }
inline constexpr double to_us(SimTime t) { return static_cast<double>(t.count()) / 1e3; }

/// Transmission time of a `bits`-long frame at `bit_rate` bits/s, rounded to the nanosecond.
inline constexpr SimTime bits_to_time(std::uint64_t bits, double bit_rate) {
    return SimTime{static_cast<std::int64_t>(static_cast<double>(bits) * 1e9 / bit_rate + 0.5)};
}

}  // namespace leap
