#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "leap/bus_sim.hpp"

namespace leap::analysis {

/// Expected exhaustive-search time in hours: half the key space at
/// `seconds_per_key` each. Throws ConfigError for key_bits outside 1..256.
long double brute_force_hours(unsigned key_bits, double seconds_per_key);

/// Ciphertexts needed for the best known RC4 key recovery.
inline constexpr std::uint64_t kRc4RecoveryCiphertexts = std::uint64_t{9} << 27;

struct EavesdropFeasibility {
    std::uint64_t messages = 0;
    std::uint64_t threshold = kRc4RecoveryCiphertexts;
    bool feasible = false;
    /// Hours of capture at this rate to reach the threshold.
    double hours_to_threshold = 0.0;
};

/// Messages observable at `rate_hz` over `hours`, rounded to whole messages.
EavesdropFeasibility eavesdrop_feasibility(double rate_hz, double hours);

struct FloodingMargin {
    /// Frames/s a flooding node can put on the bus (dlc 8).
    double injection_rate_hz = 0.0;
    double decrypt_throughput_hz = 0.0;
    bool sustained = false;
    /// decrypt throughput / injection rate.
    double margin = 0.0;
    // Reference figures for an ATmega-class ECU.
    static constexpr double kReferenceDecryptRate = 12'000.0;
    static constexpr double kReferenceInjectionRate = 4'400.0;
};

FloodingMargin flooding_margin(const sim::BusConfig& bus, double decrypt_throughput_hz);

struct KeySearchTiming {
    std::uint64_t trials = 0;
    double seconds_per_key_serial = 0.0;
    /// Wall-clock time per key with all threads, i.e. aggregate rate.
    double seconds_per_key_parallel = 0.0;
    int threads = 1;
};

/// Times `trials` RC4 known-plaintext key trials (KSA on a 16-byte key plus
/// eight keystream bytes) with both kernels.
KeySearchTiming measure_key_search_time(std::uint64_t trials, std::uint64_t seed);

struct ProtocolBench {
    std::string protocol;
    unsigned overhead_bits = 0;
    std::size_t frames_per_message = 0;
    /// Mean seal + open per message, host wall clock.
    double ns_per_message = 0.0;
    std::size_t working_set_bytes = 0;
    std::size_t state_bytes = 0;
};

struct BenchReport {
    std::uint64_t messages = 0;
    ProtocolBench leap;
    ProtocolBench ameap;
    /// AMEAP time / LEAP time.
    double ratio = 0.0;
    static constexpr double kReferenceRatio = 8.0;
};

/// Seals and opens `messages` 48-bit payloads per protocol; best of `repeats` runs.
BenchReport bench_protocols(std::uint64_t messages, std::uint64_t seed, unsigned repeats = 3);

struct BinomialInterval {
    std::uint64_t lo = 0;
    std::uint64_t hi = 0;
    bool contains(std::uint64_t k) const noexcept { return k >= lo && k <= hi; }
};

/// Equal-tailed interval of Binomial(n, p): lo is the alpha/2 quantile and hi
/// the 1 - alpha/2 quantile, alpha = 1 - confidence. Exact, computed in log space.
BinomialInterval binomial_interval(std::uint64_t n, double p, double confidence);

/// "30us", "0.1 us", "2ms", "1s", "500ns" -> seconds. Throws ConfigError("time", ...).
double parse_duration_seconds(std::string_view text);

}  // namespace leap::analysis
