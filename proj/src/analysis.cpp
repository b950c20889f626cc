#include "leap/analysis.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <chrono>
#include <cmath>
#include <limits>

#include "leap/errors.hpp"
#include "leap/kernels.hpp"
#include "leap/nodes.hpp"

namespace leap::analysis {

long double brute_force_hours(unsigned key_bits, double seconds_per_key) {
    if (key_bits == 0 || key_bits > 256) throw ConfigError("key_bits", "must be in 1..256");
    if (!(seconds_per_key > 0.0) || !std::isfinite(seconds_per_key))
        throw ConfigError("time", "time per key must be positive");
    return std::ldexp(static_cast<long double>(seconds_per_key), static_cast<int>(key_bits) - 1) / 3600.0L;
}

EavesdropFeasibility eavesdrop_feasibility(double rate_hz, double hours) {
    if (!(rate_hz >= 0.0) || !std::isfinite(rate_hz)) throw ConfigError("rate", "must be >= 0");
    if (!(hours >= 0.0) || !std::isfinite(hours)) throw ConfigError("hours", "must be >= 0");
    EavesdropFeasibility out;
    out.messages = static_cast<std::uint64_t>(std::llround(rate_hz * hours * 3600.0));
    out.feasible = out.messages >= out.threshold;
    out.hours_to_threshold = rate_hz > 0.0 ? static_cast<double>(out.threshold) / rate_hz / 3600.0
                                           : std::numeric_limits<double>::infinity();
    return out;
}

FloodingMargin flooding_margin(const sim::BusConfig& bus, double decrypt_throughput_hz) {
    FloodingMargin out;
    out.injection_rate_hz = sim::max_frame_rate(bus, 8);
    out.decrypt_throughput_hz = decrypt_throughput_hz;
    out.margin = decrypt_throughput_hz / out.injection_rate_hz;
    out.sustained = decrypt_throughput_hz > out.injection_rate_hz;
    return out;
}

KeySearchTiming measure_key_search_time(std::uint64_t trials, std::uint64_t seed) {
    kernels::KeySearchProblem problem;
    problem.key_template.resize(16);
    for (std::size_t i = 0; i < 16; ++i)
        problem.key_template[i] = static_cast<std::uint8_t>(kernels::splitmix64(seed + i));
    problem.unknown_bits = 40;
    // Target no candidate in range will hit: the full range is scanned.
    for (int k = 0; k < 8; ++k) problem.ciphertext[k] = static_cast<std::uint8_t>(0xA5 ^ k);

    using clock = std::chrono::steady_clock;
    KeySearchTiming out;
    out.trials = trials;
    out.threads = kernels::max_threads();
    auto t0 = clock::now();
    const auto ref = kernels::key_search_ref(problem, 0, trials);
    out.seconds_per_key_serial =
        std::chrono::duration<double>(clock::now() - t0).count() / static_cast<double>(std::max<std::uint64_t>(ref.trials, 1));
    t0 = clock::now();
    const auto omp = kernels::key_search_omp(problem, 0, trials);
    out.seconds_per_key_parallel =
        std::chrono::duration<double>(clock::now() - t0).count() / static_cast<double>(std::max<std::uint64_t>(omp.trials, 1));
    return out;
}

namespace {

ProtocolBench bench_one(sim::Protocol p, std::uint64_t messages, std::uint64_t seed, unsigned repeats) {
    crypto::SymmetricKey128 key;
    for (std::size_t i = 0; i < 16; ++i) key.bytes[i] = static_cast<std::uint8_t>(kernels::splitmix64(seed + i));
    std::vector<BitString> payloads;
    payloads.reserve(messages);
    for (std::uint64_t i = 0; i < messages; ++i)
        payloads.emplace_back(kernels::splitmix64(seed ^ (i * 0x9E37)) >> 16, 48);

    ProtocolBench out;
    double best = std::numeric_limits<double>::infinity();
    for (unsigned r = 0; r < std::max(repeats, 1U); ++r) {
        const ChannelConfig cfg{std::uint64_t{1} << 40, 0, 48};
        auto tx = sim::make_channel(p, CanId(0x010), CanId(0x020), Role::sender, cfg);
        auto rx = sim::make_channel(p, CanId(0x020), CanId(0x010), Role::receiver, cfg);
        tx->install_session(key);
        rx->install_session(key);
        std::uint64_t accepted = 0;
        const auto t0 = std::chrono::steady_clock::now();
        for (const auto& payload : payloads) {
            const auto sealed = tx->seal(payload);
            accepted += rx->open(sealed.view()).accepted() ? 1 : 0;
        }
        const double ns = std::chrono::duration<double, std::nano>(std::chrono::steady_clock::now() - t0).count();
        if (accepted != messages) throw SimulationError("benchmark round trip failed");
        best = std::min(best, ns / static_cast<double>(std::max<std::uint64_t>(messages, 1)));
        out.protocol = std::string(tx->protocol());
        out.overhead_bits = tx->overhead_bits();
        out.frames_per_message = tx->frames_per_message();
        out.working_set_bytes = rx->working_set_bytes();
        out.state_bytes = rx->serialize_state().size();
    }
    out.ns_per_message = best;
    return out;
}

}  // namespace

BenchReport bench_protocols(std::uint64_t messages, std::uint64_t seed, unsigned repeats) {
    BenchReport out;
    out.messages = messages;
    out.leap = bench_one(sim::Protocol::leap, messages, seed, repeats);
    out.ameap = bench_one(sim::Protocol::ameap, messages, seed, repeats);
    out.ratio = out.leap.ns_per_message > 0 ? out.ameap.ns_per_message / out.leap.ns_per_message : 0.0;
    return out;
}

BinomialInterval binomial_interval(std::uint64_t n, double p, double confidence) {
    if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("p", "must be in [0, 1]");
    if (!(confidence > 0.0 && confidence < 1.0)) throw ConfigError("confidence", "must be in (0, 1)");
    if (p == 0.0) return {0, 0};
    if (p == 1.0) return {n, n};
    const double tail = (1.0 - confidence) / 2.0;
    const double ln_p = std::log(p);
    const double ln_q = std::log1p(-p);
    const double ln_n1 = std::lgamma(static_cast<double>(n) + 1.0);
    BinomialInterval out{n, n};
    bool have_lo = false;
    double cdf = 0.0;
    for (std::uint64_t k = 0; k <= n; ++k) {
        const double kd = static_cast<double>(k);
        const double ln_pmf = ln_n1 - std::lgamma(kd + 1.0) - std::lgamma(static_cast<double>(n - k) + 1.0) + kd * ln_p +
                              static_cast<double>(n - k) * ln_q;
        cdf += std::exp(ln_pmf);
        if (!have_lo && cdf >= tail) {
            out.lo = k;
            have_lo = true;
        }
        if (cdf >= 1.0 - tail) {
            out.hi = k;
            break;
        }
    }
    return out;
}

double parse_duration_seconds(std::string_view text) {
    while (!text.empty() && text.front() == ' ') text.remove_prefix(1);
    while (!text.empty() && text.back() == ' ') text.remove_suffix(1);
    std::size_t split = 0;
    while (split < text.size() && (std::isdigit(static_cast<unsigned char>(text[split])) || text[split] == '.' ||
                                   text[split] == 'e' || text[split] == 'E' || text[split] == '-' || text[split] == '+'))
        ++split;
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + split, value);
    if (ec != std::errc{} || ptr != text.data() + split || split == 0)
        throw ConfigError("time", "cannot parse '" + std::string(text) + "'");
    auto unit = text.substr(split);
    while (!unit.empty() && unit.front() == ' ') unit.remove_prefix(1);
    double scale = 0.0;
    if (unit == "s" || unit.empty()) scale = 1.0;
    else if (unit == "ms") scale = 1e-3;
    else if (unit == "us" || unit == "\xC2\xB5s") scale = 1e-6;
    else if (unit == "ns") scale = 1e-9;
    else throw ConfigError("time", "unknown unit '" + std::string(unit) + "' (use s, ms, us or ns)");
    const double seconds = value * scale;
    if (!(seconds > 0.0)) throw ConfigError("time", "must be positive");
    return seconds;
}

}  // namespace leap::analysis
