#pragma once

#include <cstdint>
#include <vector>

#include "leap/bus_sim.hpp"
#include "leap/key_mgmt.hpp"

namespace leap {

struct RekeyDemoResult {
    EcuPair pair;
    ResponseOutcome outcome = ResponseOutcome::no_pending;
    double cycle_time_ms = 0.0;
    crypto::SymmetricKey128 session_key{};
    bool endpoints_agree = false;
    bool round_trip_ok = false;
    std::uint64_t epoch = 0;
    /// Frames carrying each member's request, and the request payload width.
    std::size_t frames_per_request = 0;
    unsigned request_payload_bits = 0;
    std::vector<sim::LogRecord> log;
    std::vector<CanFrame> wire;
};

/// Full six-step exchange for ECUs 0x010 and 0x020 on a simulated bus,
/// followed by one protected round trip under the new key.
RekeyDemoResult run_rekey_demo(const KeyUpdateTiming& timing, std::uint64_t seed);

/// Simulated duration of one pair's update (start of Secure-ECU processing
/// to verification of the last response).
double update_cycle_time_ms(const KeyUpdateTiming& timing);

}  // namespace leap
