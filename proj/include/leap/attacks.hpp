#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "leap/bus_sim.hpp"
#include "leap/nodes.hpp"

namespace leap::attack {

enum class AttackKind { eavesdrop, replay, masquerade, flooding };
std::string_view kind_name(AttackKind k) noexcept;
/// Throws ConfigError("kind", ...) for unknown names.
AttackKind parse_kind(std::string_view text);

/// How masquerade data fields are produced.
enum class ForgeStrategy {
    /// Uniform random data fields.
    random,
    /// Captured ciphertexts with one random bit flipped per frame.
    replay_derived,
};
std::string_view strategy_name(ForgeStrategy s) noexcept;
ForgeStrategy parse_strategy(std::string_view text);

/// Sender -> receiver is the protected flow under attack; the attacker owns
/// `attacker` and may transmit under any identifier.
struct AttackScenario {
    AttackKind kind = AttackKind::replay;
    sim::Protocol protocol = sim::Protocol::leap;
    CanId sender{0x010};
    CanId receiver{0x020};
    CanId attacker{0x030};

    /// Legitimate traffic rate (messages/s).
    double legit_rate_hz = 10.0;
    /// Messages the sender emits before the attack starts (the capture phase).
    std::uint64_t legit_messages = 100;
    /// Messages the sender emits after a masquerade, once it is no longer silenced.
    std::uint64_t resume_messages = 10;

    /// Attacker injection rate in frames/s. Must not exceed max_frame_rate(bus, 8).
    double intensity_hz = 4000.0;
    /// Replayed or forged messages. Ignored for flooding.
    std::uint64_t count = 10'000;
    /// Flooding duration in seconds.
    double duration_s = 1.0;

    ForgeStrategy strategy = ForgeStrategy::random;
    /// Identifier forged frames carry. Defaults to `sender` (masquerade) or `attacker` (flooding).
    std::optional<CanId> forge_id;
    /// Compromised pair member: the attacker holds the session key and tracks the counter.
    bool leaked_session_key = false;

    sim::DecryptPolicy policy = sim::DecryptPolicy::all_frames;
    ChannelConfig channel{};
    sim::BusConfig bus{};
    /// Host-side decrypt throughput sample size (flooding only).
    std::uint64_t throughput_samples = 20'000;
    bool keep_log = false;
    std::uint64_t seed = 1;
};

/// Throws ConfigError naming the field for out-of-range settings.
void validate(const AttackScenario& s);

struct AttackMetrics {
    /// Attacker messages put on the bus (replays, forgeries or flood frames).
    std::uint64_t frames_sent = 0;
    std::uint64_t frames_accepted_by_victim = 0;
    /// Rejected plus ignored; accepted + rejected covers every attacker message the victim saw.
    std::uint64_t frames_rejected = 0;
    /// Subset of frames_rejected carrying an id the victim holds no session for.
    std::uint64_t frames_ignored = 0;
    std::uint64_t distinct_ciphertexts_observed = 0;
    double victim_legit_throughput_during_attack = 0.0;
    /// Chance acceptances of attacker traffic; each one shifts the receiver counter.
    std::uint64_t desync_events = 0;

    double acceptance_rate = 0.0;
    std::uint64_t legit_sent = 0;
    std::uint64_t legit_accepted = 0;
    std::uint64_t legit_rejected = 0;
    /// Legitimate deliveries whose payload differs from what the sender sent. Must be 0.
    std::uint64_t payload_mismatches = 0;
    /// Receiver counter equals its number of acceptances.
    bool counter_consistent = true;
    /// First legitimate message after a masquerade was accepted.
    std::optional<bool> resumed_accepted;

    // eavesdrop
    std::uint64_t ciphertexts_captured = 0;

    // flooding
    double injection_rate_hz = 0.0;
    /// Host wall clock, not simulated time.
    double victim_decrypt_throughput_hz = 0.0;
    std::uint64_t ksa_per_frame_min = 0;
    std::uint64_t ksa_per_frame_max = 0;

    std::uint64_t id_collisions = 0;
    double sim_time_s = 0.0;
};

struct AttackReport {
    AttackScenario scenario;
    AttackMetrics metrics;
    std::vector<sim::LogRecord> log;
};

AttackReport run_attack(const AttackScenario& s);
AttackReport run_eavesdrop(const AttackScenario& s);
AttackReport run_replay(const AttackScenario& s);
AttackReport run_masquerade(const AttackScenario& s);
AttackReport run_flooding(const AttackScenario& s);

/// Messages/s the victim's receive computation sustains on this host (LeapEndpoint::probe
/// for LEAP, a full open() for AMEAP) over random frames.
double measure_decrypt_throughput(sim::Protocol protocol, std::uint64_t samples, std::uint64_t seed);

std::string report_json(const AttackReport& r);
std::string csv_header();
std::string csv_row(const AttackReport& r);

}  // namespace leap::attack
