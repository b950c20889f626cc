#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "leap/bus_sim.hpp"
#include "leap/channel.hpp"
#include "leap/key_mgmt.hpp"

namespace leap::sim {

enum class Protocol { leap, ameap };

std::string_view protocol_name(Protocol p) noexcept;
/// Accepts "LEAP"/"AMEAP" in any case; throws ConfigError otherwise.
Protocol parse_protocol(std::string_view text);

std::unique_ptr<SecureChannel> make_channel(Protocol p, CanId self, CanId peer, Role role, const ChannelConfig& config);

/// Which received data frames a node runs the receive computation on.
enum class DecryptPolicy {
    /// Every data frame, including ids with no session (worst case of the flooding analysis).
    all_frames,
    /// Only frames whose id has a receiver session.
    session_ids,
};

struct TrafficFlow {
    CanId peer;
    SimTime start{0};
    SimTime period{from_ms(100)};
    /// 0 means unlimited.
    std::uint64_t count = 0;
    /// Fixed payload; random `payload_bits`-wide payload when unset.
    std::optional<BitString> payload;
};

/// `epoch` counts session keys installed for the pair (1 for the first), so
/// (epoch, ctr) names a message uniquely across key updates.
struct Delivery {
    CanId from;
    CanId origin;
    std::uint64_t epoch = 0;
    std::uint64_t ctr = 0;
    BitString payload;
    SimTime t{0};
};

struct SentMessage {
    CanId peer;
    std::uint64_t epoch = 0;
    std::uint64_t ctr = 0;
    BitString payload;
};

/// General ECU: one sender and one receiver channel per peer, optional
/// periodic traffic, and the member side of session-key distribution.
class EcuNode : public Behavior {
public:
    struct Config {
        Protocol protocol = Protocol::leap;
        ChannelConfig channel{};
        DecryptPolicy policy = DecryptPolicy::all_frames;
        std::optional<crypto::SymmetricKey128> long_term_key;
        SimTime key_processing{from_ms(15.9)};
        std::vector<TrafficFlow> traffic;
        /// Keep every accepted delivery and sent message (for audits).
        bool record = true;
    };

    EcuNode(CanId self, std::vector<CanId> peers, Config config);

    /// Installs a session for both directions of the pair with `peer`.
    void install_session(CanId peer, const crypto::SymmetricKey128& key);

    void on_start(NodeContext& ctx) override;
    void on_frame(NodeContext& ctx, const CanFrame& frame) override;
    void on_timer(NodeContext& ctx, std::uint64_t tag) override;

    SecureChannel* sender(CanId peer);
    SecureChannel* receiver(CanId peer);

    const std::vector<Delivery>& deliveries() const noexcept { return deliveries_; }
    const std::vector<SentMessage>& sent() const noexcept { return sent_; }
    /// Accepted/rejected/ignored message counts keyed by the originating node.
    const std::map<CanId, NodeCounters>& by_origin() const noexcept { return by_origin_; }
    std::uint64_t sessions_installed() const noexcept { return sessions_installed_; }
    std::uint64_t key_requests_rejected() const noexcept { return key_requests_rejected_; }
    /// KSA runs observed per processed data frame (min, max).
    std::pair<std::uint64_t, std::uint64_t> ksa_per_frame() const noexcept { return {ksa_min_, ksa_max_}; }
    std::uint64_t rekey_required_events() const noexcept { return rekey_required_; }

private:
    struct Peer {
        std::unique_ptr<SecureChannel> tx;
        std::unique_ptr<SecureChannel> rx;
        std::vector<CanFrame> partial;
        std::uint64_t epoch = 0;
    };
    struct KeyExchange {
        EcuPair pair;
        CanId base_id;
        CanId response_id;
        std::vector<CanFrame> fragments;
    };

    void send_next(NodeContext& ctx, std::size_t flow);
    void handle_key_frame(NodeContext& ctx, const CanFrame& frame);
    void handle_data_frame(NodeContext& ctx, const CanFrame& frame);
    void finish_open(NodeContext& ctx, const CanFrame& last, Peer& peer, std::span<const CanFrame> frames);

    CanId self_;
    Config config_;
    std::map<CanId, Peer> peers_;
    std::vector<std::uint64_t> flow_sent_;
    std::optional<KeyExchange> exchange_;
    std::optional<KeyUpdateRequest> pending_request_;
    std::vector<Delivery> deliveries_;
    std::vector<SentMessage> sent_;
    std::map<CanId, NodeCounters> by_origin_;
    std::uint64_t sessions_installed_ = 0;
    std::uint64_t key_requests_rejected_ = 0;
    std::uint64_t ksa_min_ = ~std::uint64_t{0};
    std::uint64_t ksa_max_ = 0;
    std::uint64_t rekey_required_ = 0;
};

struct UpdateRecord {
    EcuPair pair;
    SimTime start{0};
    SimTime end{0};
    ResponseOutcome outcome = ResponseOutcome::no_pending;
    unsigned attempts = 1;
};

/// Secure ECU: runs the six-step update for each scheduled pair, one pair at a time.
class SecureEcuNode : public Behavior {
public:
    struct Config {
        KeyUpdateTiming timing{};
        /// Gap between the start of consecutive pair updates.
        SimTime gap{from_ms(500)};
        /// Start of the first update round.
        SimTime first_round{0};
        /// Period between update rounds; 0 runs a single round.
        SimTime period{0};
        /// Response deadline after the last fragment, in frame intervals.
        unsigned timeout_intervals = 3;
        unsigned max_retries = 1;
        std::uint64_t seed = 1;
    };

    SecureEcuNode(KeyStore store, Config config);

    void on_start(NodeContext& ctx) override;
    void on_frame(NodeContext& ctx, const CanFrame& frame) override;
    void on_timer(NodeContext& ctx, std::uint64_t tag) override;
    void on_transmitted(NodeContext& ctx, const CanFrame& frame) override;

    const KeyDistributor& distributor() const noexcept { return distributor_; }
    const std::vector<UpdateRecord>& updates() const noexcept { return updates_; }
    /// Every frame the Secure ECU put on the bus (for wire audits).
    const std::vector<CanFrame>& transmitted() const noexcept { return transmitted_; }

private:
    enum class Step : std::uint64_t { round_start = 1, next_update, issue, fragment_round, deadline };

    void start_round(NodeContext& ctx);
    void start_update(NodeContext& ctx);
    void issue(NodeContext& ctx);
    void send_fragment_round(NodeContext& ctx);
    void emit(NodeContext& ctx, const CanFrame& frame);
    static std::uint64_t tag(Step step, std::uint64_t arg = 0) { return (static_cast<std::uint64_t>(step) << 56) | arg; }

    KeyDistributor distributor_;
    Config config_;
    std::vector<EcuPair> queue_;
    std::size_t cursor_ = 0;
    std::optional<SessionIssue> current_;
    std::array<CanFrame, 3> low_frames_{};
    std::array<CanFrame, 3> high_frames_{};
    unsigned round_ = 0;
    std::uint64_t generation_ = 0;
    std::vector<UpdateRecord> updates_;
    std::vector<CanFrame> transmitted_;
};

}  // namespace leap::sim
