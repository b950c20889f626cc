#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "leap/can_frame.hpp"
#include "leap/crypto/types.hpp"

namespace leap {

enum class Role { sender, receiver };

enum class Verdict { accepted, rejected };

/// Frames carrying one protected message, in transmission order.
struct SealedMessage {
    static constexpr std::size_t kMaxFrames = 3;

    std::array<CanFrame, kMaxFrames> frames{};
    std::size_t count = 0;

    std::span<const CanFrame> view() const noexcept { return {frames.data(), count}; }
};

struct OpenResult {
    Verdict verdict = Verdict::rejected;
    BitString payload;
    /// Counter value the message authenticated under; the expected value on rejection.
    std::uint64_t counter = 0;

    bool accepted() const noexcept { return verdict == Verdict::accepted; }
};

struct ChannelStats {
    std::uint64_t sent = 0;
    std::uint64_t accepted = 0;
    std::uint64_t rejected = 0;
};

struct ChannelConfig {
    /// Messages allowed per session before the sender demands a rekey.
    std::uint64_t session_limit = std::uint64_t{1} << 20;
    /// Receiver tries counters ctr..ctr+lookahead. 0 keeps strict lock-step.
    unsigned lookahead = 0;
    /// Payload width the receiver extracts.
    unsigned payload_bits = 48;
};

/// One side of an ordered (sender, receiver) protected pair. LEAP and AMEAP
/// implement the same surface so drivers can swap protocols.
class SecureChannel {
public:
    SecureChannel(CanId self, CanId peer, Role role, ChannelConfig config)
        : self_(self), peer_(peer), role_(role), config_(config) {}
    virtual ~SecureChannel() = default;

    virtual std::string_view protocol() const noexcept = 0;
    /// Authentication bits added to every message.
    virtual unsigned overhead_bits() const noexcept = 0;
    virtual std::size_t frames_per_message() const noexcept = 0;

    /// Sender side. Advances the counter by one.
    virtual SealedMessage seal(const BitString& payload) = 0;
    /// Receiver side. Advances the counter only on acceptance.
    virtual OpenResult open(std::span<const CanFrame> frames) = 0;

    /// Proxy for on-device storage: the bytes a node must persist for this pair.
    virtual std::vector<std::uint8_t> serialize_state() const = 0;
    /// Proxy for transient RAM: bytes of scratch state touched per message.
    virtual std::size_t working_set_bytes() const noexcept = 0;

    /// Installs a fresh session key and resets the counter to 0.
    void install_session(const crypto::SymmetricKey128& key) {
        key_ = key;
        ctr_ = 0;
        has_session_ = true;
        on_session_installed();
    }

    CanId self_id() const noexcept { return self_; }
    CanId peer_id() const noexcept { return peer_; }
    Role role() const noexcept { return role_; }
    std::uint64_t counter() const noexcept { return ctr_; }
    bool has_session() const noexcept { return has_session_; }
    const crypto::SymmetricKey128& session_key() const noexcept { return key_; }
    const ChannelConfig& config() const noexcept { return config_; }
    const ChannelStats& stats() const noexcept { return stats_; }

protected:
    virtual void on_session_installed() {}

    void require_role(Role expected) const;
    void require_session() const;
    /// Throws RekeyRequired once the session limit is reached.
    void check_session_limit() const;

    CanId self_;
    CanId peer_;
    Role role_;
    ChannelConfig config_;
    crypto::SymmetricKey128 key_{};
    std::uint64_t ctr_ = 0;
    bool has_session_ = false;
    ChannelStats stats_{};
};

}  // namespace leap
