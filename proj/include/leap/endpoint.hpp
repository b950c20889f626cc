#pragma once

#include <cstdint>

#include "leap/channel.hpp"
#include "leap/crypto/types.hpp"

namespace leap {

/// Keystream for one message: RC4 keyed with session_key || ctr (8 bytes,
/// big-endian), 256 output bytes.
crypto::KeyStream message_keystream(const crypto::SymmetricKey128& session_key, std::uint64_t ctr);

/// id XOR the top 11 bits of (k_0 || k_24). Self-inverse.
std::uint16_t obfuscate_id(std::uint16_t id, const crypto::KeyStream& ks) noexcept;

/// Bit position of the obfuscated id: k_24 mod 54.
unsigned insertion_offset(const crypto::KeyStream& ks) noexcept;

/// k_72 || k_96 || ... || k_240 as a big-endian 64-bit word.
std::uint64_t data_field_mask(const crypto::KeyStream& ks) noexcept;

/// Sender and receiver state machine for one LEAP pair.
class LeapEndpoint final : public SecureChannel {
public:
    static constexpr unsigned kOverheadBits = 11;

    LeapEndpoint(CanId self, CanId peer, Role role, ChannelConfig config = {});

    std::string_view protocol() const noexcept override { return "LEAP"; }
    unsigned overhead_bits() const noexcept override { return kOverheadBits; }
    std::size_t frames_per_message() const noexcept override { return 1; }

    /// Throws OverflowError for payloads over 53 bits and RekeyRequired at the session limit.
    CanFrame encrypt(const BitString& payload);
    /// Throws InvalidFrame if dlc != 8.
    OpenResult decrypt(const CanFrame& frame);
    /// Runs the full receive computation without touching state.
    OpenResult probe(const CanFrame& frame) const;

    SealedMessage seal(const BitString& payload) override;
    OpenResult open(std::span<const CanFrame> frames) override;

    std::vector<std::uint8_t> serialize_state() const override;
    std::size_t working_set_bytes() const noexcept override;

private:
    OpenResult try_counters(const CanFrame& frame) const;
};

}  // namespace leap
