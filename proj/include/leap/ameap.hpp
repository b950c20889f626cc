#pragma once

#include <optional>

#include "leap/channel.hpp"
#include "leap/crypto/aes128.hpp"

namespace leap {

/// AES-128 + 32-bit MAC baseline. A message is one encrypted block
/// (payload || ctr) split over two 8-byte frames plus a 4-byte MAC frame;
/// the MAC covers id || cipher || ctr.
class AmeapEndpoint final : public SecureChannel {
public:
    static constexpr unsigned kOverheadBits = 32;
    static constexpr unsigned kMaxPayloadBits = 64;

    AmeapEndpoint(CanId self, CanId peer, Role role, ChannelConfig config = {});

    std::string_view protocol() const noexcept override { return "AMEAP"; }
    unsigned overhead_bits() const noexcept override { return kOverheadBits; }
    std::size_t frames_per_message() const noexcept override { return 3; }

    SealedMessage seal(const BitString& payload) override;
    /// Throws InvalidFrame unless given frames of dlc 8, 8, 4 under one id.
    OpenResult open(std::span<const CanFrame> frames) override;

    std::vector<std::uint8_t> serialize_state() const override;
    std::size_t working_set_bytes() const noexcept override;

protected:
    void on_session_installed() override;

private:
    crypto::Mac32 message_mac(CanId id, const crypto::Block128& cipher, std::uint64_t ctr) const;

    std::optional<crypto::Aes128> cipher_;
};

}  // namespace leap
