#include "leap/endpoint.hpp"

#include <array>

#include "leap/crypto/rc4.hpp"
#include "leap/errors.hpp"

namespace leap {

crypto::KeyStream message_keystream(const crypto::SymmetricKey128& session_key, std::uint64_t ctr) {
    std::array<std::uint8_t, 24> rc4_key{};
    std::copy(session_key.bytes.begin(), session_key.bytes.end(), rc4_key.begin());
    for (int i = 0; i < 8; ++i) rc4_key[16 + i] = static_cast<std::uint8_t>(ctr >> (56 - 8 * i));
    crypto::KeyStream ks;
    crypto::rc4_keystream_into(rc4_key, ks);
    return ks;
}

std::uint16_t obfuscate_id(std::uint16_t id, const crypto::KeyStream& ks) noexcept {
    const auto top11 = static_cast<std::uint16_t>(((ks[0] << 8) | ks[24]) >> 5);
    return static_cast<std::uint16_t>((id ^ top11) & CanId::kMax);
}

unsigned insertion_offset(const crypto::KeyStream& ks) noexcept { return ks[24] % (kMaxTagOffset + 1); }

std::uint64_t data_field_mask(const crypto::KeyStream& ks) noexcept {
    std::uint64_t mask = 0;
    for (int i = 0; i < 8; ++i) mask = (mask << 8) | ks[72 + 24 * i];
    return mask;
}

namespace {

OpenResult open_with(const crypto::KeyStream& ks, const CanFrame& frame, std::uint64_t ctr,
                     unsigned payload_bits) {
    const DataField64 plain(frame.data_u64() ^ data_field_mask(ks));
    auto [payload, hidden_id] = unpack_payload_with_tag(plain, insertion_offset(ks), payload_bits);
    if (obfuscate_id(hidden_id, ks) != frame.id().value()) return {Verdict::rejected, {}, ctr};
    return {Verdict::accepted, payload, ctr};
}

}  // namespace

LeapEndpoint::LeapEndpoint(CanId self, CanId peer, Role role, ChannelConfig config)
    : SecureChannel(self, peer, role, config) {
    if (config.payload_bits > kMaxTaggedPayloadBits)
        throw OverflowError("LEAP carries at most 53 payload bits");
}

CanFrame LeapEndpoint::encrypt(const BitString& payload) {
    require_role(Role::sender);
    require_session();
    if (payload.size() > kMaxTaggedPayloadBits)
        throw OverflowError("LEAP payload of " + std::to_string(payload.size()) + " bits exceeds 53");
    check_session_limit();

    const auto ks = message_keystream(key_, ctr_);
    const auto hidden_id = obfuscate_id(self_.value(), ks);
    const auto plain = pack_payload_with_tag(payload, hidden_id, insertion_offset(ks));
    ++ctr_;
    ++stats_.sent;
    return CanFrame::from_u64(self_, plain.value() ^ data_field_mask(ks));
}

OpenResult LeapEndpoint::try_counters(const CanFrame& frame) const {
    if (frame.dlc() != 8) throw InvalidFrame("LEAP frames carry a full 8-byte data field");
    OpenResult result{Verdict::rejected, {}, ctr_};
    for (std::uint64_t d = 0; d <= config_.lookahead; ++d) {
        const auto attempt = open_with(message_keystream(key_, ctr_ + d), frame, ctr_ + d, config_.payload_bits);
        if (attempt.accepted()) return attempt;
    }
    return result;
}

OpenResult LeapEndpoint::decrypt(const CanFrame& frame) {
    require_role(Role::receiver);
    require_session();
    auto result = try_counters(frame);
    if (result.accepted()) {
        ctr_ = result.counter + 1;
        ++stats_.accepted;
    } else {
        ++stats_.rejected;
    }
    return result;
}

OpenResult LeapEndpoint::probe(const CanFrame& frame) const {
    require_session();
    return try_counters(frame);
}

SealedMessage LeapEndpoint::seal(const BitString& payload) {
    SealedMessage out;
    out.frames[0] = encrypt(payload);
    out.count = 1;
    return out;
}

OpenResult LeapEndpoint::open(std::span<const CanFrame> frames) {
    if (frames.size() != 1) throw InvalidFrame("LEAP messages are a single frame");
    return decrypt(frames.front());
}

std::vector<std::uint8_t> LeapEndpoint::serialize_state() const {
    // ids (2 x 2 bytes), session key, counter.
    std::vector<std::uint8_t> out;
    out.reserve(28);
    for (auto id : {self_.value(), peer_.value()}) {
        out.push_back(static_cast<std::uint8_t>(id >> 8));
        out.push_back(static_cast<std::uint8_t>(id));
    }
    out.insert(out.end(), key_.bytes.begin(), key_.bytes.end());
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(ctr_ >> (56 - 8 * i)));
    return out;
}

std::size_t LeapEndpoint::working_set_bytes() const noexcept {
    // RC4 permutation + 24-byte key + keystream.
    return 256 + 24 + sizeof(crypto::KeyStream);
}

}  // namespace leap
