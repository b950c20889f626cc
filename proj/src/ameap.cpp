#include "leap/ameap.hpp"

#include <algorithm>
#include <array>

#include "leap/crypto/keyed_hash.hpp"
#include "leap/errors.hpp"

namespace leap {

namespace {

void put_u64(std::uint8_t* out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out[i] = static_cast<std::uint8_t>(v >> (56 - 8 * i));
}

std::uint64_t get_u64(const std::uint8_t* in) {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v = (v << 8) | in[i];
    return v;
}

}  // namespace

AmeapEndpoint::AmeapEndpoint(CanId self, CanId peer, Role role, ChannelConfig config)
    : SecureChannel(self, peer, role, config) {
    if (config.payload_bits > kMaxPayloadBits) throw OverflowError("AMEAP carries at most 64 payload bits");
}

void AmeapEndpoint::on_session_installed() { cipher_.emplace(key_); }

crypto::Mac32 AmeapEndpoint::message_mac(CanId id, const crypto::Block128& cipher, std::uint64_t ctr) const {
    std::array<std::uint8_t, 2 + 16 + 8> input{};
    input[0] = static_cast<std::uint8_t>(id.value() >> 8);
    input[1] = static_cast<std::uint8_t>(id.value());
    std::copy(cipher.begin(), cipher.end(), input.begin() + 2);
    put_u64(input.data() + 18, ctr);
    return crypto::keyed_hash(key_.bytes, input);
}

SealedMessage AmeapEndpoint::seal(const BitString& payload) {
    require_role(Role::sender);
    require_session();
    if (payload.size() > kMaxPayloadBits) throw OverflowError("AMEAP payload exceeds 64 bits");
    check_session_limit();

    // Payload left-aligned in the first 8 bytes, counter in the last 8.
    crypto::Block128 block{};
    const std::uint64_t aligned = payload.empty() ? 0 : payload.value() << (64 - payload.size());
    put_u64(block.data(), aligned);
    put_u64(block.data() + 8, ctr_);
    const auto cipher = cipher_->encrypt(block);
    const auto mac = message_mac(self_, cipher, ctr_);
    const std::array<std::uint8_t, 4> mac_bytes = {
        static_cast<std::uint8_t>(mac.tag >> 24), static_cast<std::uint8_t>(mac.tag >> 16),
        static_cast<std::uint8_t>(mac.tag >> 8), static_cast<std::uint8_t>(mac.tag)};

    SealedMessage out;
    out.frames[0] = CanFrame(self_, std::span(cipher).first(8));
    out.frames[1] = CanFrame(self_, std::span(cipher).subspan(8));
    out.frames[2] = CanFrame(self_, mac_bytes);
    out.count = 3;
    ++ctr_;
    ++stats_.sent;
    return out;
}

OpenResult AmeapEndpoint::open(std::span<const CanFrame> frames) {
    require_role(Role::receiver);
    require_session();
    if (frames.size() != 3 || frames[0].dlc() != 8 || frames[1].dlc() != 8 || frames[2].dlc() != 4)
        throw InvalidFrame("AMEAP message must be frames of dlc 8, 8, 4");
    const CanId id = frames[0].id();
    if (frames[1].id() != id || frames[2].id() != id) throw InvalidFrame("AMEAP fragments under different ids");

    crypto::Block128 cipher{};
    std::copy_n(frames[0].data().begin(), 8, cipher.begin());
    std::copy_n(frames[1].data().begin(), 8, cipher.begin() + 8);
    const auto tag = static_cast<std::uint32_t>(frames[2].data_u64());

    for (std::uint64_t d = 0; d <= config_.lookahead; ++d) {
        const std::uint64_t ctr = ctr_ + d;
        if (message_mac(id, cipher, ctr).tag != tag) continue;
        const auto block = cipher_->decrypt(cipher);
        if (get_u64(block.data() + 8) != ctr) continue;
        const unsigned bits = config_.payload_bits;
        const std::uint64_t payload = bits == 0 ? 0 : get_u64(block.data()) >> (64 - bits);
        ctr_ = ctr + 1;
        ++stats_.accepted;
        return {Verdict::accepted, BitString(payload, bits), ctr};
    }
    ++stats_.rejected;
    return {Verdict::rejected, {}, ctr_};
}

std::vector<std::uint8_t> AmeapEndpoint::serialize_state() const {
    std::vector<std::uint8_t> out;
    out.reserve(28);
    for (auto id : {self_.value(), peer_.value()}) {
        out.push_back(static_cast<std::uint8_t>(id >> 8));
        out.push_back(static_cast<std::uint8_t>(id));
    }
    out.insert(out.end(), key_.bytes.begin(), key_.bytes.end());
    std::array<std::uint8_t, 8> ctr{};
    put_u64(ctr.data(), ctr_);
    out.insert(out.end(), ctr.begin(), ctr.end());
    return out;
}

std::size_t AmeapEndpoint::working_set_bytes() const noexcept {
    // Expanded AES key schedule, cipher block, HMAC pads and SHA-256 state/buffer.
    return 176 + 16 + 2 * 64 + (32 + 64 + 8);
}

}  // namespace leap
