#include "leap/can_frame.hpp"

#include <algorithm>
#include <cmath>

#include "leap/errors.hpp"
#include "leap/hex.hpp"

namespace leap {

void CanId::throw_out_of_range(std::uint16_t value) {
    throw InvalidFrame("CAN identifier exceeds 11 bits: " + std::to_string(value));
}

CanFrame::CanFrame(CanId id, std::span<const std::uint8_t> data) : id_(id) {
    if (data.size() > kMaxDlc) throw InvalidFrame("data field longer than 8 bytes");
    dlc_ = static_cast<std::uint8_t>(data.size());
    std::copy(data.begin(), data.end(), data_.begin());
}

CanFrame CanFrame::from_u64(CanId id, std::uint64_t data) {
    std::array<std::uint8_t, 8> bytes{};
    for (int i = 0; i < 8; ++i) bytes[i] = static_cast<std::uint8_t>(data >> (56 - 8 * i));
    return CanFrame(id, bytes);
}

CanFrame CanFrame::parse(std::string_view text) {
    const auto hash = text.find('#');
    if (hash == std::string_view::npos || hash == 0 || hash > 3)
        throw InvalidFrame("malformed frame text '" + std::string(text) + "'");
    std::uint16_t id = 0;
    for (char c : text.substr(0, hash)) {
        const auto digit = from_hex(std::string{'0', c});
        id = static_cast<std::uint16_t>((id << 4) | digit[0]);
    }
    const auto data = from_hex(text.substr(hash + 1));
    return CanFrame(CanId(id), data);
}

std::uint64_t CanFrame::data_u64() const noexcept {
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < dlc_; ++i) v = (v << 8) | data_[i];
    return v;
}

std::string format_id(CanId id) {
    static constexpr char digits[] = "0123456789ABCDEF";
    return {digits[(id.value() >> 8) & 0xF], digits[(id.value() >> 4) & 0xF], digits[id.value() & 0xF]};
}

std::string CanFrame::to_text() const { return format_id(id_) + '#' + to_hex(data()); }

BitString::BitString(std::uint64_t value, unsigned length) : value_(value), length_(length) {
    if (length > kMaxBits) throw OverflowError("bit string longer than 64 bits");
    if (length < kMaxBits && (value >> length) != 0)
        throw OverflowError("bit string value has bits beyond its length");
}

BitString BitString::from_bytes(std::span<const std::uint8_t> bytes) {
    if (bytes.size() > 8) throw OverflowError("more than 8 bytes for a bit string");
    std::uint64_t v = 0;
    for (auto b : bytes) v = (v << 8) | b;
    return BitString(v, static_cast<unsigned>(bytes.size() * 8));
}

std::vector<std::uint8_t> BitString::to_bytes() const {
    std::vector<std::uint8_t> out((length_ + 7) / 8, 0);
    for (unsigned i = 0; i < length_; ++i)
        if (bit(i)) out[i / 8] |= static_cast<std::uint8_t>(0x80U >> (i % 8));
    return out;
}

std::uint32_t frame_bits(unsigned dlc, const FrameTiming& timing) {
    if (dlc > CanFrame::kMaxDlc) throw InvalidFrame("dlc " + std::to_string(dlc) + " exceeds 8");
    if (!(timing.stuff_factor >= 1.0)) throw Error("stuff factor must be >= 1.0");
    if (timing.base_overhead_bits < 0.0) throw Error("base overhead must be non-negative");
    const double raw = (timing.base_overhead_bits + 8.0 * dlc) * timing.stuff_factor;
    // Absorb representation error so that exact products are not bumped up.
    return static_cast<std::uint32_t>(std::ceil(raw - 1e-9));
}

std::vector<CanFrame> arbitration_order(std::span<const CanFrame> contenders) {
    if (contenders.empty()) throw SimulationError("arbitration round with no contenders");
    std::vector<CanFrame> order(contenders.begin(), contenders.end());
    std::sort(order.begin(), order.end(),
              [](const CanFrame& a, const CanFrame& b) { return a.id() < b.id(); });
    const auto dup = std::adjacent_find(order.begin(), order.end(), [](const auto& a, const auto& b) {
        return a.id() == b.id();
    });
    if (dup != order.end())
        throw SimulationError("duplicate identifier " + dup->to_text() + " in one arbitration round");
    return order;
}

DataField64 pack_payload_with_tag(const BitString& payload, std::uint16_t tag, unsigned offset) {
    if (payload.size() > kMaxTaggedPayloadBits)
        throw OverflowError("payload of " + std::to_string(payload.size()) + " bits does not fit next to the tag");
    if (offset > kMaxTagOffset)
        throw OverflowError("tag offset " + std::to_string(offset) + " out of range 0..53");
    if (tag > CanId::kMax) throw OverflowError("tag wider than 11 bits");

    // Left-align the payload in a 53-bit window, then split it around the tag.
    const unsigned len = payload.size();
    const std::uint64_t window = len == 0 ? 0 : payload.value() << (kMaxTaggedPayloadBits - len);
    const unsigned tail = kMaxTaggedPayloadBits - offset;
    const std::uint64_t head_bits = window >> tail;
    const std::uint64_t tail_bits = window & ((std::uint64_t{1} << tail) - 1);

    std::uint64_t field = tail_bits | (std::uint64_t{tag} << tail);
    if (offset > 0) field |= head_bits << (tail + kTagBits);
    return DataField64(field);
}

std::pair<BitString, std::uint16_t> unpack_payload_with_tag(DataField64 field, unsigned offset,
                                                             unsigned payload_len) {
    if (offset > kMaxTagOffset) throw OverflowError("tag offset out of range 0..53");
    if (payload_len > kMaxTaggedPayloadBits) throw OverflowError("payload length exceeds 53 bits");

    const unsigned tail = kMaxTaggedPayloadBits - offset;
    const std::uint64_t v = field.value();
    const auto tag = static_cast<std::uint16_t>((v >> tail) & CanId::kMax);
    const std::uint64_t tail_bits = v & ((std::uint64_t{1} << tail) - 1);
    const std::uint64_t head_bits = offset == 0 ? 0 : v >> (tail + kTagBits);
    const std::uint64_t window = (head_bits << tail) | tail_bits;
    const std::uint64_t payload = payload_len == 0 ? 0 : window >> (kMaxTaggedPayloadBits - payload_len);
    return {BitString(payload, payload_len), tag};
}

}  // namespace leap
