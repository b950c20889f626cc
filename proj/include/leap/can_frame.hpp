#pragma once

#include <array>
#include <chrono>
#include <compare>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace leap {

/// 11-bit CAN base identifier. Lower value means higher bus priority.
class CanId {
public:
    static constexpr std::uint16_t kMax = 0x7FF;

    constexpr CanId() = default;
    /// Throws InvalidFrame when `value` does not fit in 11 bits.
    constexpr explicit CanId(std::uint16_t value) : value_(value) {
        if (value > kMax) throw_out_of_range(value);
    }

    constexpr std::uint16_t value() const noexcept { return value_; }

    constexpr auto operator<=>(const CanId&) const = default;

private:
    [[noreturn]] static void throw_out_of_range(std::uint16_t value);

    std::uint16_t value_ = 0;
};

/// Three uppercase hex digits, as in the `ID#HEXDATA` encoding.
std::string format_id(CanId id);

/// Simulation bookkeeping carried alongside a frame; never part of frame equality.
struct FrameMeta {
    std::chrono::nanoseconds enqueued{0};
    std::optional<CanId> origin;
};

/// Base-format data frame: identifier, DLC and up to eight data bytes.
class CanFrame {
public:
    static constexpr std::size_t kMaxDlc = 8;

    CanFrame() = default;
    CanFrame(CanId id, std::span<const std::uint8_t> data);

    /// Eight-byte frame whose data field is `data` in big-endian byte order.
    static CanFrame from_u64(CanId id, std::uint64_t data);

    /// Parses the `ID#HEXDATA` log encoding.
    static CanFrame parse(std::string_view text);

    CanId id() const noexcept { return id_; }
    std::uint8_t dlc() const noexcept { return dlc_; }
    std::span<const std::uint8_t> data() const noexcept { return {data_.data(), dlc_}; }

    /// Data bytes as a big-endian integer, first byte most significant.
    std::uint64_t data_u64() const noexcept;

    /// `ID#HEXDATA`, three uppercase hex digits for the id.
    std::string to_text() const;

    bool operator==(const CanFrame& other) const noexcept {
        return id_ == other.id_ && dlc_ == other.dlc_ && data_ == other.data_;
    }

    FrameMeta meta;

private:
    CanId id_;
    std::uint8_t dlc_ = 0;
    std::array<std::uint8_t, kMaxDlc> data_{};
};

/// Bit sequence of up to 64 bits. Stored right-aligned in `value()`; bit 0 is
/// the most significant of the `size()` live bits.
class BitString {
public:
    static constexpr unsigned kMaxBits = 64;

    constexpr BitString() = default;
    BitString(std::uint64_t value, unsigned length);

    /// 8 bits per byte, first byte first; at most 8 bytes.
    static BitString from_bytes(std::span<const std::uint8_t> bytes);

    std::uint64_t value() const noexcept { return value_; }
    unsigned size() const noexcept { return length_; }
    bool empty() const noexcept { return length_ == 0; }
    bool bit(unsigned index) const noexcept { return (value_ >> (length_ - 1 - index)) & 1U; }

    /// Packs bits MSB-first into bytes; a partial final byte is zero-padded.
    std::vector<std::uint8_t> to_bytes() const;

    bool operator==(const BitString&) const = default;

private:
    std::uint64_t value_ = 0;
    unsigned length_ = 0;
};

/// The 64-bit CAN data field. Bit index 0 is the most significant bit.
class DataField64 {
public:
    constexpr DataField64() = default;
    constexpr explicit DataField64(std::uint64_t bits) : bits_(bits) {}

    constexpr std::uint64_t value() const noexcept { return bits_; }
    constexpr bool bit(unsigned index) const noexcept { return (bits_ >> (63 - index)) & 1U; }

    constexpr bool operator==(const DataField64&) const = default;

private:
    std::uint64_t bits_ = 0;
};

inline constexpr unsigned kDataFieldBits = 64;
inline constexpr unsigned kTagBits = 11;
inline constexpr unsigned kMaxTaggedPayloadBits = kDataFieldBits - kTagBits;  // 53
inline constexpr unsigned kMaxTagOffset = kMaxTaggedPayloadBits;  // offsets 0..53

/// Wire-length model: ceil((base_overhead_bits + 8 * dlc) * stuff_factor).
struct FrameTiming {
    double base_overhead_bits = 47.0;
    double stuff_factor = 1.0234;
};

/// Throws InvalidFrame for dlc > 8 and leap::Error for stuff_factor < 1.
std::uint32_t frame_bits(unsigned dlc, const FrameTiming& timing = {});

/// Contenders sorted by ascending identifier; the first one wins the bus.
/// Throws SimulationError on an empty set or duplicate identifiers.
std::vector<CanFrame> arbitration_order(std::span<const CanFrame> contenders);

/// Places the 11-bit `tag` at bit positions offset..offset+10 and fills the
/// remaining positions with `payload` in ascending index order. Unused
/// trailing positions are zero.
DataField64 pack_payload_with_tag(const BitString& payload, std::uint16_t tag, unsigned offset);

/// Inverse of pack_payload_with_tag. Returns (payload, tag).
std::pair<BitString, std::uint16_t> unpack_payload_with_tag(DataField64 field, unsigned offset,
                                                             unsigned payload_len);

}  // namespace leap
