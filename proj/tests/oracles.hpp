#pragma once

// Independent reference computations shared by the unit tests. Nothing here
// calls into the library's crypto or packing code.

#include <cstdint>
#include <numeric>
#include <utility>
#include <vector>

namespace oracle {

inline std::vector<std::uint8_t> rc4(const std::vector<std::uint8_t>& key, std::size_t n) {
    int s[256];
    std::iota(s, s + 256, 0);
    for (int i = 0, j = 0; i < 256; ++i) {
        j = (j + s[i] + key[i % key.size()]) % 256;
        std::swap(s[i], s[j]);
    }
    std::vector<std::uint8_t> out;
    for (int i = 0, j = 0; out.size() < n;) {
        i = (i + 1) % 256;
        j = (j + s[i]) % 256;
        std::swap(s[i], s[j]);
        out.push_back(static_cast<std::uint8_t>(s[(s[i] + s[j]) % 256]));
    }
    return out;
}

/// Tag bits at positions offset..offset+10 (MSB = position 0), payload bits in
/// the remaining positions in order, zero fill.
inline std::uint64_t pack(std::uint64_t payload, unsigned payload_bits, std::uint16_t tag, unsigned offset) {
    std::uint64_t out = 0;
    unsigned next = 0;
    for (unsigned pos = 0; pos < 64; ++pos) {
        bool bit = false;
        if (pos >= offset && pos < offset + 11) {
            bit = (tag >> (10 - (pos - offset))) & 1U;
        } else if (next < payload_bits) {
            bit = (payload >> (payload_bits - 1 - next)) & 1U;
            ++next;
        }
        if (bit) out |= std::uint64_t{1} << (63 - pos);
    }
    return out;
}

/// LEAP data field for (key, ctr, sender id, payload), computed from scratch.
inline std::uint64_t leap_cm(const std::uint8_t (&key)[16], std::uint64_t ctr, std::uint16_t id, std::uint64_t payload,
                             unsigned payload_bits) {
    std::vector<std::uint8_t> rc4_key(key, key + 16);
    for (int i = 7; i >= 0; --i) rc4_key.push_back(static_cast<std::uint8_t>(ctr >> (8 * i)));
    const auto k = rc4(rc4_key, 256);
    const auto hidden = static_cast<std::uint16_t>(id ^ (((k[0] << 8) | k[24]) >> 5));
    const unsigned offset = k[24] % 54;
    std::uint64_t mask = 0;
    for (int i = 0; i < 8; ++i) mask = (mask << 8) | k[72 + 24 * i];
    return pack(payload, payload_bits, hidden, offset) ^ mask;
}

}  // namespace oracle
