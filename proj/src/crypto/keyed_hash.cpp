#include "leap/crypto/keyed_hash.hpp"

#include <algorithm>

#include "leap/crypto/op_counters.hpp"
#include "leap/crypto/sha256.hpp"

namespace leap::crypto {

Digest256 hmac_sha256(std::span<const std::uint8_t> key, std::span<const std::uint8_t> data) noexcept {
    std::array<std::uint8_t, 64> block_key{};
    if (key.size() > block_key.size()) {
        const auto hashed = sha256(key);
        std::copy(hashed.begin(), hashed.end(), block_key.begin());
    } else {
        std::copy(key.begin(), key.end(), block_key.begin());
    }

    std::array<std::uint8_t, 64> pad{};
    for (std::size_t i = 0; i < pad.size(); ++i) pad[i] = block_key[i] ^ 0x36;
    Sha256 inner;
    inner.update(pad);
    inner.update(data);
    const auto inner_digest = inner.finish();

    for (std::size_t i = 0; i < pad.size(); ++i) pad[i] = block_key[i] ^ 0x5c;
    Sha256 outer;
    outer.update(pad);
    outer.update(inner_digest);
    return outer.finish();
}

Mac32 keyed_hash(std::span<const std::uint8_t> key, std::span<const std::uint8_t> data) noexcept {
    const auto digest = hmac_sha256(key, data);
    ++op_counters().keyed_hash;
    return Mac32{(std::uint32_t{digest[0]} << 24) | (std::uint32_t{digest[1]} << 16) |
                 (std::uint32_t{digest[2]} << 8) | digest[3]};
}

SymmetricKey128 kdf(const SymmetricKey128& lk_i, const SymmetricKey128& lk_j, const Block128& seed) noexcept {
    Sha256 h;
    h.update(lk_i.bytes);
    h.update(lk_j.bytes);
    h.update(seed);
    const auto digest = h.finish();
    SymmetricKey128 out;
    std::copy_n(digest.begin(), out.bytes.size(), out.bytes.begin());
    return out;
}

}  // namespace leap::crypto
