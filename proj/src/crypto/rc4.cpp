#include "leap/crypto/rc4.hpp"

#include <numeric>
#include <utility>

#include "leap/crypto/op_counters.hpp"
#include "leap/errors.hpp"

namespace leap::crypto {

Rc4::Rc4(std::span<const std::uint8_t> key) {
    if (key.size() < kMinKeyBytes || key.size() > kMaxKeyBytes)
        throw KeyLengthError("RC4 key must be 5..64 bytes, got " + std::to_string(key.size()));
    std::iota(s_.begin(), s_.end(), std::uint8_t{0});
    std::uint8_t j = 0;
    for (std::size_t i = 0, k = 0; i < 256; ++i) {
        j = static_cast<std::uint8_t>(j + s_[i] + key[k]);
        std::swap(s_[i], s_[j]);
        if (++k == key.size()) k = 0;
    }
    ++op_counters().ksa;
}

std::uint8_t Rc4::next() noexcept {
    i_ = static_cast<std::uint8_t>(i_ + 1);
    j_ = static_cast<std::uint8_t>(j_ + s_[i_]);
    std::swap(s_[i_], s_[j_]);
    ++op_counters().prga_bytes;
    return s_[static_cast<std::uint8_t>(s_[i_] + s_[j_])];
}

void Rc4::generate(std::span<std::uint8_t> out) noexcept {
    // Same steps as next(), with the counter bumped once per call.
    std::uint8_t i = i_;
    std::uint8_t j = j_;
    for (auto& b : out) {
        i = static_cast<std::uint8_t>(i + 1);
        j = static_cast<std::uint8_t>(j + s_[i]);
        std::swap(s_[i], s_[j]);
        b = s_[static_cast<std::uint8_t>(s_[i] + s_[j])];
    }
    i_ = i;
    j_ = j;
    op_counters().prga_bytes += out.size();
}

std::vector<std::uint8_t> rc4_keystream(std::span<const std::uint8_t> key, std::size_t n) {
    std::vector<std::uint8_t> out(n);
    rc4_keystream_into(key, out);
    return out;
}

void rc4_keystream_into(std::span<const std::uint8_t> key, std::span<std::uint8_t> out) {
    if (key.size() < Rc4::kMinKeyBytes || key.size() > Rc4::kMaxKeyBytes)
        throw KeyLengthError("RC4 key must be 5..64 bytes, got " + std::to_string(key.size()));
    std::uint32_t s[256];
    for (std::uint32_t i = 0; i < 256; ++i) s[i] = i;
    std::uint32_t j = 0;
    for (std::size_t i = 0, k = 0; i < 256; ++i) {
        const auto t = s[i];
        j = (j + t + key[k]) & 0xFF;
        s[i] = s[j];
        s[j] = t;
        if (++k == key.size()) k = 0;
    }
    std::uint32_t x = 0;
    j = 0;
    for (auto& b : out) {
        x = (x + 1) & 0xFF;
        const auto t = s[x];
        j = (j + t) & 0xFF;
        s[x] = s[j];
        s[j] = t;
        b = static_cast<std::uint8_t>(s[(s[x] + t) & 0xFF]);
    }
    auto& c = op_counters();
    ++c.ksa;
    c.prga_bytes += out.size();
}

}  // namespace leap::crypto
