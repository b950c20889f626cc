#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace leap::crypto {

/// RC4 stream cipher state: KSA on construction, PRGA on demand.
class Rc4 {
public:
    static constexpr std::size_t kMinKeyBytes = 5;
    static constexpr std::size_t kMaxKeyBytes = 64;

    /// Throws KeyLengthError unless 5 <= key.size() <= 64.
    explicit Rc4(std::span<const std::uint8_t> key);

    std::uint8_t next() noexcept;
    void generate(std::span<std::uint8_t> out) noexcept;

    const std::array<std::uint8_t, 256>& permutation() const noexcept { return s_; }
    std::uint8_t i() const noexcept { return i_; }
    std::uint8_t j() const noexcept { return j_; }

private:
    std::array<std::uint8_t, 256> s_{};
    std::uint8_t i_ = 0;
    std::uint8_t j_ = 0;
};

std::vector<std::uint8_t> rc4_keystream(std::span<const std::uint8_t> key, std::size_t n);

/// One-shot keystream into `out`: same bytes as Rc4(key).generate(out), without
/// keeping the state around. Word-sized state; this is the per-message hot path.
void rc4_keystream_into(std::span<const std::uint8_t> key, std::span<std::uint8_t> out);

}  // namespace leap::crypto
