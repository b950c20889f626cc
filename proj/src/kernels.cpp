#include "leap/kernels.hpp"

#include <algorithm>
#include <atomic>
#include <numeric>

#include <omp.h>

#include "leap/crypto/rc4.hpp"
#include "leap/endpoint.hpp"
#include "leap/errors.hpp"

namespace leap::kernels {

namespace {

void check_problem(const KeySearchProblem& p) {
    if (p.key_template.size() < crypto::Rc4::kMinKeyBytes || p.key_template.size() > crypto::Rc4::kMaxKeyBytes)
        throw KeyLengthError("key template must be 5..64 bytes");
    if (p.unknown_bits > 64 || p.unknown_bits > 8 * p.key_template.size())
        throw Error("unknown key bits exceed the template");
}

void write_candidate(std::uint8_t* key, std::size_t len, unsigned unknown_bits, std::uint64_t candidate) {
    for (unsigned bit = 0; bit < unknown_bits; bit += 8) {
        const std::size_t byte = len - 1 - bit / 8;
        const unsigned width = std::min(8U, unknown_bits - bit);
        const auto mask = static_cast<std::uint8_t>((1U << width) - 1U);
        key[byte] = static_cast<std::uint8_t>((key[byte] & ~mask) | ((candidate >> bit) & mask));
    }
}

// Stack-only RC4 for the parallel loop: KSA plus the first eight bytes.
bool trial_matches(const std::uint8_t* key, std::size_t len, const std::uint8_t* expected) {
    std::uint8_t s[256];
    for (int i = 0; i < 256; ++i) s[i] = static_cast<std::uint8_t>(i);
    std::uint8_t j = 0;
    for (int i = 0; i < 256; ++i) {
        j = static_cast<std::uint8_t>(j + s[i] + key[i % len]);
        std::swap(s[i], s[j]);
    }
    std::uint8_t a = 0;
    std::uint8_t b = 0;
    for (int k = 0; k < 8; ++k) {
        a = static_cast<std::uint8_t>(a + 1);
        b = static_cast<std::uint8_t>(b + s[a]);
        std::swap(s[a], s[b]);
        if (s[static_cast<std::uint8_t>(s[a] + s[b])] != expected[k]) return false;
    }
    return true;
}

}  // namespace

std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

int max_threads() noexcept { return omp_get_max_threads(); }

std::vector<std::uint8_t> candidate_key(const KeySearchProblem& problem, std::uint64_t candidate) {
    check_problem(problem);
    auto key = problem.key_template;
    write_candidate(key.data(), key.size(), problem.unknown_bits, candidate);
    return key;
}

KeySearchResult key_search_ref(const KeySearchProblem& problem, std::uint64_t first, std::uint64_t count) {
    check_problem(problem);
    std::array<std::uint8_t, 8> expected{};
    for (int k = 0; k < 8; ++k) expected[k] = problem.plaintext[k] ^ problem.ciphertext[k];

    KeySearchResult result;
    for (std::uint64_t c = first; c < first + count; ++c) {
        ++result.trials;
        crypto::Rc4 rc4(candidate_key(problem, c));
        std::array<std::uint8_t, 8> ks{};
        rc4.generate(ks);
        if (ks == expected) {
            result.found = c;
            break;
        }
    }
    return result;
}

KeySearchResult key_search_omp(const KeySearchProblem& problem, std::uint64_t first, std::uint64_t count) {
    check_problem(problem);
    std::array<std::uint8_t, 8> expected{};
    for (int k = 0; k < 8; ++k) expected[k] = problem.plaintext[k] ^ problem.ciphertext[k];

    const std::size_t len = problem.key_template.size();
    const auto n = static_cast<std::int64_t>(count);
    std::atomic<std::uint64_t> best{~std::uint64_t{0}};
    std::uint64_t trials = 0;

#pragma omp parallel reduction(+ : trials)
    {
        std::array<std::uint8_t, 64> key{};
        std::copy(problem.key_template.begin(), problem.key_template.end(), key.begin());
#pragma omp for schedule(static)
        for (std::int64_t i = 0; i < n; ++i) {
            const std::uint64_t c = first + static_cast<std::uint64_t>(i);
            // Candidates above a known match cannot change the answer.
            if (c > best.load(std::memory_order_relaxed)) continue;
            ++trials;
            write_candidate(key.data(), len, problem.unknown_bits, c);
            if (trial_matches(key.data(), len, expected.data())) {
                std::uint64_t cur = best.load();
                while (c < cur && !best.compare_exchange_weak(cur, c)) {
                }
            }
        }
    }

    KeySearchResult result;
    result.trials = trials;
    if (best.load() != ~std::uint64_t{0}) result.found = best.load();
    return result;
}

std::uint64_t forgery_acceptances_ref(const crypto::SymmetricKey128& key, std::uint64_t ctr, CanId claimed_id,
                                      std::uint64_t trials, std::uint64_t seed) {
    LeapEndpoint receiver(CanId(0x7FF), claimed_id, Role::receiver);
    receiver.install_session(key);
    // Walk the counter up to `ctr` through the public interface.
    LeapEndpoint sender(claimed_id, CanId(0x7FF), Role::sender);
    sender.install_session(key);
    for (std::uint64_t i = 0; i < ctr; ++i) receiver.decrypt(sender.encrypt(BitString(0, 0)));

    std::uint64_t accepted = 0;
    for (std::uint64_t i = 0; i < trials; ++i) {
        const auto frame = CanFrame::from_u64(claimed_id, splitmix64(seed + i));
        if (receiver.probe(frame).accepted()) ++accepted;
    }
    return accepted;
}

std::uint64_t forgery_acceptances_omp(const crypto::SymmetricKey128& key, std::uint64_t ctr, CanId claimed_id,
                                      std::uint64_t trials, std::uint64_t seed) {
    const auto ks = message_keystream(key, ctr);
    const std::uint64_t mask = data_field_mask(ks);
    const unsigned shift = kMaxTaggedPayloadBits - insertion_offset(ks);
    // Accept iff the tag slot of data^mask de-obfuscates to the claimed id.
    const std::uint64_t want = obfuscate_id(claimed_id.value(), ks);
    const auto n = static_cast<std::int64_t>(trials);
    std::uint64_t accepted = 0;

#pragma omp parallel for reduction(+ : accepted) schedule(static)
    for (std::int64_t i = 0; i < n; ++i) {
        const std::uint64_t plain = splitmix64(seed + static_cast<std::uint64_t>(i)) ^ mask;
        accepted += ((plain >> shift) & CanId::kMax) == want ? 1 : 0;
    }
    return accepted;
}

}  // namespace leap::kernels
