#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "leap/can_frame.hpp"
#include "leap/crypto/types.hpp"

namespace leap::kernels {

/// Known-plaintext RC4 key search. Candidates replace the low `unknown_bits`
/// of `key_template` (big-endian tail); a candidate matches when its first
/// eight keystream bytes equal plaintext XOR ciphertext.
struct KeySearchProblem {
    std::vector<std::uint8_t> key_template;
    unsigned unknown_bits = 0;
    std::array<std::uint8_t, 8> plaintext{};
    std::array<std::uint8_t, 8> ciphertext{};
};

struct KeySearchResult {
    /// Lowest matching candidate in the searched range.
    std::optional<std::uint64_t> found;
    std::uint64_t trials = 0;
};

/// Key with `candidate` written into the template's low bits.
std::vector<std::uint8_t> candidate_key(const KeySearchProblem& problem, std::uint64_t candidate);

/// Serial reference: one crypto::Rc4 per candidate, stops at the first match.
KeySearchResult key_search_ref(const KeySearchProblem& problem, std::uint64_t first, std::uint64_t count);
/// OpenMP: same answer as the reference; `trials` counts every candidate the threads examined.
KeySearchResult key_search_omp(const KeySearchProblem& problem, std::uint64_t first, std::uint64_t count);

/// Forgery Monte Carlo against a fixed LEAP receiver state. Trial i submits
/// a data field drawn from splitmix64(seed + i) under `claimed_id`; returns
/// how many authenticate.
/// Reference path: LeapEndpoint::probe per trial (keystream regenerated each time).
std::uint64_t forgery_acceptances_ref(const crypto::SymmetricKey128& key, std::uint64_t ctr, CanId claimed_id,
                                      std::uint64_t trials, std::uint64_t seed);
/// OpenMP path: keystream hoisted, trials split across threads. Same count as the reference.
std::uint64_t forgery_acceptances_omp(const crypto::SymmetricKey128& key, std::uint64_t ctr, CanId claimed_id,
                                      std::uint64_t trials, std::uint64_t seed);

std::uint64_t splitmix64(std::uint64_t x) noexcept;

int max_threads() noexcept;

}  // namespace leap::kernels
