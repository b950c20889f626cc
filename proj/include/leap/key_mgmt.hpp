#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <span>
#include <vector>

#include "leap/can_frame.hpp"
#include "leap/crypto/types.hpp"
#include "leap/sim_time.hpp"

namespace leap {

// Key-management traffic occupies identifiers 0x000-0x00F; data ids start at 0x010.
inline constexpr CanId kSecureEcuId{0x000};
/// Announces the pair being updated: payload low_id (2 bytes) || high_id (2 bytes).
inline constexpr CanId kUpdateAnnounceId{0x000};
/// Request fragments 1..3 for the lower-id member use 0x001..0x003, for the higher-id member 0x004..0x006.
inline constexpr CanId kLowRequestBaseId{0x001};
inline constexpr CanId kHighRequestBaseId{0x004};
inline constexpr CanId kLowResponseId{0x007};
inline constexpr CanId kHighResponseId{0x008};
inline constexpr std::uint16_t kFirstDataId = 0x010;

inline constexpr unsigned kRequestPayloadBits = 160;
inline constexpr std::array<std::uint8_t, 3> kRequestFragmentDlc = {8, 8, 4};

/// Unordered communicating pair, stored as (lower id, higher id).
struct EcuPair {
    CanId low;
    CanId high;

    /// Throws ProvisioningError when a == b.
    static EcuPair of(CanId a, CanId b);
    bool contains(CanId id) const noexcept { return id == low || id == high; }
    CanId other(CanId id) const noexcept { return id == low ? high : low; }

    auto operator<=>(const EcuPair&) const = default;
};

struct SessionRecord {
    crypto::SymmetricKey128 key;
    std::uint64_t epoch = 0;
};

/// Secure-ECU key material: long-term keys, the pair table and active sessions.
class KeyStore {
public:
    void add_long_term(CanId id, const crypto::SymmetricKey128& key);
    void add_pair(CanId a, CanId b);

    const crypto::SymmetricKey128* long_term(CanId id) const;
    bool has_pair(const EcuPair& pair) const { return pairs_.contains(pair); }
    const std::set<EcuPair>& pairs() const noexcept { return pairs_; }
    const std::map<CanId, crypto::SymmetricKey128>& long_term_keys() const noexcept { return long_term_; }

    std::optional<SessionRecord> session(const EcuPair& pair) const;
    /// Installs `key` as the next epoch. Throws ProvisioningError for unknown pairs.
    std::uint64_t activate(const EcuPair& pair, const crypto::SymmetricKey128& key);

    /// Random long-term keys for `ecus`, pair table `pairs`.
    static KeyStore generate(std::span<const CanId> ecus, std::span<const EcuPair> pairs, std::uint64_t seed);

private:
    std::map<CanId, crypto::SymmetricKey128> long_term_;
    std::set<EcuPair> pairs_;
    std::map<EcuPair, SessionRecord> sessions_;
};

/// Key-store file: JSON with uppercase-hex long-term keys and the pair table.
void write_keystore(std::ostream& out, const KeyStore& store);
/// Throws ConfigError naming the offending field.
KeyStore read_keystore(std::istream& in);

struct KeyUpdateRequest {
    CanId target_id;
    crypto::Mac32 mac1;
    crypto::Block128 cipher{};

    /// mac1 (4 bytes) || cipher (16 bytes): 160 bits.
    std::array<std::uint8_t, 20> payload() const noexcept;

    bool operator==(const KeyUpdateRequest&) const = default;
};

struct KeyUpdateResponse {
    CanId source_id;
    crypto::Mac32 mac2;

    bool operator==(const KeyUpdateResponse&) const = default;
};

struct SessionIssue {
    EcuPair pair;
    crypto::SymmetricKey128 session_key;
    KeyUpdateRequest for_low;
    KeyUpdateRequest for_high;
};

/// MAC-1 over 2-byte big-endian id || cipher, keyed by the member's long-term key.
crypto::Mac32 request_mac(const crypto::SymmetricKey128& lk, CanId id, const crypto::Block128& cipher);
/// MAC-2 over the 2-byte big-endian id, keyed by the new session key.
crypto::Mac32 response_mac(const crypto::SymmetricKey128& sk, CanId id);

/// Derives the session key for `pair` from both long-term keys and `seed`,
/// and builds one authenticated request per member. The kdf key order is
/// (low, high). Throws ProvisioningError for unknown pairs or missing keys.
SessionIssue generate_session(const KeyStore& store, const EcuPair& pair, const crypto::Block128& seed);

struct RequestResult {
    enum class Status { installed, rejected, ignored };

    Status status = Status::ignored;
    crypto::SymmetricKey128 session_key{};
    std::optional<KeyUpdateResponse> response;
};

/// General-ECU side: verify MAC-1, decrypt the session key, answer with MAC-2.
RequestResult process_request(const crypto::SymmetricKey128& lk, CanId self_id, const KeyUpdateRequest& req);

/// Three frames of dlc 8, 8, 4 under `base_id`, `base_id`+1, `base_id`+2.
std::array<CanFrame, 3> segment_request(const KeyUpdateRequest& req, CanId base_id);
/// Throws ReassemblyError on missing, extra or out-of-order fragments.
KeyUpdateRequest reassemble_request(std::span<const CanFrame> frames, CanId base_id, CanId target_id);

CanFrame announce_frame(const EcuPair& pair);
EcuPair parse_announce(const CanFrame& frame);
CanFrame response_frame(const KeyUpdateResponse& resp, CanId frame_id);

enum class ResponseOutcome { awaiting_peer, activated, failed, no_pending };

/// Secure-ECU state for in-flight updates: issues sessions, verifies
/// responses and switches epochs only after both members confirm.
class KeyDistributor {
public:
    KeyDistributor(KeyStore store, std::uint64_t seed, unsigned max_retries = 1);

    /// Draws a fresh seed and issues a session for `pair`.
    SessionIssue begin_update(const EcuPair& pair);
    ResponseOutcome verify_response(const KeyUpdateResponse& resp);
    /// Deadline passed without both confirmations. Returns a re-issued update
    /// while retries remain, otherwise marks the update failed.
    std::optional<SessionIssue> on_timeout(const EcuPair& pair);

    bool pending(const EcuPair& pair) const { return pending_.contains(pair); }
    const KeyStore& store() const noexcept { return store_; }
    std::uint64_t activated_count() const noexcept { return activated_; }
    std::uint64_t failed_count() const noexcept { return failed_; }

private:
    struct Pending {
        SessionIssue issue;
        bool low_confirmed = false;
        bool high_confirmed = false;
        unsigned attempts = 1;
    };

    crypto::Block128 draw_seed();

    KeyStore store_;
    std::mt19937_64 rng_;
    unsigned max_retries_;
    std::map<EcuPair, Pending> pending_;
    std::uint64_t activated_ = 0;
    std::uint64_t failed_ = 0;
};

struct ScheduledUpdate {
    EcuPair pair;
    SimTime start;

    bool operator==(const ScheduledUpdate&) const = default;
};

/// One pair at a time, ordered by (low id, high id), `gap` apart from `clock`.
std::vector<ScheduledUpdate> schedule_updates(const KeyStore& store, SimTime clock, SimTime gap);

struct KeyUpdateTiming {
    double secure_processing_ms = 70.2;
    double general_processing_ms = 15.9;
    double frame_interval_ms = 50.0;
    double bit_rate = 500'000.0;
    FrameTiming frame_timing{};
};

/// Closed-form duration of one pair's exchange: secure processing, two
/// fragment-round intervals, member processing, and the final fragment round
/// plus response on the wire. Only exact when the interval exceeds one round's
/// wire time and member processing exceeds one frame time; the simulated
/// value (update_cycle_time_ms in rekey.hpp) holds in every regime.
double update_cycle_time_closed_form_ms(const KeyUpdateTiming& timing);

}  // namespace leap
