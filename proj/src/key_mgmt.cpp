#include "leap/key_mgmt.hpp"

#include <algorithm>
#include <istream>
#include <ostream>

#include <json.hpp>

#include "leap/crypto/aes128.hpp"
#include "leap/crypto/keyed_hash.hpp"
#include "leap/errors.hpp"
#include "leap/hex.hpp"

namespace leap {

namespace {

std::array<std::uint8_t, 2> id_bytes(CanId id) {
    return {static_cast<std::uint8_t>(id.value() >> 8), static_cast<std::uint8_t>(id.value())};
}

CanId parse_id(const std::string& text, const std::string& field) {
    if (text.empty() || text.size() > 3) throw ConfigError(field, "identifier '" + text + "' is not 1-3 hex digits");
    unsigned long v = 0;
    try {
        std::size_t used = 0;
        v = std::stoul(text, &used, 16);
        if (used != text.size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
        throw ConfigError(field, "identifier '" + text + "' is not hex");
    }
    if (v > CanId::kMax) throw ConfigError(field, "identifier '" + text + "' exceeds 0x7FF");
    return CanId(static_cast<std::uint16_t>(v));
}

void fill_random(std::mt19937_64& rng, std::span<std::uint8_t> out) {
    for (std::size_t i = 0; i < out.size(); i += 8) {
        const auto word = rng();
        for (std::size_t k = 0; k < 8 && i + k < out.size(); ++k)
            out[i + k] = static_cast<std::uint8_t>(word >> (56 - 8 * k));
    }
}

}  // namespace

EcuPair EcuPair::of(CanId a, CanId b) {
    if (a == b) throw ProvisioningError("an ECU cannot pair with itself");
    return a < b ? EcuPair{a, b} : EcuPair{b, a};
}

void KeyStore::add_long_term(CanId id, const crypto::SymmetricKey128& key) { long_term_[id] = key; }

void KeyStore::add_pair(CanId a, CanId b) { pairs_.insert(EcuPair::of(a, b)); }

const crypto::SymmetricKey128* KeyStore::long_term(CanId id) const {
    const auto it = long_term_.find(id);
    return it == long_term_.end() ? nullptr : &it->second;
}

std::optional<SessionRecord> KeyStore::session(const EcuPair& pair) const {
    const auto it = sessions_.find(pair);
    if (it == sessions_.end()) return std::nullopt;
    return it->second;
}

std::uint64_t KeyStore::activate(const EcuPair& pair, const crypto::SymmetricKey128& key) {
    if (!has_pair(pair)) throw ProvisioningError("pair " + format_id(pair.low) + "-" + format_id(pair.high) + " not in pair table");
    auto& record = sessions_[pair];
    record.key = key;
    return ++record.epoch;
}

KeyStore KeyStore::generate(std::span<const CanId> ecus, std::span<const EcuPair> pairs, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    KeyStore store;
    for (auto id : ecus) {
        crypto::SymmetricKey128 key;
        fill_random(rng, key.bytes);
        store.add_long_term(id, key);
    }
    for (const auto& p : pairs) {
        if (!store.long_term(p.low) || !store.long_term(p.high))
            throw ProvisioningError("pair " + format_id(p.low) + "-" + format_id(p.high) + " references an unknown ECU");
        store.add_pair(p.low, p.high);
    }
    return store;
}

void write_keystore(std::ostream& out, const KeyStore& store) {
    nlohmann::ordered_json doc;
    doc["format"] = "leap-keystore/1";
    nlohmann::ordered_json keys = nlohmann::ordered_json::object();
    for (const auto& [id, key] : store.long_term_keys()) keys[format_id(id)] = key.to_hex();
    doc["long_term_keys"] = keys;
    nlohmann::ordered_json pairs = nlohmann::ordered_json::array();
    for (const auto& p : store.pairs()) pairs.push_back({format_id(p.low), format_id(p.high)});
    doc["pairs"] = pairs;
    out << doc.dump(2) << '\n';
}

KeyStore read_keystore(std::istream& in) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("keystore", std::string("not valid JSON: ") + e.what());
    }
    if (!doc.contains("long_term_keys") || !doc["long_term_keys"].is_object())
        throw ConfigError("long_term_keys", "missing or not an object");
    KeyStore store;
    for (const auto& [id, hex] : doc["long_term_keys"].items()) {
        const std::string field = "long_term_keys." + id;
        if (!hex.is_string()) throw ConfigError(field, "key must be a hex string");
        try {
            store.add_long_term(parse_id(id, field), crypto::SymmetricKey128::from_hex(hex.get<std::string>()));
        } catch (const ConfigError&) {
            throw;
        } catch (const Error& e) {
            throw ConfigError(field, e.what());
        }
    }
    if (!doc.contains("pairs") || !doc["pairs"].is_array()) throw ConfigError("pairs", "missing or not an array");
    for (std::size_t i = 0; i < doc["pairs"].size(); ++i) {
        const auto& entry = doc["pairs"][i];
        const std::string field = "pairs[" + std::to_string(i) + "]";
        if (!entry.is_array() || entry.size() != 2 || !entry[0].is_string() || !entry[1].is_string())
            throw ConfigError(field, "expected [\"ID\", \"ID\"]");
        const auto a = parse_id(entry[0].get<std::string>(), field);
        const auto b = parse_id(entry[1].get<std::string>(), field);
        if (!store.long_term(a) || !store.long_term(b)) throw ConfigError(field, "references an ECU without a long-term key");
        if (a == b) throw ConfigError(field, "an ECU cannot pair with itself");
        store.add_pair(a, b);
    }
    return store;
}

std::array<std::uint8_t, 20> KeyUpdateRequest::payload() const noexcept {
    std::array<std::uint8_t, 20> out{};
    for (int i = 0; i < 4; ++i) out[i] = static_cast<std::uint8_t>(mac1.tag >> (24 - 8 * i));
    std::copy(cipher.begin(), cipher.end(), out.begin() + 4);
    return out;
}

crypto::Mac32 request_mac(const crypto::SymmetricKey128& lk, CanId id, const crypto::Block128& cipher) {
    std::array<std::uint8_t, 18> input{};
    const auto idb = id_bytes(id);
    std::copy(idb.begin(), idb.end(), input.begin());
    std::copy(cipher.begin(), cipher.end(), input.begin() + 2);
    return crypto::keyed_hash(lk.bytes, input);
}

crypto::Mac32 response_mac(const crypto::SymmetricKey128& sk, CanId id) {
    return crypto::keyed_hash(sk.bytes, id_bytes(id));
}

SessionIssue generate_session(const KeyStore& store, const EcuPair& pair, const crypto::Block128& seed) {
    if (!store.has_pair(pair))
        throw ProvisioningError("pair " + format_id(pair.low) + "-" + format_id(pair.high) + " not in pair table");
    const auto* lk_low = store.long_term(pair.low);
    const auto* lk_high = store.long_term(pair.high);
    if (!lk_low || !lk_high) throw ProvisioningError("missing long-term key for pair member");

    SessionIssue issue;
    issue.pair = pair;
    issue.session_key = crypto::kdf(*lk_low, *lk_high, seed);
    const auto make = [&](CanId id, const crypto::SymmetricKey128& lk) {
        KeyUpdateRequest req;
        req.target_id = id;
        req.cipher = crypto::Aes128(lk).encrypt(issue.session_key.bytes);
        req.mac1 = request_mac(lk, id, req.cipher);
        return req;
    };
    issue.for_low = make(pair.low, *lk_low);
    issue.for_high = make(pair.high, *lk_high);
    return issue;
}

RequestResult process_request(const crypto::SymmetricKey128& lk, CanId self_id, const KeyUpdateRequest& req) {
    RequestResult result;
    if (req.target_id != self_id) return result;
    if (request_mac(lk, self_id, req.cipher) != req.mac1) {
        result.status = RequestResult::Status::rejected;
        return result;
    }
    const auto plain = crypto::Aes128(lk).decrypt(req.cipher);
    result.status = RequestResult::Status::installed;
    result.session_key = crypto::SymmetricKey128::from_span(plain);
    result.response = KeyUpdateResponse{self_id, response_mac(result.session_key, self_id)};
    return result;
}

std::array<CanFrame, 3> segment_request(const KeyUpdateRequest& req, CanId base_id) {
    const auto payload = req.payload();
    const std::span<const std::uint8_t> bytes(payload);
    const auto id = [&](int k) { return CanId(static_cast<std::uint16_t>(base_id.value() + k)); };
    return {CanFrame(id(0), bytes.subspan(0, 8)), CanFrame(id(1), bytes.subspan(8, 8)),
            CanFrame(id(2), bytes.subspan(16, 4))};
}

KeyUpdateRequest reassemble_request(std::span<const CanFrame> frames, CanId base_id, CanId target_id) {
    if (frames.size() != kRequestFragmentDlc.size())
        throw ReassemblyError("expected 3 request fragments, got " + std::to_string(frames.size()));
    std::array<std::uint8_t, 20> payload{};
    std::size_t pos = 0;
    for (std::size_t k = 0; k < frames.size(); ++k) {
        if (frames[k].id().value() != base_id.value() + k || frames[k].dlc() != kRequestFragmentDlc[k])
            throw ReassemblyError("fragment " + std::to_string(k + 1) + " missing or out of order (got " +
                                  frames[k].to_text() + ")");
        std::copy(frames[k].data().begin(), frames[k].data().end(), payload.begin() + pos);
        pos += frames[k].dlc();
    }
    KeyUpdateRequest req;
    req.target_id = target_id;
    req.mac1.tag = (std::uint32_t{payload[0]} << 24) | (std::uint32_t{payload[1]} << 16) |
                   (std::uint32_t{payload[2]} << 8) | payload[3];
    std::copy(payload.begin() + 4, payload.end(), req.cipher.begin());
    return req;
}

CanFrame announce_frame(const EcuPair& pair) {
    const auto lo = id_bytes(pair.low);
    const auto hi = id_bytes(pair.high);
    const std::array<std::uint8_t, 4> data = {lo[0], lo[1], hi[0], hi[1]};
    return CanFrame(kUpdateAnnounceId, data);
}

EcuPair parse_announce(const CanFrame& frame) {
    if (frame.id() != kUpdateAnnounceId || frame.dlc() != 4) throw InvalidFrame("not an update announcement");
    const auto d = frame.data();
    return EcuPair::of(CanId(static_cast<std::uint16_t>((d[0] << 8) | d[1])),
                       CanId(static_cast<std::uint16_t>((d[2] << 8) | d[3])));
}

CanFrame response_frame(const KeyUpdateResponse& resp, CanId frame_id) {
    const std::array<std::uint8_t, 4> data = {
        static_cast<std::uint8_t>(resp.mac2.tag >> 24), static_cast<std::uint8_t>(resp.mac2.tag >> 16),
        static_cast<std::uint8_t>(resp.mac2.tag >> 8), static_cast<std::uint8_t>(resp.mac2.tag)};
    return CanFrame(frame_id, data);
}

KeyDistributor::KeyDistributor(KeyStore store, std::uint64_t seed, unsigned max_retries)
    : store_(std::move(store)), rng_(seed), max_retries_(max_retries) {}

crypto::Block128 KeyDistributor::draw_seed() {
    crypto::Block128 seed{};
    fill_random(rng_, seed);
    return seed;
}

SessionIssue KeyDistributor::begin_update(const EcuPair& pair) {
    auto issue = generate_session(store_, pair, draw_seed());
    pending_[pair] = Pending{issue};
    return issue;
}

ResponseOutcome KeyDistributor::verify_response(const KeyUpdateResponse& resp) {
    const auto it = std::find_if(pending_.begin(), pending_.end(),
                                 [&](const auto& entry) { return entry.first.contains(resp.source_id); });
    if (it == pending_.end()) return ResponseOutcome::no_pending;
    auto& p = it->second;
    if (response_mac(p.issue.session_key, resp.source_id) != resp.mac2) {
        ++failed_;
        pending_.erase(it);
        return ResponseOutcome::failed;
    }
    (resp.source_id == p.issue.pair.low ? p.low_confirmed : p.high_confirmed) = true;
    if (!(p.low_confirmed && p.high_confirmed)) return ResponseOutcome::awaiting_peer;
    store_.activate(p.issue.pair, p.issue.session_key);
    ++activated_;
    pending_.erase(it);
    return ResponseOutcome::activated;
}

std::optional<SessionIssue> KeyDistributor::on_timeout(const EcuPair& pair) {
    const auto it = pending_.find(pair);
    if (it == pending_.end()) return std::nullopt;
    if (it->second.attempts > max_retries_) {
        ++failed_;
        pending_.erase(it);
        return std::nullopt;
    }
    const unsigned attempts = it->second.attempts + 1;
    auto issue = generate_session(store_, pair, draw_seed());
    it->second = Pending{issue};
    it->second.attempts = attempts;
    return issue;
}

std::vector<ScheduledUpdate> schedule_updates(const KeyStore& store, SimTime clock, SimTime gap) {
    std::vector<ScheduledUpdate> out;
    out.reserve(store.pairs().size());
    SimTime t = clock;
    for (const auto& pair : store.pairs()) {  // std::set orders by (low, high)
        out.push_back({pair, t});
        t += gap;
    }
    return out;
}

double update_cycle_time_closed_form_ms(const KeyUpdateTiming& timing) {
    const SimTime short_frame = bits_to_time(frame_bits(4, timing.frame_timing), timing.bit_rate);
    return timing.secure_processing_ms + 2.0 * timing.frame_interval_ms + timing.general_processing_ms +
           3.0 * to_ms(short_frame);
}

}  // namespace leap
