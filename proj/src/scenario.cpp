#include "leap/scenario.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include "leap/errors.hpp"
#include "leap/kernels.hpp"

namespace leap {

using nlohmann::json;

namespace {

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

void check_keys(const json& j, const std::string& path, std::initializer_list<const char*> allowed) {
    if (!j.is_object()) throw ConfigError(path.empty() ? "<root>" : path, "expected an object");
    for (const auto& [key, value] : j.items()) {
        bool ok = false;
        for (const char* a : allowed) ok = ok || key == a;
        if (!ok) throw ConfigError(join(path, key), "unknown field");
    }
}

double number(const json& j, const std::string& key, const std::string& path, double fallback) {
    if (!j.contains(key)) return fallback;
    const auto& v = j.at(key);
    if (!v.is_number()) throw ConfigError(join(path, key), "expected a number");
    return v.get<double>();
}

double positive(const json& j, const std::string& key, const std::string& path, double fallback) {
    const double v = number(j, key, path, fallback);
    if (!(v > 0.0)) throw ConfigError(join(path, key), "must be > 0");
    return v;
}

double non_negative(const json& j, const std::string& key, const std::string& path, double fallback) {
    const double v = number(j, key, path, fallback);
    if (!(v >= 0.0)) throw ConfigError(join(path, key), "must be >= 0");
    return v;
}

std::uint64_t count(const json& j, const std::string& key, const std::string& path, std::uint64_t fallback) {
    if (!j.contains(key)) return fallback;
    const auto& v = j.at(key);
    if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0))
        throw ConfigError(join(path, key), "expected a non-negative integer");
    return v.get<std::uint64_t>();
}

std::string text(const json& j, const std::string& key, const std::string& path, const std::string& fallback) {
    if (!j.contains(key)) return fallback;
    if (!j.at(key).is_string()) throw ConfigError(join(path, key), "expected a string");
    return j.at(key).get<std::string>();
}

bool flag(const json& j, const std::string& key, const std::string& path, bool fallback) {
    if (!j.contains(key)) return fallback;
    if (!j.at(key).is_boolean()) throw ConfigError(join(path, key), "expected true or false");
    return j.at(key).get<bool>();
}

CanId parse_id_value(const json& v, const std::string& path) {
    try {
        if (v.is_string()) {
            const auto s = v.get<std::string>();
            std::size_t used = 0;
            const auto value = std::stoul(s, &used, 16);
            if (used != s.size() || value > CanId::kMax) throw ConfigError(path, "");
            return CanId(static_cast<std::uint16_t>(value));
        }
        if (v.is_number_unsigned() && v.get<std::uint64_t>() <= CanId::kMax)
            return CanId(static_cast<std::uint16_t>(v.get<std::uint64_t>()));
    } catch (const std::exception&) {
    }
    throw ConfigError(path, "expected an 11-bit identifier (hex string such as \"010\")");
}

CanId id(const json& j, const std::string& key, const std::string& path, CanId fallback) {
    if (!j.contains(key)) return fallback;
    return parse_id_value(j.at(key), join(path, key));
}

sim::DecryptPolicy parse_policy(const std::string& s, const std::string& path) {
    if (s == "all_frames") return sim::DecryptPolicy::all_frames;
    if (s == "session_ids") return sim::DecryptPolicy::session_ids;
    throw ConfigError(path, "expected all_frames or session_ids, got '" + s + "'");
}

sim::Protocol protocol_field(const json& j, const std::string& path, sim::Protocol fallback) {
    if (!j.contains("protocol")) return fallback;
    try {
        return sim::parse_protocol(text(j, "protocol", path, ""));
    } catch (const ConfigError& e) {
        if (e.field() == join(path, "protocol")) throw;
        throw ConfigError(join(path, "protocol"), "expected LEAP or AMEAP");
    }
}

BitString parse_payload(const json& v, const std::string& path, unsigned payload_bits) {
    if (!v.is_string()) throw ConfigError(path, "expected a hex string");
    const auto s = v.get<std::string>();
    std::uint64_t value = 0;
    std::size_t used = 0;
    try {
        value = std::stoull(s, &used, 16);
    } catch (const std::exception&) {
        used = 0;
    }
    if (s.empty() || used != s.size()) throw ConfigError(path, "expected a hex string");
    if (payload_bits < 64 && (value >> payload_bits) != 0)
        throw ConfigError(path, "wider than channel.payload_bits (" + std::to_string(payload_bits) + ")");
    return BitString(value, payload_bits);
}

}  // namespace

sim::BusConfig parse_bus(const json& j, const std::string& path) {
    check_keys(j, path, {"bit_rate", "stuff_factor", "base_overhead_bits", "processing"});
    sim::BusConfig bus;
    bus.bit_rate = positive(j, "bit_rate", path, bus.bit_rate);
    bus.timing.stuff_factor = number(j, "stuff_factor", path, bus.timing.stuff_factor);
    if (!(bus.timing.stuff_factor >= 1.0)) throw ConfigError(join(path, "stuff_factor"), "must be >= 1");
    bus.timing.base_overhead_bits = positive(j, "base_overhead_bits", path, bus.timing.base_overhead_bits);
    if (j.contains("processing")) {
        const auto ppath = join(path, "processing");
        const auto& p = j.at("processing");
        if (!p.is_object()) throw ConfigError(ppath, "expected an object keyed by node id");
        for (const auto& [key, value] : p.items()) {
            const auto npath = join(ppath, key);
            const auto node = parse_id_value(json(key), npath);
            check_keys(value, npath, {"send_us", "recv_us"});
            bus.processing[node] = {from_ms(non_negative(value, "send_us", npath, 0.0) / 1000.0),
                                    from_ms(non_negative(value, "recv_us", npath, 0.0) / 1000.0)};
        }
    }
    return bus;
}

ChannelConfig parse_channel(const json& j, const std::string& path) {
    check_keys(j, path, {"payload_bits", "lookahead", "session_limit"});
    ChannelConfig c;
    c.payload_bits = static_cast<unsigned>(count(j, "payload_bits", path, c.payload_bits));
    if (c.payload_bits == 0 || c.payload_bits > 64) throw ConfigError(join(path, "payload_bits"), "must be 1..64");
    c.lookahead = static_cast<unsigned>(count(j, "lookahead", path, c.lookahead));
    if (c.lookahead > 1024) throw ConfigError(join(path, "lookahead"), "must be <= 1024");
    c.session_limit = count(j, "session_limit", path, c.session_limit);
    if (c.session_limit == 0) throw ConfigError(join(path, "session_limit"), "must be > 0");
    return c;
}

KeyUpdateTiming parse_key_update_timing(const json& j, const std::string& path) {
    KeyUpdateTiming t;
    t.secure_processing_ms = non_negative(j, "secure_processing_ms", path, t.secure_processing_ms);
    t.general_processing_ms = non_negative(j, "general_processing_ms", path, t.general_processing_ms);
    t.frame_interval_ms = non_negative(j, "frame_interval_ms", path, t.frame_interval_ms);
    return t;
}

SimScenario parse_sim_scenario(const json& j) {
    check_keys(j, "", {"seed", "duration_ms", "protocol", "bus", "channel", "decrypt_policy", "bootstrap", "key_update",
                       "nodes", "attack", "description"});
    SimScenario s;
    s.seed = count(j, "seed", "", s.seed);
    s.duration = from_ms(positive(j, "duration_ms", "", to_ms(s.duration)));
    s.protocol = protocol_field(j, "", s.protocol);
    if (j.contains("bus")) s.bus = parse_bus(j.at("bus"), "bus");
    if (j.contains("channel")) s.channel = parse_channel(j.at("channel"), "channel");
    if (s.protocol == sim::Protocol::leap && s.channel.payload_bits > kMaxTaggedPayloadBits)
        throw ConfigError("channel.payload_bits", "LEAP carries at most 53 payload bits");
    s.policy = parse_policy(text(j, "decrypt_policy", "", "all_frames"), "decrypt_policy");
    const auto boot = text(j, "bootstrap", "", "preinstalled");
    if (boot == "preinstalled") s.bootstrap = Bootstrap::preinstalled;
    else if (boot == "protocol") s.bootstrap = Bootstrap::protocol;
    else throw ConfigError("bootstrap", "expected preinstalled or protocol, got '" + boot + "'");

    s.key_update.timing.bit_rate = s.bus.bit_rate;
    s.key_update.timing.frame_timing = s.bus.timing;
    s.key_update.seed = s.seed;
    if (j.contains("key_update")) {
        const auto& k = j.at("key_update");
        check_keys(k, "key_update",
                   {"secure_processing_ms", "general_processing_ms", "frame_interval_ms", "gap_ms", "first_round_ms",
                    "period_ms", "timeout_intervals", "max_retries"});
        const auto timing = parse_key_update_timing(k, "key_update");
        s.key_update.timing.secure_processing_ms = timing.secure_processing_ms;
        s.key_update.timing.general_processing_ms = timing.general_processing_ms;
        s.key_update.timing.frame_interval_ms = timing.frame_interval_ms;
        s.key_update.gap = from_ms(positive(k, "gap_ms", "key_update", to_ms(s.key_update.gap)));
        s.key_update.first_round = from_ms(non_negative(k, "first_round_ms", "key_update", 0.0));
        s.key_update.period = from_ms(non_negative(k, "period_ms", "key_update", 0.0));
        s.key_update.timeout_intervals =
            static_cast<unsigned>(count(k, "timeout_intervals", "key_update", s.key_update.timeout_intervals));
        if (s.key_update.timeout_intervals == 0)
            throw ConfigError("key_update.timeout_intervals", "must be >= 1");
        s.key_update.max_retries = static_cast<unsigned>(count(k, "max_retries", "key_update", s.key_update.max_retries));
    }

    if (!j.contains("nodes") || !j.at("nodes").is_array() || j.at("nodes").empty())
        throw ConfigError("nodes", "expected a non-empty array of nodes");
    std::set<CanId> seen;
    for (std::size_t n = 0; n < j.at("nodes").size(); ++n) {
        const auto path = "nodes[" + std::to_string(n) + "]";
        const auto& node = j.at("nodes")[n];
        check_keys(node, path, {"id", "peers", "traffic"});
        if (!node.contains("id")) throw ConfigError(join(path, "id"), "missing");
        NodeSpec spec;
        spec.id = id(node, "id", path, CanId{});
        if (spec.id.value() < kFirstDataId)
            throw ConfigError(join(path, "id"), "ids 000-00F are reserved for key management");
        if (!seen.insert(spec.id).second) throw ConfigError(join(path, "id"), "duplicate node id");
        if (node.contains("peers")) {
            const auto& peers = node.at("peers");
            if (!peers.is_array()) throw ConfigError(join(path, "peers"), "expected an array of ids");
            for (std::size_t p = 0; p < peers.size(); ++p)
                spec.peers.push_back(parse_id_value(peers[p], join(path, "peers[" + std::to_string(p) + "]")));
        }
        if (node.contains("traffic")) {
            const auto& flows = node.at("traffic");
            if (!flows.is_array()) throw ConfigError(join(path, "traffic"), "expected an array");
            for (std::size_t f = 0; f < flows.size(); ++f) {
                const auto fpath = join(path, "traffic[" + std::to_string(f) + "]");
                const auto& flow = flows[f];
                check_keys(flow, fpath, {"peer", "start_ms", "period_ms", "count", "payload"});
                if (!flow.contains("peer")) throw ConfigError(join(fpath, "peer"), "missing");
                sim::TrafficFlow tf;
                tf.peer = id(flow, "peer", fpath, CanId{});
                if (std::find(spec.peers.begin(), spec.peers.end(), tf.peer) == spec.peers.end())
                    throw ConfigError(join(fpath, "peer"), "not listed in this node's peers");
                tf.start = from_ms(non_negative(flow, "start_ms", fpath, 0.0));
                tf.period = from_ms(positive(flow, "period_ms", fpath, 100.0));
                tf.count = count(flow, "count", fpath, 0);
                if (flow.contains("payload"))
                    tf.payload = parse_payload(flow.at("payload"), join(fpath, "payload"), s.channel.payload_bits);
                spec.traffic.push_back(tf);
            }
        }
        s.nodes.push_back(std::move(spec));
    }
    // Peer lists must be symmetric and refer to declared nodes.
    for (std::size_t n = 0; n < s.nodes.size(); ++n)
        for (std::size_t p = 0; p < s.nodes[n].peers.size(); ++p) {
            const auto peer = s.nodes[n].peers[p];
            const auto path = "nodes[" + std::to_string(n) + "].peers[" + std::to_string(p) + "]";
            const auto it = std::find_if(s.nodes.begin(), s.nodes.end(), [&](const auto& x) { return x.id == peer; });
            if (it == s.nodes.end()) throw ConfigError(path, "unknown node " + format_id(peer));
            if (peer == s.nodes[n].id) throw ConfigError(path, "a node cannot pair with itself");
            if (std::find(it->peers.begin(), it->peers.end(), s.nodes[n].id) == it->peers.end())
                throw ConfigError(path, "pairing is not mutual");
        }
    return s;
}

attack::AttackScenario parse_attack_scenario(const json& j) {
    check_keys(j, "", {"seed", "protocol", "bus", "channel", "decrypt_policy", "attack", "description"});
    attack::AttackScenario s;
    s.seed = count(j, "seed", "", s.seed);
    s.protocol = protocol_field(j, "", s.protocol);
    if (j.contains("bus")) s.bus = parse_bus(j.at("bus"), "bus");
    if (j.contains("channel")) s.channel = parse_channel(j.at("channel"), "channel");
    s.policy = parse_policy(text(j, "decrypt_policy", "", "all_frames"), "decrypt_policy");
    if (!j.contains("attack")) throw ConfigError("attack", "missing");
    const auto& a = j.at("attack");
    const std::string p = "attack";
    check_keys(a, p,
               {"kind", "sender", "receiver", "attacker_id", "legit_rate_hz", "legit_messages", "resume_messages",
                "intensity_hz", "count", "duration_s", "strategy", "forge_id", "leaked_session_key",
                "throughput_samples", "keep_log"});
    if (!a.contains("kind")) throw ConfigError("attack.kind", "missing");
    try {
        s.kind = attack::parse_kind(text(a, "kind", p, ""));
        s.strategy = attack::parse_strategy(text(a, "strategy", p, "random"));
    } catch (const ConfigError& e) {
        throw ConfigError(join(p, e.field()), e.what() + e.field().size() + 2);
    }
    s.sender = id(a, "sender", p, s.sender);
    s.receiver = id(a, "receiver", p, s.receiver);
    s.attacker = id(a, "attacker_id", p, s.attacker);
    if (a.contains("forge_id")) s.forge_id = id(a, "forge_id", p, CanId{});
    s.legit_rate_hz = positive(a, "legit_rate_hz", p, s.legit_rate_hz);
    s.legit_messages = count(a, "legit_messages", p, s.legit_messages);
    s.resume_messages = count(a, "resume_messages", p, s.resume_messages);
    s.intensity_hz = non_negative(a, "intensity_hz", p, s.intensity_hz);
    s.count = count(a, "count", p, s.count);
    s.duration_s = non_negative(a, "duration_s", p, s.duration_s);
    s.leaked_session_key = flag(a, "leaked_session_key", p, false);
    s.throughput_samples = count(a, "throughput_samples", p, s.throughput_samples);
    s.keep_log = flag(a, "keep_log", p, false);
    try {
        attack::validate(s);
    } catch (const ConfigError& e) {
        const bool top = e.field().starts_with("channel");
        throw ConfigError(top ? e.field() : join(p, e.field()), e.what() + e.field().size() + 2);
    }
    return s;
}

json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path, "cannot open file");
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(path, std::string("invalid JSON: ") + e.what());
    }
}

json merge_config(json base, const json& overlay) {
    if (!overlay.is_object()) throw ConfigError("<config>", "expected a JSON object");
    for (const auto& [key, value] : overlay.items()) {
        if (value.is_object() && base.contains(key) && base[key].is_object()) {
            for (const auto& [k2, v2] : value.items()) base[key][k2] = v2;
        } else {
            base[key] = value;
        }
    }
    return base;
}

namespace {

crypto::SymmetricKey128 preinstalled_key(std::uint64_t seed, const EcuPair& pair) {
    crypto::SymmetricKey128 key;
    const std::uint64_t base = kernels::splitmix64(seed ^ (std::uint64_t{pair.low.value()} << 16 | pair.high.value()));
    for (std::size_t i = 0; i < 16; ++i)
        key.bytes[i] = static_cast<std::uint8_t>(kernels::splitmix64(base + i / 8) >> (56 - 8 * (i % 8)));
    return key;
}

}  // namespace

SimResult run_scenario(const SimScenario& s) {
    sim::Simulator simulator(s.bus, s.seed);
    std::vector<sim::EcuNode*> ecus;
    std::optional<KeyStore> store;
    const sim::SecureEcuNode* secure = nullptr;
    if (s.bootstrap == Bootstrap::protocol) {
        std::vector<CanId> ids;
        std::vector<EcuPair> pairs;
        for (const auto& n : s.nodes) {
            ids.push_back(n.id);
            for (const auto peer : n.peers)
                if (n.id < peer) pairs.push_back(EcuPair::of(n.id, peer));
        }
        store = KeyStore::generate(ids, pairs, s.seed);
        secure = &simulator.emplace_node<sim::SecureEcuNode>(kSecureEcuId, *store, s.key_update);
    }
    for (const auto& n : s.nodes) {
        sim::EcuNode::Config cfg;
        cfg.protocol = s.protocol;
        cfg.channel = s.channel;
        cfg.policy = s.policy;
        cfg.traffic = n.traffic;
        cfg.key_processing = from_ms(s.key_update.timing.general_processing_ms);
        if (store) cfg.long_term_key = *store->long_term(n.id);
        auto& node = simulator.emplace_node<sim::EcuNode>(n.id, n.id, n.peers, cfg);
        if (s.bootstrap == Bootstrap::preinstalled)
            for (const auto peer : n.peers) node.install_session(peer, preinstalled_key(s.seed, EcuPair::of(n.id, peer)));
        ecus.push_back(&node);
    }

    SimResult result;
    result.metrics = simulator.run(s.duration);
    result.log = simulator.log();
    if (secure) result.updates = secure->updates();
    // Every legitimate delivery must carry exactly what its sender sent under that counter.
    std::map<std::pair<CanId, CanId>, std::map<std::pair<std::uint64_t, std::uint64_t>, BitString>> sent;
    for (std::size_t i = 0; i < ecus.size(); ++i)
        for (const auto& m : ecus[i]->sent()) sent[{s.nodes[i].id, m.peer}][{m.epoch, m.ctr}] = m.payload;
    for (std::size_t i = 0; i < ecus.size(); ++i) {
        result.deliveries[s.nodes[i].id] = ecus[i]->deliveries().size();
        for (const auto& d : ecus[i]->deliveries()) {
            const auto& table = sent[{d.from, s.nodes[i].id}];
            const auto it = table.find({d.epoch, d.ctr});
            if (d.origin != d.from || it == table.end() || !(it->second == d.payload)) ++result.payload_mismatches;
        }
    }
    return result;
}

nlohmann::ordered_json sim_metrics_json(const SimScenario& s, const SimResult& r) {
    nlohmann::ordered_json j;
    j["seed"] = s.seed;
    j["protocol"] = sim::protocol_name(s.protocol);
    j["duration_ms"] = to_ms(s.duration);
    j["frames_enqueued"] = r.metrics.frames_enqueued;
    j["frames_transmitted"] = r.metrics.frames_transmitted;
    j["frames_pending_at_end"] = r.metrics.frames_pending_at_end;
    j["deliveries"] = r.metrics.deliveries;
    j["id_collisions"] = r.metrics.id_collisions;
    j["bus_busy_ms"] = to_ms(r.metrics.bus_busy);
    j["bus_load"] = to_ms(r.metrics.bus_busy) / to_ms(s.duration);
    j["payload_mismatches"] = r.payload_mismatches;
    auto& nodes = j["nodes"];
    nodes = nlohmann::ordered_json::object();
    for (const auto& [node, c] : r.metrics.nodes) {
        auto& o = nodes[format_id(node)];
        o["sent"] = c.sent;
        o["accepted"] = c.accepted;
        o["rejected"] = c.rejected;
        o["ignored"] = c.ignored;
    }
    return j;
}

}  // namespace leap
