// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "leap/ameap.hpp"
#include "leap/analysis.hpp"
#include "leap/attacks.hpp"
#include "leap/crypto/aes128.hpp"
#include "leap/crypto/keyed_hash.hpp"
#include "leap/crypto/op_counters.hpp"
#include "leap/crypto/rc4.hpp"
#include "leap/crypto/sha256.hpp"
#include "leap/crypto/test_vectors.hpp"
#include "leap/endpoint.hpp"
#include "leap/key_mgmt.hpp"
#include "leap/rekey.hpp"
#include "leap/scenario.hpp"

using namespace leap;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

/// Collects failed checks for one criterion; `detail` is printed either way.
struct Check {
    std::vector<std::string> failures;
    std::ostringstream detail;

    void expect(bool ok, const std::string& what) {
        if (!ok) failures.push_back(what);
    }
};

crypto::SymmetricKey128 key_from(std::uint64_t seed) {
    crypto::SymmetricKey128 k;
    std::mt19937_64 rng(seed);
    for (auto& b : k.bytes) b = static_cast<std::uint8_t>(rng());
    return k;
}

bool within(double value, double target, double rel) { return std::fabs(value - target) <= rel * std::fabs(target); }

// 1. Expected brute-force hours for the six table cells, each within 3%.
void brute_force_table(Check& c) {
    const auto t0 = Clock::now();
    struct Cell {
        unsigned bits;
        const char* time;
        double hours;
    };
    const Cell cells[] = {{40, "30us", 4581.0},    {40, "0.1us", 15.0},    {64, "30us", 7.7e10},
                          {64, "0.1us", 2.5e8},    {128, "30us", 1.4e30},  {128, "0.1us", 4.7e27}};
    for (const auto& cell : cells) {
        const double h =
            static_cast<double>(analysis::brute_force_hours(cell.bits, analysis::parse_duration_seconds(cell.time)));
        c.detail << cell.bits << "b@" << cell.time << "=" << h << "h ";
        c.expect(within(h, cell.hours, 0.03), std::to_string(cell.bits) + "-bit at " + cell.time);
    }
    const double elapsed = seconds_since(t0);
    c.detail << "(" << elapsed << " s)";
    c.expect(elapsed < 1.0, "runtime >= 1 s");
}

// 2. Eavesdropping arithmetic and ciphertext freshness.
void eavesdrop(Check& c) {
    const auto r = analysis::eavesdrop_feasibility(200, 24);
    c.detail << "messages=" << r.messages << " threshold=" << r.threshold << " feasible=" << r.feasible;
    c.expect(r.messages == 17'280'000, "message count");
    c.expect(r.threshold == 1'207'959'552, "threshold");
    c.expect(!r.feasible, "flagged feasible");

    LeapEndpoint tx(CanId(0x010), CanId(0x020), Role::sender);
    tx.install_session(key_from(2));
    const BitString payload(0x0A0B0C0D0E0F, 48);
    std::set<std::uint64_t> seen;
    for (int i = 0; i < 1000; ++i) seen.insert(tx.encrypt(payload).data_u64());
    c.detail << " distinct=" << seen.size() << "/1000";
    c.expect(seen.size() == 1000, "repeated ciphertext for a fixed payload");
}

// 3. Replay and masquerade acceptance at chance level for LEAP, none for AMEAP.
void replay_and_masquerade(Check& c) {
    const auto t0 = Clock::now();
    constexpr std::uint64_t kTrials = 100'000;
    const auto ci = analysis::binomial_interval(kTrials, std::ldexp(1.0, -11), 0.99);
    c.detail << "99% CI [" << ci.lo << "," << ci.hi << "]";

    for (const auto protocol : {sim::Protocol::leap, sim::Protocol::ameap}) {
        const bool leap = protocol == sim::Protocol::leap;
        // Every captured message is replayed once, so each replay is a fresh trial.
        attack::AttackScenario replay;
        replay.kind = attack::AttackKind::replay;
        replay.protocol = protocol;
        replay.legit_rate_hz = leap ? 500 : 200;
        replay.legit_messages = kTrials;
        replay.count = kTrials;
        replay.intensity_hz = 4000;
        replay.seed = 11;
        const auto rr = attack::run_attack(replay).metrics;

        attack::AttackScenario masq;
        masq.kind = attack::AttackKind::masquerade;
        masq.protocol = protocol;
        masq.legit_messages = 100;
        masq.count = kTrials;
        masq.intensity_hz = 4000;
        masq.seed = 12;
        const auto mr = attack::run_attack(masq).metrics;

        const auto name = std::string(sim::protocol_name(protocol));
        c.detail << " " << name << " replay " << rr.frames_accepted_by_victim << "/" << rr.frames_sent << ", masquerade "
                 << mr.frames_accepted_by_victim << "/" << mr.frames_sent;
        c.expect(rr.frames_sent == kTrials && mr.frames_sent == kTrials, name + " did not send every attack message");
        c.expect(rr.frames_accepted_by_victim + rr.frames_rejected == kTrials, name + " replay accounting");
        c.expect(mr.frames_accepted_by_victim + mr.frames_rejected == kTrials, name + " masquerade accounting");
        if (leap) {
            c.expect(ci.contains(rr.frames_accepted_by_victim), "LEAP replay acceptances outside the interval");
            c.expect(ci.contains(mr.frames_accepted_by_victim), "LEAP masquerade acceptances outside the interval");
        } else {
            c.expect(rr.frames_accepted_by_victim == 0, "AMEAP accepted a replay");
            c.expect(mr.frames_accepted_by_victim == 0, "AMEAP accepted a forgery");
        }
        c.expect(rr.payload_mismatches == 0 && mr.payload_mismatches == 0, name + " corrupted legitimate payloads");
    }
    const double elapsed = seconds_since(t0);
    c.detail << " (" << elapsed << " s)";
    c.expect(elapsed < 120.0, "runtime >= 2 min");
}

// 4. Flooding: bus capacity, decrypt margin, and legitimate traffic during a flood.
void flooding(Check& c) {
    const sim::BusConfig bus;
    const double rate = sim::max_frame_rate(bus, 8);
    const double decrypt = attack::measure_decrypt_throughput(sim::Protocol::leap, 50'000, 4);
    const auto margin = analysis::flooding_margin(bus, decrypt);
    c.detail << "max_frame_rate=" << rate << " leap_decrypt_hz=" << decrypt << " (reference "
             << analysis::FloodingMargin::kReferenceDecryptRate << " vs "
             << analysis::FloodingMargin::kReferenceInjectionRate << ")";
    c.expect(rate >= 4300 && rate <= 4500, "max_frame_rate outside [4300, 4500]");
    c.expect(margin.sustained && decrypt > rate, "decrypt throughput below injection rate");

    attack::AttackScenario s;
    s.kind = attack::AttackKind::flooding;
    s.attacker = CanId(0x7FF);
    s.intensity_hz = rate;
    s.duration_s = 2.0;
    s.legit_rate_hz = 100;
    s.throughput_samples = 1000;
    s.seed = 4;
    const auto m = attack::run_attack(s).metrics;
    c.detail << " flood " << m.injection_rate_hz << " frames/s, legit " << m.legit_accepted << "/" << m.legit_sent
             << ", desync " << m.desync_events;
    // Higher-priority legitimate frames take their share; the flood fills the rest.
    c.expect(m.injection_rate_hz + m.victim_legit_throughput_during_attack >= 0.99 * rate,
             "flood did not saturate the bus");
    c.expect(m.legit_sent > 0 && m.legit_accepted == m.legit_sent, "legitimate traffic lost during the flood");
    c.expect(m.frames_accepted_by_victim == 0 && m.desync_events == 0, "desync without an accepted forgery");
    c.expect(m.payload_mismatches == 0, "corrupted legitimate payloads");
}

// 5. Key update: cycle time, request shape, tamper resistance.
void key_update(Check& c) {
    const KeyUpdateTiming timing;  // 70.2 ms, 15.9 ms, 50 ms
    const auto demo = run_rekey_demo(timing, 5);
    c.detail << "cycle=" << demo.cycle_time_ms << " ms (closed form " << update_cycle_time_closed_form_ms(timing)
             << ", target 199.4 +-15%) request=" << demo.request_payload_bits << " bits/" << demo.frames_per_request
             << " frames";
    c.expect(demo.outcome == ResponseOutcome::activated, "update not activated");
    c.expect(within(demo.cycle_time_ms, 199.4, 0.15), "cycle time outside 199.4 ms +-15%");
    c.expect(demo.request_payload_bits == 160 && demo.frames_per_request == 3, "request shape");
    c.expect(demo.endpoints_agree && demo.round_trip_ok, "members disagree on the session key");

    const CanId a(0x010), b(0x020);
    const std::array ids = {a, b};
    const std::array pairs = {EcuPair::of(a, b)};
    const auto store = KeyStore::generate(ids, pairs, 77);
    std::mt19937_64 rng(77);
    std::uint64_t accepted = 0;
    for (int trial = 0; trial < 10'000; ++trial) {
        KeyDistributor dist(store, rng());
        const auto issue = dist.begin_update(EcuPair::of(a, b));
        if (trial % 2 == 0) {
            auto req = issue.for_low;
            const auto bit = rng() % 160;
            if (bit < 32)
                req.mac1.tag ^= 1U << bit;
            else
                req.cipher[(bit - 32) / 8] ^= static_cast<std::uint8_t>(1U << ((bit - 32) % 8));
            if (process_request(*store.long_term(a), a, req).status != RequestResult::Status::rejected) ++accepted;
        } else {
            const auto high = process_request(*store.long_term(b), b, issue.for_high);
            dist.verify_response(*high.response);
            auto resp = *process_request(*store.long_term(a), a, issue.for_low).response;
            resp.mac2.tag ^= 1U << (rng() % 32);
            if (dist.verify_response(resp) != ResponseOutcome::failed || dist.activated_count() != 0) ++accepted;
        }
    }
    c.detail << " tampered accepted=" << accepted << "/10000";
    c.expect(accepted == 0, "tampered request or response accepted");
}

// 6. Overhead constants and host timing.
void overheads(Check& c) {
    const LeapEndpoint leap(CanId(0x010), CanId(0x020), Role::sender);
    const AmeapEndpoint ameap(CanId(0x010), CanId(0x020), Role::sender);
    c.expect(leap.overhead_bits() == 11, "LEAP overhead");
    c.expect(ameap.overhead_bits() == 32, "AMEAP overhead");
    const auto r = analysis::bench_protocols(20'000, 6, 5);
    c.detail << "overhead " << leap.overhead_bits() << "/" << ameap.overhead_bits() << " bits, LEAP "
             << r.leap.ns_per_message << " ns vs AMEAP " << r.ameap.ns_per_message << " ns per message (ratio "
             << r.ratio << ", reference " << analysis::BenchReport::kReferenceRatio << ")";
    c.expect(r.messages >= 10'000, "fewer than 10,000 messages");
    c.expect(r.leap.ns_per_message < r.ameap.ns_per_message, "LEAP not faster than AMEAP on this host");
}

std::string scenario_path(const char* name) { return std::string(LEAP_SCENARIO_DIR) + "/" + name; }

// 7. Invariant suites.
void properties(Check& c) {
    std::mt19937_64 rng(7);
    int bad = 0;
    for (unsigned offset = 0; offset <= kMaxTagOffset; ++offset)
        for (unsigned len = 0; len <= kMaxTaggedPayloadBits; ++len) {
            const BitString payload(len == 0 ? 0 : rng() >> (64 - len), len);
            const auto tag = static_cast<std::uint16_t>(rng() & 0x7FF);
            const auto [p, t] = unpack_payload_with_tag(pack_payload_with_tag(payload, tag, offset), offset, len);
            if (!(p == payload) || t != tag) ++bad;
        }
    c.expect(bad == 0, "pack/unpack round trip");
    c.detail << "pack=" << (bad == 0 ? "ok" : "FAIL");

    const auto key = key_from(7);
    LeapEndpoint tx(CanId(0x010), CanId(0x020), Role::sender);
    LeapEndpoint rx(CanId(0x020), CanId(0x010), Role::receiver);
    tx.install_session(key);
    rx.install_session(key);
    bad = 0;
    for (std::uint64_t i = 0; i < 10'000; ++i) {
        const BitString payload(rng() >> 16, 48);
        const auto r = rx.decrypt(tx.encrypt(payload));
        if (!r.accepted() || !(r.payload == payload) || r.counter != i || rx.counter() != i + 1) ++bad;
    }
    c.expect(bad == 0, "encrypt/decrypt round trip");
    c.detail << " roundtrip=" << (bad == 0 ? "ok" : "FAIL");

    bad = 0;
    int rejected = 0;
    for (int i = 0; i < 1000; ++i) {
        const auto before = rx.counter();
        const auto r = rx.decrypt(CanFrame::from_u64(CanId(0x010), rng()));
        if (r.accepted()) {
            tx.install_session(key);
            rx.install_session(key);
            continue;
        }
        ++rejected;
        if (rx.counter() != before) ++bad;
        if (!rx.decrypt(tx.encrypt(BitString(static_cast<std::uint64_t>(i), 48))).accepted()) ++bad;
    }
    c.expect(bad == 0 && rejected > 900, "rejection semantics");
    c.detail << " rejection=" << (bad == 0 ? "ok" : "FAIL");

    crypto::Rc4 rc4(key.bytes);
    bad = 0;
    for (int step = 0; step < 4096; ++step) {
        rc4.next();
        auto s = rc4.permutation();
        std::sort(s.begin(), s.end());
        for (int i = 0; i < 256; ++i) bad += s[i] != i;
    }
    c.expect(bad == 0, "RC4 permutation invariant");
    c.detail << " rc4_perm=" << (bad == 0 ? "ok" : "FAIL");

    std::size_t vectors = 0;
    bad = 0;
    const std::string dir = LEAP_VECTOR_DIR;
    for (const auto& v : crypto::load_test_vectors(dir + "/rc4.txt")) {
        const auto ks = crypto::rc4_keystream(v.key, v.input.size());
        for (std::size_t i = 0; i < ks.size(); ++i) bad += (v.input[i] ^ ks[i]) != v.output[i];
        ++vectors;
    }
    for (const auto& v : crypto::load_test_vectors(dir + "/aes128.txt")) {
        const auto out = crypto::block_encrypt(crypto::SymmetricKey128::from_span(v.key), v.input);
        bad += !std::equal(out.begin(), out.end(), v.output.begin(), v.output.end());
        ++vectors;
    }
    for (const auto& v : crypto::load_test_vectors(dir + "/sha256.txt")) {
        const auto out = crypto::sha256(v.input);
        bad += !std::equal(out.begin(), out.end(), v.output.begin(), v.output.end());
        ++vectors;
    }
    for (const auto& v : crypto::load_test_vectors(dir + "/hmac_sha256.txt")) {
        const auto out = crypto::hmac_sha256(v.key, v.input);
        bad += !std::equal(out.begin(), out.end(), v.output.begin(), v.output.end());
        ++vectors;
    }
    c.expect(bad == 0 && vectors > 0, "official test vectors");
    c.detail << " vectors=" << vectors << (bad == 0 ? " ok" : " FAIL");

    const auto sim = parse_sim_scenario(load_json_file(scenario_path("simulate_rekey.json")));
    auto log_text = [&] {
        std::ostringstream out;
        sim::write_event_log(out, run_scenario(sim).log);
        return out.str();
    };
    const auto first = log_text();
    const bool same_sim = first == log_text() && !first.empty();
    attack::AttackScenario a;
    a.kind = attack::AttackKind::masquerade;
    a.count = 2000;
    a.keep_log = true;
    const bool same_attack = attack::report_json(attack::run_attack(a)) == attack::report_json(attack::run_attack(a));
    c.expect(same_sim && same_attack, "same-seed runs differ");
    c.detail << " determinism=" << (same_sim && same_attack ? "ok" : "FAIL");
}

}  // namespace

int main() {
    struct Criterion {
        const char* name;
        std::function<void(Check&)> run;
    };
    const Criterion criteria[] = {
        {"brute-force table", brute_force_table},
        {"eavesdropping arithmetic", eavesdrop},
        {"replay/masquerade statistics", replay_and_masquerade},
        {"flooding margin", flooding},
        {"key-update cycle", key_update},
        {"overheads and host timing", overheads},
        {"property suites", properties},
    };
    int failed = 0;
    int n = 0;
    for (const auto& criterion : criteria) {
        ++n;
        Check c;
        try {
            criterion.run(c);
        } catch (const std::exception& e) {
            c.failures.push_back(std::string("exception: ") + e.what());
        }
        const bool ok = c.failures.empty();
        failed += ok ? 0 : 1;
        std::printf("criterion %d %s: %s | %s", n, criterion.name, ok ? "PASS" : "FAIL", c.detail.str().c_str());
        for (const auto& f : c.failures) std::printf(" [%s]", f.c_str());
        std::printf("\n");
        std::fflush(stdout);
    }
    std::printf("%d/%d criteria passed\n", n - failed, n);
    return failed == 0 ? 0 : 1;
}
