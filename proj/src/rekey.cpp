#include "leap/rekey.hpp"

#include "leap/errors.hpp"
#include "leap/nodes.hpp"

namespace leap {

RekeyDemoResult run_rekey_demo(const KeyUpdateTiming& timing, std::uint64_t seed) {
    const CanId a{0x010};
    const CanId b{0x020};
    const std::array ecus = {a, b};
    const std::array pairs = {EcuPair::of(a, b)};
    auto store = KeyStore::generate(ecus, pairs, seed);

    sim::BusConfig bus;
    bus.bit_rate = timing.bit_rate;
    bus.timing = timing.frame_timing;
    sim::Simulator simulator(bus, seed);

    sim::SecureEcuNode::Config secure_cfg;
    secure_cfg.timing = timing;
    secure_cfg.seed = seed;
    auto& secure = simulator.emplace_node<sim::SecureEcuNode>(kSecureEcuId, store, secure_cfg);

    const auto make_ecu = [&](CanId self, CanId peer) -> sim::EcuNode& {
        sim::EcuNode::Config cfg;
        cfg.long_term_key = *store.long_term(self);
        cfg.key_processing = from_ms(timing.general_processing_ms);
        return simulator.emplace_node<sim::EcuNode>(self, self, std::vector<CanId>{peer}, cfg);
    };
    auto& ecu_a = make_ecu(a, b);
    auto& ecu_b = make_ecu(b, a);

    // Generous horizon: the deadline path with one retry still completes.
    const double horizon_ms =
        4.0 * (timing.secure_processing_ms + (3.0 + 2.0) * timing.frame_interval_ms + timing.general_processing_ms) +
        1000.0;
    simulator.run(from_ms(horizon_ms));

    RekeyDemoResult result;
    result.pair = pairs[0];
    result.log = simulator.log();
    result.wire = secure.transmitted();
    result.frames_per_request = kRequestFragmentDlc.size();
    result.request_payload_bits = 8 * static_cast<unsigned>(KeyUpdateRequest{}.payload().size());
    if (secure.updates().empty()) throw SimulationError("rekey demo did not start an update");
    const auto& record = secure.updates().front();
    result.outcome = record.outcome;
    result.cycle_time_ms = to_ms(record.end - record.start);
    if (const auto session = secure.distributor().store().session(pairs[0])) {
        result.session_key = session->key;
        result.epoch = session->epoch;
    }

    auto* tx = ecu_a.sender(b);
    auto* rx = ecu_b.receiver(a);
    result.endpoints_agree = tx->has_session() && rx->has_session() && tx->session_key() == rx->session_key() &&
                             tx->session_key() == result.session_key;
    if (result.endpoints_agree) {
        const BitString payload(0x0A0B0C0D0E0F, 48);
        const auto sealed = tx->seal(payload);
        const auto opened = rx->open(sealed.view());
        result.round_trip_ok = opened.accepted() && opened.payload == payload;
    }
    return result;
}

double update_cycle_time_ms(const KeyUpdateTiming& timing) { return run_rekey_demo(timing, 1).cycle_time_ms; }

}  // namespace leap
