#include "leap/nodes.hpp"

#include <algorithm>
#include <cctype>

#include "leap/ameap.hpp"
#include "leap/crypto/op_counters.hpp"
#include "leap/endpoint.hpp"
#include "leap/errors.hpp"

namespace leap::sim {

namespace {

constexpr std::uint64_t kTrafficTag = std::uint64_t{1} << 60;
constexpr std::uint64_t kKeyProcessingTag = std::uint64_t{2} << 60;

bool is_key_frame(const CanFrame& f) { return f.id().value() < kFirstDataId; }

}  // namespace

std::string_view protocol_name(Protocol p) noexcept { return p == Protocol::leap ? "LEAP" : "AMEAP"; }

Protocol parse_protocol(std::string_view text) {
    std::string upper(text);
    std::transform(upper.begin(), upper.end(), upper.begin(), [](unsigned char c) { return std::toupper(c); });
    if (upper == "LEAP") return Protocol::leap;
    if (upper == "AMEAP") return Protocol::ameap;
    throw ConfigError("protocol", "unknown protocol '" + std::string(text) + "' (expected LEAP or AMEAP)");
}

std::unique_ptr<SecureChannel> make_channel(Protocol p, CanId self, CanId peer, Role role, const ChannelConfig& config) {
    if (p == Protocol::leap) return std::make_unique<LeapEndpoint>(self, peer, role, config);
    return std::make_unique<AmeapEndpoint>(self, peer, role, config);
}

// ---------------------------------------------------------------------------
// EcuNode

EcuNode::EcuNode(CanId self, std::vector<CanId> peers, Config config) : self_(self), config_(std::move(config)) {
    for (auto peer : peers) {
        if (peer == self) throw ConfigError("peers", "an ECU cannot be its own peer");
        // Sender frames carry our id; the receiver channel expects the peer's.
        Peer p;
        p.tx = make_channel(config_.protocol, self, peer, Role::sender, config_.channel);
        p.rx = make_channel(config_.protocol, self, peer, Role::receiver, config_.channel);
        peers_.emplace(peer, std::move(p));
    }
    for (const auto& flow : config_.traffic)
        if (!peers_.contains(flow.peer)) throw ConfigError("traffic.peer", "traffic to a node that is not a peer");
    flow_sent_.assign(config_.traffic.size(), 0);
}

void EcuNode::install_session(CanId peer, const crypto::SymmetricKey128& key) {
    const auto it = peers_.find(peer);
    if (it == peers_.end()) throw ProvisioningError("session for unknown peer");
    it->second.tx->install_session(key);
    it->second.rx->install_session(key);
    it->second.partial.clear();
    ++it->second.epoch;
    ++sessions_installed_;
}

SecureChannel* EcuNode::sender(CanId peer) {
    const auto it = peers_.find(peer);
    return it == peers_.end() ? nullptr : it->second.tx.get();
}

SecureChannel* EcuNode::receiver(CanId peer) {
    const auto it = peers_.find(peer);
    return it == peers_.end() ? nullptr : it->second.rx.get();
}

void EcuNode::on_start(NodeContext& ctx) {
    for (std::size_t i = 0; i < config_.traffic.size(); ++i)
        ctx.set_timer(config_.traffic[i].start, kTrafficTag | i);
}

void EcuNode::on_timer(NodeContext& ctx, std::uint64_t tag) {
    if ((tag & kTrafficTag) != 0) {
        send_next(ctx, static_cast<std::size_t>(tag & ~kTrafficTag));
        return;
    }
    if (tag == kKeyProcessingTag && pending_request_ && config_.long_term_key) {
        const auto req = *pending_request_;
        pending_request_.reset();
        const auto result = process_request(*config_.long_term_key, self_, req);
        if (result.status == RequestResult::Status::installed && exchange_) {
            install_session(exchange_->pair.other(self_), result.session_key);
            ctx.send(response_frame(*result.response, exchange_->response_id));
        } else if (result.status == RequestResult::Status::rejected) {
            ++key_requests_rejected_;
        }
        exchange_.reset();
    }
}

void EcuNode::send_next(NodeContext& ctx, std::size_t index) {
    const auto& flow = config_.traffic[index];
    if (flow.count != 0 && flow_sent_[index] >= flow.count) return;
    auto* tx = sender(flow.peer);
    if (tx->has_session()) {
        BitString payload;
        if (flow.payload) {
            payload = *flow.payload;
        } else {
            const unsigned bits = config_.channel.payload_bits;
            const std::uint64_t raw = ctx.rng()();
            payload = BitString(bits == 0 ? 0 : (bits == 64 ? raw : raw >> (64 - bits)), bits);
        }
        try {
            const auto ctr = tx->counter();
            const auto sealed = tx->seal(payload);
            for (const auto& f : sealed.view()) ctx.send(f);
            if (config_.record) sent_.push_back({flow.peer, peers_.at(flow.peer).epoch, ctr, payload});
            ++flow_sent_[index];
        } catch (const RekeyRequired&) {
            ++rekey_required_;
        }
    }
    ctx.set_timer(flow.period, kTrafficTag | index);
}

void EcuNode::on_frame(NodeContext& ctx, const CanFrame& frame) {
    if (is_key_frame(frame)) {
        handle_key_frame(ctx, frame);
        return;
    }
    handle_data_frame(ctx, frame);
}

void EcuNode::handle_key_frame(NodeContext& ctx, const CanFrame& frame) {
    if (!config_.long_term_key) return;
    if (frame.id() == kUpdateAnnounceId && frame.dlc() == 4) {
        const auto pair = parse_announce(frame);
        if (!pair.contains(self_) || !peers_.contains(pair.other(self_))) {
            exchange_.reset();
            return;
        }
        const bool low = pair.low == self_;
        exchange_ = KeyExchange{pair, low ? kLowRequestBaseId : kHighRequestBaseId,
                                low ? kLowResponseId : kHighResponseId, {}};
        return;
    }
    if (!exchange_) return;
    const auto base = exchange_->base_id.value();
    if (frame.id().value() < base || frame.id().value() > base + 2) return;
    exchange_->fragments.push_back(frame);
    if (exchange_->fragments.size() < kRequestFragmentDlc.size()) return;
    try {
        pending_request_ = reassemble_request(exchange_->fragments, exchange_->base_id, self_);
        ctx.set_timer(config_.key_processing, kKeyProcessingTag);
    } catch (const ReassemblyError&) {
        ++key_requests_rejected_;
        exchange_.reset();
    }
}

void EcuNode::finish_open(NodeContext& ctx, const CanFrame& last, Peer& peer, std::span<const CanFrame> frames) {
    const auto origin = last.meta.origin.value_or(last.id());
    auto& counters = by_origin_[origin];
    const auto before = crypto::op_counters().ksa;
    const auto result = peer.rx->open(frames);
    if (config_.protocol == Protocol::leap) {
        const auto ksa = crypto::op_counters().ksa - before;
        ksa_min_ = std::min(ksa_min_, ksa);
        ksa_max_ = std::max(ksa_max_, ksa);
    }
    if (result.accepted()) {
        ++counters.accepted;
        ctx.report(last, Outcome::accept);
        if (config_.record) deliveries_.push_back({last.id(), origin, peer.epoch, result.counter, result.payload, ctx.now()});
    } else {
        ++counters.rejected;
        ctx.report(last, Outcome::reject);
    }
}

void EcuNode::handle_data_frame(NodeContext& ctx, const CanFrame& frame) {
    const auto origin = frame.meta.origin.value_or(frame.id());
    const auto it = peers_.find(frame.id());
    if (it == peers_.end() || !it->second.rx->has_session()) {
        if (config_.policy == DecryptPolicy::all_frames && config_.protocol == Protocol::leap && frame.dlc() == 8) {
            // No key for this id: the work is done, the result cannot authenticate anything.
            for (auto& [id, p] : peers_) {
                if (!p.rx->has_session()) continue;
                const auto before = crypto::op_counters().ksa;
                static_cast<const LeapEndpoint&>(*p.rx).probe(frame);
                const auto ksa = crypto::op_counters().ksa - before;
                ksa_min_ = std::min(ksa_min_, ksa);
                ksa_max_ = std::max(ksa_max_, ksa);
                break;
            }
        }
        ++by_origin_[origin].ignored;
        ctx.report(frame, Outcome::ignore);
        return;
    }
    auto& peer = it->second;
    if (config_.protocol == Protocol::leap) {
        if (frame.dlc() != 8) {
            ++by_origin_[origin].rejected;
            ctx.report(frame, Outcome::reject);
            return;
        }
        finish_open(ctx, frame, peer, std::span(&frame, 1));
        return;
    }
    // AMEAP: two 8-byte cipher fragments followed by the 4-byte MAC frame.
    if (frame.dlc() == 8) {
        peer.partial.push_back(frame);
        if (peer.partial.size() > 2) peer.partial.erase(peer.partial.begin());
        return;
    }
    if (frame.dlc() == 4 && peer.partial.size() == 2) {
        const std::array<CanFrame, 3> message = {peer.partial[0], peer.partial[1], frame};
        peer.partial.clear();
        finish_open(ctx, frame, peer, message);
        return;
    }
    peer.partial.clear();
    ++by_origin_[origin].rejected;
    ctx.report(frame, Outcome::reject);
}

// ---------------------------------------------------------------------------
// SecureEcuNode

SecureEcuNode::SecureEcuNode(KeyStore store, Config config)
    : distributor_(std::move(store), config.seed, config.max_retries), config_(config) {}

void SecureEcuNode::on_start(NodeContext& ctx) { ctx.set_timer(config_.first_round, tag(Step::round_start)); }

void SecureEcuNode::emit(NodeContext& ctx, const CanFrame& frame) {
    transmitted_.push_back(frame);
    ctx.send(frame);
}

void SecureEcuNode::start_round(NodeContext& ctx) {
    if (current_) {
        // Previous round still has an update in flight; try again shortly.
        ctx.set_timer(from_ms(config_.timing.frame_interval_ms), tag(Step::round_start));
        return;
    }
    queue_.clear();
    for (const auto& s : schedule_updates(distributor_.store(), ctx.now(), config_.gap)) queue_.push_back(s.pair);
    cursor_ = 0;
    if (config_.period > SimTime{0}) ctx.set_timer(config_.period, tag(Step::round_start));
    start_update(ctx);
}

void SecureEcuNode::start_update(NodeContext& ctx) {
    if (cursor_ >= queue_.size()) return;
    updates_.push_back({queue_[cursor_], ctx.now(), ctx.now(), ResponseOutcome::no_pending, 1});
    current_ = distributor_.begin_update(queue_[cursor_]);
    ++generation_;
    ctx.set_timer(from_ms(config_.timing.secure_processing_ms), tag(Step::issue, generation_));
}

void SecureEcuNode::issue(NodeContext& ctx) {
    low_frames_ = segment_request(current_->for_low, kLowRequestBaseId);
    high_frames_ = segment_request(current_->for_high, kHighRequestBaseId);
    emit(ctx, announce_frame(current_->pair));
    round_ = 0;
    send_fragment_round(ctx);
}

void SecureEcuNode::send_fragment_round(NodeContext& ctx) {
    emit(ctx, low_frames_[round_]);
    emit(ctx, high_frames_[round_]);
    ++round_;
    const auto interval = from_ms(config_.timing.frame_interval_ms);
    if (round_ < low_frames_.size()) ctx.set_timer(interval, tag(Step::fragment_round, generation_));
}

void SecureEcuNode::on_transmitted(NodeContext& ctx, const CanFrame& frame) {
    // The response deadline runs from the moment the last fragment leaves the wire.
    if (!current_ || round_ < high_frames_.size() || !(frame == high_frames_.back())) return;
    const auto by_intervals = from_ms(config_.timing.frame_interval_ms) * config_.timeout_intervals;
    // Never shorter than a member's processing plus both responses on the wire,
    // with one full-length frame of slack for a contender.
    const auto floor =
        from_ms(config_.timing.general_processing_ms) + 2 * frame_duration(ctx.bus(), 4) + frame_duration(ctx.bus(), 8);
    ctx.set_timer(std::max(by_intervals, floor), tag(Step::deadline, generation_));
}

void SecureEcuNode::on_timer(NodeContext& ctx, std::uint64_t t) {
    const auto step = static_cast<Step>(t >> 56);
    const auto gen = t & ((std::uint64_t{1} << 56) - 1);
    if (step == Step::round_start) {
        start_round(ctx);
        return;
    }
    if (step == Step::next_update) {
        start_update(ctx);
        return;
    }
    if (gen != generation_ || !current_) return;
    switch (step) {
        case Step::issue: issue(ctx); break;
        case Step::fragment_round: send_fragment_round(ctx); break;
        case Step::deadline: {
            auto retry = distributor_.on_timeout(current_->pair);
            if (retry) {
                current_ = *retry;
                ++updates_.back().attempts;
                ++generation_;
                ctx.set_timer(from_ms(config_.timing.secure_processing_ms), tag(Step::issue, generation_));
                return;
            }
            updates_.back().outcome = ResponseOutcome::failed;
            updates_.back().end = ctx.now();
            current_.reset();
            ++cursor_;
            const auto next = updates_.back().start + config_.gap;
            ctx.set_timer(std::max(SimTime{0}, next - ctx.now()), tag(Step::next_update));
            break;
        }
        default: break;
    }
}

void SecureEcuNode::on_frame(NodeContext& ctx, const CanFrame& frame) {
    if (!current_ || frame.dlc() != 4) return;
    CanId source;
    if (frame.id() == kLowResponseId) source = current_->pair.low;
    else if (frame.id() == kHighResponseId) source = current_->pair.high;
    else return;
    const KeyUpdateResponse resp{source, crypto::Mac32{static_cast<std::uint32_t>(frame.data_u64())}};
    const auto outcome = distributor_.verify_response(resp);
    if (outcome == ResponseOutcome::awaiting_peer || outcome == ResponseOutcome::no_pending) return;
    updates_.back().outcome = outcome;
    updates_.back().end = ctx.now();
    current_.reset();
    ++generation_;
    ++cursor_;
    const auto next = updates_.back().start + config_.gap;
    ctx.set_timer(std::max(SimTime{0}, next - ctx.now()), tag(Step::next_update));
}

}  // namespace leap::sim
