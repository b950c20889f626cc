#include "leap/bus_sim.hpp"

#include <cstdio>
#include <ostream>

#include "leap/errors.hpp"

namespace leap::sim {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

}  // namespace

ProcessingCost BusConfig::cost(CanId id) const {
    const auto it = processing.find(id);
    return it == processing.end() ? ProcessingCost{} : it->second;
}

SimTime frame_duration(const BusConfig& config, unsigned dlc) {
    return bits_to_time(frame_bits(dlc, config.timing), config.bit_rate);
}

double max_frame_rate(const BusConfig& config, unsigned dlc) {
    if (!(config.bit_rate > 0)) throw Error("bit rate must be positive");
    return config.bit_rate / frame_bits(dlc, config.timing);
}

std::string format_log_record(const LogRecord& r) {
    char t[32];
    std::snprintf(t, sizeof t, "%.3f", to_us(r.t));
    std::string out = t;
    out += ',';
    out += r.frame.to_text();
    out += ',';
    out += format_id(r.origin);
    out += ',';
    switch (r.outcome) {
        case Outcome::tx: out += "won:" + std::to_string(r.losers); break;
        case Outcome::accept: out += "accept@" + format_id(r.node); break;
        case Outcome::reject: out += "reject@" + format_id(r.node); break;
        case Outcome::ignore: out += "ignore@" + format_id(r.node); break;
    }
    return out;
}

void write_event_log(std::ostream& out, const std::vector<LogRecord>& log) {
    out << "t_us,frame,origin,outcome\n";
    for (const auto& r : log) out << format_log_record(r) << '\n';
}

SimTime NodeContext::now() const noexcept { return sim_->now_; }

void NodeContext::send(CanFrame frame) {
    frame.meta.origin = self_;
    const auto delay = sim_->config_.cost(self_).send;
    sim_->push(sim_->now_ + delay, Simulator::EventKind::enqueue, index_, std::move(frame));
}

void NodeContext::set_timer(SimTime delay, std::uint64_t tag) {
    if (delay < SimTime{0}) throw SimulationError("negative timer delay");
    sim_->push(sim_->now_ + delay, Simulator::EventKind::timer, index_, {}, tag);
}

void NodeContext::report(const CanFrame& frame, Outcome outcome) {
    auto& counters = sim_->metrics_.nodes[self_];
    switch (outcome) {
        case Outcome::accept: ++counters.accepted; break;
        case Outcome::reject: ++counters.rejected; break;
        case Outcome::ignore: ++counters.ignored; break;
        case Outcome::tx: break;
    }
    if (sim_->logging_)
        sim_->log_.push_back({sim_->now_, frame, frame.meta.origin.value_or(frame.id()), outcome, self_, 0});
}

std::mt19937_64& NodeContext::rng() noexcept { return sim_->nodes_[index_].rng; }

const BusConfig& NodeContext::bus() const noexcept { return sim_->config_; }

Simulator::Simulator(BusConfig config, std::uint64_t seed) : config_(std::move(config)), seed_(seed) {
    if (!(config_.bit_rate > 0)) throw SimulationError("bit rate must be positive");
}

Simulator::~Simulator() = default;

Behavior& Simulator::add_node(CanId id, std::unique_ptr<Behavior> behavior) {
    if (started_) throw SimulationError("nodes must be added before run()");
    for (const auto& n : nodes_)
        if (n.id == id) throw SimulationError("two nodes configured with id " + format_id(id));
    auto& slot = nodes_.emplace_back();
    slot.id = id;
    slot.behavior = std::move(behavior);
    slot.rng.seed(splitmix64(seed_ ^ splitmix64(id.value())));
    metrics_.nodes[id];
    return *slot.behavior;
}

void Simulator::push(SimTime t, EventKind kind, std::size_t node, CanFrame frame, std::uint64_t tag) {
    events_.push(Event{t, seq_++, kind, node, std::move(frame), tag});
}

void Simulator::dispatch(const Event& e) {
    auto& node = nodes_[e.node];
    switch (e.kind) {
        case EventKind::timer: {
            auto ctx = context(e.node);
            node.behavior->on_timer(ctx, e.tag);
            break;
        }
        case EventKind::enqueue: {
            CanFrame frame = e.frame;
            frame.meta.enqueued = now_;
            node.outbox.push({std::move(frame), e.seq});
            ++metrics_.frames_enqueued;
            ++metrics_.nodes[node.id].sent;
            break;
        }
        case EventKind::tx_end: {
            bus_busy_ = false;
            ++metrics_.frames_transmitted;
            for (std::size_t i = 0; i < nodes_.size(); ++i) {
                if (i == e.node) continue;
                push(now_ + config_.cost(nodes_[i].id).recv, EventKind::deliver, i, e.frame);
            }
            auto ctx = context(e.node);
            node.behavior->on_transmitted(ctx, e.frame);
            break;
        }
        case EventKind::deliver: {
            ++metrics_.deliveries;
            auto ctx = context(e.node);
            node.behavior->on_frame(ctx, e.frame);
            break;
        }
    }
}

void Simulator::try_start_transmission() {
    if (bus_busy_) return;
    std::size_t winner = nodes_.size();
    std::uint32_t contenders = 0;
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        if (nodes_[i].outbox.empty()) continue;
        ++contenders;
        if (winner == nodes_.size()) {
            winner = i;
            continue;
        }
        const auto& head = nodes_[i].outbox.top();
        const auto& best = nodes_[winner].outbox.top();
        if (head.frame.id() < best.frame.id()) {
            winner = i;
        } else if (head.frame.id() == best.frame.id()) {
            // Physical CAN cannot resolve this; the earlier enqueue goes first.
            ++metrics_.id_collisions;
            if (head.seq < best.seq) winner = i;
        }
    }
    if (winner == nodes_.size()) return;

    CanFrame frame = nodes_[winner].outbox.top().frame;
    nodes_[winner].outbox.pop();
    const SimTime duration = frame_duration(config_, frame.dlc());
    bus_busy_ = true;
    transmitting_node_ = winner;
    metrics_.bus_busy += duration;
    if (logging_) log_.push_back({now_, frame, nodes_[winner].id, Outcome::tx, nodes_[winner].id, contenders - 1});
    push(now_ + duration, EventKind::tx_end, winner, std::move(frame));
}

RunMetrics Simulator::run(SimTime end) {
    if (!started_) {
        started_ = true;
        for (std::size_t i = 0; i < nodes_.size(); ++i) {
            auto ctx = context(i);
            nodes_[i].behavior->on_start(ctx);
        }
    }
    while (true) {
        // Drain every event at the current instant before arbitrating.
        while (!events_.empty() && events_.top().t == now_) {
            const Event e = events_.top();
            events_.pop();
            dispatch(e);
        }
        try_start_transmission();
        if (events_.empty() || events_.top().t > end) break;
        now_ = events_.top().t;
    }
    metrics_.end_time = now_;
    std::uint64_t pending = bus_busy_ ? 1 : 0;
    for (const auto& n : nodes_) pending += n.outbox.size();
    metrics_.frames_pending_at_end = pending;
    return metrics_;
}

}  // namespace leap::sim
