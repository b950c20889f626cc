#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <memory>
#include <queue>
#include <random>
#include <string>
#include <vector>

#include "leap/can_frame.hpp"
#include "leap/sim_time.hpp"

namespace leap::sim {

struct ProcessingCost {
    SimTime send{0};
    SimTime recv{0};
};

struct BusConfig {
    double bit_rate = 500'000.0;
    FrameTiming timing{};
    std::map<CanId, ProcessingCost> processing;

    ProcessingCost cost(CanId id) const;
};

/// Time on the wire for one frame of `dlc` bytes.
SimTime frame_duration(const BusConfig& config, unsigned dlc);

/// bit_rate / frame_bits(dlc).
double max_frame_rate(const BusConfig& config, unsigned dlc);

enum class Outcome { tx, accept, reject, ignore };

struct LogRecord {
    SimTime t{0};
    CanFrame frame;
    CanId origin;
    Outcome outcome = Outcome::tx;
    /// Reporting node for accept/reject/ignore.
    CanId node;
    /// Other contenders pending when a tx record won arbitration.
    std::uint32_t losers = 0;
};

/// `t_us,ID#DATA,origin,outcome` with outcome `won:N` or `accept@ID` etc.
std::string format_log_record(const LogRecord& r);
void write_event_log(std::ostream& out, const std::vector<LogRecord>& log);

struct NodeCounters {
    std::uint64_t sent = 0;
    std::uint64_t accepted = 0;
    std::uint64_t rejected = 0;
    std::uint64_t ignored = 0;
};

struct RunMetrics {
    std::uint64_t frames_enqueued = 0;
    std::uint64_t frames_transmitted = 0;
    std::uint64_t frames_pending_at_end = 0;
    std::uint64_t deliveries = 0;
    /// Same-id contenders from different nodes, resolved FIFO.
    std::uint64_t id_collisions = 0;
    SimTime bus_busy{0};
    SimTime end_time{0};
    std::map<CanId, NodeCounters> nodes;
};

class Simulator;

/// Handle a behavior uses to act on the bus. Valid only inside callbacks.
class NodeContext {
public:
    SimTime now() const noexcept;
    CanId self() const noexcept { return self_; }
    /// Queues `frame` in this node's outbox after the node's send cost.
    void send(CanFrame frame);
    void set_timer(SimTime delay, std::uint64_t tag);
    void report(const CanFrame& frame, Outcome outcome);
    std::mt19937_64& rng() noexcept;
    const BusConfig& bus() const noexcept;

private:
    friend class Simulator;
    NodeContext(Simulator& sim, std::size_t index, CanId self) : sim_(&sim), index_(index), self_(self) {}

    Simulator* sim_;
    std::size_t index_;
    CanId self_;
};

/// Scripted node role. Callbacks run on the simulator loop and must not block.
class Behavior {
public:
    virtual ~Behavior() = default;
    virtual void on_start(NodeContext&) {}
    virtual void on_frame(NodeContext&, const CanFrame&) {}
    virtual void on_timer(NodeContext&, std::uint64_t /*tag*/) {}
    /// The node's own frame finished transmission.
    virtual void on_transmitted(NodeContext&, const CanFrame&) {}
};

/// Deterministic discrete-event model of one lossless CAN bus. At every
/// bus-idle instant the lowest-id head-of-outbox frame transmits for
/// frame_duration; every other node then receives it after its recv cost.
class Simulator {
public:
    Simulator(BusConfig config, std::uint64_t seed);
    ~Simulator();
    Simulator(const Simulator&) = delete;
    Simulator& operator=(const Simulator&) = delete;

    /// Throws SimulationError if `id` is already in use.
    Behavior& add_node(CanId id, std::unique_ptr<Behavior> behavior);

    template <class B, class... Args>
    B& emplace_node(CanId id, Args&&... args) {
        return static_cast<B&>(add_node(id, std::make_unique<B>(std::forward<Args>(args)...)));
    }

    /// Processes every event up to and including `end`.
    RunMetrics run(SimTime end);

    void set_logging(bool enabled) noexcept { logging_ = enabled; }
    const std::vector<LogRecord>& log() const noexcept { return log_; }
    const BusConfig& config() const noexcept { return config_; }
    SimTime now() const noexcept { return now_; }

private:
    friend class NodeContext;

    enum class EventKind { timer, enqueue, tx_end, deliver };

    struct Event {
        SimTime t;
        std::uint64_t seq;
        EventKind kind;
        std::size_t node;
        CanFrame frame;
        std::uint64_t tag = 0;
    };
    struct EventLater {
        bool operator()(const Event& a, const Event& b) const {
            return a.t != b.t ? a.t > b.t : a.seq > b.seq;
        }
    };

    struct Queued {
        CanFrame frame;
        std::uint64_t seq;
    };
    struct QueuedLater {
        bool operator()(const Queued& a, const Queued& b) const {
            return a.frame.id() != b.frame.id() ? a.frame.id() > b.frame.id() : a.seq > b.seq;
        }
    };

    struct NodeSlot {
        CanId id;
        std::unique_ptr<Behavior> behavior;
        std::priority_queue<Queued, std::vector<Queued>, QueuedLater> outbox;
        std::mt19937_64 rng;
    };

    void push(SimTime t, EventKind kind, std::size_t node, CanFrame frame = {}, std::uint64_t tag = 0);
    void dispatch(const Event& e);
    void try_start_transmission();
    NodeContext context(std::size_t node) { return NodeContext(*this, node, nodes_[node].id); }

    BusConfig config_;
    std::uint64_t seed_;
    std::vector<NodeSlot> nodes_;
    std::priority_queue<Event, std::vector<Event>, EventLater> events_;
    std::uint64_t seq_ = 0;
    SimTime now_{0};
    bool bus_busy_ = false;
    std::size_t transmitting_node_ = 0;
    bool started_ = false;
    bool logging_ = true;
    std::vector<LogRecord> log_;
    RunMetrics metrics_;
};

}  // namespace leap::sim
