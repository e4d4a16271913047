#pragma once

// Asynchronous message-passing model: processes, channels, an environment that
// schedules moves, deliveries and invocations, and the round-based transition
// function that turns joint actions into successive global states.
//
// Time conventions: times are 0-indexed, rounds 1-indexed. Round m takes the
// system from time m-1 to time m, so a run with horizon H has states r(0..H).

#include "msgchain/errors.hpp"

#include <compare>
#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace msgchain {

using ProcessId = std::uint32_t;
using Time = std::int64_t;
using Bytes = std::string;
using Value = std::string;

struct Edge {
    ProcessId from = 0;
    ProcessId to = 0;

    auto operator<=>(const Edge&) const = default;
};

struct SystemConfig {
    std::uint32_t n = 1;
    std::vector<Edge> net; // sorted, duplicate-free
    std::string protocol;
    std::uint32_t f = 0;

    /// Fully connected network without self loops.
    static SystemConfig complete(std::uint32_t n, std::uint32_t f, std::string protocol);

    bool has_edge(ProcessId from, ProcessId to) const;
    std::vector<ProcessId> out_neighbors(ProcessId p) const;

    /// Throws ConfigError unless n >= 1, f < n and every edge joins two
    /// distinct valid processes.
    void check() const;

    bool operator==(const SystemConfig&) const = default;
};

/// A process-time pair: the point on `process`'s timeline at time `time`.
struct Node {
    ProcessId process = 0;
    Time time = 0;

    auto operator<=>(const Node&) const = default;
};

/// |payload, send_round|: a message sent in `send_round` and not yet delivered.
struct MessageRecord {
    Bytes payload;
    Time send_round = 1;

    bool operator==(const MessageRecord&) const = default;
};

enum class OpKind : std::uint8_t { Read, Write };

std::string_view to_string(OpKind kind) noexcept;

/// External input handed to a process by the environment.
struct Invocation {
    OpKind kind = OpKind::Read;
    std::optional<Value> arg; // value to write; empty for reads

    bool operator==(const Invocation&) const = default;
};

namespace env {
struct Move {
    bool operator==(const Move&) const = default;
};
struct Skip {
    bool operator==(const Skip&) const = default;
};
struct Invoke {
    Invocation input;
    bool operator==(const Invoke&) const = default;
};
struct Deliver {
    MessageRecord record;
    ProcessId from = 0;
    bool operator==(const Deliver&) const = default;
};
} // namespace env

/// The environment's component for one process in one round.
using EnvComponent = std::variant<env::Skip, env::Move, env::Invoke, env::Deliver>;

namespace act {
/// Placeholder for a process that took no step (skipped, invoked, or missed delivery).
struct Bottom {
    bool operator==(const Bottom&) const = default;
};
struct NoOp {
    bool operator==(const NoOp&) const = default;
};
struct Send {
    Bytes payload;
    ProcessId to = 0;
    bool operator==(const Send&) const = default;
};
struct Return {
    OpKind kind = OpKind::Read;
    std::optional<Value> value; // value read; empty for writes and for the default value
    bool operator==(const Return&) const = default;
};
struct Local {
    std::string tag;
    std::string args;
    bool operator==(const Local&) const = default;
};
/// Records a successful delivery. Not a protocol step.
struct Receive {
    bool operator==(const Receive&) const = default;
};
} // namespace act

using ProcessAction = std::variant<act::Bottom, act::NoOp, act::Send, act::Return, act::Local, act::Receive>;

/// True for actions a protocol may choose when its process is moved.
bool is_protocol_action(const ProcessAction& a) noexcept;

struct JointAction {
    std::vector<EnvComponent> env;
    std::vector<ProcessAction> actions;

    static JointAction idle(std::uint32_t n);
    bool operator==(const JointAction&) const = default;
};

namespace event {
struct Performed {
    ProcessAction action;
    bool operator==(const Performed&) const = default;
};
struct Input {
    Invocation input;
    bool operator==(const Input&) const = default;
};
struct Received {
    ProcessId from = 0;
    Bytes payload;
    bool operator==(const Received&) const = default;
};
} // namespace event

using LocalEvent = std::variant<event::Performed, event::Input, event::Received>;

/// A process's local state: its initial value and everything it observed.
///
/// `rounds[k]` is the round in which `events[k]` happened. It is bookkeeping
/// only: processes cannot observe time, so state identity ignores it.
struct LocalHistory {
    std::string initial;
    std::vector<LocalEvent> events;
    std::vector<Time> rounds;

    void append(Time round, LocalEvent e);
    bool same_state(const LocalHistory& other) const;
    /// Compares the prefix of length `len` with the prefix of `other` of length `other_len`.
    bool same_prefix(std::size_t len, const LocalHistory& other, std::size_t other_len) const;

    bool operator==(const LocalHistory&) const = default;
};

struct GlobalState {
    std::vector<JointAction> env_history;
    std::map<Edge, std::deque<MessageRecord>> channels;
    std::vector<LocalHistory> locals;
    std::map<ProcessId, Time> crashed;

    Time time() const noexcept { return static_cast<Time>(env_history.size()); }
    bool operator==(const GlobalState&) const = default;
};

/// Finite prefix of a run.
struct Run {
    SystemConfig config;
    std::vector<std::string> initial; // per-process initial values
    std::vector<JointAction> rounds;  // rounds[m-1] is round m
    std::map<ProcessId, Time> crashes; // no Move or Invoke after the crash round
    bool quiescent = false;

    Time horizon() const noexcept { return static_cast<Time>(rounds.size()); }
    bool crashed_by(ProcessId p, Time round) const;
    GlobalState initial_state() const;
    /// The first `horizon` rounds, with crashes after the cut dropped.
    Run prefix(Time horizon) const;

    bool operator==(const Run&) const = default;
};

Run empty_run(SystemConfig config);

/// Applies one round in place. The round index is state.time() + 1.
///
/// Deliver components are resolved against the channel contents: the recorded
/// action becomes Receive if the record is the channel head, Bottom otherwise.
/// The resolved joint action is appended to env_history.
void advance(GlobalState& state, const JointAction& ja, const SystemConfig& config);

GlobalState apply_transition(const GlobalState& state, const JointAction& ja, const SystemConfig& config);

/// Materializes r(0..horizon).
std::vector<GlobalState> replay(const Run& run);

// ---------------------------------------------------------------------------
// Protocols

/// Per-process protocol behavior, folded incrementally over the local history.
class ProcessBehavior {
public:
    virtual ~ProcessBehavior() = default;

    virtual void observe(const LocalEvent& e) = 0;
    /// Whether `action` belongs to P_i at the current local state.
    virtual bool permits(const ProcessAction& action) const = 0;
    /// The action taken when moved. Always permitted.
    virtual ProcessAction next() const = 0;
    /// An invoked operation has not yet returned.
    virtual bool busy() const = 0;
    virtual std::unique_ptr<ProcessBehavior> clone() const = 0;
};

class Protocol {
public:
    virtual ~Protocol() = default;

    virtual std::string_view name() const = 0;
    virtual std::unique_ptr<ProcessBehavior> start(ProcessId self, std::string_view initial) const = 0;
};

// ---------------------------------------------------------------------------
// Validation

enum class ViolationKind : std::uint8_t {
    Malformed,
    IllegalAction,      // moved process acted outside its protocol
    FifoViolation,      // recorded delivery of a record that was not the channel head
    MovedAfterCrash,    // Move or Invoke after the crash round
    OverlappingInvoke,  // Invoke while an operation is pending at the process
};

std::string_view to_string(ViolationKind kind) noexcept;

struct RunViolation {
    ViolationKind kind;
    Time round = 0;
    ProcessId process = 0;
    std::string detail;
};

struct ValidationReport {
    std::vector<RunViolation> violations;
    bool ok() const noexcept { return violations.empty(); }
};

ValidationReport validate_run(const Run& run, const Protocol& protocol);

// ---------------------------------------------------------------------------
// Derived facts

struct MessageFlow {
    Edge edge;
    MessageRecord record;
    std::optional<Time> delivered; // delivery round
};

/// Everything analyses need from one fold over the run.
struct RunFacts {
    std::vector<LocalHistory> locals;                 // local histories at the horizon
    std::vector<std::vector<std::size_t>> length_at;  // length_at[p][m]: events of p by time m
    std::vector<MessageFlow> messages;                // in send order
    std::map<Edge, std::deque<MessageRecord>> channels_at_horizon;
};

RunFacts collect_facts(const Run& run);

/// Messages sent and never delivered within the prefix.
std::vector<std::pair<Edge, MessageRecord>> lost_messages(const Run& run);

} // namespace msgchain
