#pragma once

#include "msgchain/model.hpp"

#include <cstdint>
#include <optional>
#include <random>
#include <vector>

namespace msgchain {

/// Seeded generator used for every adversary decision. mt19937_64 output is
/// fully specified by the standard, and the conversions below avoid the
/// implementation-defined std distributions, so draws match across platforms.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }
    /// Uniform in [0, 1) from the top 53 bits.
    double unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

private:
    std::mt19937_64 engine_;
};

struct CrashPoint {
    ProcessId process = 0;
    Time round = 0; // last round in which the process may move

    bool operator==(const CrashPoint&) const = default;
};

struct PlannedInvocation {
    ProcessId process = 0;
    Time round = 1; // earliest round; deferred while the process is busy
    OpKind kind = OpKind::Read;
    std::optional<Value> value; // writes only; generated when empty
    bool after_quiet = false;    // also wait until nothing else is in progress

    bool operator==(const PlannedInvocation&) const = default;
};

/// Resolves all environment nondeterminism of a simulation.
///
/// Per round, for each process 0..n-1 in order, exactly five 64-bit draws are
/// taken (delivery, channel choice, invocation, operation kind, move), whether
/// or not they are used. Decisions per process are tried in priority order:
/// deliver, invoke, move, skip.
struct AdversarySpec {
    enum class Schedule : std::uint8_t { RoundRobin, Random };
    enum class Delivery : std::uint8_t { Immediate, Random };

    Schedule schedule = Schedule::Random;
    double move_prob = 0.5;
    bool idle_moves = false; // move processes whose next action is NoOp

    Delivery delivery = Delivery::Random;
    double deliver_prob = 0.5;

    std::vector<CrashPoint> crash_plan;
    std::uint32_t random_crashes = 0;
    Time crash_window = 0; // random crash rounds fall in the first crash_window simulated rounds

    std::vector<PlannedInvocation> invocations;
    double invoke_prob = 0.0;
    std::uint32_t max_random_ops = 0;
    double read_ratio = 0.5;
    Time invoke_until = 0; // last round for random invocations; 0 means unbounded

    bool quiesce = true;            // once nothing is pending, only Skip
    bool drop_from_crashed = false; // never deliver messages sent by crashed processes

    bool operator==(const AdversarySpec&) const = default;
};

/// Runs the protocol under the adversary for `horizon` rounds.
/// Throws AdversaryExhausted if the crash plan exceeds config.f.
Run simulate(const SystemConfig& config, const Protocol& protocol, const AdversarySpec& adversary, Time horizon,
             std::uint64_t seed);

/// Continues `prefix` up to total horizon `horizon` under a new adversary.
/// Crash and invocation rounds in the adversary are absolute.
Run extend_run(const Run& prefix, const Protocol& protocol, const AdversarySpec& adversary, Time horizon,
               std::uint64_t seed);

} // namespace msgchain
