#pragma once

#include "msgchain/model.hpp"

#include <compare>
#include <memory>
#include <optional>
#include <string>

namespace msgchain {

/// Lexicographic (counter, writer) pair ordering register versions.
struct Timestamp {
    std::uint64_t counter = 0;
    ProcessId writer = 0;

    auto operator<=>(const Timestamp&) const = default;
};

struct TimestampedValue {
    Timestamp ts;
    std::optional<Value> value; // empty is the default value

    bool operator==(const TimestampedValue&) const = default;
};

/// Multi-writer multi-reader quorum register. Every operation runs two phases,
/// each a broadcast to all out-neighbors and a wait for n-f responders
/// (counting the caller):
///   write: query max timestamp, then store (max.counter+1, self, v)
///   read:  query max (ts, v), then write back the chosen pair
///
/// Payloads (space separated, `_` encodes the default value, otherwise `=v`):
///   Q <rid>                          query request
///   QR <rid> <counter> <writer> <v>  query reply
///   U <rid> <counter> <writer> <v>   update / write-back
///   A <rid>                          update ack
/// `rid` is the requester's operation counter.
///
/// Throws ConfigError unless n >= 2f+1.
std::unique_ptr<Protocol> abd_protocol(const SystemConfig& config);

/// Register that returns without waiting: a write updates locally, returns on
/// the next move and only afterwards broadcasts `B <counter> <writer> <v>`;
/// a read returns the local value at once. Not linearizable.
std::unique_ptr<Protocol> broken_protocol(const SystemConfig& config);

/// Looks up the protocol named by config.protocol ("abd" or "broken").
std::unique_ptr<Protocol> make_protocol(const SystemConfig& config);

/// Values travel inside whitespace-separated payloads.
bool is_encodable_value(std::string_view v) noexcept;

} // namespace msgchain
