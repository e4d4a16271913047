#pragma once

#include "msgchain/model.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace msgchain {

/// One read or write as seen in a run.
///
/// `id` is "p<process>.<k>" for the k-th invocation (1-based) at that process,
/// so the same id names the same operation in every locally equivalent run.
struct OperationInstance {
    std::string id;
    ProcessId process = 0;
    std::size_t ordinal = 1;
    OpKind kind = OpKind::Read;
    std::optional<Value> value; // written value, or value returned (empty: default value or not yet returned)
    Node start;                 // invoke node: round of the Invoke
    std::optional<Node> end;    // return node: round of the Return
    bool isolated = false;      // no other operation of the run is concurrent

    bool completed() const noexcept { return end.has_value(); }
    bool operator==(const OperationInstance&) const = default;
};

std::string operation_id(ProcessId p, std::size_t ordinal);

/// Pairs every Invoke with the next Return of the same process.
/// Throws ProtocolViolation on a Return with no pending invocation or of the wrong kind.
std::vector<OperationInstance> extract_operations(const Run& run);

/// Real-time order: x returns strictly before y is invoked.
bool precedes(const OperationInstance& x, const OperationInstance& y) noexcept;

/// Throws ConstraintError if no operation has this id.
const OperationInstance& find_operation(std::span<const OperationInstance> ops, std::string_view id);

} // namespace msgchain
