#pragma once

#include "msgchain/model.hpp"
#include "msgchain/operations.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace msgchain {

/// One step of a sequential history: an invocation or its matching response.
struct HistoryEntry {
    bool invocation = true;
    std::string op;
    OpKind kind = OpKind::Read;
    std::optional<Value> value; // written value on a write invocation, returned value on a read response

    bool operator==(const HistoryEntry&) const = default;
};

struct SequentialHistory {
    std::vector<HistoryEntry> entries;

    /// Operation ids in order.
    std::vector<std::string> order() const;
    bool operator==(const SequentialHistory&) const = default;
};

/// Alternating invocation/response pairs of the same operation.
bool is_well_formed(const SequentialHistory& h);

/// Well formed, and every read returns the latest preceding write's value
/// (the default value if none precedes).
bool is_atomic_history(const SequentialHistory& h);

struct LinearizationOptions {
    std::size_t max_operations = 12;
};

struct SearchStats {
    std::size_t operations = 0;     // operations the search had to place or could place
    std::size_t pending_writes = 0; // optional members
    std::size_t states = 0;         // distinct search states expanded
};

struct LinearizationResult {
    bool linearizable = false;
    std::optional<SequentialHistory> witness;
    /// NotLinearizable: the longest placement reached before every candidate was blocked.
    std::vector<std::string> deepest_prefix;
    std::vector<std::string> blocked; // "<op>: <reason>" for candidates after the deepest prefix
    SearchStats stats;
};

/// Decides whether some atomic register history contains every completed
/// operation, any subset of pending writes, and respects real-time order.
///
/// Pending reads are left out: a pending read can always be completed last
/// with the then-current value, so including it never changes the verdict.
/// Throws HistoryTooLarge if more than options.max_operations operations
/// take part in the search.
LinearizationResult find_linearization(std::span<const OperationInstance> ops, LinearizationOptions options = {});
LinearizationResult find_linearization(const Run& run, LinearizationOptions options = {});

/// X <_r Y <_r Z, all completed, with val(X) != val(Y) and val(X) == val(Z).
struct AbaViolation {
    std::string x;
    std::string y;
    std::string z;
};

std::vector<AbaViolation> check_no_aba(std::span<const OperationInstance> ops);
std::vector<AbaViolation> check_no_aba(const Run& run);

} // namespace msgchain
