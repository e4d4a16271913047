#pragma once

// Message chains over a run: ⟨p,t⟩ ⇝ ⟨q,t′⟩ holds when
//   p = q and t < t′, or
//   p sends in round t+1 a message delivered to q by round t′, or
//   a chain of such steps connects them.

#include "msgchain/model.hpp"
#include "msgchain/operations.hpp"

#include <limits>
#include <vector>

namespace msgchain {

inline constexpr Time kNever = std::numeric_limits<Time>::max();

/// Earliest-arrival summary: for every node ⟨p,t⟩ and process j, the least
/// time l with ⟨p,t⟩ ⇝ ⟨j,l⟩ (kNever if none). Queries are O(1).
class CausalIndex {
public:
    CausalIndex() = default;
    CausalIndex(std::uint32_t n, Time horizon);

    std::uint32_t processes() const noexcept { return n_; }
    Time horizon() const noexcept { return horizon_; }

    Time earliest(Node from, ProcessId to) const;
    Time& earliest_mut(Node from, ProcessId to);

private:
    std::uint32_t n_ = 0;
    Time horizon_ = 0;
    std::vector<Time> reach_;
};

CausalIndex build_index(const Run& run);
CausalIndex build_index(const Run& run, const RunFacts& facts);

/// θ ⇝ θ′. Both nodes must lie within the horizon.
bool happens_before(const CausalIndex& index, Node a, Node b);

/// Least time at `to` reached by a chain from `from`, or kNever.
Time earliest_reach(const CausalIndex& index, Node from, ProcessId to);

/// past(pivot) as per-process cut times: ⟨j,l⟩ is in the past iff l < cut[j].
struct PastFrontier {
    Node pivot;
    std::vector<Time> cut;

    bool contains(Node node) const { return node.time < cut.at(node.process); }
    bool operator==(const PastFrontier&) const = default;
};

PastFrontier past_frontier(const CausalIndex& index, Node pivot);

/// X ⟿ Y: a chain from X's invoke node to Y's return node.
/// Throws PendingOperation if Y has not returned.
bool op_chain(const CausalIndex& index, const OperationInstance& x, const OperationInstance& y);

/// Same initial state and same sequence of local states at every process.
/// Throws ConfigMismatch if the configurations differ.
bool locally_equivalent(const Run& a, const Run& b);
bool locally_equivalent(const Run& a, const RunFacts& fa, const Run& b, const RunFacts& fb);

/// All nodes of `b` at which node.process has the local state it has at `node` in `a`.
/// Throws NotEquivalent unless the runs are locally equivalent.
std::vector<Node> corresponding_nodes(const Run& a, const Run& b, Node node);

} // namespace msgchain
