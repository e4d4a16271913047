#include "msgchain/causality.hpp"

#include <algorithm>

namespace msgchain {

namespace {

void check_node(const CausalIndex& index, Node node)
{
    if (node.process >= index.processes() || node.time < 0 || node.time > index.horizon()) {
        throw ConstraintError("node <" + std::to_string(node.process) + "," + std::to_string(node.time) +
                              "> outside the run");
    }
}

} // namespace

CausalIndex::CausalIndex(std::uint32_t n, Time horizon)
    : n_(n), horizon_(horizon), reach_(static_cast<std::size_t>(n) * n * static_cast<std::size_t>(horizon + 1), kNever)
{
}

Time CausalIndex::earliest(Node from, ProcessId to) const
{
    return reach_[(static_cast<std::size_t>(from.process) * static_cast<std::size_t>(horizon_ + 1) +
                   static_cast<std::size_t>(from.time)) *
                      n_ +
                  to];
}

Time& CausalIndex::earliest_mut(Node from, ProcessId to)
{
    return reach_[(static_cast<std::size_t>(from.process) * static_cast<std::size_t>(horizon_ + 1) +
                   static_cast<std::size_t>(from.time)) *
                      n_ +
                  to];
}

CausalIndex build_index(const Run& run)
{
    return build_index(run, collect_facts(run));
}

CausalIndex build_index(const Run& run, const RunFacts& facts)
{
    const std::uint32_t n = run.config.n;
    const Time h = run.horizon();
    CausalIndex index(n, h);

    // sends[p][m]: deliveries (receiver, delivery round) of messages p sent in round m.
    std::vector<std::vector<std::vector<std::pair<ProcessId, Time>>>> sends(
        n, std::vector<std::vector<std::pair<ProcessId, Time>>>(static_cast<std::size_t>(h + 1)));
    for (const auto& flow : facts.messages) {
        if (flow.delivered) {
            sends[flow.edge.from][static_cast<std::size_t>(flow.record.send_round)].emplace_back(flow.edge.to,
                                                                                              *flow.delivered);
        }
    }

    // Sweep backwards in time so every successor node is final before use.
    for (Time t = h; t >= 0; --t) {
        for (ProcessId p = 0; p < n; ++p) {
            const Node node{p, t};
            auto relax = [&](ProcessId j, Time l) {
                Time& slot = index.earliest_mut(node, j);
                slot = std::min(slot, l);
            };
            relax(p, t + 1);
            if (t == h) {
                continue;
            }
            for (ProcessId j = 0; j < n; ++j) {
                relax(j, index.earliest(Node{p, t + 1}, j));
            }
            for (const auto& [q, d] : sends[p][static_cast<std::size_t>(t + 1)]) {
                relax(q, d);
                for (ProcessId j = 0; j < n; ++j) {
                    relax(j, index.earliest(Node{q, d}, j));
                }
            }
        }
    }
    return index;
}

bool happens_before(const CausalIndex& index, Node a, Node b)
{
    check_node(index, a);
    check_node(index, b);
    const bool result = index.earliest(a, b.process) <= b.time;
    if (result && a.time >= b.time) {
        throw Error("causal index inconsistent: chain does not advance time");
    }
    return result;
}

Time earliest_reach(const CausalIndex& index, Node from, ProcessId to)
{
    check_node(index, from);
    return index.earliest(from, to);
}

PastFrontier past_frontier(const CausalIndex& index, Node pivot)
{
    check_node(index, pivot);
    PastFrontier frontier{pivot, std::vector<Time>(index.processes(), 0)};
    for (ProcessId j = 0; j < index.processes(); ++j) {
        Time l = 0;
        while (l < pivot.time && index.earliest(Node{j, l}, pivot.process) <= pivot.time) {
            ++l;
        }
        frontier.cut[j] = l;
    }
    return frontier;
}

bool op_chain(const CausalIndex& index, const OperationInstance& x, const OperationInstance& y)
{
    if (!y.end) {
        throw PendingOperation("operation " + y.id + " has not returned");
    }
    return happens_before(index, x.start, *y.end);
}

bool locally_equivalent(const Run& a, const Run& b)
{
    if (!(a.config == b.config)) {
        throw ConfigMismatch("runs have different configurations");
    }
    return locally_equivalent(a, collect_facts(a), b, collect_facts(b));
}

bool locally_equivalent(const Run& a, const RunFacts& fa, const Run& b, const RunFacts& fb)
{
    if (!(a.config == b.config)) {
        throw ConfigMismatch("runs have different configurations");
    }
    // Histories only grow, one event per round, so the sequence of states a
    // process passes through is fixed by its final history.
    for (ProcessId p = 0; p < a.config.n; ++p) {
        if (!fa.locals[p].same_state(fb.locals[p])) {
            return false;
        }
    }
    return true;
}

std::vector<Node> corresponding_nodes(const Run& a, const Run& b, Node node)
{
    const RunFacts fa = collect_facts(a);
    const RunFacts fb = collect_facts(b);
    if (!locally_equivalent(a, fa, b, fb)) {
        throw NotEquivalent("runs are not locally equivalent");
    }
    if (node.process >= a.config.n || node.time < 0 || node.time > a.horizon()) {
        throw ConstraintError("node outside the run");
    }
    const std::size_t len = fa.length_at[node.process][static_cast<std::size_t>(node.time)];
    std::vector<Node> out;
    for (Time t = 0; t <= b.horizon(); ++t) {
        if (fb.length_at[node.process][static_cast<std::size_t>(t)] == len) {
            out.push_back(Node{node.process, t});
        }
    }
    return out;
}

} // namespace msgchain
