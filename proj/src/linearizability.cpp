#include "msgchain/linearizability.hpp"

#include <unordered_set>

namespace msgchain {

namespace {

struct StateHash {
    std::size_t operator()(const std::pair<std::uint64_t, int>& s) const noexcept
    {
        return std::hash<std::uint64_t>{}(s.first * 0x9e3779b97f4a7c15ULL + static_cast<std::uint64_t>(s.second + 1));
    }
};

std::string show(const std::optional<Value>& v)
{
    return v ? *v : std::string("⊥");
}

class Search {
public:
    Search(std::vector<const OperationInstance*> ops) : ops_(std::move(ops))
    {
        const std::size_t k = ops_.size();
        pred_.assign(k, 0);
        for (std::size_t i = 0; i < k; ++i) {
            if (ops_[i]->completed()) {
                mandatory_ |= bit(i);
            }
            for (std::size_t j = 0; j < k; ++j) {
                if (precedes(*ops_[j], *ops_[i])) {
                    pred_[i] |= bit(j);
                }
            }
        }
    }

    bool run() { return dfs(0, -1); }

    const std::vector<std::size_t>& path() const { return path_; }
    const std::vector<std::size_t>& deepest() const { return deepest_; }
    std::size_t states() const { return failed_.size() + 1; }

    std::vector<std::string> blocked_after_deepest() const
    {
        std::uint64_t mask = 0;
        int last = -1;
        for (std::size_t i : deepest_) {
            mask |= bit(i);
            if (ops_[i]->kind == OpKind::Write) {
                last = static_cast<int>(i);
            }
        }
        std::vector<std::string> out;
        for (std::size_t i = 0; i < ops_.size(); ++i) {
            if ((mask & bit(i)) != 0) {
                continue;
            }
            const auto& op = *ops_[i];
            if ((pred_[i] & ~mask) != 0) {
                for (std::size_t j = 0; j < ops_.size(); ++j) {
                    if ((pred_[i] & ~mask & bit(j)) != 0) {
                        out.push_back(op.id + ": must follow " + ops_[j]->id);
                        break;
                    }
                }
            } else if (op.kind == OpKind::Read && op.value != current(last)) {
                out.push_back(op.id + ": returned " + show(op.value) + " but the register holds " +
                              show(current(last)));
            } else {
                out.push_back(op.id + ": every continuation fails");
            }
        }
        return out;
    }

private:
    static std::uint64_t bit(std::size_t i) { return std::uint64_t{1} << i; }

    std::optional<Value> current(int last) const
    {
        return last < 0 ? std::nullopt : ops_[static_cast<std::size_t>(last)]->value;
    }

    bool dfs(std::uint64_t mask, int last)
    {
        if ((mask & mandatory_) == mandatory_) {
            return true;
        }
        if (failed_.contains({mask, last})) {
            return false;
        }
        if (path_.size() > deepest_.size()) {
            deepest_ = path_;
        }
        for (std::size_t i = 0; i < ops_.size(); ++i) {
            if ((mask & bit(i)) != 0 || (pred_[i] & ~mask) != 0) {
                continue;
            }
            const auto& op = *ops_[i];
            int next_last = last;
            if (op.kind == OpKind::Read) {
                if (op.value != current(last)) {
                    continue;
                }
            } else {
                next_last = static_cast<int>(i);
            }
            path_.push_back(i);
            if (dfs(mask | bit(i), next_last)) {
                return true;
            }
            path_.pop_back();
        }
        failed_.insert({mask, last});
        return false;
    }

    std::vector<const OperationInstance*> ops_;
    std::vector<std::uint64_t> pred_;
    std::uint64_t mandatory_ = 0;
    std::unordered_set<std::pair<std::uint64_t, int>, StateHash> failed_;
    std::vector<std::size_t> path_;
    std::vector<std::size_t> deepest_;
};

std::optional<Value> op_value(const OperationInstance& op)
{
    return op.value;
}

} // namespace

std::vector<std::string> SequentialHistory::order() const
{
    std::vector<std::string> out;
    for (const auto& e : entries) {
        if (e.invocation) {
            out.push_back(e.op);
        }
    }
    return out;
}

bool is_well_formed(const SequentialHistory& h)
{
    if (h.entries.size() % 2 != 0) {
        return false;
    }
    for (std::size_t i = 0; i < h.entries.size(); i += 2) {
        const auto& inv = h.entries[i];
        const auto& res = h.entries[i + 1];
        if (!inv.invocation || res.invocation || inv.op != res.op || inv.kind != res.kind) {
            return false;
        }
    }
    return true;
}

bool is_atomic_history(const SequentialHistory& h)
{
    if (!is_well_formed(h)) {
        return false;
    }
    std::optional<Value> reg;
    for (std::size_t i = 0; i < h.entries.size(); i += 2) {
        const auto& inv = h.entries[i];
        if (inv.kind == OpKind::Write) {
            reg = inv.value;
        } else if (h.entries[i + 1].value != reg) {
            return false;
        }
    }
    return true;
}

LinearizationResult find_linearization(std::span<const OperationInstance> ops, LinearizationOptions options)
{
    if (options.max_operations > 64) {
        throw ConstraintError("exhaustive search supports at most 64 operations");
    }
    std::vector<const OperationInstance*> members;
    LinearizationResult result;
    for (const auto& op : ops) {
        if (op.completed()) {
            members.push_back(&op);
        } else if (op.kind == OpKind::Write) {
            members.push_back(&op);
            ++result.stats.pending_writes;
        }
    }
    result.stats.operations = members.size();
    if (members.size() > options.max_operations) {
        throw HistoryTooLarge(std::to_string(members.size()) + " operations exceed the search bound of " +
                              std::to_string(options.max_operations));
    }

    Search search(members);
    result.linearizable = search.run();
    result.stats.states = search.states();
    if (result.linearizable) {
        SequentialHistory h;
        for (std::size_t i : search.path()) {
            const auto& op = *members[i];
            const bool write = op.kind == OpKind::Write;
            h.entries.push_back(HistoryEntry{true, op.id, op.kind, write ? op_value(op) : std::nullopt});
            h.entries.push_back(HistoryEntry{false, op.id, op.kind, write ? std::nullopt : op_value(op)});
        }
        result.witness = std::move(h);
    } else {
        for (std::size_t i : search.deepest()) {
            result.deepest_prefix.push_back(members[i]->id);
        }
        result.blocked = search.blocked_after_deepest();
    }
    return result;
}

LinearizationResult find_linearization(const Run& run, LinearizationOptions options)
{
    const auto ops = extract_operations(run);
    return find_linearization(ops, options);
}

std::vector<AbaViolation> check_no_aba(std::span<const OperationInstance> ops)
{
    std::vector<AbaViolation> out;
    for (const auto& x : ops) {
        for (const auto& y : ops) {
            if (!precedes(x, y) || x.value == y.value) {
                continue;
            }
            for (const auto& z : ops) {
                if (z.completed() && precedes(y, z) && x.value == z.value) {
                    out.push_back(AbaViolation{x.id, y.id, z.id});
                }
            }
        }
    }
    return out;
}

std::vector<AbaViolation> check_no_aba(const Run& run)
{
    const auto ops = extract_operations(run);
    return check_no_aba(ops);
}

} // namespace msgchain
