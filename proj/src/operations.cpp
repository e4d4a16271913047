#include "msgchain/operations.hpp"

#include <algorithm>

namespace msgchain {

std::string operation_id(ProcessId p, std::size_t ordinal)
{
    return "p" + std::to_string(p) + "." + std::to_string(ordinal);
}

std::vector<OperationInstance> extract_operations(const Run& run)
{
    const auto& config = run.config;
    std::vector<OperationInstance> ops;
    std::vector<std::optional<std::size_t>> open(config.n);
    std::vector<std::size_t> count(config.n, 0);

    for (Time m = 1; m <= run.horizon(); ++m) {
        const auto& ja = run.rounds[static_cast<std::size_t>(m - 1)];
        for (ProcessId p = 0; p < config.n && p < ja.env.size(); ++p) {
            if (const auto* inv = std::get_if<env::Invoke>(&ja.env[p])) {
                if (open[p]) {
                    throw ProtocolViolation("round " + std::to_string(m) + ": process " + std::to_string(p) +
                                            " invoked while an operation is pending");
                }
                OperationInstance op;
                op.process = p;
                op.ordinal = ++count[p];
                op.id = operation_id(p, op.ordinal);
                op.kind = inv->input.kind;
                if (op.kind == OpKind::Write) {
                    op.value = inv->input.arg;
                }
                op.start = Node{p, m};
                open[p] = ops.size();
                ops.push_back(std::move(op));
            } else if (std::holds_alternative<env::Move>(ja.env[p])) {
                const auto* ret = std::get_if<act::Return>(&ja.actions[p]);
                if (ret == nullptr) {
                    continue;
                }
                if (!open[p] || ops[*open[p]].kind != ret->kind) {
                    throw ProtocolViolation("round " + std::to_string(m) + ": process " + std::to_string(p) +
                                            " returned without a matching invocation");
                }
                auto& op = ops[*open[p]];
                op.end = Node{p, m};
                if (op.kind == OpKind::Read) {
                    op.value = ret->value;
                }
                open[p].reset();
            }
        }
    }

    for (auto& x : ops) {
        x.isolated = std::none_of(ops.begin(), ops.end(), [&](const OperationInstance& y) {
            return &x != &y && !precedes(x, y) && !precedes(y, x);
        });
    }
    return ops;
}

bool precedes(const OperationInstance& x, const OperationInstance& y) noexcept
{
    return x.end && x.end->time < y.start.time;
}

const OperationInstance& find_operation(std::span<const OperationInstance> ops, std::string_view id)
{
    auto it = std::find_if(ops.begin(), ops.end(), [&](const auto& op) { return op.id == id; });
    if (it == ops.end()) {
        throw ConstraintError("no operation '" + std::string(id) + "' in run");
    }
    return *it;
}

} // namespace msgchain
