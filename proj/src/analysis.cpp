#include "msgchain/analysis.hpp"

#include "msgchain/simulate.hpp"

#include <algorithm>

namespace msgchain {

namespace {

const OperationInstance& completed_op(std::span<const OperationInstance> ops, const std::string& id)
{
    const auto& op = find_operation(ops, id);
    if (!op.completed()) {
        throw PreconditionFailed("operation " + id + " has not returned");
    }
    return op;
}

bool is_idle(const JointAction& ja)
{
    return std::all_of(ja.env.begin(), ja.env.end(), [](const auto& c) { return std::holds_alternative<env::Skip>(c); });
}

void trim_idle_tail(Run& run, Time keep)
{
    while (run.horizon() > keep && is_idle(run.rounds.back())) {
        run.rounds.pop_back();
    }
}

// Continues `run` with a single invocation that waits until nothing else is
// in progress, under a deterministic fair schedule.
Run extend_with(const Run& run, const Protocol& protocol, ProcessId process, OpKind kind, std::optional<Value> value,
                std::vector<CrashPoint> crashes)
{
    AdversarySpec adv;
    adv.schedule = AdversarySpec::Schedule::Random;
    adv.move_prob = 1.0;
    adv.delivery = AdversarySpec::Delivery::Immediate;
    adv.crash_plan = std::move(crashes);
    adv.drop_from_crashed = true;
    adv.invocations.push_back(PlannedInvocation{process, run.horizon() + 1, kind, std::move(value), true});
    const Time budget = 200 + 20 * static_cast<Time>(run.config.n) * static_cast<Time>(run.config.n);
    Run out = extend_run(run, protocol, adv, run.horizon() + budget, 0);
    trim_idle_tail(out, run.horizon());
    return out;
}

RefutationResult finish(const Run& input, Run result, const Protocol& protocol, LinearizationOptions options)
{
    RefutationResult out;
    out.valid = validate_run(result, protocol).ok();
    out.equivalent = locally_equivalent(input, result);
    out.verdict = find_linearization(result, options);
    out.run = std::move(result);
    return out;
}

RefutationResult reorder_and_check(const Run& run, const Protocol& protocol, const OperationInstance& x,
                                   const OperationInstance& y, LinearizationOptions options)
{
    if (y.end->time - x.start.time + 1 <= 0) {
        RefutationResult out = finish(run, run, protocol, options);
        out.note = y.id + " already precedes " + x.id + "; the run itself is the evidence";
        return out;
    }
    Transformed t = reorder_operations(run, protocol, x, y);
    RefutationResult out = finish(run, std::move(t.run), protocol, options);
    out.certificate = std::move(t.certificate);
    out.note = "moved " + x.id + " after " + y.id;
    return out;
}

} // namespace

std::vector<ProcessId> observers(const CausalIndex& index, const OperationInstance& x)
{
    if (!x.end) {
        throw PendingOperation("operation " + x.id + " has not returned");
    }
    std::vector<ProcessId> out;
    for (ProcessId p = 0; p < index.processes(); ++p) {
        if (p == x.process || earliest_reach(index, x.start, p) <= x.end->time) {
            out.push_back(p);
        }
    }
    return out;
}

std::vector<ProcessId> witnesses(const CausalIndex& index, const OperationInstance& x)
{
    if (!x.end) {
        throw PendingOperation("operation " + x.id + " has not returned");
    }
    std::vector<ProcessId> out;
    for (ProcessId p = 0; p < index.processes(); ++p) {
        if (p == x.process) {
            out.push_back(p);
            continue;
        }
        // Later p-nodes reach fewer nodes, so the earliest one decides.
        const Time first = earliest_reach(index, x.start, p);
        if (first <= x.end->time && happens_before(index, Node{p, first}, *x.end)) {
            out.push_back(p);
        }
    }
    return out;
}

std::string_view to_string(ChainRule rule) noexcept
{
    switch (rule) {
    case ChainRule::WriteToRead:
        return "write-to-read";
    case ChainRule::ReadValueSource:
        return "read-value-source";
    case ChainRule::Isolation:
        return "isolation";
    }
    return "unknown";
}

bool AuditReport::quorum_clean() const noexcept
{
    return std::none_of(operations.begin(), operations.end(),
                        [](const auto& q) { return q.too_few_observers || q.too_few_witnesses; });
}

AuditReport audit_quorum(const Run& run, std::uint32_t f)
{
    AuditReport report;
    report.f = f;
    const auto ops = extract_operations(run);
    const CausalIndex index = build_index(run);
    for (const auto& x : ops) {
        if (!x.completed()) {
            continue;
        }
        QuorumFinding q{x.id, observers(index, x), witnesses(index, x)};
        q.too_few_observers = q.observers.size() <= f;
        q.too_few_witnesses = q.witnesses.size() <= f;
        report.operations.push_back(std::move(q));
    }
    return report;
}

AuditReport audit_chains(const Run& run)
{
    AuditReport report;
    report.f = run.config.f;
    const auto ops = extract_operations(run);
    const CausalIndex index = build_index(run);
    auto& out = report.chain_violations;

    for (const auto& r : ops) {
        if (r.kind != OpKind::Read || !r.completed() || !r.value) {
            continue;
        }
        bool written = false;
        for (const auto& w : ops) {
            if (w.kind == OpKind::Write && w.value == r.value) {
                written = true;
                if (!op_chain(index, w, r)) {
                    out.push_back(ChainViolation{ChainRule::WriteToRead, w.id, r.id, {}});
                }
            }
        }
        if (!written) {
            out.push_back(ChainViolation{ChainRule::WriteToRead, {}, r.id, {}});
        }
    }

    for (const auto& rb : ops) {
        if (rb.kind != OpKind::Read || !rb.completed()) {
            continue;
        }
        for (const auto& yb : ops) {
            if (&yb == &rb || !yb.completed() || yb.value != rb.value || op_chain(index, rb, yb)) {
                continue;
            }
            for (const auto& xc : ops) {
                if (xc.value != rb.value && precedes(xc, rb) && !op_chain(index, xc, yb)) {
                    out.push_back(ChainViolation{ChainRule::ReadValueSource, xc.id, yb.id, rb.id});
                }
            }
        }
    }

    for (const auto& yb : ops) {
        if (!yb.completed() || !yb.isolated) {
            continue;
        }
        for (const auto& xa : ops) {
            if (xa.value != yb.value && precedes(xa, yb) && !op_chain(index, xa, yb)) {
                out.push_back(ChainViolation{ChainRule::Isolation, xa.id, yb.id, {}});
            }
        }
    }
    return report;
}

AuditReport audit(const Run& run, std::uint32_t f)
{
    AuditReport report = audit_quorum(run, f);
    report.chain_violations = audit_chains(run).chain_violations;
    return report;
}

RefutationResult refute(const Run& run, const Protocol& protocol, const ChainViolation& violation,
                        LinearizationOptions options)
{
    const auto ops = extract_operations(run);
    const CausalIndex index = build_index(run);

    switch (violation.rule) {
    case ChainRule::WriteToRead: {
        const auto& read = completed_op(ops, violation.y);
        if (violation.x.empty()) {
            if (std::any_of(ops.begin(), ops.end(),
                            [&](const auto& w) { return w.kind == OpKind::Write && w.value == read.value; })) {
                throw PreconditionFailed("value read by " + read.id + " is written in the run");
            }
            RefutationResult out = finish(run, run, protocol, options);
            out.note = read.id + " returns a value nobody wrote";
            return out;
        }
        const auto& write = find_operation(ops, violation.x);
        if (read.kind != OpKind::Read || write.kind != OpKind::Write || !read.value || write.value != read.value) {
            throw PreconditionFailed("operations do not match the violated condition");
        }
        if (op_chain(index, write, read)) {
            throw PreconditionFailed("a message chain leads from " + write.id + " to " + read.id);
        }
        // Moving the write after the read leaves the read with no write of its value before it.
        return reorder_and_check(run, protocol, write, read, options);
    }
    case ChainRule::ReadValueSource: {
        const auto& rb = completed_op(ops, violation.read);
        const auto& yb = completed_op(ops, violation.y);
        const auto& xc = completed_op(ops, violation.x);
        if (op_chain(index, rb, yb) || !precedes(xc, rb) || xc.value == rb.value || yb.value != rb.value) {
            throw PreconditionFailed("operations do not match the violated condition");
        }
        if (op_chain(index, xc, yb)) {
            throw PreconditionFailed("a message chain leads from " + xc.id + " to " + yb.id);
        }
        // Yb < Xc < Rb with c != b has no linearization.
        return reorder_and_check(run, protocol, xc, yb, options);
    }
    case ChainRule::Isolation: {
        const auto& yb = completed_op(ops, violation.y);
        const auto& xa = completed_op(ops, violation.x);
        if (!yb.isolated || !precedes(xa, yb) || xa.value == yb.value) {
            throw PreconditionFailed("operations do not match the violated condition");
        }
        if (op_chain(index, xa, yb)) {
            throw PreconditionFailed("a message chain leads from " + xa.id + " to " + yb.id);
        }
        const Time t = yb.end->time;
        Run base = run.prefix(t);
        ProcessId reader = yb.process;
        if (base.crashed_by(reader, t + 1)) {
            reader = 0;
            while (reader < base.config.n && base.crashed_by(reader, t + 1)) {
                ++reader;
            }
        }
        Run extended = extend_with(base, protocol, reader, OpKind::Read, std::nullopt, {});
        const auto ext_ops = extract_operations(extended);
        const auto& read = ext_ops.back();

        RefutationResult out;
        if (!read.completed()) {
            out = finish(extended, extended, protocol, options);
            out.liveness_failure = true;
            out.note = "read " + read.id + " added after " + yb.id + " never returned";
        } else if (read.value != yb.value) {
            out = finish(extended, extended, protocol, options);
            out.note = "read " + read.id + " added after isolated " + yb.id + " returned another value";
        } else {
            out = refute(extended, protocol, ChainViolation{ChainRule::ReadValueSource, xa.id, yb.id, read.id},
                         options);
            out.note = "cut after " + yb.id + ", added read " + read.id + "; " + out.note;
        }
        out.extended = true;
        out.equivalent = false;
        return out;
    }
    }
    throw PreconditionFailed("unknown rule");
}

RefutationResult refute_quorum(const Run& run, const Protocol& protocol, const std::string& op_id,
                               LinearizationOptions options)
{
    const auto ops = extract_operations(run);
    const auto& x = completed_op(ops, op_id);
    const CausalIndex index = build_index(run);
    const auto wit = witnesses(index, x);
    if (wit.size() > run.config.f) {
        throw PreconditionFailed(op_id + " has " + std::to_string(wit.size()) + " witnesses, more than f");
    }

    // After the delay only processes in past(X.e) observe X, so observers are witnesses.
    const Time t = x.end->time;
    Transformed delayed = delay_future(run, protocol, *x.end, t - x.start.time + 1);
    const auto delayed_ops = extract_operations(delayed.run);
    const auto obs = observers(build_index(delayed.run), find_operation(delayed_ops, op_id));

    Run base = delayed.run.prefix(t);
    std::vector<CrashPoint> crashes;
    for (ProcessId p : obs) {
        if (!base.crashes.contains(p)) {
            crashes.push_back(CrashPoint{p, t});
        }
    }
    if (base.crashes.size() + crashes.size() > run.config.f) {
        throw PreconditionFailed("crashing the observers of " + op_id + " exceeds f");
    }
    ProcessId writer = run.config.n;
    ProcessId reader = run.config.n;
    for (ProcessId p = 0; p < run.config.n; ++p) {
        const bool down = base.crashes.contains(p) || std::find(obs.begin(), obs.end(), p) != obs.end();
        if (!down) {
            writer = std::min(writer, p);
            reader = p;
        }
    }
    if (writer == run.config.n) {
        throw PreconditionFailed("no correct process left after crashing the observers of " + op_id);
    }

    Value fresh = "fresh";
    for (int k = 1; std::any_of(ops.begin(), ops.end(), [&](const auto& op) { return op.value == fresh; }); ++k) {
        fresh = "fresh" + std::to_string(k);
    }

    Run with_write = extend_with(base, protocol, writer, OpKind::Write, fresh, crashes);
    Run with_read = extend_with(with_write, protocol, reader, OpKind::Read, std::nullopt, {});
    const auto ext_ops = extract_operations(with_read);
    const OperationInstance* w = nullptr;
    const OperationInstance* r = &ext_ops.back();
    for (const auto& op : ext_ops) {
        if (op.kind == OpKind::Write && op.value == fresh) {
            w = &op;
        }
    }

    RefutationResult out;
    if (w == nullptr || !w->completed() || !r->completed()) {
        out = finish(with_read, with_read, protocol, options);
        out.liveness_failure = true;
        out.note = "an operation needed after crashing the observers of " + op_id + " never returned";
    } else if (r->value != fresh) {
        out = finish(with_read, with_read, protocol, options);
        out.note = "read " + r->id + " after isolated " + w->id + " returned another value";
    } else {
        out = refute(with_read, protocol, ChainViolation{ChainRule::ReadValueSource, op_id, w->id, r->id}, options);
        out.note = "crashed observers of " + op_id + ", wrote " + fresh + " in isolation and read it; " + out.note;
    }
    out.extended = true;
    out.equivalent = false;
    return out;
}

} // namespace msgchain
