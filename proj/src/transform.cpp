#include "msgchain/transform.hpp"

#include "msgchain/trace.hpp"

#include <algorithm>

namespace msgchain {

namespace {

std::string describe(const RunViolation& v)
{
    return std::string(to_string(v.kind)) + " at round " + std::to_string(v.round) + ", process " +
           std::to_string(v.process) + ": " + v.detail;
}

// Claim 2 of the construction: a record delivered in round m' sat in its channel at time m'-1.
bool deliveries_in_transit(const Run& run, std::vector<std::string>& problems)
{
    GlobalState state = run.initial_state();
    bool ok = true;
    for (const auto& ja : run.rounds) {
        const Time round = state.time() + 1;
        for (ProcessId j = 0; j < run.config.n; ++j) {
            const auto* d = std::get_if<env::Deliver>(&ja.env[j]);
            if (d == nullptr || !std::holds_alternative<act::Receive>(ja.actions[j])) {
                continue;
            }
            const auto it = state.channels.find(Edge{d->from, j});
            const bool present = it != state.channels.end() &&
                                 std::find(it->second.begin(), it->second.end(), d->record) != it->second.end();
            if (!present) {
                ok = false;
                problems.push_back("round " + std::to_string(round) + ": record delivered to " + std::to_string(j) +
                                   " was not in transit");
            }
        }
        advance(state, ja, run.config);
    }
    return ok;
}

} // namespace

Transformed delay_future(const Run& run, const Protocol& protocol, Node pivot, Time delta)
{
    const auto& config = run.config;
    if (delta < 1) {
        throw PreconditionFailed("delay must be at least 1");
    }
    if (pivot.process >= config.n || pivot.time < 0 || pivot.time > run.horizon()) {
        throw PreconditionFailed("pivot outside the run");
    }
    if (const auto report = validate_run(run, protocol); !report.ok()) {
        throw PreconditionFailed("source is not a run of the protocol: " + describe(report.violations.front()));
    }

    const RunFacts facts = collect_facts(run);
    const CausalIndex index = build_index(run, facts);
    ShiftSpec spec{pivot, delta, past_frontier(index, pivot)};

    Run out = run;
    out.rounds.assign(static_cast<std::size_t>(run.horizon() + delta), JointAction::idle(config.n));
    for (Time m = 1; m <= run.horizon(); ++m) {
        const auto& ja = run.rounds[static_cast<std::size_t>(m - 1)];
        for (ProcessId j = 0; j < config.n; ++j) {
            auto& target = out.rounds[static_cast<std::size_t>(spec.map(j, m) - 1)];
            EnvComponent component = ja.env[j];
            if (auto* d = std::get_if<env::Deliver>(&component)) {
                d->record.send_round = spec.map(d->from, d->record.send_round);
            }
            target.env[j] = std::move(component);
            target.actions[j] = ja.actions[j];
        }
    }
    out.crashes.clear();
    for (const auto& [j, c] : run.crashes) {
        out.crashes.emplace(j, spec.map(j, c));
    }

    TransformCertificate cert;
    cert.spec = spec;
    cert.source_horizon = run.horizon();
    cert.result_horizon = out.horizon();
    cert.source_digest = run_digest(run);
    cert.result_digest = run_digest(out);

    const auto report = validate_run(out, protocol);
    cert.valid = report.ok();
    if (!cert.valid) {
        throw ValidationFailure("delayed run is not a run of the protocol: " + describe(report.violations.front()));
    }

    const RunFacts out_facts = collect_facts(out);
    cert.equivalent = locally_equivalent(run, facts, out, out_facts);
    if (!cert.equivalent) {
        cert.problems.emplace_back("final local histories differ");
    }

    cert.states_match = true;
    for (ProcessId j = 0; j < config.n; ++j) {
        for (Time m = 0; m <= run.horizon(); ++m) {
            const auto before = facts.length_at[j][static_cast<std::size_t>(m)];
            const auto after = out_facts.length_at[j][static_cast<std::size_t>(spec.map(j, m))];
            if (before != after ||
                !facts.locals[j].same_prefix(before, out_facts.locals[j], after)) {
                cert.states_match = false;
                cert.problems.push_back("state of " + std::to_string(j) + " at time " + std::to_string(m) +
                                        " not reproduced");
            }
        }
    }

    cert.band_empty = true;
    for (ProcessId j = 0; j < config.n; ++j) {
        const Time t_j = spec.frontier.cut[j];
        for (Time m = t_j + 1; m <= t_j + delta; ++m) {
            if (!std::holds_alternative<env::Skip>(out.rounds[static_cast<std::size_t>(m - 1)].env[j])) {
                cert.band_empty = false;
                cert.problems.push_back("process " + std::to_string(j) + " active in round " + std::to_string(m) +
                                        " inside its delay band");
            }
        }
    }

    cert.deliveries_in_transit = deliveries_in_transit(out, cert.problems);
    return Transformed{std::move(out), std::move(cert)};
}

Transformed reorder_operations(const Run& run, const Protocol& protocol, const OperationInstance& x,
                               const OperationInstance& y)
{
    if (!y.end) {
        throw PreconditionFailed("operation " + y.id + " is pending");
    }
    const CausalIndex index = build_index(run);
    if (op_chain(index, x, y)) {
        throw PreconditionFailed("a message chain leads from " + x.id + " to " + y.id);
    }
    const Time delta = y.end->time - x.start.time + 1;
    if (delta <= 0) {
        throw PreconditionFailed(x.id + " already starts after " + y.id + " ends");
    }

    Transformed t = delay_future(run, protocol, *y.end, delta);

    const auto before = extract_operations(run);
    const auto after = extract_operations(t.run);
    const auto& x2 = find_operation(after, x.id);
    const auto& y2 = find_operation(after, y.id);

    ReorderCheck check;
    check.x = x.id;
    check.y = y.id;
    check.y_before_x = precedes(y2, x2);
    for (const auto& z : before) {
        if (!z.completed() || z.id == x.id || !precedes(x, z) || op_chain(index, z, y)) {
            continue;
        }
        check.qualifying.push_back(z.id);
        if (!precedes(x2, find_operation(after, z.id))) {
            check.failed.push_back(z.id);
        }
    }
    t.certificate.reorder = std::move(check);
    return t;
}

} // namespace msgchain
