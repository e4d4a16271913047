#include "msgchain/cli.hpp"
#include "msgchain/protocols.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <exception>
#include <mutex>
#include <thread>

namespace msgchain {

namespace {

bool admissible(const RefutationResult& r)
{
    return !r.verdict.linearizable && r.valid && (r.equivalent || r.extended);
}

void try_refute(SeedOutcome& out, const Protocol& protocol, const ScenarioSpec& spec)
{
    const LinearizationOptions options{spec.max_operations};
    std::vector<ChainViolation> candidates = out.audit->chain_violations;
    std::stable_partition(candidates.begin(), candidates.end(),
                          [](const auto& v) { return v.rule != ChainRule::Isolation; });
    constexpr std::size_t kAttempts = 3;
    for (std::size_t i = 0; i < candidates.size() && i < kAttempts; ++i) {
        try {
            out.refutation = refute(out.run, protocol, candidates[i], options);
            if (admissible(*out.refutation)) {
                return;
            }
        } catch (const Error& e) {
            out.refute_error = e.what();
        }
    }
    if (out.refutation) {
        return;
    }
    for (const auto& q : out.audit->operations) {
        if (!q.too_few_witnesses) {
            continue;
        }
        try {
            out.refutation = refute_quorum(out.run, protocol, q.op, options);
        } catch (const Error& e) {
            out.refute_error = e.what();
        }
        return;
    }
}

Json outcome_json(const SeedOutcome& o, const std::string& trace_path)
{
    Json j{{"seed", o.seed},
           {"digest", run_digest(o.run)},
           {"horizon", o.run.horizon()},
           {"quiescent", o.run.quiescent},
           {"operations", o.operations},
           {"pending_at_correct", o.pending_at_correct},
           {"linearizable", o.linearizable ? Json(*o.linearizable) : Json(nullptr)},
           {"aba_violations", o.aba_violations}};
    if (o.audit) {
        Json flagged = Json::array();
        for (const auto& q : o.audit->operations) {
            if (q.too_few_observers || q.too_few_witnesses) {
                flagged.push_back(q.op);
            }
        }
        Json chains = Json::array();
        for (const auto& v : o.audit->chain_violations) {
            chains.push_back(to_json(v));
        }
        j["audit"] = Json{{"quorum_clean", o.audit->quorum_clean()},
                          {"chains_clean", o.audit->chains_clean()},
                          {"flagged", flagged},
                          {"chain_violations", chains}};
    }
    if (o.refutation) {
        j["refutation"] = to_json(*o.refutation);
    }
    if (!o.refute_error.empty()) {
        j["refute_error"] = o.refute_error;
    }
    if (!o.error.empty()) {
        j["error"] = o.error;
    }
    if (!trace_path.empty()) {
        j["trace"] = trace_path;
    }
    return j;
}

std::vector<PlannedInvocation> invocation_plan(const Run& run)
{
    std::vector<PlannedInvocation> plan;
    for (Time m = 1; m <= run.horizon(); ++m) {
        const auto& ja = run.rounds[static_cast<std::size_t>(m - 1)];
        for (ProcessId p = 0; p < run.config.n; ++p) {
            if (const auto* inv = std::get_if<env::Invoke>(&ja.env[p])) {
                plan.push_back(PlannedInvocation{p, m, inv->input.kind, inv->input.arg, false});
            }
        }
    }
    return plan;
}

Run bisect_horizon(const Run& run, const std::function<bool(const Run&)>& fails)
{
    Time lo = 0;
    Time hi = run.horizon();
    if (fails(run.prefix(0))) {
        return run.prefix(0);
    }
    while (hi - lo > 1) {
        const Time mid = lo + (hi - lo) / 2;
        if (fails(run.prefix(mid))) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Run out = run.prefix(hi);
    return fails(out) ? out : run;
}

} // namespace

bool SeedOutcome::failed(const ScenarioSpec& spec) const
{
    if (!error.empty()) {
        return true;
    }
    if (spec.check_linearizability && linearizable == false) {
        return true;
    }
    if (linearizable == true && aba_violations > 0) {
        return true;
    }
    if (spec.check_audit && audit && (!audit->quorum_clean() || !audit->chains_clean())) {
        return true;
    }
    return spec.check_liveness && pending_at_correct > 0;
}

bool SeedOutcome::exhibits_violation() const
{
    return linearizable == false || (refutation && admissible(*refutation));
}

SeedOutcome evaluate_run(const ScenarioSpec& spec, Run run, std::uint64_t seed)
{
    SeedOutcome out;
    out.seed = seed;
    out.run = std::move(run);
    const auto protocol = make_protocol(out.run.config);
    try {
        const auto ops = extract_operations(out.run);
        out.operations = ops.size();
        for (const auto& op : ops) {
            if (!op.completed() && !out.run.crashed_by(op.process, out.run.horizon() + 1)) {
                ++out.pending_at_correct;
            }
        }
        if (spec.check_linearizability) {
            try {
                out.linearizable = find_linearization(ops, LinearizationOptions{spec.max_operations}).linearizable;
            } catch (const HistoryTooLarge&) {
                out.linearizable.reset();
            }
        }
        out.aba_violations = check_no_aba(ops).size();
        if (spec.check_audit || spec.refute) {
            out.audit = audit(out.run, out.run.config.f);
        }
        if (spec.refute && out.audit) {
            try_refute(out, *protocol, spec);
        }
    } catch (const Error& e) {
        out.error = e.what();
    }
    return out;
}

SeedOutcome evaluate_seed(const ScenarioSpec& spec, std::uint64_t seed)
{
    try {
        const auto protocol = make_protocol(spec.config);
        return evaluate_run(spec, simulate(spec.config, *protocol, spec.adversary, spec.horizon, seed), seed);
    } catch (const Error& e) {
        SeedOutcome out;
        out.seed = seed;
        out.run = empty_run(spec.config);
        out.error = e.what();
        return out;
    }
}

void parallel_for(std::size_t count, const std::function<void(std::size_t)>& work, unsigned threads)
{
    if (threads == 0) {
        threads = std::max(1U, std::thread::hardware_concurrency());
    }
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, count));
    if (threads <= 1) {
        for (std::size_t i = 0; i < count; ++i) {
            work(i);
        }
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < count; i = next++) {
                try {
                    work(i);
                } catch (...) {
                    std::lock_guard lock(failure_mutex);
                    if (!failure) {
                        failure = std::current_exception();
                    }
                }
            }
        });
    }
    for (auto& th : pool) {
        th.join();
    }
    if (failure) {
        std::rethrow_exception(failure);
    }
}

ScenarioReport run_scenario(const ScenarioSpec& spec, const std::optional<std::filesystem::path>& out_dir)
{
    const auto started = std::chrono::steady_clock::now();
    std::vector<SeedOutcome> outcomes(spec.seeds.count());
    parallel_for(outcomes.size(), [&](std::size_t i) { outcomes[i] = evaluate_seed(spec, spec.seeds.first + i); });

    Json per_seed = Json::array();
    std::size_t linearizable = 0, not_linearizable = 0, too_large = 0, quiescent = 0, pending = 0, dirty = 0,
                exhibited = 0, errors = 0;
    std::vector<std::uint64_t> failures;
    for (const auto& o : outcomes) {
        const bool failed = o.failed(spec);
        linearizable += o.linearizable == true ? 1 : 0;
        not_linearizable += o.linearizable == false ? 1 : 0;
        too_large += spec.check_linearizability && !o.linearizable ? 1 : 0;
        quiescent += o.run.quiescent ? 1 : 0;
        pending += o.pending_at_correct;
        dirty += o.audit && (!o.audit->quorum_clean() || !o.audit->chains_clean()) ? 1 : 0;
        exhibited += o.exhibits_violation() ? 1 : 0;
        errors += o.error.empty() ? 0 : 1;
        if (failed) {
            failures.push_back(o.seed);
        }
        std::string trace_path;
        const bool keep = spec.persist == Persist::All || (spec.persist == Persist::Failures && failed);
        if (out_dir && keep) {
            const auto path = *out_dir / "traces" / (spec.name + "-seed-" + std::to_string(o.seed) + ".json");
            save_trace(path, Trace{o.run, o.seed, spec.adversary});
            trace_path = path.string();
            if (o.refutation) {
                save_trace(*out_dir / "traces" / (spec.name + "-seed-" + std::to_string(o.seed) + "-refuted.json"),
                           Trace{o.refutation->run, std::nullopt, std::nullopt});
            }
        }
        per_seed.push_back(outcome_json(o, trace_path));
    }

    ScenarioReport report;
    if (spec.expect == Expectation::Violation) {
        report.assertions_hold = exhibited > 0;
    } else {
        report.assertions_hold = failures.empty();
    }
    const auto elapsed =
        std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - started).count();
    report.document = Json{
        {"schema", kReportSchema},
        {"command", "run-scenario"},
        {"inputs_digest", digest(to_json(spec))},
        {"scenario", to_json(spec)},
        {"results",
         {{"runs", outcomes.size()},
          {"linearizable", linearizable},
          {"not_linearizable", not_linearizable},
          {"beyond_search_bound", too_large},
          {"quiescent", quiescent},
          {"pending_at_correct", pending},
          {"audit_dirty", dirty},
          {"violations_exhibited", exhibited},
          {"errors", errors},
          {"failed_seeds", failures},
          {"expect", spec.expect ? Json(std::string(to_string(*spec.expect))) : Json(nullptr)},
          {"assertions_hold", report.assertions_hold}}},
        {"seeds", per_seed},
        {"timing_ms", elapsed},
    };
    return report;
}

Run shrink_run(const ScenarioSpec& spec, const Run& run, std::uint64_t seed,
               const std::function<bool(const Run&)>& fails)
{
    Run best = bisect_horizon(run, fails);

    const auto protocol = make_protocol(spec.config);
    AdversarySpec adv = spec.adversary;
    adv.invoke_prob = 0.0;
    adv.max_random_ops = 0;
    auto resimulate = [&](const std::vector<PlannedInvocation>& plan) -> std::optional<Run> {
        adv.invocations = plan;
        try {
            Run r = simulate(spec.config, *protocol, adv, spec.horizon, seed);
            if (fails(r)) {
                return r;
            }
        } catch (const Error&) {
        }
        return std::nullopt;
    };

    std::vector<PlannedInvocation> plan = invocation_plan(best);
    std::optional<Run> current = resimulate(plan);
    if (!current) {
        return best;
    }
    for (std::size_t i = 0; i < plan.size();) {
        auto candidate = plan;
        candidate.erase(candidate.begin() + static_cast<std::ptrdiff_t>(i));
        if (auto r = resimulate(candidate)) {
            plan = std::move(candidate);
            current = std::move(r);
        } else {
            ++i;
        }
    }
    Run shrunk = bisect_horizon(*current, fails);
    return extract_operations(shrunk).size() <= extract_operations(best).size() ? shrunk : best;
}

ScenarioReport fuzz(const ScenarioSpec& spec, std::uint64_t budget, const std::optional<std::filesystem::path>& out_dir,
                    std::size_t max_counterexamples)
{
    if (budget < 1) {
        throw ConstraintError("fuzz budget must be at least 1 seed");
    }
    const auto started = std::chrono::steady_clock::now();
    std::vector<SeedOutcome> outcomes(budget);
    parallel_for(outcomes.size(), [&](std::size_t i) { outcomes[i] = evaluate_seed(spec, spec.seeds.first + i); });

    std::vector<const SeedOutcome*> failing;
    for (const auto& o : outcomes) {
        if (o.failed(spec)) {
            failing.push_back(&o);
        }
    }

    const std::size_t shrink_count = std::min(failing.size(), max_counterexamples);
    std::vector<Json> shrunk(shrink_count);
    parallel_for(shrink_count, [&](std::size_t k) {
        const SeedOutcome& o = *failing[k];
        auto fails = [&](const Run& r) { return evaluate_run(spec, r, o.seed).failed(spec); };
        const Run minimal = o.error.empty() ? shrink_run(spec, o.run, o.seed, fails) : o.run;
        const auto verdict = evaluate_run(spec, minimal, o.seed);
        Json ce{{"seed", o.seed},
                {"original_horizon", o.run.horizon()},
                {"original_operations", o.operations},
                {"horizon", minimal.horizon()},
                {"operations", extract_operations(minimal).size()},
                {"still_fails", verdict.failed(spec)},
                {"valid", validate_run(minimal, *make_protocol(spec.config)).ok()},
                {"digest", run_digest(minimal)}};
        if (!o.error.empty()) {
            ce["error"] = o.error;
        }
        if (out_dir) {
            const auto path = *out_dir / "counterexamples" / (spec.name + "-seed-" + std::to_string(o.seed) + ".json");
            save_trace(path, Trace{minimal, o.seed, spec.adversary});
            ce["trace"] = path.string();
        }
        shrunk[k] = std::move(ce);
    });

    ScenarioReport report;
    report.assertions_hold = spec.expect == Expectation::Violation ? !failing.empty() : failing.empty();
    Json failed_seeds = Json::array();
    for (const auto* o : failing) {
        failed_seeds.push_back(o->seed);
    }
    const auto elapsed =
        std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - started).count();
    report.document = Json{{"schema", kReportSchema},
                           {"command", "fuzz"},
                           {"inputs_digest", digest(to_json(spec))},
                           {"scenario", to_json(spec)},
                           {"results",
                            {{"budget", budget},
                             {"failures", failing.size()},
                             {"failed_seeds", failed_seeds},
                             {"counterexamples", shrunk},
                             {"expect", spec.expect ? Json(std::string(to_string(*spec.expect))) : Json(nullptr)},
                             {"assertions_hold", report.assertions_hold}}},
                           {"timing_ms", elapsed}};
    return report;
}

} // namespace msgchain
