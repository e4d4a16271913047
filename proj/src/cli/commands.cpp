#include "msgchain/cli.hpp"
#include "msgchain/protocols.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace msgchain {

namespace {

struct Options {
    std::optional<std::string> out;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> seeds;
    std::optional<Time> horizon;
    std::optional<std::string> expect;
    bool refute = false;
    std::optional<std::uint32_t> f;
    std::uint64_t budget = 100;
    std::string pivot;
    Time delta = 1;
    std::string x;
    std::string y;
    std::string input;

    // simulate without a scenario file
    std::string protocol = "abd";
    std::uint32_t n = 3;
    std::uint32_t f_config = 1;
    std::uint32_t ops = 4;
};

void emit(const Json& doc)
{
    std::cout << doc.dump(2) << "\n";
}

Node parse_pivot(const std::string& text)
{
    const auto colon = text.find(':');
    try {
        if (colon == std::string::npos) {
            throw std::invalid_argument(text);
        }
        return Node{static_cast<ProcessId>(std::stoul(text.substr(0, colon))), std::stoll(text.substr(colon + 1))};
    } catch (const std::logic_error&) {
        throw ParseError("field 'pivot': expected P:T, got '" + text + "'");
    }
}

ScenarioSpec scenario_with_overrides(const Options& o)
{
    ScenarioSpec spec = load_scenario(o.input);
    if (o.seeds) {
        spec.seeds = parse_seed_range(*o.seeds);
    } else if (o.seed) {
        spec.seeds = SeedRange{*o.seed, *o.seed};
    }
    if (o.horizon) {
        if (*o.horizon < 1) {
            throw ConstraintError("horizon must be at least 1");
        }
        spec.horizon = *o.horizon;
    }
    if (o.expect) {
        spec.expect = parse_expectation(*o.expect);
    }
    if (o.refute) {
        spec.refute = true;
        spec.check_audit = spec.check_audit || spec.expect != Expectation::Violation;
    }
    return spec;
}

std::filesystem::path trace_output(const Options& o, const std::string& stem)
{
    return output_dir(o.out) / "traces" / (stem + ".json");
}

int cmd_simulate(const Options& o)
{
    ScenarioSpec spec;
    if (!o.input.empty()) {
        spec = scenario_with_overrides(o);
    } else {
        spec.name = o.protocol;
        spec.config = SystemConfig::complete(o.n, o.f_config, o.protocol);
        spec.adversary.invoke_prob = 0.2;
        spec.adversary.max_random_ops = o.ops;
        spec.horizon = o.horizon.value_or(60);
        spec.seeds = SeedRange{o.seed.value_or(1), o.seed.value_or(1)};
    }
    const auto protocol = make_protocol(spec.config);
    Json runs = Json::array();
    for (std::uint64_t seed = spec.seeds.first; seed <= spec.seeds.last; ++seed) {
        const Run run = simulate(spec.config, *protocol, spec.adversary, spec.horizon, seed);
        const auto path = trace_output(o, spec.name + "-seed-" + std::to_string(seed));
        save_trace(path, Trace{run, seed, spec.adversary});
        runs.push_back(Json{{"seed", seed},
                            {"trace", path.string()},
                            {"digest", run_digest(run)},
                            {"horizon", run.horizon()},
                            {"quiescent", run.quiescent},
                            {"operations", extract_operations(run).size()}});
    }
    emit(Json{{"schema", kReportSchema}, {"command", "simulate"}, {"runs", runs}});
    return 0;
}

int cmd_replay(const Options& o)
{
    const Trace trace = load_trace(o.input);
    const auto protocol = make_protocol(trace.run.config);
    const auto report = validate_run(trace.run, *protocol);
    const auto states = replay(trace.run);
    const bool deterministic = states == replay(trace.run);
    Json lengths = Json::array();
    for (const auto& local : states.back().locals) {
        lengths.push_back(local.events.size());
    }
    Json lost = Json::array();
    for (const auto& [edge, rec] : lost_messages(trace.run)) {
        lost.push_back(Json{{"from", edge.from}, {"to", edge.to}, {"payload", rec.payload}, {"sent", rec.send_round}});
    }
    emit(Json{{"schema", kReportSchema},
              {"command", "replay"},
              {"inputs_digest", run_digest(trace.run)},
              {"horizon", trace.run.horizon()},
              {"quiescent", trace.run.quiescent},
              {"deterministic", deterministic},
              {"validation", to_json(report)},
              {"final_history_lengths", lengths},
              {"lost_messages", lost}});
    return report.ok() && deterministic ? 0 : 1;
}

int cmd_analyze(const Options& o)
{
    const Trace trace = load_trace(o.input);
    const Run& run = trace.run;
    const auto ops = extract_operations(run);
    const CausalIndex index = build_index(run);
    Json operations = Json::array();
    Json frontiers = Json::array();
    for (const auto& op : ops) {
        operations.push_back(to_json(op));
        if (op.end) {
            frontiers.push_back(Json{{"op", op.id}, {"frontier", to_json(past_frontier(index, *op.end))}});
        }
    }
    // chains[i][j]: ops[i] ~> ops[j]; null where ops[j] is pending.
    Json chains = Json::array();
    for (const auto& x : ops) {
        Json row = Json::array();
        for (const auto& y : ops) {
            row.push_back(y.completed() ? Json(op_chain(index, x, y)) : Json(nullptr));
        }
        chains.push_back(std::move(row));
    }
    Json precedence = Json::array();
    for (const auto& x : ops) {
        Json row = Json::array();
        for (const auto& y : ops) {
            row.push_back(precedes(x, y));
        }
        precedence.push_back(std::move(row));
    }
    emit(Json{{"schema", kReportSchema},
              {"command", "analyze"},
              {"inputs_digest", run_digest(run)},
              {"operations", operations},
              {"frontiers", frontiers},
              {"chains", chains},
              {"precedes", precedence},
              {"quorum", to_json(audit_quorum(run, o.f.value_or(run.config.f)))}});
    return 0;
}

int emit_transform(const Options& o, const Trace& source, const Transformed& t, const std::string& command)
{
    const auto path = trace_output(o, command + "-" + t.certificate.result_digest);
    save_trace(path, Trace{t.run, std::nullopt, std::nullopt});
    const Json cert = to_json(t.certificate);
    save_json(output_dir(o.out) / "certificates" / (command + "-" + t.certificate.result_digest + ".json"), cert);
    emit(Json{{"schema", kReportSchema},
              {"command", command},
              {"inputs_digest", run_digest(source.run)},
              {"trace", path.string()},
              {"certificate", cert}});
    return t.certificate.passed() ? 0 : 1;
}

int cmd_transform(const Options& o)
{
    const Trace trace = load_trace(o.input);
    const auto protocol = make_protocol(trace.run.config);
    return emit_transform(o, trace, delay_future(trace.run, *protocol, parse_pivot(o.pivot), o.delta), "transform");
}

int cmd_reorder(const Options& o)
{
    const Trace trace = load_trace(o.input);
    const auto protocol = make_protocol(trace.run.config);
    const auto ops = extract_operations(trace.run);
    return emit_transform(o, trace,
                          reorder_operations(trace.run, *protocol, find_operation(ops, o.x), find_operation(ops, o.y)),
                          "reorder");
}

int cmd_check_lin(const Options& o)
{
    const Trace trace = load_trace(o.input);
    const auto ops = extract_operations(trace.run);
    const auto result = find_linearization(ops);
    Json aba = Json::array();
    for (const auto& v : check_no_aba(ops)) {
        aba.push_back(Json{{"x", v.x}, {"y", v.y}, {"z", v.z}});
    }
    Json operations = Json::array();
    for (const auto& op : ops) {
        operations.push_back(to_json(op));
    }
    emit(Json{{"schema", kReportSchema},
              {"command", "check-lin"},
              {"inputs_digest", run_digest(trace.run)},
              {"operations", operations},
              {"result", to_json(result)},
              {"aba_violations", aba}});
    if (!o.expect) {
        return 0;
    }
    const bool expected_lin = parse_expectation(*o.expect) == Expectation::Linearizable;
    return result.linearizable == expected_lin ? 0 : 1;
}

int cmd_audit(const Options& o)
{
    const Trace trace = load_trace(o.input);
    ScenarioSpec spec;
    spec.config = trace.run.config;
    spec.check_audit = true;
    spec.refute = o.refute;
    const std::uint32_t f = o.f.value_or(trace.run.config.f);
    Run run = trace.run;
    run.config.f = f;
    const SeedOutcome outcome = evaluate_run(spec, run, trace.seed.value_or(0));
    if (!outcome.error.empty()) {
        throw Error(outcome.error);
    }
    Json doc{{"schema", kReportSchema},
             {"command", "audit"},
             {"inputs_digest", run_digest(trace.run)},
             {"audit", to_json(*outcome.audit)},
             {"linearizable", outcome.linearizable ? Json(*outcome.linearizable) : Json(nullptr)}};
    if (outcome.refutation) {
        const auto path = trace_output(o, "refuted-" + run_digest(outcome.refutation->run));
        save_trace(path, Trace{outcome.refutation->run, std::nullopt, std::nullopt});
        doc["refutation"] = to_json(*outcome.refutation);
        doc["refutation"]["trace"] = path.string();
    }
    if (!outcome.refute_error.empty()) {
        doc["refute_error"] = outcome.refute_error;
    }
    emit(doc);
    if (!o.expect) {
        return 0;
    }
    const bool dirty = !outcome.audit->quorum_clean() || !outcome.audit->chains_clean();
    if (parse_expectation(*o.expect) == Expectation::Linearizable) {
        return dirty ? 1 : 0;
    }
    if (o.refute) {
        return outcome.exhibits_violation() ? 0 : 1;
    }
    return dirty ? 0 : 1;
}

int finish_report(const Options& o, const ScenarioSpec& spec, const ScenarioReport& report, const std::string& command)
{
    const auto dir = output_dir(o.out);
    save_json(dir / (spec.name + "-" + command + "-report.json"), report.document);
    Json summary = report.document;
    summary.erase("seeds");
    emit(summary);
    return report.assertions_hold ? 0 : 1;
}

int cmd_run_scenario(const Options& o)
{
    const ScenarioSpec spec = scenario_with_overrides(o);
    return finish_report(o, spec, run_scenario(spec, output_dir(o.out)), "run-scenario");
}

int cmd_fuzz(const Options& o)
{
    ScenarioSpec spec = scenario_with_overrides(o);
    const std::uint64_t budget = o.seeds ? spec.seeds.count() : o.budget;
    return finish_report(o, spec, fuzz(spec, budget, output_dir(o.out)), "fuzz");
}

} // namespace

int run_cli(int argc, char** argv)
{
    CLI::App app{"Message-chain analysis of asynchronous register protocols"};
    app.require_subcommand(1);
    Options o;

    auto common = [&](CLI::App* sub) {
        sub->add_option("--out", o.out, "output directory (default $MSGCHAIN_OUT_DIR or ./msgchain-out)");
    };
    auto input = [&](CLI::App* sub, const char* what) { sub->add_option("input", o.input, what)->required(); };

    auto* simulate_cmd = app.add_subcommand("simulate", "simulate a scenario and write traces");
    simulate_cmd->add_option("input", o.input, "scenario file");
    simulate_cmd->add_option("--seed", o.seed);
    simulate_cmd->add_option("--seeds", o.seeds, "seed range A..B");
    simulate_cmd->add_option("--horizon", o.horizon);
    simulate_cmd->add_option("--protocol", o.protocol, "protocol without a scenario file");
    simulate_cmd->add_option("--n", o.n);
    simulate_cmd->add_option("--f", o.f_config);
    simulate_cmd->add_option("--ops", o.ops, "random operations without a scenario file");
    common(simulate_cmd);

    auto* replay_cmd = app.add_subcommand("replay", "replay and validate a trace");
    input(replay_cmd, "trace file");

    auto* analyze_cmd = app.add_subcommand("analyze", "causality report for a trace");
    input(analyze_cmd, "trace file");
    analyze_cmd->add_option("--f", o.f);

    auto* transform_cmd = app.add_subcommand("transform", "delay everything outside the past of a node");
    input(transform_cmd, "trace file");
    transform_cmd->add_option("--pivot", o.pivot, "pivot node P:T")->required();
    transform_cmd->add_option("--delta", o.delta, "delay in rounds")->required()->check(CLI::PositiveNumber);
    common(transform_cmd);

    auto* reorder_cmd = app.add_subcommand("reorder", "move operation X after operation Y");
    input(reorder_cmd, "trace file");
    reorder_cmd->add_option("--x", o.x)->required();
    reorder_cmd->add_option("--y", o.y)->required();
    common(reorder_cmd);

    auto* check_cmd = app.add_subcommand("check-lin", "search for a linearization");
    input(check_cmd, "trace file");
    check_cmd->add_option("--expect", o.expect)->check(CLI::IsMember({"linearizable", "violation"}));

    auto* audit_cmd = app.add_subcommand("audit", "audit witnesses, observers and chain conditions");
    input(audit_cmd, "trace file");
    audit_cmd->add_option("--f", o.f);
    audit_cmd->add_flag("--refute", o.refute, "rebuild a non-linearizable run from a violation");
    audit_cmd->add_option("--expect", o.expect)->check(CLI::IsMember({"linearizable", "violation"}));
    common(audit_cmd);

    auto* fuzz_cmd = app.add_subcommand("fuzz", "sweep seeds and shrink failures");
    input(fuzz_cmd, "scenario file");
    fuzz_cmd->add_option("--budget", o.budget, "number of seeds")->check(CLI::PositiveNumber);
    fuzz_cmd->add_option("--seeds", o.seeds, "seed range A..B");
    fuzz_cmd->add_option("--horizon", o.horizon);
    fuzz_cmd->add_option("--expect", o.expect)->check(CLI::IsMember({"linearizable", "violation"}));
    common(fuzz_cmd);

    auto* scenario_cmd = app.add_subcommand("run-scenario", "simulate and check every seed of a scenario");
    input(scenario_cmd, "scenario file");
    scenario_cmd->add_option("--seed", o.seed);
    scenario_cmd->add_option("--seeds", o.seeds, "seed range A..B");
    scenario_cmd->add_option("--horizon", o.horizon);
    scenario_cmd->add_flag("--refute", o.refute);
    scenario_cmd->add_option("--expect", o.expect)->check(CLI::IsMember({"linearizable", "violation"}));
    common(scenario_cmd);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (simulate_cmd->parsed()) {
            return cmd_simulate(o);
        }
        if (replay_cmd->parsed()) {
            return cmd_replay(o);
        }
        if (analyze_cmd->parsed()) {
            return cmd_analyze(o);
        }
        if (transform_cmd->parsed()) {
            return cmd_transform(o);
        }
        if (reorder_cmd->parsed()) {
            return cmd_reorder(o);
        }
        if (check_cmd->parsed()) {
            return cmd_check_lin(o);
        }
        if (audit_cmd->parsed()) {
            return cmd_audit(o);
        }
        if (fuzz_cmd->parsed()) {
            return cmd_fuzz(o);
        }
        if (scenario_cmd->parsed()) {
            return cmd_run_scenario(o);
        }
    } catch (const ParseError& e) {
        std::cerr << "parse error: " << e.what() << "\n";
        return 2;
    } catch (const ConstraintError& e) {
        std::cerr << "constraint error: " << e.what() << "\n";
        return 2;
    } catch (const PreconditionFailed& e) {
        std::cerr << "precondition failed: " << e.what() << "\n";
        return 2;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}

} // namespace msgchain
