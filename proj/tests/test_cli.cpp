#include "generators.hpp"
#include "oracles.hpp"

#include "msgchain/cli.hpp"
#include "msgchain/protocols.hpp"

#include <cstdlib>
#include <doctest.h>

using namespace msgchain;

namespace {

std::filesystem::path out_root()
{
    const char* dir = std::getenv("MSGCHAIN_OUT_DIR");
    return dir ? dir : "msgchain-test-out";
}

Json abd_scenario()
{
    return Json::parse(R"({
      "schema": "msgchain.scenario/1",
      "name": "abd-small",
      "config": {"n": 3, "f": 1, "protocol": "abd"},
      "adversary": {"move_prob": 0.7, "invoke_prob": 0.2, "max_random_ops": 4, "invoke_until": 40},
      "horizon": 200,
      "seeds": "1..20",
      "checks": {"linearizable": true, "audit": true, "liveness": true}
    })");
}

Json broken_scenario()
{
    return Json::parse(R"({
      "name": "broken-small",
      "config": {"n": 3, "f": 1, "protocol": "broken"},
      "adversary": {"move_prob": 0.7, "deliver_prob": 0.2, "invoke_prob": 0.3, "max_random_ops": 5},
      "horizon": 40,
      "seeds": "1..100",
      "expect": "violation",
      "persist": "none"
    })");
}

int cli(std::vector<std::string> args)
{
    args.insert(args.begin(), "msgchain");
    std::vector<char*> argv;
    for (auto& a : args) {
        argv.push_back(a.data());
    }
    return run_cli(static_cast<int>(argv.size()), argv.data());
}

} // namespace

TEST_CASE("seed ranges")
{
    CHECK(parse_seed_range("3..7").count() == 5);
    CHECK(parse_seed_range("9").first == 9);
    CHECK_THROWS_AS(parse_seed_range("7..3"), ParseError);
    CHECK_THROWS_AS(parse_seed_range("x"), ParseError);
}

TEST_CASE("scenario parsing and validation")
{
    const auto spec = parse_scenario(abd_scenario());
    CHECK(spec.config.n == 3);
    CHECK(spec.seeds.count() == 20);
    CHECK(spec.check_audit);
    CHECK(parse_scenario(to_json(spec)).seeds.count() == 20);

    Json too_many_crashes = abd_scenario();
    too_many_crashes["adversary"]["crash_plan"] = Json::parse(R"([{"process":0,"round":2},{"process":1,"round":2}])");
    CHECK_THROWS_AS(parse_scenario(too_many_crashes), ConstraintError);

    Json bad_horizon = abd_scenario();
    bad_horizon["horizon"] = 0;
    CHECK_THROWS_AS(parse_scenario(bad_horizon), ConstraintError);

    Json bad_field = abd_scenario();
    bad_field["adversary"]["schedule"] = "sideways";
    try {
        parse_scenario(bad_field);
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find("schedule") != std::string::npos);
    }

    Json bad_quorum = abd_scenario();
    bad_quorum["config"]["f"] = 2;
    CHECK_THROWS_AS(parse_scenario(bad_quorum), ConstraintError);
}

TEST_CASE("ABD scenario assertions hold")
{
    const auto report = run_scenario(parse_scenario(abd_scenario()), out_root() / "abd");
    CHECK(report.assertions_hold);
    CHECK(report.document["results"]["runs"] == 20);
    CHECK(report.document.contains("timing_ms"));
}

TEST_CASE("broken scenario exhibits a violation")
{
    const auto report = run_scenario(parse_scenario(broken_scenario()), std::nullopt);
    CHECK(report.assertions_hold);
    CHECK(report.document["results"]["violations_exhibited"].get<int>() > 0);
}

TEST_CASE("expecting linearizable runs of the broken register fails")
{
    Json j = broken_scenario();
    j["expect"] = "linearizable";
    CHECK_FALSE(run_scenario(parse_scenario(j), std::nullopt).assertions_hold);
}

TEST_CASE("fuzzing the broken register shrinks counterexamples")
{
    const auto spec = parse_scenario(broken_scenario());
    const auto report = fuzz(spec, 100, out_root() / "fuzz", 3);
    REQUIRE(report.assertions_hold);
    const auto& ces = report.document["results"]["counterexamples"];
    REQUIRE_FALSE(ces.empty());
    bool small = false;
    for (const auto& ce : ces) {
        CHECK(ce["still_fails"] == true);
        CHECK(ce["valid"] == true);
        CHECK(ce["operations"].get<std::size_t>() <= ce["original_operations"].get<std::size_t>());
        const Trace t = load_trace(ce["trace"].get<std::string>());
        const auto ops = extract_operations(t.run);
        CHECK(ops.size() == ce["operations"].get<std::size_t>());
        if (ops.size() <= 6) {
            small = true;
            CHECK_FALSE(msgchain::testing::brute_force_linearizable(ops));
        }
    }
    CHECK(small);
}

TEST_CASE("fuzzing ABD finds nothing")
{
    const auto report = fuzz(parse_scenario(abd_scenario()), 30, std::nullopt);
    CHECK(report.assertions_hold);
    CHECK(report.document["results"]["failures"] == 0);
}

TEST_CASE("a budget of one sweeps one seed")
{
    const auto report = fuzz(parse_scenario(abd_scenario()), 1, std::nullopt);
    CHECK(report.document["results"]["budget"] == 1);
    CHECK_THROWS_AS(fuzz(parse_scenario(abd_scenario()), 0, std::nullopt), ConstraintError);
}

TEST_CASE("shrunk runs validate and keep failing")
{
    const auto spec = parse_scenario(broken_scenario());
    std::size_t shrunk = 0;
    for (std::uint64_t seed = 1; seed <= 60 && shrunk < 3; ++seed) {
        const auto outcome = evaluate_seed(spec, seed);
        if (!outcome.failed(spec)) {
            continue;
        }
        ++shrunk;
        auto fails = [&](const Run& r) { return evaluate_run(spec, r, seed).failed(spec); };
        const Run minimal = shrink_run(spec, outcome.run, seed, fails);
        CHECK(fails(minimal));
        CHECK(validate_run(minimal, *make_protocol(spec.config)).ok());
        CHECK(extract_operations(minimal).size() <= extract_operations(outcome.run).size());
    }
    CHECK(shrunk > 0);
}

TEST_CASE("parallel_for visits every index once")
{
    std::vector<int> hits(1000, 0);
    parallel_for(hits.size(), [&](std::size_t i) { hits[i] += 1; }, 4);
    CHECK(std::all_of(hits.begin(), hits.end(), [](int h) { return h == 1; }));
    CHECK_THROWS_AS(parallel_for(10, [](std::size_t i) {
        if (i == 3) {
            throw ConstraintError("boom");
        }
    }),
                    ConstraintError);
}

TEST_CASE("command line round trip")
{
    const auto dir = out_root() / "cmd";
    const auto scenario_path = dir / "abd.json";
    save_json(scenario_path, abd_scenario());
    const std::string out = dir.string();

    CHECK(cli({"simulate", scenario_path.string(), "--seed", "4", "--out", out}) == 0);
    const auto trace = (dir / "traces" / "abd-small-seed-4.json").string();
    REQUIRE(std::filesystem::exists(trace));
    CHECK(cli({"replay", trace}) == 0);
    CHECK(cli({"analyze", trace}) == 0);
    CHECK(cli({"check-lin", trace, "--expect", "linearizable"}) == 0);
    CHECK(cli({"check-lin", trace, "--expect", "violation"}) == 1);
    CHECK(cli({"audit", trace, "--expect", "linearizable"}) == 0);
    CHECK(cli({"transform", trace, "--pivot", "1:20", "--delta", "3", "--out", out}) == 0);
    CHECK(cli({"transform", trace, "--pivot", "9:20", "--delta", "3", "--out", out}) == 2);
    CHECK(cli({"transform", trace, "--pivot", "nonsense", "--delta", "3", "--out", out}) == 2);
    CHECK(cli({"run-scenario", scenario_path.string(), "--seeds", "1..5", "--out", out}) == 0);
    CHECK(cli({"fuzz", scenario_path.string(), "--budget", "5", "--out", out}) == 0);
    CHECK(cli({"replay", (dir / "missing.json").string()}) == 2);
}

TEST_CASE("command line refutation of the broken fixture")
{
    const auto dir = out_root() / "cmd-broken";
    const auto fixture = msgchain::testing::broken_fixture();
    const auto trace = dir / "fixture.json";
    save_trace(trace, Trace{fixture.run, fixture.seed, fixture.adversary});
    CHECK(cli({"audit", trace.string(), "--refute", "--expect", "violation", "--out", dir.string()}) == 0);
    CHECK(cli({"audit", trace.string(), "--expect", "linearizable"}) == 1);
    CHECK(cli({"reorder", trace.string(), "--x", "p1.1", "--y", "p0.1", "--out", dir.string()}) == 0);
    CHECK(cli({"reorder", trace.string(), "--x", "p0.2", "--y", "p0.1", "--out", dir.string()}) == 2);
}

TEST_CASE("output directory resolution")
{
    CHECK(output_dir(std::string("x/y")) == std::filesystem::path("x/y"));
    CHECK(output_dir(std::nullopt) == out_root());
}
