#include "generators.hpp"

#include "msgchain/operations.hpp"
#include "msgchain/protocols.hpp"

#include <doctest.h>

using namespace msgchain;

namespace {

SystemConfig abd3()
{
    return SystemConfig::complete(3, 1, "abd");
}

} // namespace

TEST_CASE("the same inputs simulate the same run")
{
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const auto a = msgchain::testing::random_sample(seed);
        const auto b = msgchain::testing::random_sample(seed);
        CHECK(a.run == b.run);
    }
}

TEST_CASE("different seeds give different schedules")
{
    const auto a = msgchain::testing::abd_sample(1, 2, 0, 80);
    const auto b = msgchain::testing::abd_sample(2, 2, 0, 80);
    CHECK(a.run != b.run);
}

TEST_CASE("immediate delivery with round-robin moves delivers every send the next round")
{
    AdversarySpec adv;
    adv.schedule = AdversarySpec::Schedule::RoundRobin;
    adv.delivery = AdversarySpec::Delivery::Immediate;
    adv.invocations = {PlannedInvocation{0, 1, OpKind::Write, "x", false}};
    const auto config = abd3();
    const Run run = simulate(config, *make_protocol(config), adv, 60, 3);
    const auto facts = collect_facts(run);
    REQUIRE_FALSE(facts.messages.empty());
    for (const auto& m : facts.messages) {
        if (m.record.send_round < run.horizon()) {
            REQUIRE(m.delivered.has_value());
            CHECK(*m.delivered == m.record.send_round + 1);
        }
    }
}

TEST_CASE("round-robin moves one process per round")
{
    AdversarySpec adv;
    adv.schedule = AdversarySpec::Schedule::RoundRobin;
    adv.idle_moves = true;
    adv.quiesce = false;
    const auto config = abd3();
    const Run run = simulate(config, *make_protocol(config), adv, 9, 1);
    for (Time m = 1; m <= run.horizon(); ++m) {
        const auto& ja = run.rounds[static_cast<std::size_t>(m - 1)];
        for (ProcessId p = 0; p < config.n; ++p) {
            CHECK(std::holds_alternative<env::Move>(ja.env[p]) == (p == static_cast<ProcessId>((m - 1) % 3)));
        }
    }
}

TEST_CASE("a planned crash stops the process")
{
    AdversarySpec adv;
    adv.move_prob = 0.8;
    adv.crash_plan = {CrashPoint{2, 10}};
    adv.invoke_prob = 0.3;
    adv.max_random_ops = 6;
    const auto config = abd3();
    const auto protocol = make_protocol(config);
    const Run run = simulate(config, *protocol, adv, 60, 4);
    CHECK(validate_run(run, *protocol).ok());
    REQUIRE(run.crashes.count(2) == 1);
    CHECK(run.crashes.at(2) == 10);
    for (Time m = 11; m <= run.horizon(); ++m) {
        const auto& e = run.rounds[static_cast<std::size_t>(m - 1)].env[2];
        CHECK_FALSE(std::holds_alternative<env::Move>(e));
        CHECK_FALSE(std::holds_alternative<env::Invoke>(e));
    }
}

TEST_CASE("a crash plan larger than f exhausts the adversary")
{
    AdversarySpec adv;
    adv.crash_plan = {CrashPoint{0, 2}, CrashPoint{1, 3}};
    const auto config = abd3();
    CHECK_THROWS_AS(simulate(config, *make_protocol(config), adv, 10, 1), AdversaryExhausted);
}

TEST_CASE("horizon bounds are enforced")
{
    const auto config = abd3();
    CHECK_THROWS_AS(simulate(config, *make_protocol(config), AdversarySpec{}, 0, 1), ConstraintError);
    const Run r = simulate(config, *make_protocol(config), AdversarySpec{}, 5, 1);
    CHECK_THROWS_AS(extend_run(r, *make_protocol(config), AdversarySpec{}, 3, 1), ConstraintError);
}

TEST_CASE("planned invocations are deferred while the process is busy")
{
    AdversarySpec adv;
    adv.move_prob = 1.0;
    adv.delivery = AdversarySpec::Delivery::Immediate;
    adv.invocations = {PlannedInvocation{0, 1, OpKind::Write, "a", false},
                       PlannedInvocation{0, 2, OpKind::Read, std::nullopt, false}};
    const auto config = abd3();
    const auto protocol = make_protocol(config);
    const Run run = simulate(config, *protocol, adv, 80, 1);
    CHECK(validate_run(run, *protocol).ok());
    const auto ops = extract_operations(run);
    REQUIRE(ops.size() == 2);
    REQUIRE(ops[0].completed());
    CHECK(ops[1].start.time > ops[0].end->time);
    CHECK(ops[1].value == std::optional<Value>{"a"});
}

TEST_CASE("generated write values and operation ids")
{
    AdversarySpec adv;
    adv.move_prob = 1.0;
    adv.delivery = AdversarySpec::Delivery::Immediate;
    adv.invocations = {PlannedInvocation{1, 1, OpKind::Write, std::nullopt, false}};
    const auto config = abd3();
    const Run run = simulate(config, *make_protocol(config), adv, 60, 1);
    const auto ops = extract_operations(run);
    REQUIRE(ops.size() == 1);
    CHECK(ops[0].id == "p1.1");
    CHECK(ops[0].value == std::optional<Value>{"v1.1"});
}

TEST_CASE("after-quiet invocations wait for everything else to finish")
{
    AdversarySpec adv;
    adv.move_prob = 0.7;
    adv.invocations = {PlannedInvocation{0, 1, OpKind::Write, "a", false},
                       PlannedInvocation{1, 1, OpKind::Read, std::nullopt, true}};
    const auto config = abd3();
    const Run run = simulate(config, *make_protocol(config), adv, 200, 9);
    const auto ops = extract_operations(run);
    REQUIRE(ops.size() == 2);
    REQUIRE(ops[0].completed());
    CHECK(ops[1].start.time > ops[0].end->time);
    CHECK(ops[1].isolated);
}

TEST_CASE("extend_run keeps the prefix")
{
    const auto config = abd3();
    const auto protocol = make_protocol(config);
    AdversarySpec adv;
    adv.invoke_prob = 0.3;
    adv.max_random_ops = 4;
    const Run base = simulate(config, *protocol, adv, 20, 2);
    const Run longer = extend_run(base, *protocol, adv, 50, 7);
    CHECK(longer.horizon() == 50);
    CHECK(longer.prefix(20).rounds == base.rounds);
    CHECK(validate_run(longer, *protocol).ok());
}

TEST_CASE("quiescent runs settle into idle rounds")
{
    AdversarySpec adv;
    adv.delivery = AdversarySpec::Delivery::Immediate;
    adv.move_prob = 1.0;
    adv.invocations = {PlannedInvocation{2, 1, OpKind::Read, std::nullopt, false}};
    const auto config = abd3();
    const Run run = simulate(config, *make_protocol(config), adv, 100, 1);
    REQUIRE(run.quiescent);
    CHECK(run.rounds.back() == JointAction::idle(3));
}
