#include "builder.hpp"
#include "generators.hpp"

#include "msgchain/operations.hpp"
#include "msgchain/protocols.hpp"

#include <doctest.h>

using namespace msgchain;
using msgchain::testing::RunBuilder;

TEST_CASE("an invoke and its return pair up")
{
    const Run run = RunBuilder(3).invoke(3, 1, OpKind::Write, "5").ret(9, 1, OpKind::Write).until(10).run();
    const auto ops = extract_operations(run);
    REQUIRE(ops.size() == 1);
    CHECK(ops[0].id == "p1.1");
    CHECK(ops[0].kind == OpKind::Write);
    CHECK(ops[0].value == std::optional<Value>{"5"});
    CHECK(ops[0].start == Node{1, 3});
    CHECK(ops[0].end == std::optional<Node>{Node{1, 9}});
    CHECK(ops[0].isolated);
}

TEST_CASE("an open invoke at a crashed process stays pending")
{
    const Run run = RunBuilder(3, 1).invoke(2, 0, OpKind::Read).crash(0, 3).until(10).run();
    const auto ops = extract_operations(run);
    REQUIRE(ops.size() == 1);
    CHECK_FALSE(ops[0].completed());
    CHECK_FALSE(ops[0].value);
}

TEST_CASE("returns without a matching invoke are protocol violations")
{
    CHECK_THROWS_AS(extract_operations(RunBuilder(2).ret(1, 0, OpKind::Read).run()), ProtocolViolation);
    CHECK_THROWS_AS(extract_operations(RunBuilder(2).invoke(1, 0, OpKind::Write, "a").ret(2, 0, OpKind::Read).run()),
                    ProtocolViolation);
}

TEST_CASE("real-time precedence and isolation")
{
    const Run run = RunBuilder(2)
                        .invoke(1, 0, OpKind::Write, "a")
                        .ret(3, 0, OpKind::Write)
                        .invoke(3, 1, OpKind::Read)
                        .ret(4, 1, OpKind::Read, "a")
                        .invoke(6, 0, OpKind::Read)
                        .ret(7, 0, OpKind::Read, "a")
                        .run();
    const auto ops = extract_operations(run);
    const auto& w = find_operation(ops, "p0.1");
    const auto& r1 = find_operation(ops, "p1.1");
    const auto& r2 = find_operation(ops, "p0.2");
    // Return at time 3 and invoke at time 3 overlap.
    CHECK_FALSE(precedes(w, r1));
    CHECK(precedes(w, r2));
    CHECK(precedes(r1, r2));
    CHECK_FALSE(w.isolated);
    CHECK_FALSE(r1.isolated);
    CHECK(r2.isolated);
    CHECK(r2.ordinal == 2);
    CHECK_THROWS_AS(find_operation(ops, "p9.1"), ConstraintError);
}

TEST_CASE("pending operations are concurrent with everything after their start")
{
    const Run run =
        RunBuilder(2).invoke(1, 0, OpKind::Write, "a").invoke(5, 1, OpKind::Read).ret(6, 1, OpKind::Read).run();
    const auto ops = extract_operations(run);
    CHECK_FALSE(find_operation(ops, "p1.1").isolated);
}

TEST_CASE("quiescent reliable ABD runs have no pending operations")
{
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const auto sample = msgchain::testing::abd_sample(seed, 0, 0, 300);
        if (!sample.run.quiescent) {
            continue;
        }
        for (const auto& op : extract_operations(sample.run)) {
            CHECK_MESSAGE(op.completed(), "seed " << seed << " op " << op.id);
        }
    }
}
