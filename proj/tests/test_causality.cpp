#include "builder.hpp"
#include "generators.hpp"
#include "oracles.hpp"

#include "msgchain/causality.hpp"
#include "msgchain/protocols.hpp"
#include "msgchain/transform.hpp"

#include <doctest.h>

using namespace msgchain;
using msgchain::testing::NaiveClosure;
using msgchain::testing::RunBuilder;
using msgchain::testing::ScriptedProtocol;

namespace {

// p=0 sends mu in round 1; q=1 receives it in round 3.
Run single_message()
{
    return RunBuilder(2).send(1, 0, 1, "mu").deliver(3, 1, 0, "mu", 1).until(5).run();
}

} // namespace

TEST_CASE("a message sent in round 1 and delivered in round 3")
{
    const auto index = build_index(single_message());
    CHECK(happens_before(index, {0, 0}, {1, 3}));
    CHECK_FALSE(happens_before(index, {0, 0}, {1, 2}));
    CHECK_FALSE(happens_before(index, {0, 1}, {1, 3}));
    CHECK(earliest_reach(index, {0, 0}, 1) == 3);
}

TEST_CASE("same-process order")
{
    const auto index = build_index(single_message());
    CHECK(happens_before(index, {0, 2}, {0, 5}));
    CHECK_FALSE(happens_before(index, {0, 2}, {0, 2}));
    CHECK_FALSE(happens_before(index, {0, 3}, {0, 2}));
}

TEST_CASE("nodes outside the horizon are rejected")
{
    const auto index = build_index(single_message());
    CHECK_THROWS_AS(happens_before(index, {0, 0}, {1, 6}), ConstraintError);
    CHECK_THROWS_AS(earliest_reach(index, {2, 0}, 1), ConstraintError);
}

TEST_CASE("disconnected processes have no cross-process chains")
{
    SystemConfig config;
    config.n = 3;
    config.protocol = "scripted";
    const Run run = RunBuilder(config).noop(1, 0).noop(2, 1).until(6).run();
    const auto index = build_index(run);
    for (ProcessId p = 0; p < 3; ++p) {
        for (ProcessId q = 0; q < 3; ++q) {
            for (Time t = 0; t <= 6; ++t) {
                for (Time u = 0; u <= 6; ++u) {
                    if (p != q) {
                        CHECK_FALSE(happens_before(index, {p, t}, {q, u}));
                    }
                }
            }
        }
    }
}

TEST_CASE("a two-hop chain through a waiting delivery")
{
    // 0 -> 1 in round 1, delivered in round 4; 1 forwards in round 5, delivered to 2 in round 8.
    const Run run = RunBuilder(3)
                        .send(1, 0, 1, "a")
                        .deliver(4, 1, 0, "a", 1)
                        .send(5, 1, 2, "b")
                        .deliver(8, 2, 1, "b", 5)
                        .until(9)
                        .run();
    const auto index = build_index(run);
    const NaiveClosure naive(run);
    CHECK(happens_before(index, {0, 0}, {2, 8}));
    CHECK_FALSE(happens_before(index, {0, 0}, {2, 7}));
    CHECK(naive.reaches({0, 0}, {2, 8}));
    CHECK_FALSE(naive.reaches({0, 0}, {2, 7}));
}

TEST_CASE("index agrees with the naive closure on random runs")
{
    msgchain::testing::SampleShape shape;
    shape.horizon = 12;
    for (std::uint64_t seed = 1; seed <= 15; ++seed) {
        const auto sample = msgchain::testing::random_sample(seed, shape);
        const auto index = build_index(sample.run);
        const NaiveClosure naive(sample.run);
        const Time h = sample.run.horizon();
        std::size_t mismatches = 0;
        for (ProcessId p = 0; p < sample.run.config.n; ++p) {
            for (Time t = 0; t <= h; ++t) {
                for (ProcessId q = 0; q < sample.run.config.n; ++q) {
                    for (Time u = 0; u <= h; ++u) {
                        mismatches += happens_before(index, {p, t}, {q, u}) != naive.reaches({p, t}, {q, u});
                    }
                }
            }
        }
        CHECK_MESSAGE(mismatches == 0, "seed " << seed);
    }
}

TEST_CASE("past frontier without messages")
{
    const Run run = RunBuilder(3).noop(2, 1).until(8).run();
    const auto f = past_frontier(build_index(run), {1, 5});
    CHECK(f.cut == std::vector<Time>{0, 5, 0});
}

TEST_CASE("past frontier of the single-message run")
{
    const auto f = past_frontier(build_index(single_message()), {1, 3});
    CHECK(f.cut[0] == 1);
    CHECK(f.contains({0, 0}));
    CHECK_FALSE(f.contains({0, 1}));
    CHECK(f.cut[1] == 3);
}

TEST_CASE("past frontier is downward closed and exact")
{
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        msgchain::testing::SampleShape shape;
        shape.horizon = 14;
        const auto sample = msgchain::testing::random_sample(seed, shape);
        const auto index = build_index(sample.run);
        const NaiveClosure naive(sample.run);
        const Node pivot{static_cast<ProcessId>(seed % sample.run.config.n), sample.run.horizon() - 1};
        const auto f = past_frontier(index, pivot);
        for (ProcessId j = 0; j < sample.run.config.n; ++j) {
            for (Time l = 0; l <= sample.run.horizon(); ++l) {
                CHECK(f.contains({j, l}) == naive.reaches({j, l}, pivot));
            }
        }
    }
}

TEST_CASE("op_chain follows the same process and refuses pending targets")
{
    const Run run = RunBuilder(2)
                        .invoke(1, 0, OpKind::Write, "a")
                        .ret(2, 0, OpKind::Write)
                        .invoke(3, 0, OpKind::Read)
                        .ret(4, 0, OpKind::Read, "a")
                        .invoke(2, 1, OpKind::Read)
                        .until(5)
                        .run();
    const auto ops = extract_operations(run);
    const auto index = build_index(run);
    const auto& w = find_operation(ops, "p0.1");
    const auto& r = find_operation(ops, "p0.2");
    const auto& pending = find_operation(ops, "p1.1");
    CHECK(op_chain(index, w, r));
    CHECK_FALSE(op_chain(index, pending, r));
    CHECK_THROWS_AS(op_chain(index, w, pending), PendingOperation);
}

TEST_CASE("every ABD read of v is reached by a chain from the write of v")
{
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const auto sample = msgchain::testing::abd_sample(seed, 2, 2, 200);
        const auto ops = extract_operations(sample.run);
        const auto index = build_index(sample.run);
        for (const auto& r : ops) {
            if (r.kind != OpKind::Read || !r.completed() || !r.value) {
                continue;
            }
            for (const auto& w : ops) {
                if (w.kind == OpKind::Write && w.value == r.value) {
                    CHECK(op_chain(index, w, r));
                }
            }
        }
    }
}

TEST_CASE("local equivalence")
{
    const Run run = single_message();
    CHECK(locally_equivalent(run, run));

    // One extra skip round in the middle.
    Run padded = run;
    padded.rounds.insert(padded.rounds.begin() + 1, JointAction::idle(2));
    CHECK(locally_equivalent(run, padded));

    const Run other = RunBuilder(2).send(1, 0, 1, "nu").deliver(3, 1, 0, "nu", 1).until(5).run();
    CHECK_FALSE(locally_equivalent(run, other));

    Run mismatched = run;
    mismatched.config.f = 1;
    CHECK_THROWS_AS(locally_equivalent(run, mismatched), ConfigMismatch);
}

TEST_CASE("delayed runs are locally equivalent and nodes correspond by shift")
{
    const Run run = single_message();
    const auto t = delay_future(run, ScriptedProtocol{}, {1, 3}, 2);
    CHECK(locally_equivalent(run, t.run));
    const auto& cut = t.certificate.spec.frontier.cut;
    for (ProcessId j = 0; j < 2; ++j) {
        for (Time m = 0; m <= run.horizon(); ++m) {
            const auto nodes = corresponding_nodes(run, t.run, {j, m});
            const Node expected{j, shift(m, cut[j], 2)};
            CHECK(std::find(nodes.begin(), nodes.end(), expected) != nodes.end());
        }
    }
    CHECK_THROWS_AS(corresponding_nodes(run, RunBuilder(2).send(1, 0, 1, "nu").until(5).run(), {0, 0}),
                    NotEquivalent);
}

TEST_CASE("identical runs correspond at the same node")
{
    const Run run = single_message();
    const auto nodes = corresponding_nodes(run, run, {1, 3});
    CHECK(std::find(nodes.begin(), nodes.end(), Node{1, 3}) != nodes.end());
}
