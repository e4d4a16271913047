#include "builder.hpp"
#include "generators.hpp"

#include "msgchain/analysis.hpp"
#include "msgchain/protocols.hpp"

#include <algorithm>
#include <doctest.h>

using namespace msgchain;
using msgchain::testing::RunBuilder;
using msgchain::testing::ScriptedProtocol;

namespace {

bool subset(const std::vector<ProcessId>& a, const std::vector<ProcessId>& b)
{
    return std::all_of(a.begin(), a.end(), [&](ProcessId p) { return std::find(b.begin(), b.end(), p) != b.end(); });
}

// W(v) at 0 and R at 1 returning v, concurrent and with no messages.
Run unchained_read()
{
    return RunBuilder(2, 0)
        .invoke(1, 0, OpKind::Write, "v")
        .ret(2, 0, OpKind::Write)
        .invoke(1, 1, OpKind::Read)
        .ret(2, 1, OpKind::Read, "v")
        .until(3)
        .run();
}

} // namespace

TEST_CASE("an operation without communication has only itself as observer and witness")
{
    const Run run = RunBuilder(3).invoke(1, 2, OpKind::Read).ret(4, 2, OpKind::Read).until(5).run();
    const auto ops = extract_operations(run);
    const auto index = build_index(run);
    CHECK(observers(index, ops[0]) == std::vector<ProcessId>{2});
    CHECK(witnesses(index, ops[0]) == std::vector<ProcessId>{2});
}

TEST_CASE("a one-way message makes an observer but not a witness")
{
    const Run run = RunBuilder(2)
                        .invoke(1, 0, OpKind::Write, "a")
                        .send(2, 0, 1, "m")
                        .deliver(3, 1, 0, "m", 2)
                        .ret(4, 0, OpKind::Write)
                        .until(5)
                        .run();
    const auto ops = extract_operations(run);
    const auto index = build_index(run);
    CHECK(observers(index, ops[0]) == std::vector<ProcessId>{0, 1});
    CHECK(witnesses(index, ops[0]) == std::vector<ProcessId>{0});
}

TEST_CASE("a round trip makes a witness")
{
    const Run run = RunBuilder(2)
                        .invoke(1, 0, OpKind::Write, "a")
                        .send(2, 0, 1, "m")
                        .deliver(3, 1, 0, "m", 2)
                        .send(4, 1, 0, "ack")
                        .deliver(5, 0, 1, "ack", 4)
                        .ret(6, 0, OpKind::Write)
                        .run();
    const auto ops = extract_operations(run);
    const auto index = build_index(run);
    CHECK(witnesses(index, ops[0]) == std::vector<ProcessId>{0, 1});
    const auto report = audit_quorum(run, 1);
    REQUIRE(report.operations.size() == 1);
    CHECK_FALSE(report.operations[0].too_few_witnesses);
    CHECK(audit_quorum(run, 2).operations[0].too_few_witnesses);
}

TEST_CASE("pending operations have no observers")
{
    const Run run = RunBuilder(2).invoke(1, 0, OpKind::Read).until(3).run();
    const auto ops = extract_operations(run);
    CHECK_THROWS_AS(observers(build_index(run), ops[0]), PendingOperation);
    CHECK_THROWS_AS(witnesses(build_index(run), ops[0]), PendingOperation);
}

TEST_CASE("witnesses are observers")
{
    for (std::uint64_t seed = 1; seed <= 40; ++seed) {
        const auto sample = msgchain::testing::random_sample(seed);
        const auto index = build_index(sample.run);
        for (const auto& op : extract_operations(sample.run)) {
            if (op.completed()) {
                CHECK(subset(witnesses(index, op), observers(index, op)));
            }
        }
    }
}

TEST_CASE("extending a run never shrinks observers or witnesses")
{
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const auto sample = msgchain::testing::random_sample(seed);
        const Time cut = sample.run.horizon() / 2;
        const Run head = sample.run.prefix(cut);
        const auto short_index = build_index(head);
        const auto long_index = build_index(sample.run);
        for (const auto& op : extract_operations(head)) {
            if (op.completed()) {
                CHECK(subset(observers(short_index, op), observers(long_index, op)));
                CHECK(subset(witnesses(short_index, op), witnesses(long_index, op)));
            }
        }
    }
}

TEST_CASE("ABD operations have a majority of witnesses")
{
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const auto sample = msgchain::testing::abd_sample(seed, 2, 2);
        const auto report = audit(sample.run, 2);
        CHECK(report.quorum_clean());
        CHECK(report.chains_clean());
        for (const auto& q : report.operations) {
            CHECK(q.witnesses.size() >= 3);
            CHECK(q.observers.size() >= 3);
        }
    }
}

TEST_CASE("broken writes are flagged with f = 1")
{
    const auto fixture = msgchain::testing::broken_fixture();
    const auto report = audit_quorum(fixture.run, 1);
    CHECK_FALSE(report.quorum_clean());
    for (const auto& q : report.operations) {
        CHECK(q.too_few_witnesses);
    }
}

TEST_CASE("with f = 0 every completed operation passes")
{
    const auto fixture = msgchain::testing::broken_fixture();
    CHECK(audit_quorum(fixture.run, 0).quorum_clean());
}

TEST_CASE("a single write with no reads is chain-clean")
{
    const Run run = RunBuilder(2).invoke(1, 0, OpKind::Write, "a").ret(2, 0, OpKind::Write).until(3).run();
    CHECK(audit_chains(run).chains_clean());
}

TEST_CASE("a read with no chain from its write")
{
    const auto report = audit_chains(unchained_read());
    REQUIRE_FALSE(report.chain_violations.empty());
    const auto& v = report.chain_violations[0];
    CHECK(v.rule == ChainRule::WriteToRead);
    CHECK(v.x == "p0.1");
    CHECK(v.y == "p1.1");
}

TEST_CASE("a read of a value never written")
{
    const Run run = RunBuilder(2).invoke(1, 1, OpKind::Read).ret(2, 1, OpKind::Read, "ghost").until(3).run();
    const auto report = audit_chains(run);
    REQUIRE(report.chain_violations.size() == 1);
    CHECK(report.chain_violations[0].x.empty());
    const auto result = refute(run, ScriptedProtocol{}, report.chain_violations[0]);
    CHECK_FALSE(result.verdict.linearizable);
    CHECK(result.equivalent);
}

TEST_CASE("refuting a write-to-read violation moves the read ahead of the write")
{
    const Run run = unchained_read();
    const auto report = audit_chains(run);
    REQUIRE_FALSE(report.chain_violations.empty());
    const auto result = refute(run, ScriptedProtocol{}, report.chain_violations[0]);
    CHECK_FALSE(result.verdict.linearizable);
    CHECK(result.equivalent);
    CHECK(result.valid);
    CHECK(locally_equivalent(run, result.run));
    const auto ops = extract_operations(result.run);
    CHECK(precedes(find_operation(ops, "p1.1"), find_operation(ops, "p0.1")));
}

TEST_CASE("refuting the broken fixture gives W(b) < W(c) < R(b)")
{
    const auto fixture = msgchain::testing::broken_fixture();
    const auto report = audit_chains(fixture.run);
    const auto it = std::find_if(report.chain_violations.begin(), report.chain_violations.end(),
                                 [](const ChainViolation& v) { return v.rule == ChainRule::ReadValueSource; });
    REQUIRE(it != report.chain_violations.end());
    CHECK(it->read == "p0.2");
    const auto result = refute(fixture.run, *fixture.protocol, *it);
    CHECK_FALSE(result.verdict.linearizable);
    CHECK(result.equivalent);
    CHECK(result.valid);
    CHECK(validate_run(result.run, *fixture.protocol).ok());
    const auto ops = extract_operations(result.run);
    CHECK(precedes(find_operation(ops, it->y), find_operation(ops, it->x)));
    CHECK(precedes(find_operation(ops, it->x), find_operation(ops, it->read)));
    CHECK_FALSE(check_no_aba(ops).empty());
}

TEST_CASE("refuting a stale violation is a precondition failure")
{
    const Run run = unchained_read();
    const ChainViolation made_up{ChainRule::WriteToRead, "p1.1", "p0.1", ""};
    CHECK_THROWS_AS(refute(run, ScriptedProtocol{}, made_up), PreconditionFailed);
}

TEST_CASE("an isolation violation is refuted by extending the run")
{
    const auto fixture = msgchain::testing::broken_fixture();
    const auto report = audit_chains(fixture.run);
    const auto it = std::find_if(report.chain_violations.begin(), report.chain_violations.end(),
                                 [](const ChainViolation& v) { return v.rule == ChainRule::Isolation; });
    REQUIRE(it != report.chain_violations.end());
    const auto result = refute(fixture.run, *fixture.protocol, *it);
    CHECK(result.extended);
    CHECK(result.valid);
    CHECK((!result.verdict.linearizable || result.liveness_failure));
}

TEST_CASE("a quorum violation of the broken register is refuted")
{
    const auto fixture = msgchain::testing::broken_fixture();
    const auto result = refute_quorum(fixture.run, *fixture.protocol, "p1.1");
    CHECK(result.valid);
    CHECK(result.extended);
    CHECK((!result.verdict.linearizable || result.liveness_failure));
}

TEST_CASE("refute_quorum rejects operations with enough witnesses")
{
    const auto sample = msgchain::testing::abd_sample(3, 2, 0, 200);
    const auto ops = extract_operations(sample.run);
    const auto done = std::find_if(ops.begin(), ops.end(), [](const auto& o) { return o.completed(); });
    REQUIRE(done != ops.end());
    CHECK_THROWS_AS(refute_quorum(sample.run, *sample.protocol, done->id), PreconditionFailed);
}

TEST_CASE("clean runs have nothing to refute")
{
    const auto sample = msgchain::testing::abd_sample(4, 2, 1);
    CHECK(audit_chains(sample.run).chain_violations.empty());
}

TEST_CASE("rule names")
{
    CHECK(to_string(ChainRule::WriteToRead) == "write-to-read");
    CHECK(to_string(ChainRule::ReadValueSource) == "read-value-source");
    CHECK(to_string(ChainRule::Isolation) == "isolation");
}
