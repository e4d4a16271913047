#include "builder.hpp"
#include "generators.hpp"

#include "msgchain/trace.hpp"

#include <cstdlib>
#include <doctest.h>
#include <fstream>

using namespace msgchain;
using msgchain::testing::RunBuilder;

namespace {

std::filesystem::path scratch(const std::string& name)
{
    const char* dir = std::getenv("MSGCHAIN_OUT_DIR");
    return std::filesystem::path(dir ? dir : "msgchain-test-out") / name;
}

} // namespace

TEST_CASE("runs round-trip through JSON")
{
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const auto sample = msgchain::testing::random_sample(seed);
        const Trace trace{sample.run, seed, sample.adversary};
        const Trace back = trace_from_json(to_json(trace));
        CHECK(back == trace);
        CHECK(replay(back.run) == replay(sample.run));
    }
}

TEST_CASE("every component kind serializes")
{
    const Run run = RunBuilder(2, 1)
                        .invoke(1, 0, OpKind::Write, "a")
                        .send(2, 0, 1, "U 1 1 0 =a")
                        .deliver(3, 1, 0, "U 1 1 0 =a", 2)
                        .noop(3, 0)
                        .ret(4, 0, OpKind::Write)
                        .invoke(5, 1, OpKind::Read)
                        .ret(6, 1, OpKind::Read)
                        .crash(1, 7)
                        .until(8)
                        .run();
    CHECK(run_from_json(to_json(run)) == run);
}

TEST_CASE("save and load preserve traces and digests")
{
    const auto sample = msgchain::testing::random_sample(3);
    const Trace trace{sample.run, 3, sample.adversary};
    const auto path = scratch("roundtrip.json");
    save_trace(path, trace);
    const Trace back = load_trace(path);
    CHECK(back == trace);
    CHECK(run_digest(back.run) == run_digest(trace.run));
    CHECK(digest(to_json(back)) == digest(to_json(trace)));
}

TEST_CASE("canonical text is stable and newline terminated")
{
    const Json a = Json::parse(R"({"b": 1, "a": [1, 2]})");
    const Json b = Json::parse(R"({"a":[1,2],"b":1})");
    CHECK(canonical(a) == canonical(b));
    CHECK(canonical(a).back() == '\n');
    CHECK(digest(a) == digest(b));
    CHECK(digest(a).size() == 16);
}

TEST_CASE("wrong schema and malformed fields are parse errors")
{
    Json j = to_json(Trace{msgchain::testing::broken_fixture().run, 1, std::nullopt});
    j["schema"] = "something/else";
    CHECK_THROWS_AS(trace_from_json(j), ParseError);

    Json bad = to_json(Trace{msgchain::testing::broken_fixture().run, 1, std::nullopt});
    bad["run"]["config"].erase("n");
    try {
        trace_from_json(bad);
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find("'n'") != std::string::npos);
    }
}

TEST_CASE("syntax errors report a line")
{
    const auto path = scratch("broken.json");
    std::filesystem::create_directories(path.parent_path());
    std::ofstream(path) << "{\n  \"schema\": \"msgchain.trace/1\",\n  oops\n}\n";
    try {
        load_json(path);
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find("line 3") != std::string::npos);
    }
}

TEST_CASE("invalid configurations are constraint errors")
{
    CHECK_THROWS_AS(config_from_json(Json{{"n", 3}, {"f", 3}, {"protocol", "abd"}}), ConstraintError);
}
