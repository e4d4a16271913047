#include "msgchain/cli.hpp"
#include "msgchain/protocols.hpp"

#include <cstdlib>

namespace msgchain {

namespace {

template <class F>
auto within(const std::string& section, F&& parse)
{
    try {
        return parse();
    } catch (const ParseError& e) {
        throw ParseError(section + "." + e.what());
    }
}

void require(bool ok, const std::string& what)
{
    if (!ok) {
        throw ConstraintError(what);
    }
}

} // namespace

std::string_view to_string(Expectation e) noexcept
{
    return e == Expectation::Linearizable ? "linearizable" : "violation";
}

Expectation parse_expectation(const std::string& text)
{
    if (text == "linearizable") {
        return Expectation::Linearizable;
    }
    if (text == "violation") {
        return Expectation::Violation;
    }
    throw ParseError("field 'expect': expected linearizable or violation, got '" + text + "'");
}

SeedRange parse_seed_range(const std::string& text)
{
    try {
        std::size_t used = 0;
        const auto dots = text.find("..");
        if (dots == std::string::npos) {
            const auto seed = std::stoull(text, &used);
            if (used != text.size()) {
                throw std::invalid_argument(text);
            }
            return SeedRange{seed, seed};
        }
        const auto first = std::stoull(text.substr(0, dots), &used);
        if (used != dots) {
            throw std::invalid_argument(text);
        }
        const auto tail = text.substr(dots + 2);
        const auto last = std::stoull(tail, &used);
        if (used != tail.size() || last < first) {
            throw std::invalid_argument(text);
        }
        return SeedRange{first, last};
    } catch (const std::logic_error&) {
        throw ParseError("field 'seeds': expected N or A..B with A <= B, got '" + text + "'");
    }
}

ScenarioSpec parse_scenario(const Json& j)
{
    if (!j.is_object()) {
        throw ParseError("scenario must be a JSON object");
    }
    if (j.contains("schema") && j.at("schema") != kScenarioSchema) {
        throw ParseError("field 'schema': expected " + std::string(kScenarioSchema));
    }
    ScenarioSpec spec;
    try {
        spec.name = j.value("name", spec.name);
        if (!j.contains("config")) {
            throw ParseError("field 'config': missing");
        }
        spec.config = within("config", [&] { return config_from_json(j.at("config")); });
        if (j.contains("adversary")) {
            spec.adversary = within("adversary", [&] { return adversary_from_json(j.at("adversary")); });
        }
        spec.horizon = j.value("horizon", spec.horizon);
        if (j.contains("seeds")) {
            const auto& s = j.at("seeds");
            spec.seeds = s.is_string() ? parse_seed_range(s.get<std::string>())
                                       : SeedRange{s.get<std::uint64_t>(), s.get<std::uint64_t>()};
        } else if (j.contains("seed")) {
            const auto seed = j.at("seed").get<std::uint64_t>();
            spec.seeds = SeedRange{seed, seed};
        }
        if (j.contains("checks")) {
            const auto& c = j.at("checks");
            spec.check_linearizability = c.value("linearizable", spec.check_linearizability);
            spec.check_audit = c.value("audit", spec.check_audit);
            spec.check_liveness = c.value("liveness", spec.check_liveness);
            spec.refute = c.value("refute", spec.refute);
            spec.max_operations = c.value("max_operations", spec.max_operations);
        }
        if (j.contains("expect")) {
            spec.expect = parse_expectation(j.at("expect").get<std::string>());
        }
        if (j.contains("persist")) {
            const auto p = j.at("persist").get<std::string>();
            if (p == "all") {
                spec.persist = Persist::All;
            } else if (p == "failures") {
                spec.persist = Persist::Failures;
            } else if (p == "none") {
                spec.persist = Persist::None;
            } else {
                throw ParseError("field 'persist': expected all, failures or none");
            }
        }
    } catch (const Json::exception& e) {
        throw ParseError(std::string("scenario: ") + e.what());
    }

    require(spec.horizon >= 1, "horizon must be at least 1");
    require(spec.max_operations >= 1 && spec.max_operations <= 64, "max_operations must lie in 1..64");
    const auto& a = spec.adversary;
    require(a.crash_plan.size() + a.random_crashes <= spec.config.f,
            "adversary crashes " + std::to_string(a.crash_plan.size() + a.random_crashes) +
                " processes but f=" + std::to_string(spec.config.f));
    for (const auto& c : a.crash_plan) {
        require(c.process < spec.config.n, "crash plan names unknown process " + std::to_string(c.process));
        require(c.round >= 0, "crash rounds are non-negative");
    }
    for (const auto& inv : a.invocations) {
        require(inv.process < spec.config.n, "invocation at unknown process " + std::to_string(inv.process));
        require(inv.round >= 1, "invocation rounds start at 1");
        require(!inv.value || is_encodable_value(*inv.value), "written values may not contain whitespace");
    }
    for (double p : {a.move_prob, a.deliver_prob, a.invoke_prob, a.read_ratio}) {
        require(p >= 0.0 && p <= 1.0, "probabilities must lie in [0, 1]");
    }
    try {
        make_protocol(spec.config);
    } catch (const ConfigError& e) {
        throw ConstraintError(e.what());
    }
    return spec;
}

ScenarioSpec load_scenario(const std::filesystem::path& path)
{
    try {
        return parse_scenario(load_json(path));
    } catch (const ParseError& e) {
        const std::string what = e.what();
        throw ParseError(what.rfind(path.string(), 0) == 0 ? what : path.string() + ": " + what);
    }
}

Json to_json(const ScenarioSpec& spec)
{
    Json j{{"schema", kScenarioSchema},
           {"name", spec.name},
           {"config", to_json(spec.config)},
           {"adversary", to_json(spec.adversary)},
           {"horizon", spec.horizon},
           {"seeds", std::to_string(spec.seeds.first) + ".." + std::to_string(spec.seeds.last)},
           {"checks",
            {{"linearizable", spec.check_linearizability},
             {"audit", spec.check_audit},
             {"liveness", spec.check_liveness},
             {"refute", spec.refute},
             {"max_operations", spec.max_operations}}},
           {"persist", spec.persist == Persist::All ? "all" : spec.persist == Persist::Failures ? "failures" : "none"}};
    if (spec.expect) {
        j["expect"] = std::string(to_string(*spec.expect));
    }
    return j;
}

std::filesystem::path output_dir(const std::optional<std::string>& flag)
{
    if (flag && !flag->empty()) {
        return *flag;
    }
    if (const char* env = std::getenv("MSGCHAIN_OUT_DIR"); env != nullptr && *env != '\0') {
        return env;
    }
    return "msgchain-out";
}

} // namespace msgchain
