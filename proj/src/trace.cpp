#include "msgchain/trace.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace msgchain {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

[[noreturn]] void fail(const std::string& field, const std::string& what)
{
    throw ParseError("field '" + field + "': " + what);
}

const Json& at(const Json& j, const char* key)
{
    if (!j.is_object() || !j.contains(key)) {
        fail(key, "missing");
    }
    return j.at(key);
}

template <class T>
T get(const Json& j, const char* key)
{
    try {
        return at(j, key).get<T>();
    } catch (const Json::exception& e) {
        fail(key, e.what());
    }
}

template <class T>
T get_or(const Json& j, const char* key, T fallback)
{
    if (!j.is_object() || !j.contains(key)) {
        return fallback;
    }
    return get<T>(j, key);
}

Json value_json(const std::optional<Value>& v)
{
    return v ? Json(*v) : Json(nullptr);
}

std::optional<Value> value_from(const Json& j, const char* key)
{
    if (!j.contains(key) || j.at(key).is_null()) {
        return std::nullopt;
    }
    return get<std::string>(j, key);
}

OpKind op_from(const Json& j)
{
    const auto s = get<std::string>(j, "op");
    if (s == "R") {
        return OpKind::Read;
    }
    if (s == "W") {
        return OpKind::Write;
    }
    fail("op", "expected R or W, got '" + s + "'");
}

Json env_json(const EnvComponent& c)
{
    return std::visit(overloaded{
                          [](const env::Skip&) { return Json{{"k", "skip"}}; },
                          [](const env::Move&) { return Json{{"k", "move"}}; },
                          [](const env::Invoke& i) {
                              return Json{{"k", "invoke"},
                                          {"op", std::string(to_string(i.input.kind))},
                                          {"arg", value_json(i.input.arg)}};
                          },
                          [](const env::Deliver& d) {
                              return Json{{"k", "deliver"},
                                          {"from", d.from},
                                          {"payload", d.record.payload},
                                          {"sent", d.record.send_round}};
                          },
                      },
                      c);
}

EnvComponent env_from(const Json& j)
{
    const auto k = get<std::string>(j, "k");
    if (k == "skip") {
        return env::Skip{};
    }
    if (k == "move") {
        return env::Move{};
    }
    if (k == "invoke") {
        return env::Invoke{Invocation{op_from(j), value_from(j, "arg")}};
    }
    if (k == "deliver") {
        return env::Deliver{MessageRecord{get<std::string>(j, "payload"), get<Time>(j, "sent")},
                            get<ProcessId>(j, "from")};
    }
    fail("k", "unknown environment component '" + k + "'");
}

Json action_json(const ProcessAction& a)
{
    return std::visit(overloaded{
                          [](const act::Bottom&) { return Json{{"k", "bottom"}}; },
                          [](const act::NoOp&) { return Json{{"k", "noop"}}; },
                          [](const act::Receive&) { return Json{{"k", "receive"}}; },
                          [](const act::Send& s) { return Json{{"k", "send"}, {"to", s.to}, {"payload", s.payload}}; },
                          [](const act::Return& r) {
                              return Json{{"k", "return"},
                                          {"op", std::string(to_string(r.kind))},
                                          {"arg", value_json(r.value)}};
                          },
                          [](const act::Local& l) { return Json{{"k", "local"}, {"tag", l.tag}, {"args", l.args}}; },
                      },
                      a);
}

ProcessAction action_from(const Json& j)
{
    const auto k = get<std::string>(j, "k");
    if (k == "bottom") {
        return act::Bottom{};
    }
    if (k == "noop") {
        return act::NoOp{};
    }
    if (k == "receive") {
        return act::Receive{};
    }
    if (k == "send") {
        return act::Send{get<std::string>(j, "payload"), get<ProcessId>(j, "to")};
    }
    if (k == "return") {
        return act::Return{op_from(j), value_from(j, "arg")};
    }
    if (k == "local") {
        return act::Local{get<std::string>(j, "tag"), get<std::string>(j, "args")};
    }
    fail("k", "unknown action '" + k + "'");
}

Json crashes_json(const std::map<ProcessId, Time>& crashes)
{
    Json out = Json::array();
    for (const auto& [p, c] : crashes) {
        out.push_back(Json{{"process", p}, {"round", c}});
    }
    return out;
}

} // namespace

Json to_json(const SystemConfig& config)
{
    Json net = Json::array();
    for (const auto& e : config.net) {
        net.push_back(Json::array({e.from, e.to}));
    }
    return Json{{"n", config.n}, {"f", config.f}, {"protocol", config.protocol}, {"net", net}};
}

SystemConfig config_from_json(const Json& j)
{
    SystemConfig c;
    c.n = get<std::uint32_t>(j, "n");
    c.f = get_or<std::uint32_t>(j, "f", 0);
    c.protocol = get<std::string>(j, "protocol");
    if (!j.contains("net") || j.at("net") == "complete") {
        c = SystemConfig::complete(c.n, c.f, c.protocol);
    } else {
        for (const auto& e : at(j, "net")) {
            if (!e.is_array() || e.size() != 2) {
                fail("net", "edges are [from, to] pairs");
            }
            c.net.push_back(Edge{e[0].get<ProcessId>(), e[1].get<ProcessId>()});
        }
        std::sort(c.net.begin(), c.net.end());
        c.net.erase(std::unique(c.net.begin(), c.net.end()), c.net.end());
    }
    try {
        c.check();
    } catch (const ConfigError& e) {
        throw ConstraintError(e.what());
    }
    return c;
}

Json to_json(const AdversarySpec& a)
{
    Json invocations = Json::array();
    for (const auto& inv : a.invocations) {
        Json ij{{"process", inv.process},
                {"round", inv.round},
                {"op", std::string(to_string(inv.kind))},
                {"after_quiet", inv.after_quiet}};
        if (inv.value) {
            ij["arg"] = *inv.value;
        }
        invocations.push_back(std::move(ij));
    }
    Json crashes = Json::array();
    for (const auto& c : a.crash_plan) {
        crashes.push_back(Json{{"process", c.process}, {"round", c.round}});
    }
    return Json{
        {"schedule", a.schedule == AdversarySpec::Schedule::RoundRobin ? "round-robin" : "random"},
        {"move_prob", a.move_prob},
        {"idle_moves", a.idle_moves},
        {"delivery", a.delivery == AdversarySpec::Delivery::Immediate ? "immediate" : "random"},
        {"deliver_prob", a.deliver_prob},
        {"crash_plan", crashes},
        {"random_crashes", a.random_crashes},
        {"crash_window", a.crash_window},
        {"invocations", invocations},
        {"invoke_prob", a.invoke_prob},
        {"max_random_ops", a.max_random_ops},
        {"read_ratio", a.read_ratio},
        {"invoke_until", a.invoke_until},
        {"quiesce", a.quiesce},
        {"drop_from_crashed", a.drop_from_crashed},
    };
}

AdversarySpec adversary_from_json(const Json& j)
{
    AdversarySpec a;
    const auto schedule = get_or<std::string>(j, "schedule", "random");
    if (schedule == "round-robin") {
        a.schedule = AdversarySpec::Schedule::RoundRobin;
    } else if (schedule != "random") {
        fail("schedule", "expected round-robin or random");
    }
    const auto delivery = get_or<std::string>(j, "delivery", "random");
    if (delivery == "immediate") {
        a.delivery = AdversarySpec::Delivery::Immediate;
    } else if (delivery != "random") {
        fail("delivery", "expected immediate or random");
    }
    a.move_prob = get_or(j, "move_prob", a.move_prob);
    a.idle_moves = get_or(j, "idle_moves", a.idle_moves);
    a.deliver_prob = get_or(j, "deliver_prob", a.deliver_prob);
    a.random_crashes = get_or(j, "random_crashes", a.random_crashes);
    a.crash_window = get_or(j, "crash_window", a.crash_window);
    a.invoke_prob = get_or(j, "invoke_prob", a.invoke_prob);
    a.max_random_ops = get_or(j, "max_random_ops", a.max_random_ops);
    a.read_ratio = get_or(j, "read_ratio", a.read_ratio);
    a.invoke_until = get_or(j, "invoke_until", a.invoke_until);
    a.quiesce = get_or(j, "quiesce", a.quiesce);
    a.drop_from_crashed = get_or(j, "drop_from_crashed", a.drop_from_crashed);
    if (j.contains("crash_plan")) {
        for (const auto& c : at(j, "crash_plan")) {
            a.crash_plan.push_back(CrashPoint{get<ProcessId>(c, "process"), get<Time>(c, "round")});
        }
    }
    if (j.contains("invocations")) {
        for (const auto& i : at(j, "invocations")) {
            PlannedInvocation inv;
            inv.process = get<ProcessId>(i, "process");
            inv.round = get_or<Time>(i, "round", 1);
            inv.kind = op_from(i);
            inv.value = value_from(i, "arg");
            inv.after_quiet = get_or(i, "after_quiet", false);
            a.invocations.push_back(std::move(inv));
        }
    }
    return a;
}

Json to_json(const JointAction& ja)
{
    Json env = Json::array();
    for (const auto& c : ja.env) {
        env.push_back(env_json(c));
    }
    Json acts = Json::array();
    for (const auto& a : ja.actions) {
        acts.push_back(action_json(a));
    }
    return Json{{"env", env}, {"act", acts}};
}

JointAction joint_action_from_json(const Json& j)
{
    JointAction ja;
    for (const auto& c : at(j, "env")) {
        ja.env.push_back(env_from(c));
    }
    for (const auto& a : at(j, "act")) {
        ja.actions.push_back(action_from(a));
    }
    return ja;
}

Json to_json(const Run& run)
{
    Json rounds = Json::array();
    for (const auto& ja : run.rounds) {
        rounds.push_back(to_json(ja));
    }
    return Json{{"config", to_json(run.config)},
                {"initial", run.initial},
                {"rounds", rounds},
                {"crashes", crashes_json(run.crashes)},
                {"quiescent", run.quiescent}};
}

Run run_from_json(const Json& j)
{
    Run run = empty_run(config_from_json(at(j, "config")));
    if (j.contains("initial")) {
        run.initial = get<std::vector<std::string>>(j, "initial");
    }
    for (const auto& r : at(j, "rounds")) {
        run.rounds.push_back(joint_action_from_json(r));
    }
    if (j.contains("crashes")) {
        for (const auto& c : at(j, "crashes")) {
            run.crashes[get<ProcessId>(c, "process")] = get<Time>(c, "round");
        }
    }
    run.quiescent = get_or(j, "quiescent", false);
    return run;
}

Json to_json(const Trace& trace)
{
    Json j{{"schema", kTraceSchema}, {"run", to_json(trace.run)}};
    j["seed"] = trace.seed ? Json(*trace.seed) : Json(nullptr);
    j["adversary"] = trace.adversary ? to_json(*trace.adversary) : Json(nullptr);
    j["digest"] = run_digest(trace.run);
    return j;
}

Trace trace_from_json(const Json& j)
{
    const auto schema = get<std::string>(j, "schema");
    if (schema != kTraceSchema) {
        fail("schema", "expected " + std::string(kTraceSchema) + ", got " + schema);
    }
    Trace t;
    t.run = run_from_json(at(j, "run"));
    if (j.contains("seed") && !j.at("seed").is_null()) {
        t.seed = get<std::uint64_t>(j, "seed");
    }
    if (j.contains("adversary") && !j.at("adversary").is_null()) {
        t.adversary = adversary_from_json(j.at("adversary"));
    }
    return t;
}

std::string canonical(const Json& j)
{
    return j.dump() + "\n";
}

std::string digest(const Json& j)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : canonical(j)) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string run_digest(const Run& run)
{
    return digest(to_json(run));
}

void save_json(const std::filesystem::path& path, const Json& j)
{
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error("cannot write " + path.string());
    }
    out << j.dump(1) << "\n";
}

Json load_json(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ParseError("cannot read " + path.string());
    }
    std::stringstream text;
    text << in.rdbuf();
    try {
        return Json::parse(text.str());
    } catch (const Json::parse_error& e) {
        const std::string body = text.str();
        const auto upto = std::min<std::size_t>(e.byte, body.size());
        const auto line = 1 + std::count(body.begin(), body.begin() + static_cast<std::ptrdiff_t>(upto), '\n');
        throw ParseError(path.string() + ":" + std::to_string(line) + ": " + e.what());
    }
}

void save_trace(const std::filesystem::path& path, const Trace& trace)
{
    save_json(path, to_json(trace));
}

Trace load_trace(const std::filesystem::path& path)
{
    return trace_from_json(load_json(path));
}

} // namespace msgchain
