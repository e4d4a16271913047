#include "msgchain/model.hpp"

#include <algorithm>
#include <sstream>

namespace msgchain {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

using Channels = std::map<Edge, std::deque<MessageRecord>>;

Channels empty_channels(const SystemConfig& config)
{
    Channels channels;
    for (const auto& e : config.net) {
        channels.emplace(e, std::deque<MessageRecord>{});
    }
    return channels;
}

std::vector<LocalHistory> initial_locals(const Run& run)
{
    std::vector<LocalHistory> locals(run.config.n);
    for (std::uint32_t p = 0; p < run.config.n && p < run.initial.size(); ++p) {
        locals[p].initial = run.initial[p];
    }
    return locals;
}

void check_well_formed(const JointAction& ja, const SystemConfig& config, Time round)
{
    if (ja.env.size() != config.n || ja.actions.size() != config.n) {
        throw MalformedJointAction("joint action has " + std::to_string(ja.env.size()) + " environment and " +
                                       std::to_string(ja.actions.size()) + " process components, expected " +
                                       std::to_string(config.n),
                                   round);
    }
    for (ProcessId i = 0; i < config.n; ++i) {
        const auto& action = ja.actions[i];
        const auto who = "process " + std::to_string(i) + ": ";
        std::visit(overloaded{
                       [&](const env::Move&) {
                           if (!is_protocol_action(action)) {
                               throw MalformedJointAction(who + "moved without a protocol action", round);
                           }
                           if (const auto* send = std::get_if<act::Send>(&action)) {
                               if (!config.has_edge(i, send->to)) {
                                   throw MalformedJointAction(
                                       who + "send to " + std::to_string(send->to) + " over a non-edge", round);
                               }
                           }
                       },
                       [&](const env::Deliver& d) {
                           if (d.from == i || !config.has_edge(d.from, i)) {
                               throw MalformedJointAction(
                                   who + "delivery from " + std::to_string(d.from) + " over a non-edge", round);
                           }
                           if (!std::holds_alternative<act::Bottom>(action) &&
                               !std::holds_alternative<act::Receive>(action)) {
                               throw MalformedJointAction(who + "delivery carries a protocol action", round);
                           }
                       },
                       [&](const auto&) {
                           if (!std::holds_alternative<act::Bottom>(action)) {
                               throw MalformedJointAction(who + "action without a move", round);
                           }
                       },
                   },
                   ja.env[i]);
    }
}

// Deliveries are resolved against the channels as they were at the start of
// the round; sends of this round are enqueued afterwards.
JointAction apply_round(Channels& channels, std::vector<LocalHistory>& locals, const JointAction& ja,
                        const SystemConfig& config, Time round)
{
    check_well_formed(ja, config, round);
    JointAction resolved = ja;
    for (ProcessId i = 0; i < config.n; ++i) {
        if (const auto* d = std::get_if<env::Deliver>(&ja.env[i])) {
            auto& chan = channels.at(Edge{d->from, i});
            if (!chan.empty() && chan.front() == d->record) {
                chan.pop_front();
                locals[i].append(round, event::Received{d->from, d->record.payload});
                resolved.actions[i] = act::Receive{};
            } else {
                resolved.actions[i] = act::Bottom{};
            }
        }
    }
    for (ProcessId i = 0; i < config.n; ++i) {
        std::visit(overloaded{
                       [&](const env::Move&) {
                           const auto& action = ja.actions[i];
                           locals[i].append(round, event::Performed{action});
                           if (const auto* send = std::get_if<act::Send>(&action)) {
                               channels.at(Edge{i, send->to}).push_back(MessageRecord{send->payload, round});
                           }
                       },
                       [&](const env::Invoke& inv) { locals[i].append(round, event::Input{inv.input}); },
                       [](const auto&) {},
                   },
                   ja.env[i]);
    }
    return resolved;
}

} // namespace

// ---------------------------------------------------------------------------

SystemConfig SystemConfig::complete(std::uint32_t n, std::uint32_t f, std::string protocol)
{
    SystemConfig c;
    c.n = n;
    c.f = f;
    c.protocol = std::move(protocol);
    for (ProcessId i = 0; i < n; ++i) {
        for (ProcessId j = 0; j < n; ++j) {
            if (i != j) {
                c.net.push_back(Edge{i, j});
            }
        }
    }
    return c;
}

bool SystemConfig::has_edge(ProcessId from, ProcessId to) const
{
    return std::binary_search(net.begin(), net.end(), Edge{from, to});
}

std::vector<ProcessId> SystemConfig::out_neighbors(ProcessId p) const
{
    std::vector<ProcessId> out;
    for (const auto& e : net) {
        if (e.from == p) {
            out.push_back(e.to);
        }
    }
    return out;
}

void SystemConfig::check() const
{
    if (n < 1) {
        throw ConfigError("process count must be at least 1");
    }
    if (f >= n) {
        throw ConfigError("crash tolerance f=" + std::to_string(f) + " must be below n=" + std::to_string(n));
    }
    if (!std::is_sorted(net.begin(), net.end()) || std::adjacent_find(net.begin(), net.end()) != net.end()) {
        throw ConfigError("network edges must be sorted and unique");
    }
    for (const auto& e : net) {
        if (e.from >= n || e.to >= n || e.from == e.to) {
            throw ConfigError("invalid edge " + std::to_string(e.from) + "->" + std::to_string(e.to));
        }
    }
}

std::string_view to_string(OpKind kind) noexcept
{
    return kind == OpKind::Read ? "R" : "W";
}

bool is_protocol_action(const ProcessAction& a) noexcept
{
    return !std::holds_alternative<act::Bottom>(a) && !std::holds_alternative<act::Receive>(a);
}

JointAction JointAction::idle(std::uint32_t n)
{
    JointAction ja;
    ja.env.assign(n, env::Skip{});
    ja.actions.assign(n, act::Bottom{});
    return ja;
}

void LocalHistory::append(Time round, LocalEvent e)
{
    events.push_back(std::move(e));
    rounds.push_back(round);
}

bool LocalHistory::same_state(const LocalHistory& other) const
{
    return initial == other.initial && events == other.events;
}

bool LocalHistory::same_prefix(std::size_t len, const LocalHistory& other, std::size_t other_len) const
{
    return len == other_len && initial == other.initial && len <= events.size() && len <= other.events.size() &&
           std::equal(events.begin(), events.begin() + static_cast<std::ptrdiff_t>(len), other.events.begin());
}

bool Run::crashed_by(ProcessId p, Time round) const
{
    auto it = crashes.find(p);
    return it != crashes.end() && it->second < round;
}

GlobalState Run::initial_state() const
{
    GlobalState s;
    s.channels = empty_channels(config);
    s.locals = initial_locals(*this);
    return s;
}

Run Run::prefix(Time h) const
{
    Run out = *this;
    h = std::clamp<Time>(h, 0, horizon());
    out.rounds.resize(static_cast<std::size_t>(h));
    std::erase_if(out.crashes, [h](const auto& kv) { return kv.second > h; });
    out.quiescent = false;
    return out;
}

Run empty_run(SystemConfig config)
{
    Run r;
    r.initial.assign(config.n, std::string{});
    r.config = std::move(config);
    return r;
}

void advance(GlobalState& state, const JointAction& ja, const SystemConfig& config)
{
    const Time round = state.time() + 1;
    state.env_history.push_back(apply_round(state.channels, state.locals, ja, config, round));
}

GlobalState apply_transition(const GlobalState& state, const JointAction& ja, const SystemConfig& config)
{
    GlobalState next = state;
    advance(next, ja, config);
    return next;
}

std::vector<GlobalState> replay(const Run& run)
{
    std::vector<GlobalState> states;
    states.reserve(run.rounds.size() + 1);
    states.push_back(run.initial_state());
    for (const auto& ja : run.rounds) {
        GlobalState next = states.back();
        advance(next, ja, run.config);
        for (const auto& [p, c] : run.crashes) {
            if (c <= next.time()) {
                next.crashed.emplace(p, c);
            }
        }
        states.push_back(std::move(next));
    }
    return states;
}

std::string_view to_string(ViolationKind kind) noexcept
{
    switch (kind) {
    case ViolationKind::Malformed:
        return "malformed";
    case ViolationKind::IllegalAction:
        return "illegal-action";
    case ViolationKind::FifoViolation:
        return "fifo-violation";
    case ViolationKind::MovedAfterCrash:
        return "moved-after-crash";
    case ViolationKind::OverlappingInvoke:
        return "overlapping-invoke";
    }
    return "unknown";
}

ValidationReport validate_run(const Run& run, const Protocol& protocol)
{
    ValidationReport report;
    const auto& config = run.config;
    if (run.initial.size() != config.n) {
        report.violations.push_back({ViolationKind::Malformed, 0, 0, "initial values do not match n"});
        return report;
    }
    Channels channels = empty_channels(config);
    std::vector<LocalHistory> locals = initial_locals(run);
    std::vector<std::unique_ptr<ProcessBehavior>> behaviors;
    std::vector<bool> pending(config.n, false);
    for (ProcessId p = 0; p < config.n; ++p) {
        behaviors.push_back(protocol.start(p, run.initial[p]));
    }

    for (Time m = 1; m <= run.horizon(); ++m) {
        const auto& ja = run.rounds[static_cast<std::size_t>(m - 1)];
        if (ja.env.size() == config.n && ja.actions.size() == config.n) {
            for (ProcessId p = 0; p < config.n; ++p) {
                const bool moved = std::holds_alternative<env::Move>(ja.env[p]);
                const bool invoked = std::holds_alternative<env::Invoke>(ja.env[p]);
                if ((moved || invoked) && run.crashed_by(p, m)) {
                    report.violations.push_back({ViolationKind::MovedAfterCrash, m, p,
                                                 "scheduled after crash round " +
                                                     std::to_string(run.crashes.at(p))});
                }
                if (moved && is_protocol_action(ja.actions[p]) && !behaviors[p]->permits(ja.actions[p])) {
                    report.violations.push_back(
                        {ViolationKind::IllegalAction, m, p, "action not permitted by protocol"});
                }
                if (invoked && pending[p]) {
                    report.violations.push_back(
                        {ViolationKind::OverlappingInvoke, m, p, "invocation while an operation is pending"});
                }
            }
        }

        std::vector<std::size_t> before(config.n);
        for (ProcessId p = 0; p < config.n; ++p) {
            before[p] = locals[p].events.size();
        }
        JointAction resolved;
        try {
            resolved = apply_round(channels, locals, ja, config, m);
        } catch (const MalformedJointAction& e) {
            report.violations.push_back({ViolationKind::Malformed, m, 0, e.what()});
            return report;
        }
        for (ProcessId p = 0; p < config.n; ++p) {
            if (std::holds_alternative<env::Deliver>(ja.env[p]) && resolved.actions[p] != ja.actions[p]) {
                report.violations.push_back(
                    {ViolationKind::FifoViolation, m, p,
                     std::holds_alternative<act::Receive>(ja.actions[p])
                         ? "recorded delivery of a record that is not the channel head"
                         : "recorded a missed delivery of the channel head"});
            }
            for (std::size_t k = before[p]; k < locals[p].events.size(); ++k) {
                const auto& e = locals[p].events[k];
                behaviors[p]->observe(e);
                if (std::holds_alternative<event::Input>(e)) {
                    pending[p] = true;
                } else if (const auto* perf = std::get_if<event::Performed>(&e)) {
                    if (std::holds_alternative<act::Return>(perf->action)) {
                        pending[p] = false;
                    }
                }
            }
        }
    }
    return report;
}

RunFacts collect_facts(const Run& run)
{
    RunFacts facts;
    const auto& config = run.config;
    Channels channels = empty_channels(config);
    facts.locals = initial_locals(run);
    facts.length_at.assign(config.n, std::vector<std::size_t>{});
    for (auto& v : facts.length_at) {
        v.reserve(run.rounds.size() + 1);
        v.push_back(0);
    }
    std::map<std::pair<Edge, Time>, std::size_t> in_flight;

    for (Time m = 1; m <= run.horizon(); ++m) {
        const auto& ja = run.rounds[static_cast<std::size_t>(m - 1)];
        const JointAction resolved = apply_round(channels, facts.locals, ja, config, m);
        for (ProcessId p = 0; p < config.n; ++p) {
            if (const auto* d = std::get_if<env::Deliver>(&ja.env[p]);
                d && std::holds_alternative<act::Receive>(resolved.actions[p])) {
                auto it = in_flight.find({Edge{d->from, p}, d->record.send_round});
                facts.messages[it->second].delivered = m;
                in_flight.erase(it);
            }
        }
        for (ProcessId p = 0; p < config.n; ++p) {
            if (!std::holds_alternative<env::Move>(ja.env[p])) {
                continue;
            }
            if (const auto* send = std::get_if<act::Send>(&ja.actions[p])) {
                const Edge e{p, send->to};
                in_flight.emplace(std::make_pair(e, m), facts.messages.size());
                facts.messages.push_back(MessageFlow{e, MessageRecord{send->payload, m}, std::nullopt});
            }
        }
        for (ProcessId p = 0; p < config.n; ++p) {
            facts.length_at[p].push_back(facts.locals[p].events.size());
        }
    }
    facts.channels_at_horizon = std::move(channels);
    return facts;
}

std::vector<std::pair<Edge, MessageRecord>> lost_messages(const Run& run)
{
    std::vector<std::pair<Edge, MessageRecord>> lost;
    for (const auto& [edge, chan] : collect_facts(run).channels_at_horizon) {
        for (const auto& rec : chan) {
            lost.emplace_back(edge, rec);
        }
    }
    return lost;
}

} // namespace msgchain
