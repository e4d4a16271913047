#include "msgchain/simulate.hpp"

#include <algorithm>

namespace msgchain {

namespace {

struct Draws {
    double deliver;
    std::uint64_t channel;
    double invoke;
    double kind;
    double move;
};

Draws draw(Rng& rng)
{
    Draws d{};
    d.deliver = rng.unit();
    d.channel = rng.next();
    d.invoke = rng.unit();
    d.kind = rng.unit();
    d.move = rng.unit();
    return d;
}

class Simulator {
public:
    Simulator(const Run& prefix, const Protocol& protocol, const AdversarySpec& adversary, std::uint64_t seed)
        : adv_(adversary), rng_(seed), run_(prefix)
    {
        const auto& config = run_.config;
        config.check();
        plan_crashes();
        for (ProcessId p = 0; p < config.n; ++p) {
            behaviors_.push_back(protocol.start(p, run_.initial.at(p)));
        }
        pending_.assign(config.n, false);
        invoked_.assign(config.n, 0);
        state_ = run_.initial_state();
        for (const auto& ja : prefix.rounds) {
            step(ja);
        }
        plan_ = adv_.invocations;
        for (const auto& inv : plan_) {
            if (inv.process >= config.n) {
                throw ConstraintError("planned invocation at unknown process " + std::to_string(inv.process));
            }
        }
        std::stable_sort(plan_.begin(), plan_.end(),
                         [](const auto& a, const auto& b) { return a.round < b.round; });
    }

    Run finish(Time horizon)
    {
        const auto& config = run_.config;
        bool settled = false;
        for (Time m = state_.time() + 1; m <= horizon; ++m) {
            drop_unreachable_plans(m);
            const bool quiet_now = quiet(m);
            if (adv_.quiesce && !settled && quiet_now && !more_invocations(m)) {
                settled = true;
            }
            if (settled) {
                step(JointAction::idle(config.n));
                continue;
            }
            JointAction ja = JointAction::idle(config.n);
            RoundInvocations invoked;
            for (ProcessId p = 0; p < config.n; ++p) {
                const Draws d = draw(rng_);
                if (run_.crashed_by(p, m)) {
                    continue;
                }
                if (auto deliver = choose_delivery(p, m, d)) {
                    ja.env[p] = *deliver;
                    ja.actions[p] = act::Receive{};
                    continue;
                }
                if (!pending_[p]) {
                    if (auto inv = choose_invocation(p, m, d, quiet_now, invoked)) {
                        ja.env[p] = env::Invoke{*inv};
                        continue;
                    }
                }
                if (should_move(p, m, d)) {
                    ja.env[p] = env::Move{};
                    ja.actions[p] = behaviors_[p]->next();
                }
            }
            step(ja);
        }
        drop_unreachable_plans(horizon + 1);
        run_.quiescent = quiet(horizon + 1) && !more_invocations(horizon + 1);
        run_.rounds = state_.env_history;
        return std::move(run_);
    }

private:
    void plan_crashes()
    {
        const auto& config = run_.config;
        const Time start = run_.horizon();
        for (const auto& c : adv_.crash_plan) {
            if (c.process >= config.n) {
                throw ConstraintError("crash plan names unknown process " + std::to_string(c.process));
            }
            if (!run_.crashes.emplace(c.process, c.round).second) {
                throw ConstraintError("process " + std::to_string(c.process) + " crashes twice");
            }
        }
        for (std::uint32_t k = 0; k < adv_.random_crashes; ++k) {
            std::vector<ProcessId> candidates;
            for (ProcessId p = 0; p < config.n; ++p) {
                if (!run_.crashes.contains(p)) {
                    candidates.push_back(p);
                }
            }
            if (candidates.empty()) {
                throw AdversaryExhausted("no process left to crash");
            }
            const ProcessId p = candidates[rng_.next() % candidates.size()];
            const Time window = std::max<Time>(adv_.crash_window, 1);
            run_.crashes.emplace(p, start + 1 + static_cast<Time>(rng_.next() % static_cast<std::uint64_t>(window)));
        }
        if (run_.crashes.size() > config.f) {
            throw AdversaryExhausted("adversary demands " + std::to_string(run_.crashes.size()) +
                                     " crashes but f=" + std::to_string(config.f));
        }
    }

    void step(const JointAction& ja)
    {
        const auto& config = run_.config;
        std::vector<std::size_t> before(config.n);
        for (ProcessId p = 0; p < config.n; ++p) {
            before[p] = state_.locals[p].events.size();
        }
        advance(state_, ja, config);
        for (ProcessId p = 0; p < config.n; ++p) {
            const auto& events = state_.locals[p].events;
            for (std::size_t k = before[p]; k < events.size(); ++k) {
                behaviors_[p]->observe(events[k]);
                if (std::holds_alternative<event::Input>(events[k])) {
                    pending_[p] = true;
                    ++invoked_[p];
                } else if (const auto* perf = std::get_if<event::Performed>(&events[k]);
                           perf && std::holds_alternative<act::Return>(perf->action)) {
                    pending_[p] = false;
                }
            }
        }
    }

    // In-channels of p whose head the adversary may deliver, in edge order.
    std::vector<Edge> deliverable(ProcessId p, Time m) const
    {
        std::vector<Edge> out;
        if (run_.crashed_by(p, m)) {
            return out;
        }
        for (const auto& [edge, chan] : state_.channels) {
            if (edge.to != p || chan.empty()) {
                continue;
            }
            if (adv_.drop_from_crashed && run_.crashed_by(edge.from, m)) {
                continue;
            }
            out.push_back(edge);
        }
        return out;
    }

    bool quiet(Time m) const
    {
        for (ProcessId p = 0; p < run_.config.n; ++p) {
            if (run_.crashed_by(p, m)) {
                continue;
            }
            if (pending_[p] || !std::holds_alternative<act::NoOp>(behaviors_[p]->next()) ||
                !deliverable(p, m).empty()) {
                return false;
            }
        }
        return true;
    }

    bool more_invocations(Time m) const
    {
        if (!plan_.empty()) {
            return true;
        }
        const bool window_open = adv_.invoke_until == 0 || m <= adv_.invoke_until;
        return adv_.invoke_prob > 0.0 && random_issued_ < adv_.max_random_ops && window_open;
    }

    void drop_unreachable_plans(Time m)
    {
        std::erase_if(plan_, [&](const auto& inv) { return run_.crashed_by(inv.process, m); });
    }

    std::optional<env::Deliver> choose_delivery(ProcessId p, Time m, const Draws& d) const
    {
        const auto candidates = deliverable(p, m);
        if (candidates.empty()) {
            return std::nullopt;
        }
        Edge chosen{};
        if (adv_.delivery == AdversarySpec::Delivery::Immediate) {
            chosen = *std::min_element(candidates.begin(), candidates.end(), [&](const Edge& a, const Edge& b) {
                return state_.channels.at(a).front().send_round < state_.channels.at(b).front().send_round;
            });
        } else {
            if (d.deliver >= adv_.deliver_prob) {
                return std::nullopt;
            }
            chosen = candidates[d.channel % candidates.size()];
        }
        return env::Deliver{state_.channels.at(chosen).front(), chosen.from};
    }

    Invocation make_invocation(ProcessId p, OpKind kind, std::optional<Value> value) const
    {
        if (kind == OpKind::Write && !value) {
            value = "v" + std::to_string(p) + "." + std::to_string(invoked_[p] + 1);
        }
        if (kind == OpKind::Read) {
            value.reset();
        }
        return Invocation{kind, std::move(value)};
    }

    // An after-quiet invocation is the only invocation of its round.
    struct RoundInvocations {
        bool any = false;
        bool exclusive = false;
    };

    std::optional<Invocation> choose_invocation(ProcessId p, Time m, const Draws& d, bool quiet_now,
                                                RoundInvocations& invoked)
    {
        if (invoked.exclusive) {
            return std::nullopt;
        }
        auto it = std::find_if(plan_.begin(), plan_.end(), [p](const auto& inv) { return inv.process == p; });
        if (it != plan_.end() && it->round <= m) {
            if (!it->after_quiet || (quiet_now && !invoked.any)) {
                invoked.any = true;
                invoked.exclusive = it->after_quiet;
                Invocation inv = make_invocation(p, it->kind, it->value);
                plan_.erase(it);
                return inv;
            }
            return std::nullopt;
        }
        const bool window_open = adv_.invoke_until == 0 || m <= adv_.invoke_until;
        if (window_open && random_issued_ < adv_.max_random_ops && d.invoke < adv_.invoke_prob) {
            ++random_issued_;
            invoked.any = true;
            return make_invocation(p, d.kind < adv_.read_ratio ? OpKind::Read : OpKind::Write, std::nullopt);
        }
        return std::nullopt;
    }

    bool should_move(ProcessId p, Time m, const Draws& d) const
    {
        const bool has_work = !std::holds_alternative<act::NoOp>(behaviors_[p]->next());
        if (!has_work && !adv_.idle_moves) {
            return false;
        }
        if (adv_.schedule == AdversarySpec::Schedule::RoundRobin) {
            return static_cast<ProcessId>((m - 1) % static_cast<Time>(run_.config.n)) == p;
        }
        return d.move < adv_.move_prob;
    }

    AdversarySpec adv_;
    Rng rng_;
    Run run_;
    GlobalState state_;
    std::vector<std::unique_ptr<ProcessBehavior>> behaviors_;
    std::vector<bool> pending_;
    std::vector<std::uint64_t> invoked_;
    std::vector<PlannedInvocation> plan_;
    std::uint32_t random_issued_ = 0;
};

} // namespace

Run simulate(const SystemConfig& config, const Protocol& protocol, const AdversarySpec& adversary, Time horizon,
             std::uint64_t seed)
{
    if (horizon < 1) {
        throw ConstraintError("horizon must be at least 1");
    }
    return extend_run(empty_run(config), protocol, adversary, horizon, seed);
}

Run extend_run(const Run& prefix, const Protocol& protocol, const AdversarySpec& adversary, Time horizon,
               std::uint64_t seed)
{
    if (horizon < prefix.horizon()) {
        throw ConstraintError("extension horizon is shorter than the prefix");
    }
    Simulator sim(prefix, protocol, adversary, seed);
    return sim.finish(horizon);
}

} // namespace msgchain
