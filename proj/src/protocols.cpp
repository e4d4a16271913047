#include "msgchain/protocols.hpp"

#include <algorithm>
#include <cctype>
#include <deque>
#include <sstream>

namespace msgchain {

namespace {

std::string encode_value(const std::optional<Value>& v)
{
    return v ? "=" + *v : std::string("_");
}

std::optional<Value> decode_value(const std::string& token)
{
    if (token == "_") {
        return std::nullopt;
    }
    return token.substr(1);
}

std::vector<std::string> tokens(const Bytes& payload)
{
    std::istringstream in(payload);
    std::vector<std::string> out;
    for (std::string t; in >> t;) {
        out.push_back(std::move(t));
    }
    return out;
}

std::string encode_tv(const TimestampedValue& tv)
{
    return std::to_string(tv.ts.counter) + " " + std::to_string(tv.ts.writer) + " " + encode_value(tv.value);
}

TimestampedValue decode_tv(const std::vector<std::string>& t, std::size_t at)
{
    return TimestampedValue{Timestamp{std::stoull(t.at(at)), static_cast<ProcessId>(std::stoul(t.at(at + 1)))},
                            decode_value(t.at(at + 2))};
}

struct Outgoing {
    ProcessId to;
    Bytes payload;
};

// State shared by both register behaviors: the local replica, the pending
// operation and the queue of messages still to be sent.
class RegisterBehavior : public ProcessBehavior {
public:
    RegisterBehavior(ProcessId self, std::vector<ProcessId> peers) : self_(self), peers_(std::move(peers)) {}

    bool permits(const ProcessAction& action) const override { return action == next(); }
    bool busy() const override { return op_.has_value(); }

    void observe(const LocalEvent& e) override
    {
        if (const auto* in = std::get_if<event::Input>(&e)) {
            on_invoke(in->input);
        } else if (const auto* rx = std::get_if<event::Received>(&e)) {
            // Payloads that do not parse are ignored.
            try {
                on_receive(rx->from, tokens(rx->payload));
            } catch (const std::logic_error&) {
            }
        } else {
            const auto& action = std::get<event::Performed>(e).action;
            // An illegal send (already reported by validation) may find the outbox empty.
            if (std::holds_alternative<act::Send>(action) && !outbox_.empty()) {
                outbox_.pop_front();
            } else if (std::holds_alternative<act::Return>(action)) {
                op_.reset();
            }
        }
    }

protected:
    struct PendingOp {
        Invocation input;
        std::optional<ProcessAction> ready; // the return action once the operation may complete
    };

    virtual void on_invoke(const Invocation& inv) = 0;
    virtual void on_receive(ProcessId from, const std::vector<std::string>& t) = 0;

    void adopt(const TimestampedValue& tv)
    {
        if (tv.ts > replica_.ts) {
            replica_ = tv;
        }
    }

    void broadcast(const std::string& payload)
    {
        for (ProcessId p : peers_) {
            outbox_.push_back(Outgoing{p, payload});
        }
    }

    ProcessId self_;
    std::vector<ProcessId> peers_;
    TimestampedValue replica_;
    std::optional<PendingOp> op_;
    std::deque<Outgoing> outbox_;
};

class AbdBehavior final : public RegisterBehavior {
public:
    AbdBehavior(ProcessId self, std::vector<ProcessId> peers, std::uint32_t quorum)
        : RegisterBehavior(self, std::move(peers)), quorum_(quorum)
    {
    }

    ProcessAction next() const override
    {
        if (op_ && op_->ready) {
            return *op_->ready;
        }
        if (!outbox_.empty()) {
            return act::Send{outbox_.front().payload, outbox_.front().to};
        }
        return act::NoOp{};
    }

    std::unique_ptr<ProcessBehavior> clone() const override { return std::make_unique<AbdBehavior>(*this); }

private:
    enum class Phase { Query, Update, Done };

    void on_invoke(const Invocation& inv) override
    {
        ++rid_;
        op_ = PendingOp{inv, std::nullopt};
        phase_ = Phase::Query;
        responses_ = 1;
        best_ = replica_;
        broadcast("Q " + std::to_string(rid_));
        maybe_finish_query();
    }

    void on_receive(ProcessId from, const std::vector<std::string>& t) override
    {
        if (t.empty()) {
            return;
        }
        const std::string& tag = t[0];
        if (tag == "Q") {
            outbox_.push_back(Outgoing{from, "QR " + t.at(1) + " " + encode_tv(replica_)});
        } else if (tag == "U") {
            adopt(decode_tv(t, 2));
            outbox_.push_back(Outgoing{from, "A " + t.at(1)});
        } else if (tag == "QR") {
            if (op_ && phase_ == Phase::Query && std::stoull(t.at(1)) == rid_) {
                ++responses_;
                best_ = std::max(best_, decode_tv(t, 2), [](const auto& a, const auto& b) { return a.ts < b.ts; });
                maybe_finish_query();
            }
        } else if (tag == "A") {
            if (op_ && phase_ == Phase::Update && std::stoull(t.at(1)) == rid_) {
                ++responses_;
                maybe_finish_update();
            }
        }
    }

    void maybe_finish_query()
    {
        if (responses_ < quorum_) {
            return;
        }
        TimestampedValue chosen = best_;
        if (op_->input.kind == OpKind::Write) {
            chosen = TimestampedValue{Timestamp{best_.ts.counter + 1, self_}, op_->input.arg};
        }
        adopt(chosen);
        chosen_ = chosen;
        phase_ = Phase::Update;
        responses_ = 1;
        broadcast("U " + std::to_string(rid_) + " " + encode_tv(chosen));
        maybe_finish_update();
    }

    void maybe_finish_update()
    {
        if (responses_ < quorum_) {
            return;
        }
        phase_ = Phase::Done;
        if (op_->input.kind == OpKind::Write) {
            op_->ready = act::Return{OpKind::Write, std::nullopt};
        } else {
            op_->ready = act::Return{OpKind::Read, chosen_.value};
        }
    }

    std::uint32_t quorum_;
    std::uint64_t rid_ = 0;
    Phase phase_ = Phase::Done;
    std::uint32_t responses_ = 0;
    TimestampedValue best_;
    TimestampedValue chosen_;
};

class BrokenBehavior final : public RegisterBehavior {
public:
    using RegisterBehavior::RegisterBehavior;

    ProcessAction next() const override
    {
        if (op_) {
            if (op_->input.kind == OpKind::Write) {
                return act::Return{OpKind::Write, std::nullopt};
            }
            return act::Return{OpKind::Read, replica_.value};
        }
        if (!outbox_.empty()) {
            return act::Send{outbox_.front().payload, outbox_.front().to};
        }
        return act::NoOp{};
    }

    void observe(const LocalEvent& e) override
    {
        const bool returning = std::holds_alternative<event::Performed>(e) &&
                               std::holds_alternative<act::Return>(std::get<event::Performed>(e).action);
        const bool was_write = op_ && op_->input.kind == OpKind::Write;
        RegisterBehavior::observe(e);
        if (returning && was_write) {
            broadcast("B " + encode_tv(replica_));
        }
    }

    std::unique_ptr<ProcessBehavior> clone() const override { return std::make_unique<BrokenBehavior>(*this); }

private:
    void on_invoke(const Invocation& inv) override
    {
        op_ = PendingOp{inv, std::nullopt};
        if (inv.kind == OpKind::Write) {
            replica_ = TimestampedValue{Timestamp{replica_.ts.counter + 1, self_}, inv.arg};
        }
    }

    void on_receive(ProcessId, const std::vector<std::string>& t) override
    {
        if (!t.empty() && t[0] == "B") {
            adopt(decode_tv(t, 1));
        }
    }
};

class AbdProtocol final : public Protocol {
public:
    explicit AbdProtocol(SystemConfig config) : config_(std::move(config)) {}
    std::string_view name() const override { return "abd"; }
    std::unique_ptr<ProcessBehavior> start(ProcessId self, std::string_view) const override
    {
        return std::make_unique<AbdBehavior>(self, config_.out_neighbors(self), config_.n - config_.f);
    }

private:
    SystemConfig config_;
};

class BrokenProtocol final : public Protocol {
public:
    explicit BrokenProtocol(SystemConfig config) : config_(std::move(config)) {}
    std::string_view name() const override { return "broken"; }
    std::unique_ptr<ProcessBehavior> start(ProcessId self, std::string_view) const override
    {
        return std::make_unique<BrokenBehavior>(self, config_.out_neighbors(self));
    }

private:
    SystemConfig config_;
};

} // namespace

std::unique_ptr<Protocol> abd_protocol(const SystemConfig& config)
{
    config.check();
    if (config.n < 2 * config.f + 1) {
        throw ConfigError("abd requires n >= 2f+1, got n=" + std::to_string(config.n) +
                          " f=" + std::to_string(config.f));
    }
    return std::make_unique<AbdProtocol>(config);
}

std::unique_ptr<Protocol> broken_protocol(const SystemConfig& config)
{
    config.check();
    return std::make_unique<BrokenProtocol>(config);
}

std::unique_ptr<Protocol> make_protocol(const SystemConfig& config)
{
    if (config.protocol == "abd") {
        return abd_protocol(config);
    }
    if (config.protocol == "broken") {
        return broken_protocol(config);
    }
    throw ConfigError("unknown protocol '" + config.protocol + "'");
}

bool is_encodable_value(std::string_view v) noexcept
{
    return std::none_of(v.begin(), v.end(), [](unsigned char c) { return std::isspace(c) != 0; });
}

} // namespace msgchain
