#include "msgchain/cli.hpp"

namespace msgchain {

namespace {

Json value_json(const std::optional<Value>& v)
{
    return v ? Json(*v) : Json(nullptr);
}

Json node_json(const Node& n)
{
    return Json{{"process", n.process}, {"time", n.time}};
}

Json history_json(const SequentialHistory& h)
{
    Json out = Json::array();
    for (const auto& e : h.entries) {
        out.push_back(Json{{"type", e.invocation ? "inv" : "res"},
                           {"op", e.op},
                           {"kind", std::string(to_string(e.kind))},
                           {"value", value_json(e.value)}});
    }
    return out;
}

} // namespace

Json to_json(const OperationInstance& op)
{
    return Json{{"id", op.id},
                {"process", op.process},
                {"kind", std::string(to_string(op.kind))},
                {"value", value_json(op.value)},
                {"start", node_json(op.start)},
                {"end", op.end ? node_json(*op.end) : Json(nullptr)},
                {"isolated", op.isolated}};
}

Json to_json(const PastFrontier& frontier)
{
    return Json{{"pivot", node_json(frontier.pivot)}, {"cut", frontier.cut}};
}

Json to_json(const ValidationReport& report)
{
    Json violations = Json::array();
    for (const auto& v : report.violations) {
        violations.push_back(Json{{"kind", std::string(to_string(v.kind))},
                                  {"round", v.round},
                                  {"process", v.process},
                                  {"detail", v.detail}});
    }
    return Json{{"ok", report.ok()}, {"violations", violations}};
}

Json to_json(const TransformCertificate& cert)
{
    Json j{{"source_digest", cert.source_digest},
           {"result_digest", cert.result_digest},
           {"pivot", node_json(cert.spec.pivot)},
           {"delta", cert.spec.delta},
           {"frontier", cert.spec.frontier.cut},
           {"correspondence", "time m at process j maps to m if m <= frontier[j], else m + delta"},
           {"source_horizon", cert.source_horizon},
           {"result_horizon", cert.result_horizon},
           {"horizon_convention", cert.horizon_convention},
           {"checks",
            {{"valid", cert.valid},
             {"locally_equivalent", cert.equivalent},
             {"states_match", cert.states_match},
             {"band_empty", cert.band_empty},
             {"deliveries_in_transit", cert.deliveries_in_transit}}},
           {"problems", cert.problems},
           {"passed", cert.passed()}};
    if (cert.reorder) {
        j["reorder"] = Json{{"x", cert.reorder->x},
                            {"y", cert.reorder->y},
                            {"y_before_x", cert.reorder->y_before_x},
                            {"qualifying", cert.reorder->qualifying},
                            {"failed", cert.reorder->failed}};
    }
    return j;
}

Json to_json(const LinearizationResult& result)
{
    Json j{{"verdict", result.linearizable ? "linearizable" : "not-linearizable"},
           {"stats",
            {{"operations", result.stats.operations},
             {"pending_writes", result.stats.pending_writes},
             {"states", result.stats.states}}}};
    if (result.witness) {
        j["witness"] = history_json(*result.witness);
    } else {
        j["evidence"] = Json{{"deepest_prefix", result.deepest_prefix}, {"blocked", result.blocked}};
    }
    return j;
}

Json to_json(const ChainViolation& v)
{
    Json j{{"rule", std::string(to_string(v.rule))}, {"x", v.x.empty() ? Json(nullptr) : Json(v.x)}, {"y", v.y}};
    if (!v.read.empty()) {
        j["read"] = v.read;
    }
    return j;
}

Json to_json(const AuditReport& report)
{
    Json ops = Json::array();
    for (const auto& q : report.operations) {
        ops.push_back(Json{{"op", q.op},
                           {"observers", q.observers},
                           {"witnesses", q.witnesses},
                           {"too_few_observers", q.too_few_observers},
                           {"too_few_witnesses", q.too_few_witnesses}});
    }
    Json chains = Json::array();
    for (const auto& v : report.chain_violations) {
        chains.push_back(to_json(v));
    }
    return Json{{"f", report.f},
                {"operations", ops},
                {"chain_violations", chains},
                {"quorum_clean", report.quorum_clean()},
                {"chains_clean", report.chains_clean()}};
}

Json to_json(const RefutationResult& result)
{
    Json j{{"verdict", to_json(result.verdict)},
           {"extended", result.extended},
           {"locally_equivalent", result.equivalent},
           {"valid", result.valid},
           {"liveness_failure", result.liveness_failure},
           {"note", result.note},
           {"run_digest", run_digest(result.run)}};
    j["certificate"] = result.certificate ? to_json(*result.certificate) : Json(nullptr);
    return j;
}

} // namespace msgchain
