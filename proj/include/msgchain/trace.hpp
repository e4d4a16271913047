#pragma once

// JSON documents: traces, scenarios and reports.
//
// Every document carries a "schema" string. Objects are written with sorted
// keys (nlohmann's default map ordering), so equal runs serialize to equal
// bytes and digests are stable.
//
// Environment components:  {"k":"skip"} {"k":"move"} {"k":"invoke","op":"W","arg":"v"}
//                          {"k":"deliver","from":2,"payload":"...","sent":4}
// Process actions:         {"k":"bottom"} {"k":"noop"} {"k":"receive"}
//                          {"k":"send","to":1,"payload":"..."} {"k":"return","op":"R","arg":null}
//                          {"k":"local","tag":"...","args":"..."}
// Register values are strings; the default value is null.

#include "msgchain/model.hpp"
#include "msgchain/simulate.hpp"

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <string>

namespace msgchain {

using Json = nlohmann::json;

inline constexpr const char* kTraceSchema = "msgchain.trace/1";
inline constexpr const char* kScenarioSchema = "msgchain.scenario/1";
inline constexpr const char* kReportSchema = "msgchain.report/1";

struct Trace {
    Run run;
    std::optional<std::uint64_t> seed;
    std::optional<AdversarySpec> adversary;

    bool operator==(const Trace&) const = default;
};

Json to_json(const SystemConfig& config);
SystemConfig config_from_json(const Json& j);

Json to_json(const AdversarySpec& adversary);
AdversarySpec adversary_from_json(const Json& j);

Json to_json(const JointAction& ja);
JointAction joint_action_from_json(const Json& j);

Json to_json(const Run& run);
Run run_from_json(const Json& j);

Json to_json(const Trace& trace);
/// Throws ParseError on a malformed document or a wrong schema.
Trace trace_from_json(const Json& j);

/// Canonical text: sorted keys, no insignificant whitespace, trailing newline.
std::string canonical(const Json& j);

/// FNV-1a 64 over the canonical text, as 16 hex digits.
std::string digest(const Json& j);
std::string run_digest(const Run& run);

void save_json(const std::filesystem::path& path, const Json& j);
Json load_json(const std::filesystem::path& path);

void save_trace(const std::filesystem::path& path, const Trace& trace);
Trace load_trace(const std::filesystem::path& path);

} // namespace msgchain
