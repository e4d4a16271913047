#pragma once

// Scenario-driven pipelines behind the `msgchain` command line tool.

#include "msgchain/analysis.hpp"
#include "msgchain/linearizability.hpp"
#include "msgchain/simulate.hpp"
#include "msgchain/trace.hpp"
#include "msgchain/transform.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace msgchain {

enum class Expectation : std::uint8_t { Linearizable, Violation };

std::string_view to_string(Expectation e) noexcept;
/// Throws ParseError unless `text` is "linearizable" or "violation".
Expectation parse_expectation(const std::string& text);

struct SeedRange {
    std::uint64_t first = 1;
    std::uint64_t last = 1;

    std::uint64_t count() const noexcept { return last - first + 1; }
};

/// "A..B" or a single seed. Throws ParseError.
SeedRange parse_seed_range(const std::string& text);

enum class Persist : std::uint8_t { All, Failures, None };

struct ScenarioSpec {
    std::string name = "scenario";
    SystemConfig config;
    AdversarySpec adversary;
    Time horizon = 40;
    SeedRange seeds;

    bool check_linearizability = true;
    bool check_audit = false;
    bool check_liveness = false; // quiescent runs must have no pending operation at a correct process
    bool refute = false;         // refute chain violations found by the audit
    std::optional<Expectation> expect;
    std::size_t max_operations = 12;
    Persist persist = Persist::All;
};

/// Throws ParseError (with the offending field) or ConstraintError.
ScenarioSpec parse_scenario(const Json& j);
ScenarioSpec load_scenario(const std::filesystem::path& path);
Json to_json(const ScenarioSpec& spec);

/// Everything checked for one seed.
struct SeedOutcome {
    std::uint64_t seed = 0;
    Run run;
    std::size_t operations = 0;
    std::size_t pending_at_correct = 0;
    std::optional<bool> linearizable; // empty when the history exceeds the search bound
    std::size_t aba_violations = 0;
    std::optional<AuditReport> audit;
    std::optional<RefutationResult> refutation;
    std::string refute_error;
    std::string error; // simulation error, if any

    /// Broke an assertion of a scenario that expects linearizable runs.
    bool failed(const ScenarioSpec& spec) const;
    /// Shows a violation with admissible evidence (used by expect=violation).
    bool exhibits_violation() const;
};

SeedOutcome evaluate_seed(const ScenarioSpec& spec, std::uint64_t seed);
/// Checks of `spec` applied to an existing run.
SeedOutcome evaluate_run(const ScenarioSpec& spec, Run run, std::uint64_t seed);

/// Runs `work(i)` for i in [0, count) on a pool of worker threads.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& work, unsigned threads = 0);

struct ScenarioReport {
    Json document;
    bool assertions_hold = true;
};

/// Simulates and checks every seed, persisting traces under `out_dir`.
ScenarioReport run_scenario(const ScenarioSpec& spec, const std::optional<std::filesystem::path>& out_dir);

/// Shrinks a failing run: horizon bisection, then removal of invocations
/// one at a time under the same adversary and seed, then bisection again.
/// `fails` must hold for `run`; it holds for the result.
Run shrink_run(const ScenarioSpec& spec, const Run& run, std::uint64_t seed,
               const std::function<bool(const Run&)>& fails);

/// Sweeps `budget` seeds from spec.seeds.first and shrinks failures.
ScenarioReport fuzz(const ScenarioSpec& spec, std::uint64_t budget, const std::optional<std::filesystem::path>& out_dir,
                    std::size_t max_counterexamples = 5);

// Report fragments.
Json to_json(const OperationInstance& op);
Json to_json(const PastFrontier& frontier);
Json to_json(const ValidationReport& report);
Json to_json(const TransformCertificate& cert);
Json to_json(const LinearizationResult& result);
Json to_json(const AuditReport& report);
Json to_json(const ChainViolation& v);
Json to_json(const RefutationResult& result);

/// Output directory: `flag` if given, else $MSGCHAIN_OUT_DIR, else ./msgchain-out.
std::filesystem::path output_dir(const std::optional<std::string>& flag);

int run_cli(int argc, char** argv);

} // namespace msgchain
