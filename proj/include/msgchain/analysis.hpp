#pragma once

// Audits of register runs against conditions every live linearizable
// register implementation must meet, and mechanical refutation of a failed
// condition: transform the run until no linearization exists.

#include "msgchain/causality.hpp"
#include "msgchain/linearizability.hpp"
#include "msgchain/operations.hpp"
#include "msgchain/transform.hpp"

#include <optional>
#include <string>
#include <vector>

namespace msgchain {

/// Processes reached by a chain from X.s by time t_{X.e}, including X's own.
/// Throws PendingOperation if X has not returned.
std::vector<ProcessId> observers(const CausalIndex& index, const OperationInstance& x);

/// Processes on some chain from X.s to X.e, including X's own.
/// Throws PendingOperation if X has not returned.
std::vector<ProcessId> witnesses(const CausalIndex& index, const OperationInstance& x);

struct QuorumFinding {
    std::string op;
    std::vector<ProcessId> observers;
    std::vector<ProcessId> witnesses;
    bool too_few_observers = false; // at most f
    bool too_few_witnesses = false; // at most f
};

enum class ChainRule : std::uint8_t {
    WriteToRead,      // a read of v is reached by a chain from W(v)
    ReadValueSource,  // for Rb not ~> Yb, every Xc <_r Rb with c != b reaches Yb
    Isolation,        // an isolated Yb is reached from every earlier Xa with a != b
};

std::string_view to_string(ChainRule rule) noexcept;

/// A missing chain `x` ~> `y`. For ReadValueSource, `read` is Rb.
/// For WriteToRead, `x` is empty when no write of the value exists.
struct ChainViolation {
    ChainRule rule;
    std::string x;
    std::string y;
    std::string read;
};

struct AuditReport {
    std::uint32_t f = 0;
    std::vector<QuorumFinding> operations; // completed operations only
    std::vector<ChainViolation> chain_violations;

    bool quorum_clean() const noexcept;
    bool chains_clean() const noexcept { return chain_violations.empty(); }
};

AuditReport audit_quorum(const Run& run, std::uint32_t f);
AuditReport audit_chains(const Run& run);
/// Both audits in one report.
AuditReport audit(const Run& run, std::uint32_t f);

struct RefutationResult {
    Run run;                     // the run the verdict is about
    LinearizationResult verdict;
    std::optional<TransformCertificate> certificate; // present when a reordering was applied
    bool extended = false;       // `run` continues a prefix of the input instead of rearranging it
    bool equivalent = false;     // `run` is locally equivalent to the input
    bool valid = false;          // `run` is a run of the protocol
    bool liveness_failure = false; // an operation the construction needed never returned
    std::string note;
};

/// Rebuilds the contradiction behind a chain violation:
///   WriteToRead:     move the read ahead of W(v)
///   ReadValueSource: move Yb ahead of Xc, giving Yb < Xc < Rb
///   Isolation:       cut the run after Yb, add a read at a correct process,
///                    then treat the new read as Rb
/// and checks the resulting run for a linearization.
///
/// Throws PreconditionFailed if the violation does not hold in `run`.
RefutationResult refute(const Run& run, const Protocol& protocol, const ChainViolation& violation,
                        LinearizationOptions options = {});

/// Refutes an operation with at most f witnesses: delay everything outside
/// past(X.e) so observers become witnesses, cut at X.e, crash the observers,
/// then write a fresh value and read it once everything else has settled.
///
/// Throws PreconditionFailed if X has more than f witnesses or the crash
/// budget does not allow crashing its observers.
RefutationResult refute_quorum(const Run& run, const Protocol& protocol, const std::string& op_id,
                               LinearizationOptions options = {});

} // namespace msgchain
