#pragma once

// Run transformations that push activity outside a node's past into the future
// without any process noticing.

#include "msgchain/causality.hpp"
#include "msgchain/model.hpp"
#include "msgchain/operations.hpp"

#include <optional>
#include <string>
#include <vector>

namespace msgchain {

/// m if m <= t_j, else m + delta.
constexpr Time shift(Time m, Time t_j, Time delta) noexcept
{
    return m <= t_j ? m : m + delta;
}

struct ShiftSpec {
    Node pivot;
    Time delta = 1;
    PastFrontier frontier;

    /// Time in the delayed run of time `m` at process j.
    Time map(ProcessId j, Time m) const { return shift(m, frontier.cut.at(j), delta); }
};

/// Outcome of the real-time checks after moving X past Y.
struct ReorderCheck {
    std::string x;
    std::string y;
    bool y_before_x = false;              // Y <_{r'} X
    std::vector<std::string> qualifying;  // Z with X <_r Z and not Z ~> Y
    std::vector<std::string> failed;      // qualifying Z with not X <_{r'} Z

    bool ok() const noexcept { return y_before_x && failed.empty(); }
};

/// Evidence attached to every transformed run.
struct TransformCertificate {
    std::string source_digest;
    std::string result_digest;
    ShiftSpec spec;
    Time source_horizon = 0;
    Time result_horizon = 0;
    std::string horizon_convention = "result horizon = source horizon + delta; trailing rounds are Skip";

    bool valid = false;              // result passes validate_run
    bool equivalent = false;         // locally_equivalent(source, result)
    bool states_match = false;       // r'_j(shift(m)) = r_j(m) for every j and m <= source horizon
    bool band_empty = false;         // Skip at j for every round in (t_j, t_j + delta]
    bool deliveries_in_transit = false; // every delivered record was in its channel the round before
    std::vector<std::string> problems;

    std::optional<ReorderCheck> reorder;

    bool passed() const noexcept
    {
        return valid && equivalent && states_match && band_empty && deliveries_in_transit &&
               (!reorder || reorder->ok());
    }
};

struct Transformed {
    Run run;
    TransformCertificate certificate;
};

/// Delays everything outside past(pivot) by `delta` rounds.
///
/// Throws PreconditionFailed if the source is not a valid run of `protocol`,
/// the pivot lies outside it or delta < 1; ValidationFailure if the result
/// does not validate.
Transformed delay_future(const Run& run, const Protocol& protocol, Node pivot, Time delta);

/// Moves X to start after Y ends, using pivot Y.e and delay t_{Y.e} - t_{X.s} + 1.
///
/// Throws PreconditionFailed if Y is pending, X ~> Y, or X already starts after Y ends.
Transformed reorder_operations(const Run& run, const Protocol& protocol, const OperationInstance& x,
                               const OperationInstance& y);

} // namespace msgchain
