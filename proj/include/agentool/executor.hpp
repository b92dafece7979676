#pragma once

#include <span>
#include <string>
#include <vector>

#include "agentool/protocol/types.hpp"
#include "agentool/tools/registry.hpp"

namespace agentool {

/// nu_{t,j} per call plus the reason for every rejection (empty when valid).
struct ValidationReport {
    std::vector<int> per_call;
    std::vector<std::string> reasons;
};

/// Checks each call on its own: the tool must be registered and its
/// arguments must satisfy the tool's parameter schema.
ValidationReport validate(const ToolRegistry& registry, std::span<const ToolCallRequest> calls);

struct ExecuteOptions {
    /// Upper bound on calls in flight at once.
    int parallel_limit = 4;
    /// n_max. Slots past this get PARSE_ERR "parallelism budget exceeded".
    int max_calls = 4;
    /// When false, elapsed_ms is whatever the adapter reported (deterministic runs).
    bool measure_elapsed = true;
    /// Slots the caller handles itself. They are neither validated nor
    /// dispatched and come back as default observations.
    std::vector<std::size_t> deferred;
};

/// Runs one round's action set.
///
/// Valid calls run concurrently, each against its own deadline (the tool's
/// timeout, capped by `base.deadline`). Invalid calls are never dispatched
/// and come back as (no value, PARSE_ERR). The result is aligned with
/// `calls`; a failure in one slot never affects another. An empty call list
/// yields a single PARSE_ERR observation so the manager still gets feedback.
std::vector<Observation> execute_round(const ToolRegistry& registry, std::span<const ToolCallRequest> calls,
                                       const ExecuteOptions& options = {}, const CallContext& base = {});

}  // namespace agentool
