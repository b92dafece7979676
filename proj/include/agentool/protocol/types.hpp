#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace agentool {

using Json = nlohmann::json;

/// Execution status attached to every tool observation.
enum class Status { Ok, ParseErr, ExecErr, Timeout };

std::string_view to_string(Status s);
/// Throws std::invalid_argument for anything other than the four wire names.
Status status_from_string(std::string_view s);

inline constexpr std::string_view kFinalAnswerTool = "final_answer";

struct ToolCallRequest {
    std::string tool_name;
    Json arguments = Json::object();

    bool operator==(const ToolCallRequest&) const = default;
};

/// Result of a single tool call.
///
/// A non-OK observation never carries a result payload: `value` is empty and
/// `diagnostic` explains the failure. `executed` is false exactly when the
/// executor skipped the call (validation failed or the parallelism budget was
/// exhausted).
struct Observation {
    std::optional<Json> value;
    Status status = Status::Ok;
    std::string diagnostic;
    std::int64_t elapsed_ms = 0;
    double cost_units = 0.0;
    bool executed = true;
    /// Tokens consumed by model calls inside the tool (not part of L(tau) unless configured).
    std::int64_t tool_tokens = 0;

    bool operator==(const Observation&) const = default;

    static Observation ok(Json value, double cost = 0.0);
    static Observation failure(Status status, std::string diagnostic, double cost = 0.0);
    /// The skipped-call observation: no value, PARSE_ERR, nothing charged.
    static Observation skipped(std::string reason);
};

struct ManagerTurn {
    std::string raw_text;
    std::optional<std::string> reasoning;
    std::vector<ToolCallRequest> calls;
    bool well_formed = false;

    bool operator==(const ManagerTurn&) const = default;
};

struct RoundRecord {
    ManagerTurn turn;
    std::vector<Observation> observations;
    int round_index = 1;

    bool operator==(const RoundRecord&) const = default;
};

struct Trajectory {
    std::string question;
    std::vector<RoundRecord> rounds;
    std::optional<std::string> final_answer;
    int round_count = 0;
    std::int64_t total_tokens = 0;
    double total_cost = 0.0;
    /// Set when the round budget ran out before the manager terminated.
    bool budget_forced = false;
    /// Episode-level failure (policy backend), distinct from tool statuses.
    std::optional<std::string> error;

    bool operator==(const Trajectory&) const = default;

    /// Recomputes round_count and total_cost from the rounds.
    void recount();
};

/// Linearized training sequence with per-token supervision mask.
struct LinearizedSequence {
    std::vector<std::string> tokens;
    std::vector<std::uint8_t> mask;
    std::optional<std::vector<double>> logp_new;
    std::optional<std::vector<double>> logp_old;

    /// Throws std::invalid_argument when lengths disagree.
    void check_shape() const;
};

}  // namespace agentool
