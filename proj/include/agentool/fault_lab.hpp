#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "agentool/protocol/types.hpp"
#include "agentool/tools/registry.hpp"

namespace agentool {

struct FaultEntry {
    int round_index = 1;  // 1-based
    int slot = 1;         // 1-based call position in the turn
    Status status = Status::ExecErr;
};

struct FaultSchedule {
    std::vector<FaultEntry> entries;

    /// Throws std::invalid_argument for OK entries, indices outside
    /// [1, max_rounds] x [1, max_slots] or a repeated (round, slot).
    void validate(int max_rounds = 12, int max_slots = 4) const;
    /// Forced status for (round, slot), if scheduled.
    std::optional<Status> lookup(int round_index, int slot) const;

    /// {"entries": [{"round": r, "slot": s, "status": "EXEC_ERR"}, ...]}
    static FaultSchedule from_json(const Json& j);
    static FaultSchedule load(const std::filesystem::path& path);
    Json to_json() const;
};

/// Registry whose adapters return the scheduled status (without calling the
/// inner adapter) on scheduled slots and pass everything else through.
ToolRegistry wrap_registry(const ToolRegistry& registry, FaultSchedule schedule);

struct UsageReport {
    /// Percent of non-final tool calls per tool name.
    std::map<std::string, double> tool_share;
    /// Percent of model-backed agent calls per model id.
    std::map<std::string, double> model_share;
    std::size_t trajectories = 0;
    std::size_t tool_calls = 0;
    std::size_t model_calls = 0;
    double mean_rounds = 0;
    double mean_parallelism = 0;
    double mean_cost = 0;
    /// Share of trajectories that contain a failure followed by an all-OK round.
    double recovery_rate = 0;

    Json to_json() const;
};

/// Calls to agent tools without a model argument are attributed to
/// `default_model`. Throws std::invalid_argument for an empty input.
UsageReport usage_report(const std::vector<Trajectory>& trajs, const std::string& default_model = "default");

/// Horizontal bar chart of both share tables as a standalone SVG document.
std::string usage_svg(const UsageReport& report);

}  // namespace agentool
