#pragma once

#include <filesystem>
#include <iosfwd>
#include <vector>

#include "agentool/protocol/types.hpp"

namespace agentool {

Json to_json(const ToolCallRequest& call);
Json to_json(const Observation& obs);
Json to_json(const ManagerTurn& turn);
Json to_json(const RoundRecord& round);
Json to_json(const Trajectory& traj);
Json to_json(const LinearizedSequence& seq);

ToolCallRequest call_from_json(const Json& j);
Observation observation_from_json(const Json& j);
ManagerTurn turn_from_json(const Json& j);
RoundRecord round_from_json(const Json& j);
Trajectory trajectory_from_json(const Json& j);
LinearizedSequence sequence_from_json(const Json& j);

/// Reads a JSONL file; blank lines are skipped. Throws std::runtime_error
/// naming the file and line on unreadable input or malformed JSON.
std::vector<Json> read_jsonl(const std::filesystem::path& path);
void write_jsonl(const std::filesystem::path& path, const std::vector<Json>& records);
void write_jsonl_line(std::ostream& out, const Json& record);

std::vector<Trajectory> read_trajectories(const std::filesystem::path& path);
void write_trajectories(const std::filesystem::path& path, const std::vector<Trajectory>& trajs);

}  // namespace agentool
