#pragma once

// Builders shared by the unit and acceptance tests.

#include <atomic>
#include <chrono>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "agentool/protocol/manager_turn.hpp"
#include "agentool/protocol/types.hpp"
#include "agentool/tools/registry.hpp"

namespace fixtures {

using namespace agentool;

inline ToolCallRequest call(std::string name, Json args = Json::object()) { return {std::move(name), std::move(args)}; }

/// A parsed, well-formed turn.
inline ManagerTurn turn(const std::string& reasoning, const std::vector<ToolCallRequest>& calls) {
    return parse_manager_turn(serialize_turn(reasoning, calls));
}

inline ManagerTurn malformed_turn(const std::string& raw = "no tags here") { return parse_manager_turn(raw); }

inline Observation ok(double cost = 1.0, Json value = "ok") { return Observation::ok(std::move(value), cost); }

inline Observation fail(Status s, double cost = 1.0) { return Observation::failure(s, "scripted failure", cost); }

/// Round whose observations are all OK at the registry cost of each tool.
RoundRecord ok_round(int index, const std::vector<ToolCallRequest>& calls);

/// Registry of the given names, each answering "<name>:<slot>" at cost 1
/// (plus `final_answer` when asked), with an invocation counter.
struct CountingRegistry {
    ToolRegistry registry;
    std::shared_ptr<std::atomic<int>> invocations = std::make_shared<std::atomic<int>>(0);
};
CountingRegistry counting_registry(const std::vector<std::string>& names, std::chrono::milliseconds delay = {});

/// Registry with every built-in tool backed by deterministic mocks.
ToolRegistry mock_builtin_registry();

/// Fresh empty directory under the system temp dir.
std::filesystem::path temp_dir(const std::string& tag);

/// Directory holding tests/data, set at build time.
std::filesystem::path data_dir();

}  // namespace fixtures
