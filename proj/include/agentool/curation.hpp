#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "agentool/protocol/types.hpp"

namespace agentool {

struct SampledInstance {
    std::string question;
    std::string ground_truth;
    std::vector<Trajectory> trajectories;
    std::vector<int> correctness;

    /// Throws std::invalid_argument when the lists are not aligned.
    void check() const;
};

struct CurationConfig {
    int samples_per_instance = 8;
    double balance_cap = 0.35;
    /// Only "casefold_ws" (case-fold plus whitespace collapse) is defined.
    std::string dedup_key = "casefold_ws";
    /// Number of non-final tools a trajectory can be labeled with.
    int tool_count = 7;

    /// Throws std::invalid_argument when the cap is outside (0,1] or
    /// balance_cap * tool_count < 1.
    void validate() const;
};

/// Keeps instances with a mixed outcome (1 <= correct <= samples - 1).
std::vector<SampledInstance> filter_rl_instances(const std::vector<SampledInstance>& instances,
                                                 const CurationConfig& cfg = {});

/// A round with a non-OK observation followed by a strictly later round
/// whose observations are all OK.
bool has_recovery(const Trajectory& traj);

/// Selection priority: true when a should be kept over b. Recovery first,
/// then fewer rounds, then lower cost.
bool higher_priority(const Trajectory& a, const Trajectory& b);

/// Best correct trajectory of an instance, or none. Ties keep the first index.
std::optional<Trajectory> select_sft_trajectory(const SampledInstance& instance);

/// Most-called non-final tool, lexicographically smallest on ties. Empty
/// when the trajectory called no other tool.
std::string dominant_tool(const Trajectory& traj);

struct BalanceResult {
    std::vector<Trajectory> kept;
    /// Input positions of dropped trajectories, in drop order.
    std::vector<std::size_t> dropped;
};

/// Drops the lowest-priority member of the most over-represented tool class
/// until every class with more than one member holds at most balance_cap of
/// the retained set. Trajectories without a dominant tool are never dropped.
BalanceResult enforce_tool_balance(const std::vector<Trajectory>& selected, const CurationConfig& cfg);

std::string normalize_question(std::string_view q);

/// SFT questions whose normalized form does not occur in the RL set.
std::vector<std::string> dedup_against(const std::vector<std::string>& sft_questions,
                                       const std::vector<std::string>& rl_questions);

}  // namespace agentool
