#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "agentool/protocol/types.hpp"

namespace agentool {

struct RewardConfig {
    double theta_par = 1.25;
    int theta_tool = 3;
    std::int64_t length_target = 12288;  // L_tar
    double cost_target = 8.0;            // C_tar
    std::int64_t length_max = 24576;     // L_max, must be 2 * L_tar
    double cost_max = 16.0;              // C_max, must be 2 * C_tar

    /// Config with the maxima derived from the targets.
    static RewardConfig with_targets(std::int64_t length_target, double cost_target);

    /// Throws std::invalid_argument on non-positive targets or maxima that
    /// are not twice their targets.
    void validate() const;
};

struct RewardBreakdown {
    double task = 0;
    double format = 0;
    double diversity = 0;
    double parallel = 0;  // R_par
    double tool = 0;      // R_tool
    double efficiency = 0;
    double length = 0;    // R_len
    double cost = 0;      // R_cost
    double total = 0;

    bool operator==(const RewardBreakdown&) const = default;
};

/// Trim, peel `$...$` and `\boxed{...}` wrappers until none is left, collapse whitespace.
std::string normalize_answer(std::string_view answer);

/// Throws std::invalid_argument for an empty ground truth.
double reward_task(const Trajectory& traj, std::string_view ground_truth);

/// The remaining rewards need at least one round (std::invalid_argument otherwise).
double reward_format(const Trajectory& traj);

/// Distinct tools in U(tau): names of calls that were actually dispatched,
/// final_answer excluded.
std::vector<std::string> used_tools(const Trajectory& traj);
/// Mean number of parsed call blocks per round.
double mean_parallelism(const Trajectory& traj);

double reward_parallel(const Trajectory& traj, const RewardConfig& cfg);
double reward_tool(const Trajectory& traj, const RewardConfig& cfg);
double reward_diversity(const Trajectory& traj, const RewardConfig& cfg);

/// Piecewise soft budget: 1 up to target, linear down to 0 at twice the target.
double soft_budget(double value, double target);
double reward_efficiency(const Trajectory& traj, const RewardConfig& cfg);

RewardBreakdown reward_total(const Trajectory& traj, std::string_view ground_truth, const RewardConfig& cfg);

/// Scores trajs[i] against truths[i]. The parallel version splits the batch
/// over OpenMP threads; both return identical results.
std::vector<RewardBreakdown> score_batch(const std::vector<Trajectory>& trajs, const std::vector<std::string>& truths,
                                         const RewardConfig& cfg);
std::vector<RewardBreakdown> score_batch_serial(const std::vector<Trajectory>& trajs,
                                                const std::vector<std::string>& truths, const RewardConfig& cfg);

Json to_json(const RewardBreakdown& r);

}  // namespace agentool
