#include "agentool/rewards.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

#include "agentool/protocol/manager_turn.hpp"

namespace agentool {

RewardConfig RewardConfig::with_targets(std::int64_t length_target, double cost_target) {
    RewardConfig c;
    c.length_target = length_target;
    c.cost_target = cost_target;
    c.length_max = 2 * length_target;
    c.cost_max = 2 * cost_target;
    return c;
}

void RewardConfig::validate() const {
    if (theta_par <= 0) throw std::invalid_argument("reward.theta_par must be positive");
    if (theta_tool < 0) throw std::invalid_argument("reward.theta_tool must be >= 0");
    if (length_target <= 0) throw std::invalid_argument("reward.length_target must be positive");
    if (cost_target <= 0) throw std::invalid_argument("reward.cost_target must be positive");
    if (length_max != 2 * length_target) throw std::invalid_argument("reward.length_max must equal 2 * length_target");
    if (cost_max != 2 * cost_target) throw std::invalid_argument("reward.cost_max must equal 2 * cost_target");
}

namespace {

std::string_view trim(std::string_view s) {
    constexpr std::string_view kWs = " \t\r\n\f\v";
    const auto b = s.find_first_not_of(kWs);
    if (b == std::string_view::npos) return {};
    return s.substr(b, s.find_last_not_of(kWs) - b + 1);
}

// Returns the inside of a single \boxed{...} spanning the whole text, if it does.
std::optional<std::string_view> unbox(std::string_view s) {
    constexpr std::string_view kOpen = "\\boxed{";
    if (!s.starts_with(kOpen) || !s.ends_with('}')) return std::nullopt;
    int depth = 0;
    for (std::size_t i = kOpen.size() - 1; i < s.size(); ++i) {
        if (s[i] == '{') ++depth;
        else if (s[i] == '}' && --depth == 0) {
            if (i != s.size() - 1) return std::nullopt;
            return s.substr(kOpen.size(), s.size() - kOpen.size() - 1);
        }
    }
    return std::nullopt;
}

void require_rounds(const Trajectory& traj) {
    if (traj.rounds.empty()) throw std::invalid_argument("reward needs a trajectory with at least one round");
}

}  // namespace

std::string normalize_answer(std::string_view answer) {
    std::string_view s = trim(answer);
    for (bool changed = true; changed;) {
        changed = false;
        if (s.size() >= 2 && s.front() == '$' && s.back() == '$') {
            s = trim(s.substr(1, s.size() - 2));
            changed = true;
        } else if (auto inner = unbox(s)) {
            s = trim(*inner);
            changed = true;
        }
    }
    return collapse_whitespace(s);
}

double reward_task(const Trajectory& traj, std::string_view ground_truth) {
    if (trim(ground_truth).empty()) throw std::invalid_argument("ground truth must be non-empty");
    if (!traj.final_answer) return 0.0;
    return normalize_answer(*traj.final_answer) == normalize_answer(ground_truth) ? 1.0 : 0.0;
}

double reward_format(const Trajectory& traj) {
    require_rounds(traj);
    double sum = 0;
    for (const auto& r : traj.rounds) sum += check_format(r.turn);
    return sum / static_cast<double>(traj.rounds.size());
}

std::vector<std::string> used_tools(const Trajectory& traj) {
    std::set<std::string> names;
    for (const auto& r : traj.rounds)
        for (std::size_t j = 0; j < r.turn.calls.size() && j < r.observations.size(); ++j)
            if (r.observations[j].executed && r.turn.calls[j].tool_name != kFinalAnswerTool)
                names.insert(r.turn.calls[j].tool_name);
    return {names.begin(), names.end()};
}

double mean_parallelism(const Trajectory& traj) {
    require_rounds(traj);
    std::size_t n = 0;
    for (const auto& r : traj.rounds) n += r.turn.calls.size();
    return static_cast<double>(n) / static_cast<double>(traj.rounds.size());
}

double reward_parallel(const Trajectory& traj, const RewardConfig& cfg) {
    return mean_parallelism(traj) >= cfg.theta_par ? 1.0 : 0.0;
}

double reward_tool(const Trajectory& traj, const RewardConfig& cfg) {
    require_rounds(traj);
    return static_cast<int>(used_tools(traj).size()) >= cfg.theta_tool ? 1.0 : 0.0;
}

double reward_diversity(const Trajectory& traj, const RewardConfig& cfg) {
    return 0.5 * (reward_parallel(traj, cfg) + reward_tool(traj, cfg));
}

double soft_budget(double value, double target) {
    if (value <= target) return 1.0;
    return std::max(0.0, (2 * target - value) / target);
}

double reward_efficiency(const Trajectory& traj, const RewardConfig& cfg) {
    return 0.5 * (soft_budget(static_cast<double>(traj.total_tokens), static_cast<double>(cfg.length_target)) +
                  soft_budget(traj.total_cost, cfg.cost_target));
}

RewardBreakdown reward_total(const Trajectory& traj, std::string_view ground_truth, const RewardConfig& cfg) {
    RewardBreakdown r;
    r.task = reward_task(traj, ground_truth);
    r.format = reward_format(traj);
    r.parallel = reward_parallel(traj, cfg);
    r.tool = reward_tool(traj, cfg);
    r.diversity = 0.5 * (r.parallel + r.tool);
    r.length = soft_budget(static_cast<double>(traj.total_tokens), static_cast<double>(cfg.length_target));
    r.cost = soft_budget(traj.total_cost, cfg.cost_target);
    r.efficiency = 0.5 * (r.length + r.cost);
    r.total = r.task + r.format + r.diversity + r.efficiency;
    return r;
}

namespace {

void check_batch(const std::vector<Trajectory>& trajs, const std::vector<std::string>& truths) {
    if (trajs.size() != truths.size())
        throw std::invalid_argument("score batch: " + std::to_string(trajs.size()) + " trajectories but " +
                                    std::to_string(truths.size()) + " ground truths");
    for (std::size_t i = 0; i < trajs.size(); ++i) {
        if (trim(truths[i]).empty()) throw std::invalid_argument("score batch: empty ground truth at " + std::to_string(i));
        if (trajs[i].rounds.empty()) throw std::invalid_argument("score batch: trajectory " + std::to_string(i) + " has no rounds");
    }
}

}  // namespace

std::vector<RewardBreakdown> score_batch_serial(const std::vector<Trajectory>& trajs,
                                                const std::vector<std::string>& truths, const RewardConfig& cfg) {
    check_batch(trajs, truths);
    std::vector<RewardBreakdown> out(trajs.size());
    for (std::size_t i = 0; i < trajs.size(); ++i) out[i] = reward_total(trajs[i], truths[i], cfg);
    return out;
}

std::vector<RewardBreakdown> score_batch(const std::vector<Trajectory>& trajs, const std::vector<std::string>& truths,
                                         const RewardConfig& cfg) {
    check_batch(trajs, truths);
    std::vector<RewardBreakdown> out(trajs.size());
    const auto n = static_cast<std::ptrdiff_t>(trajs.size());
#pragma omp parallel for schedule(dynamic, 16)
    for (std::ptrdiff_t i = 0; i < n; ++i) out[i] = reward_total(trajs[i], truths[i], cfg);
    return out;
}

Json to_json(const RewardBreakdown& r) {
    return {{"task", r.task},     {"format", r.format},         {"diversity", r.diversity},
            {"r_par", r.parallel}, {"r_tool", r.tool},          {"efficiency", r.efficiency},
            {"r_len", r.length},  {"r_cost", r.cost},           {"total", r.total}};
}

}  // namespace agentool
