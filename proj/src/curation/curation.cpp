#include "agentool/curation.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <numeric>
#include <set>
#include <stdexcept>

#include "agentool/protocol/manager_turn.hpp"

namespace agentool {

void SampledInstance::check() const {
    if (trajectories.size() != correctness.size())
        throw std::invalid_argument("instance '" + question + "': " + std::to_string(trajectories.size()) +
                                    " trajectories but " + std::to_string(correctness.size()) + " correctness labels");
}

void CurationConfig::validate() const {
    if (samples_per_instance < 2) throw std::invalid_argument("curation.samples_per_instance must be >= 2");
    if (!(balance_cap > 0 && balance_cap <= 1)) throw std::invalid_argument("curation.balance_cap must be in (0,1]");
    if (tool_count < 1) throw std::invalid_argument("curation.tool_count must be >= 1");
    if (balance_cap * tool_count < 1) throw std::invalid_argument("curation.balance_cap * tool_count must be >= 1");
    if (dedup_key != "casefold_ws") throw std::invalid_argument("curation.dedup_key: unknown key '" + dedup_key + "'");
}

std::vector<SampledInstance> filter_rl_instances(const std::vector<SampledInstance>& instances,
                                                 const CurationConfig& cfg) {
    std::vector<SampledInstance> out;
    for (const auto& inst : instances) {
        inst.check();
        const int correct = std::accumulate(inst.correctness.begin(), inst.correctness.end(), 0);
        if (correct >= 1 && correct <= cfg.samples_per_instance - 1) out.push_back(inst);
    }
    return out;
}

bool has_recovery(const Trajectory& traj) {
    bool failed = false;
    for (const auto& r : traj.rounds) {
        const bool all_ok = !r.observations.empty() &&
                            std::all_of(r.observations.begin(), r.observations.end(),
                                        [](const Observation& o) { return o.status == Status::Ok; });
        if (failed && all_ok) return true;
        if (!all_ok && !r.observations.empty()) failed = true;
    }
    return false;
}

bool higher_priority(const Trajectory& a, const Trajectory& b) {
    const bool ra = has_recovery(a), rb = has_recovery(b);
    if (ra != rb) return ra;
    if (a.rounds.size() != b.rounds.size()) return a.rounds.size() < b.rounds.size();
    return a.total_cost < b.total_cost;
}

std::optional<Trajectory> select_sft_trajectory(const SampledInstance& instance) {
    instance.check();
    std::optional<std::size_t> best;
    for (std::size_t i = 0; i < instance.trajectories.size(); ++i) {
        if (!instance.correctness[i]) continue;
        if (!best || higher_priority(instance.trajectories[i], instance.trajectories[*best])) best = i;
    }
    if (!best) return std::nullopt;
    return instance.trajectories[*best];
}

std::string dominant_tool(const Trajectory& traj) {
    std::map<std::string, int> counts;
    for (const auto& r : traj.rounds)
        for (const auto& c : r.turn.calls)
            if (c.tool_name != kFinalAnswerTool) ++counts[c.tool_name];
    std::string best;
    int best_n = 0;
    for (const auto& [name, n] : counts)
        if (n > best_n) best = name, best_n = n;
    return best;
}

BalanceResult enforce_tool_balance(const std::vector<Trajectory>& selected, const CurationConfig& cfg) {
    cfg.validate();
    std::vector<std::string> label;
    for (const auto& t : selected) label.push_back(dominant_tool(t));
    std::vector<char> alive(selected.size(), 1);
    std::size_t retained = selected.size();

    BalanceResult res;
    for (;;) {
        std::map<std::string, std::vector<std::size_t>> classes;
        for (std::size_t i = 0; i < selected.size(); ++i)
            if (alive[i] && !label[i].empty()) classes[label[i]].push_back(i);

        // most over-represented class; map order breaks ties
        const std::vector<std::size_t>* worst = nullptr;
        for (const auto& [name, members] : classes) {
            if (members.size() <= 1) continue;
            if (static_cast<double>(members.size()) <= cfg.balance_cap * static_cast<double>(retained)) continue;
            if (!worst || members.size() > worst->size()) worst = &members;
        }
        if (!worst) break;

        // lowest priority member; later index loses ties
        std::size_t victim = worst->front();
        for (std::size_t i : *worst)
            if (!higher_priority(selected[i], selected[victim])) victim = i;
        alive[victim] = 0;
        --retained;
        res.dropped.push_back(victim);
    }
    for (std::size_t i = 0; i < selected.size(); ++i)
        if (alive[i]) res.kept.push_back(selected[i]);
    return res;
}

std::string normalize_question(std::string_view q) {
    std::string s = collapse_whitespace(q);
    for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

std::vector<std::string> dedup_against(const std::vector<std::string>& sft_questions,
                                       const std::vector<std::string>& rl_questions) {
    std::set<std::string> rl;
    for (const auto& q : rl_questions) rl.insert(normalize_question(q));
    std::vector<std::string> out;
    for (const auto& q : sft_questions)
        if (!rl.count(normalize_question(q))) out.push_back(q);
    return out;
}

}  // namespace agentool
