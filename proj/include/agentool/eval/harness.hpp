#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "agentool/eval/config.hpp"
#include "agentool/orchestrator.hpp"

namespace agentool {

struct EvalItem {
    std::string question;
    std::string ground_truth;
};

/// Questions file: JSONL with a "question" field per line. Answers come from
/// the ground-truth file (JSONL with "answer", aligned by line) or, when that
/// path is empty, from an "answer" field in the questions file. Throws
/// std::runtime_error on unreadable or inconsistent inputs.
std::vector<EvalItem> load_eval_items(const std::filesystem::path& questions_file,
                                      const std::filesystem::path& ground_truth_file);

/// Ground truth for scoring: JSONL lines with "answer" and optionally
/// "question". Keyed by question text when every line names one.
struct GroundTruth {
    std::map<std::string, std::string> by_question;
    std::vector<std::string> by_position;

    static GroundTruth load(const std::filesystem::path& path);
    /// Answer for the i-th trajectory; throws std::runtime_error when missing.
    const std::string& lookup(const Trajectory& traj, std::size_t index) const;
};

/// Per-sample outcome schedule for the mock summarizer.
/// 1 correct, 0 wrong, -1 the policy fails hard.
using MockSchedule = std::map<std::string, std::vector<int>>;
MockSchedule load_mock_schedule(const std::filesystem::path& path);

/// Everything one episode needs besides the question.
struct EpisodeBackends {
    std::unique_ptr<PolicyBackend> policy;
    std::shared_ptr<const ChatBackend> summarizer;
};

/// Builds backends and the tool registry for a run.
class BackendFactory {
public:
    virtual ~BackendFactory() = default;
    virtual const ToolRegistry& registry() const = 0;
    virtual EpisodeBackends episode(const EvalItem& item, std::size_t question_index, int sample) const = 0;
};

/// Remote endpoints from the config. API keys are read from the environment
/// variables named by each endpoint.
std::unique_ptr<BackendFactory> make_remote_factory(const RuntimeConfig& cfg);

/// Deterministic mock wiring. Each (seed, question, sample) gets its own
/// generator; the mock manager calls a few tools and then final_answer, and
/// the mock summarizer answers right or wrong per the schedule or
/// mock.correct_rate.
std::unique_ptr<BackendFactory> make_mock_factory(const RuntimeConfig& cfg);

struct EpisodeResult {
    std::size_t question_index = 0;
    int sample = 0;
    Trajectory trajectory;
    int correct = 0;
    bool aborted = false;
};

struct EvalSummary {
    int k = 0;
    std::vector<EvalItem> items;
    /// results[q * k + s]
    std::vector<EpisodeResult> results;
    std::vector<double> per_question_mean;
    double mean_at_k = 0;
    std::size_t aborted = 0;

    Json to_json() const;
};

/// Runs k episodes per item. Episodes run on up to
/// cfg.eval.episode_parallelism OpenMP threads; results do not depend on it.
/// An aborted episode counts as incorrect.
EvalSummary run_episodes(const std::vector<EvalItem>& items, const BackendFactory& factory, const RuntimeConfig& cfg);
/// Serial reference for run_episodes.
EvalSummary run_episodes_serial(const std::vector<EvalItem>& items, const BackendFactory& factory,
                                const RuntimeConfig& cfg);

/// Writes trajectories.jsonl (ordered by question, then sample) and
/// summary.json into `dir`.
void write_eval_outputs(const std::filesystem::path& dir, const EvalSummary& summary);

/// Loads the inputs, runs every episode and writes trajectories.jsonl and
/// summary.json to cfg.eval.output_dir.
EvalSummary run_eval(const RuntimeConfig& cfg);

}  // namespace agentool
