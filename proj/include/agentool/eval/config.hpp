#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "agentool/curation.hpp"
#include "agentool/orchestrator.hpp"
#include "agentool/rewards.hpp"
#include "agentool/rl_math.hpp"
#include "agentool/tools/registry.hpp"

namespace agentool {

enum class BackendMode { Remote, Mock };

struct EvalConfig {
    int k = 8;
    std::filesystem::path questions_file;
    /// Empty: answers are read from the questions file itself.
    std::filesystem::path ground_truth_file;
    BackendMode backend_mode = BackendMode::Mock;
    int episode_parallelism = 1;
    std::filesystem::path output_dir = "out";
    std::optional<std::uint64_t> seed;
};

struct ModelsConfig {
    /// Manager (policy) endpoint.
    ModelEndpoint manager{"http://localhost:8000/v1", "manager"};
    /// Tool model pool; the first entry is the default unless default_model is set.
    std::vector<ModelEndpoint> endpoints;
    std::string default_model;
    ModelEndpoint summarizer{"http://localhost:8001/v1", "summarizer"};
    /// Empty: the ensemble samples the default model.
    std::string ensemble_model;
};

struct ServicesConfig {
    std::string retrieval_url = "http://localhost:8100";
    int retrieval_topk = 3;
    std::string sandbox_url = "http://localhost:8200";
    int model_timeout_ms = 120'000;
    int sandbox_timeout_ms = 30'000;
    int retrieval_timeout_ms = 15'000;
    int ensemble_samples = 4;
    int code_reasoner_max_iterations = 3;
};

struct MockConfig {
    /// Chance that the mock summarizer returns the ground truth.
    double correct_rate = 1.0;
    /// JSONL {"question", "correct": [1, 0, -1, ...]} per sample; -1 aborts
    /// the episode through a policy failure. Takes precedence over correct_rate.
    std::filesystem::path schedule_file;
    /// Upper bound on tool rounds before the mock manager calls final_answer.
    int max_tool_rounds = 2;
};

/// Stage constants of the training runs. Documented defaults only; nothing
/// here trains a model.
struct TrainingConfig {
    int sft_train_batch_size = 32;
    int sft_max_length = 49152;
    int sft_total_steps = 200;
    double sft_learning_rate = 1e-5;
    std::string sft_lr_scheduler = "cosine";
    int rl_train_batch_size = 16;
    int rl_max_prompt_length = 24576;
    int rl_max_response_length = 24576;
    double rl_actor_learning_rate = 2e-6;
    int rl_mini_batch_size = 8;
    double rollout_temperature = 1.0;
    double rollout_top_p = 1.0;
    int rl_total_steps = 50;
};

struct RuntimeConfig {
    OrchestratorConfig orchestrator;
    RewardConfig reward;
    GrpoConfig grpo;
    CurationConfig curation;
    EvalConfig eval;
    ModelsConfig models;
    ServicesConfig services;
    MockConfig mock;
    TrainingConfig training;
    /// Directory with prompt overrides; empty means built-in prompts.
    std::filesystem::path prompts_dir;

    /// Checks every constant; throws std::invalid_argument naming the field.
    void validate() const;
    /// Every field, as loaded (prompt texts excluded).
    Json to_json() const;
};

/// Override map, "section.key" -> raw value text.
using Overrides = std::map<std::string, std::string>;

/// "section.key=value" strings, as passed with --set.
Overrides parse_overrides(const std::vector<std::string>& assignments);

/// AGENTOOL_<SECTION>__<KEY>=value entries of the process environment.
Overrides environment_overrides();

/// Defaults, then the YAML file (if any), then `env`, then `flags`. Relative
/// paths in the file resolve against the file's directory. Throws
/// std::invalid_argument naming the field on unknown keys, bad types or
/// violated invariants, std::runtime_error on an unreadable file.
RuntimeConfig load_config(const std::optional<std::filesystem::path>& path, const Overrides& env,
                          const Overrides& flags);

}  // namespace agentool
