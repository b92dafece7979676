#pragma once

#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "agentool/executor.hpp"
#include "agentool/protocol/types.hpp"
#include "agentool/tools/prompts.hpp"
#include "agentool/tools/registry.hpp"
#include "agentool/tools/services.hpp"

namespace agentool {

struct OrchestratorConfig {
    int max_rounds = 12;                // H
    int max_parallel = 4;               // n_max
    int max_response_tokens = 24576;
    ModelEndpoint summarizer_endpoint;  // M_s
    PromptSet prompts = PromptSet::builtin();
    /// Adds tool-internal model tokens to L(tau) when set.
    bool count_tool_tokens = false;
    /// Off for deterministic mock runs; see ExecuteOptions::measure_elapsed.
    bool measure_elapsed = true;

    /// Throws std::invalid_argument naming the offending field.
    void validate() const;
};

struct RemainingBudget {
    int rounds_left = 0;
    std::int64_t tokens_left = 0;
};

/// s_t = (question, history, budget).
struct OrchestratorState {
    std::string question;
    std::vector<RoundRecord> history;
    RemainingBudget budget;
};

struct RenderedPrompt {
    std::string system;
    std::string user;

    /// The whole rendering as one text.
    std::string text() const { return system + "\n\n" + user; }
};

struct PolicyRequest {
    RenderedPrompt prompt;
    /// 1-based index of the round being generated.
    int round_index = 1;
};

struct PolicyReply {
    std::string text;
    std::int64_t prompt_tokens = 0;
    std::int64_t completion_tokens = 0;
};

/// Raised by a policy backend that could not produce a turn.
class PolicyFailure : public std::runtime_error {
public:
    PolicyFailure(const std::string& what, bool transient) : std::runtime_error(what), transient_(transient) {}
    bool transient() const { return transient_; }

private:
    bool transient_;
};

/// Raised by run_episode when the policy backend fails for good.
class EpisodeAborted : public std::runtime_error {
public:
    EpisodeAborted(const std::string& what, Trajectory partial)
        : std::runtime_error(what), partial_(std::move(partial)) {}
    const Trajectory& partial() const { return partial_; }

private:
    Trajectory partial_;
};

/// The manager. Implementations may throw PolicyFailure.
class PolicyBackend {
public:
    virtual ~PolicyBackend() = default;
    virtual PolicyReply generate(const PolicyRequest& request) = 0;
};

/// Manager served by a chat-completion endpoint.
class ChatPolicy final : public PolicyBackend {
public:
    ChatPolicy(std::shared_ptr<const ChatBackend> backend, ModelEndpoint endpoint);
    PolicyReply generate(const PolicyRequest& request) override;

private:
    std::shared_ptr<const ChatBackend> backend_;
    ModelEndpoint endpoint_;
};

/// Deterministic manager for tests and mock runs: the reply depends only on
/// the request. Token usage is counted with the whitespace tokenizer.
class ScriptedPolicy final : public PolicyBackend {
public:
    using Script = std::function<std::string(const PolicyRequest&)>;
    explicit ScriptedPolicy(Script script);
    /// turns[round_index - 1]; the last turn repeats once the list runs out.
    explicit ScriptedPolicy(std::vector<std::string> turns);

    PolicyReply generate(const PolicyRequest& request) override;
    int calls() const { return calls_; }

private:
    Script script_;
    int calls_ = 0;
};

/// Deterministic text of a state: manager system prompt, then the question,
/// every round with its observations, and the remaining-round note.
RenderedPrompt render_state(const OrchestratorState& state, const ToolRegistry& registry,
                            const PromptSet& prompts = PromptSet::builtin());

/// History block handed to the summarizer and to history-reading tools.
std::string render_history(const std::vector<RoundRecord>& rounds);

/// Runs the summarizer over the trajectory and records the boxed answer in
/// traj.final_answer (left empty when none comes back). Returns the
/// summarizer observation. Throws std::invalid_argument for a trajectory
/// without rounds.
Observation synthesize_final_answer(Trajectory& traj, const ChatBackend& summarizer, const OrchestratorConfig& cfg);

/// One episode of the multi-round loop. Throws EpisodeAborted when the
/// policy fails (one retry on transient failures); tool failures never abort.
Trajectory run_episode(const std::string& question, PolicyBackend& policy, const ToolRegistry& registry,
                       const ChatBackend& summarizer, const OrchestratorConfig& cfg);

}  // namespace agentool
