#pragma once

#include <chrono>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "agentool/protocol/types.hpp"
#include "agentool/tools/prompts.hpp"
#include "agentool/tools/services.hpp"

namespace agentool {

enum class ToolKind { ModelBacked, Sandbox, Retrieval, Terminal };

std::string_view to_string(ToolKind kind);

struct ToolSpec {
    std::string name;
    std::string description;
    /// JSON-schema subset understood by `validate_arguments`.
    Json parameter_schema;
    std::optional<std::string> subtool;
    double cost_units = 0.0;
    ToolKind kind = ToolKind::ModelBacked;
    std::chrono::milliseconds timeout{120'000};
};

/// What an adapter may know about the call besides its arguments.
struct CallContext {
    std::string question;
    /// Rendered history of earlier rounds, for tools that read it.
    std::string history;
    int round_index = 1;
    /// 1-based position of the call in its turn.
    int slot = 1;
    Deadline deadline = Clock::time_point::max();
};

/// Executes one tool. Implementations must be safe to call concurrently and
/// must report every failure through the returned Observation.
class ToolAdapter {
public:
    virtual ~ToolAdapter() = default;
    virtual Observation invoke(const ToolCallRequest& call, const CallContext& ctx) const = 0;
};

struct RegisteredTool {
    ToolSpec spec;
    std::shared_ptr<const ToolAdapter> adapter;
};

/// Immutable name -> (spec, adapter) table.
class ToolRegistry {
public:
    ToolRegistry() = default;
    /// Throws std::invalid_argument on duplicate names or a missing adapter.
    explicit ToolRegistry(std::vector<RegisteredTool> tools);

    const ToolSpec* find(std::string_view name) const;
    const ToolAdapter* adapter(std::string_view name) const;
    std::shared_ptr<const ToolAdapter> shared_adapter(std::string_view name) const;
    const std::vector<RegisteredTool>& tools() const { return tools_; }
    std::size_t size() const { return tools_.size(); }

private:
    std::vector<RegisteredTool> tools_;
    std::map<std::string, std::size_t, std::less<>> index_;
};

/// Empty string on success, otherwise a short reason ("schema mismatch: ...").
std::string validate_arguments(const Json& schema, const Json& arguments);

struct ModelEndpoint {
    std::string base_url;
    std::string model_id;
    int max_tokens = 24576;
    double temperature = 1.0;
    int timeout_ms = 120'000;
    /// Environment variable holding the bearer token, if any.
    std::string api_key_env = "OPENAI_API_KEY";
};

/// Throws std::invalid_argument naming the offending field.
void validate_endpoint(const ModelEndpoint& ep);

/// The model pool agent tools draw from.
class ModelPool {
public:
    void add(ModelEndpoint endpoint, std::shared_ptr<const ChatBackend> backend);
    void set_default(std::string model_id) { default_model_ = std::move(model_id); }

    const std::string& default_model() const { return default_model_; }
    bool empty() const { return entries_.empty(); }
    bool contains(std::string_view model_id) const;
    const ModelEndpoint& endpoint(std::string_view model_id) const;
    const ChatBackend& backend(std::string_view model_id) const;
    std::vector<std::string> model_ids() const;

private:
    struct Entry {
        ModelEndpoint endpoint;
        std::shared_ptr<const ChatBackend> backend;
    };
    std::map<std::string, Entry, std::less<>> entries_;
    std::string default_model_;
};

struct ToolServices {
    std::shared_ptr<const ModelPool> pool;
    std::shared_ptr<const RetrievalService> retrieval;
    std::shared_ptr<const SandboxService> sandbox;
    PromptSet prompts = PromptSet::builtin();
    /// Model for ensemble samples; empty means the pool default.
    std::string ensemble_model;
    int ensemble_samples = 4;
    int code_reasoner_max_iterations = 3;
    std::chrono::milliseconds model_timeout{120'000};
    std::chrono::milliseconds sandbox_timeout{30'000};
    std::chrono::milliseconds retrieval_timeout{15'000};
};

/// Built-in cost table, keyed by tool name.
const std::map<std::string, double, std::less<>>& builtin_cost_table();

/// The eight built-in tools. Throws std::invalid_argument when the pool is
/// empty, has no default model, or a service is missing.
ToolRegistry register_builtin_tools(const ToolServices& services);

// Adapter bodies, callable directly.

Observation invoke_agent_tool(const ToolServices& services, const ToolSpec& spec, std::string subtask,
                              std::string model_id, const CallContext& ctx);
Observation invoke_search(const ToolServices& services, const std::vector<std::string>& query_list,
                          Deadline deadline);
Observation invoke_python(const ToolServices& services, const std::string& code, Deadline deadline);
Observation invoke_ensemble(const ToolServices& services, const std::string& question, Deadline deadline);

/// Runs the summarizer prompt over a rendered history. Value holds
/// {"answer", "reasoning"}; EXEC_ERR when no boxed answer comes back.
Observation invoke_final_answer(const ChatBackend& backend, const ModelEndpoint& endpoint,
                                const PromptSet& prompts, const std::string& question,
                                const std::string& history, Deadline deadline);

/// Modal answer with the lexicographically smallest winner on ties.
struct Vote {
    std::string answer;
    int count = 0;
};
std::optional<Vote> majority_vote(const std::vector<std::string>& answers);

}  // namespace agentool
