#include "agentool/orchestrator.hpp"

#include <algorithm>

#include "agentool/protocol/linearize.hpp"
#include "agentool/protocol/manager_turn.hpp"

namespace agentool {

void OrchestratorConfig::validate() const {
    if (max_rounds < 1) throw std::invalid_argument("orchestrator.max_rounds must be >= 1");
    if (max_parallel < 1) throw std::invalid_argument("orchestrator.max_parallel must be >= 1");
    if (max_response_tokens < 1) throw std::invalid_argument("orchestrator.max_response_tokens must be >= 1");
    validate_endpoint(summarizer_endpoint);
}

ChatPolicy::ChatPolicy(std::shared_ptr<const ChatBackend> backend, ModelEndpoint endpoint)
    : backend_(std::move(backend)), endpoint_(std::move(endpoint)) {
    if (!backend_) throw std::invalid_argument("chat policy needs a backend");
    validate_endpoint(endpoint_);
}

PolicyReply ChatPolicy::generate(const PolicyRequest& request) {
    ChatRequest req;
    req.model = endpoint_.model_id;
    req.temperature = endpoint_.temperature;
    req.max_tokens = endpoint_.max_tokens;
    req.messages = {{"system", request.prompt.system}, {"user", request.prompt.user}};
    const auto resp = backend_->complete(req, Clock::now() + std::chrono::milliseconds(endpoint_.timeout_ms));
    if (resp.status != Status::Ok) throw PolicyFailure("policy backend: " + resp.diagnostic, resp.transient);
    return {resp.text, resp.prompt_tokens, resp.completion_tokens};
}

ScriptedPolicy::ScriptedPolicy(Script script) : script_(std::move(script)) {
    if (!script_) throw std::invalid_argument("scripted policy needs a script");
}

ScriptedPolicy::ScriptedPolicy(std::vector<std::string> turns) {
    if (turns.empty()) throw std::invalid_argument("scripted policy needs at least one turn");
    script_ = [turns = std::move(turns)](const PolicyRequest& r) {
        const auto i = std::min<std::size_t>(static_cast<std::size_t>(std::max(r.round_index, 1)) - 1, turns.size() - 1);
        return turns[i];
    };
}

PolicyReply ScriptedPolicy::generate(const PolicyRequest& request) {
    ++calls_;
    PolicyReply reply;
    reply.text = script_(request);
    reply.prompt_tokens = static_cast<std::int64_t>(whitespace_tokenize(request.prompt.text()).size());
    reply.completion_tokens = static_cast<std::int64_t>(whitespace_tokenize(reply.text).size());
    return reply;
}

std::string render_history(const std::vector<RoundRecord>& rounds) {
    std::string out;
    for (const auto& r : rounds) {
        if (!out.empty()) out += "\n\n";
        out += "<round index=" + std::to_string(r.round_index) + ">\n";
        out += r.turn.raw_text;
        out += "\n";
        out += render_round_observations(r);
        out += "\n</round>";
    }
    return out;
}

RenderedPrompt render_state(const OrchestratorState& state, const ToolRegistry& registry, const PromptSet& prompts) {
    RenderedPrompt p;
    p.system = prompts.manager;
    if (registry.size()) {
        p.system += "\n\n# Registered tools\n";
        for (const auto& t : registry.tools()) p.system += "- " + t.spec.name + "\n";
    }
    p.user = "<user_query>\n" + state.question + "\n</user_query>";
    if (!state.history.empty()) p.user += "\n\n" + render_history(state.history);
    p.user += "\n\nremaining rounds: " + std::to_string(state.budget.rounds_left);
    return p;
}

namespace {

Deadline summarizer_deadline(const OrchestratorConfig& cfg) {
    return Clock::now() + std::chrono::milliseconds(cfg.summarizer_endpoint.timeout_ms);
}

Observation run_summarizer(Trajectory& traj, const std::string& history, const ChatBackend& summarizer,
                           const OrchestratorConfig& cfg) {
    auto o = invoke_final_answer(summarizer, cfg.summarizer_endpoint, cfg.prompts, traj.question, history,
                                 summarizer_deadline(cfg));
    o.executed = true;
    if (o.status == Status::Ok && o.value && o.value->contains("answer"))
        traj.final_answer = (*o.value)["answer"].get<std::string>();
    else
        traj.final_answer.reset();
    return o;
}

PolicyReply generate_with_retry(PolicyBackend& policy, const PolicyRequest& req, Trajectory& traj) {
    for (int attempt = 0;; ++attempt) {
        try {
            return policy.generate(req);
        } catch (const PolicyFailure& e) {
            if (e.transient() && attempt == 0) continue;
            traj.error = e.what();
        } catch (const std::exception& e) {
            traj.error = std::string("policy backend: ") + e.what();
        }
        traj.recount();
        throw EpisodeAborted(*traj.error, traj);
    }
}

}  // namespace

Observation synthesize_final_answer(Trajectory& traj, const ChatBackend& summarizer, const OrchestratorConfig& cfg) {
    if (traj.rounds.empty()) throw std::invalid_argument("cannot synthesize an answer for a trajectory without rounds");
    return run_summarizer(traj, render_history(traj.rounds), summarizer, cfg);
}

Trajectory run_episode(const std::string& question, PolicyBackend& policy, const ToolRegistry& registry,
                       const ChatBackend& summarizer, const OrchestratorConfig& cfg) {
    if (question.empty()) throw std::invalid_argument("question must be non-empty");
    cfg.validate();

    Trajectory traj;
    traj.question = question;
    std::int64_t policy_tokens = 0;
    bool terminated = false;

    for (int t = 1; t <= cfg.max_rounds && !terminated; ++t) {
        OrchestratorState state{question, traj.rounds, {cfg.max_rounds - (t - 1), cfg.max_response_tokens - policy_tokens}};
        PolicyRequest req{render_state(state, registry, cfg.prompts), t};

        const auto reply = generate_with_retry(policy, req, traj);
        policy_tokens += reply.prompt_tokens + reply.completion_tokens;
        traj.total_tokens += reply.prompt_tokens + reply.completion_tokens;

        RoundRecord round;
        round.round_index = t;
        round.turn = parse_manager_turn(reply.text);
        const auto& calls = round.turn.calls;

        // The first final_answer inside the n_max budget terminates; any later one is dropped.
        std::optional<std::size_t> final_slot;
        ExecuteOptions opts;
        opts.parallel_limit = cfg.max_parallel;
        opts.max_calls = cfg.max_parallel;
        opts.measure_elapsed = cfg.measure_elapsed;
        for (std::size_t j = 0; j < calls.size() && static_cast<int>(j) < cfg.max_parallel; ++j) {
            if (calls[j].tool_name != kFinalAnswerTool) continue;
            if (!final_slot) {
                if (!registry.find(kFinalAnswerTool) ||
                    !validate_arguments(registry.find(kFinalAnswerTool)->parameter_schema, calls[j].arguments).empty())
                    continue;
                final_slot = j;
            }
            opts.deferred.push_back(j);
        }

        CallContext base;
        base.question = question;
        base.history = render_history(traj.rounds);
        base.round_index = t;
        round.observations = execute_round(registry, calls, opts, base);

        if (final_slot) {
            for (std::size_t j : opts.deferred)
                if (j != *final_slot) round.observations[j] = Observation::skipped("duplicate final_answer call");

            // Companion observations are visible to the summarizer; the final_answer slot itself is not.
            auto visible = traj.rounds;
            RoundRecord partial = round;
            partial.turn.calls.erase(partial.turn.calls.begin() + static_cast<std::ptrdiff_t>(*final_slot));
            partial.observations.erase(partial.observations.begin() + static_cast<std::ptrdiff_t>(*final_slot));
            visible.push_back(std::move(partial));

            auto o = run_summarizer(traj, render_history(visible), summarizer, cfg);
            o.cost_units = registry.find(kFinalAnswerTool)->cost_units;
            round.observations[*final_slot] = std::move(o);
            terminated = true;
        }
        traj.rounds.push_back(std::move(round));
    }

    if (!terminated) {
        traj.budget_forced = true;
        const auto o = synthesize_final_answer(traj, summarizer, cfg);
        if (cfg.count_tool_tokens) traj.total_tokens += o.tool_tokens;
    }
    if (cfg.count_tool_tokens)
        for (const auto& r : traj.rounds)
            for (const auto& o : r.observations) traj.total_tokens += o.tool_tokens;
    traj.recount();
    return traj;
}

}  // namespace agentool
