#include <functional>
#include <future>
#include <sstream>
#include <stdexcept>

#include "agentool/protocol/manager_turn.hpp"
#include "agentool/tools/registry.hpp"

namespace agentool {

namespace {

const Json kAgentSchema = {
    {"type", "object"},
    {"properties",
     {{"subtask", {{"type", "string"}}}, {"model_id", {{"type", "string"}}}, {"model", {{"type", "string"}}}}},
    {"additionalProperties", false},
};

const Json kSearchSchema = {
    {"type", "object"},
    {"properties", {{"query_list", {{"type", "array"}, {"minItems", 1}, {"items", {{"type", "string"}}}}}}},
    {"required", {"query_list"}},
    {"additionalProperties", false},
};

const Json kPythonSchema = {
    {"type", "object"},
    {"properties", {{"code", {{"type", "string"}}}}},
    {"required", {"code"}},
    {"additionalProperties", false},
};

// ensemble_solver and final_answer take no parameters; whatever is passed is ignored
const Json kOpenSchema = {{"type", "object"}};

class FunctionAdapter final : public ToolAdapter {
public:
    using Fn = std::function<Observation(const ToolCallRequest&, const CallContext&)>;
    explicit FunctionAdapter(Fn fn) : fn_(std::move(fn)) {}
    Observation invoke(const ToolCallRequest& call, const CallContext& ctx) const override {
        try {
            return fn_(call, ctx);
        } catch (const std::exception& e) {
            return Observation::failure(Status::ExecErr, std::string("adapter error: ") + e.what());
        }
    }

private:
    Fn fn_;
};

std::string arg_string(const Json& args, const char* key) {
    auto it = args.find(key);
    if (it == args.end() || !it->is_string()) return {};
    return it->get<std::string>();
}

ChatRequest make_request(const ModelEndpoint& ep, const std::string& system, const std::string& user) {
    ChatRequest r;
    r.model = ep.model_id;
    r.temperature = ep.temperature;
    r.max_tokens = ep.max_tokens;
    r.messages = {{"system", system}, {"user", user}};
    return r;
}

std::string user_query(const std::string& subtask) { return "<user_query>\n" + subtask + "\n</user_query>"; }

std::string with_history(const std::string& history, const std::string& subtask) {
    return "<conversation_history>\n" + history + "\n</conversation_history>\n\n" + user_query(subtask);
}

std::string strip_code_fences(std::string code) {
    auto first = code.find("```");
    if (first == std::string::npos) return code;
    auto line_end = code.find('\n', first);
    auto last = code.rfind("```");
    if (line_end == std::string::npos || last <= line_end) return code;
    code = code.substr(line_end + 1, last - line_end - 1);
    while (!code.empty() && (code.back() == '\n' || code.back() == '\r')) code.pop_back();
    return code;
}

std::vector<std::string> parse_queries(const std::string& block) {
    std::vector<std::string> out;
    std::istringstream in(block);
    std::string line;
    while (std::getline(in, line)) {
        auto q = collapse_whitespace(line);
        if (q.empty() || q.front() == '#') continue;
        if (q.size() > 1 && (q.front() == '-' || q.front() == '*') && q[1] == ' ') q = q.substr(2);
        if (q.size() >= 2 && q.front() == '"' && q.back() == '"') q = q.substr(1, q.size() - 2);
        if (!q.empty()) out.push_back(q);
    }
    return out;
}

Observation from_chat_failure(const ChatResponse& r, double cost) {
    auto o = Observation::failure(r.status == Status::Timeout ? Status::Timeout : Status::ExecErr,
                                  "model call failed: " + r.diagnostic, cost);
    o.tool_tokens = r.total_tokens();
    return o;
}

Observation answer_tool(const ChatBackend& backend, const ChatRequest& req, Deadline deadline, double cost,
                        const char* value_key) {
    const auto resp = backend.complete(req, deadline);
    if (resp.status != Status::Ok) return from_chat_failure(resp, cost);
    auto answer = extract_last_tag(resp.text, "answer");
    if (!answer) {
        auto o = Observation::failure(Status::ExecErr, "malformed tool output: missing <answer> block", cost);
        o.tool_tokens = resp.total_tokens();
        return o;
    }
    Json value = {{"reasoning", extract_tag(resp.text, "reasoning").value_or("")}};
    if (std::string_view(value_key) == "answer") value["answer"] = extract_boxed(*answer).value_or(collapse_whitespace(*answer));
    else value[value_key] = collapse_whitespace(*answer);
    auto o = Observation::ok(std::move(value), cost);
    o.tool_tokens = resp.total_tokens();
    return o;
}

Observation run_code_reasoner(const ToolServices& s, const ModelEndpoint& ep, const ChatBackend& backend,
                              const std::string& subtask, Deadline deadline, double cost) {
    auto req = make_request(ep, s.prompts.code_reasoner, user_query(subtask));
    std::optional<Json> last;
    std::int64_t tokens = 0;
    auto finish = [&](Observation o) {
        o.tool_tokens = tokens;
        return o;
    };

    for (int iter = 1; iter <= s.code_reasoner_max_iterations; ++iter) {
        const auto resp = backend.complete(req, deadline);
        tokens += resp.total_tokens();
        if (resp.status != Status::Ok) {
            if (last) return finish(Observation::ok(*last, cost));
            return finish(from_chat_failure(resp, cost));
        }
        auto code = extract_last_tag(resp.text, "code");
        if (!code) {
            if (last) return finish(Observation::ok(*last, cost));
            return finish(Observation::failure(Status::ExecErr, "malformed tool output: missing <code> block", cost));
        }
        const auto script = strip_code_fences(*code);
        const auto run = s.sandbox->run(script, s.sandbox_timeout, deadline);
        if (run.status != Status::Ok)
            return finish(Observation::failure(run.status, "python subtool: " + run.diagnostic, cost));

        last = Json{{"code", script},
                    {"execution_result", run.stdout_text},
                    {"stderr", run.stderr_text},
                    {"exit_status", run.exit_status},
                    {"iterations", iter}};
        if (run.exit_status == 0 && run.stderr_text.empty()) break;

        req.messages.push_back({"assistant", resp.text});
        req.messages.push_back({"user", "<execution_result>\n" + run.stdout_text + run.stderr_text +
                                            "\n</execution_result>\nThe program failed. Fix the error and "
                                            "output the corrected code in the same format."});
    }
    return finish(Observation::ok(*last, cost));
}

Observation run_knowledge_searcher(const ToolServices& s, const ModelEndpoint& ep, const ChatBackend& backend,
                                   const std::string& subtask, Deadline deadline, double cost) {
    const auto resp = backend.complete(make_request(ep, s.prompts.knowledge_searcher, user_query(subtask)), deadline);
    if (resp.status != Status::Ok) return from_chat_failure(resp, cost);
    auto block = extract_last_tag(resp.text, "query");
    auto queries = block ? parse_queries(*block) : std::vector<std::string>{};
    if (queries.empty()) {
        auto o = Observation::failure(Status::ExecErr, "malformed tool output: no queries in <query> block", cost);
        o.tool_tokens = resp.total_tokens();
        return o;
    }
    auto found = invoke_search(s, queries, deadline);
    if (found.status != Status::Ok) {
        auto o = Observation::failure(found.status, "search subtool: " + found.diagnostic, cost);
        o.tool_tokens = resp.total_tokens();
        return o;
    }
    auto o = Observation::ok({{"queries", queries}, {"search_result", *found.value}}, cost);
    o.tool_tokens = resp.total_tokens();
    return o;
}

}  // namespace

Observation invoke_agent_tool(const ToolServices& services, const ToolSpec& spec, std::string subtask,
                              std::string model_id, const CallContext& ctx) {
    const double cost = spec.cost_units;
    if (Clock::now() >= ctx.deadline) return Observation::failure(Status::Timeout, "deadline expired", cost);
    if (subtask.empty()) subtask = ctx.question;
    if (model_id.empty()) model_id = services.pool->default_model();
    if (!services.pool->contains(model_id))
        return Observation::failure(Status::ExecErr, "unknown model_id '" + model_id + "'", cost);

    const auto& ep = services.pool->endpoint(model_id);
    const auto& backend = services.pool->backend(model_id);
    const auto& p = services.prompts;

    if (spec.name == "standard_reasoner")
        return answer_tool(backend, make_request(ep, p.standard_reasoner, user_query(subtask)), ctx.deadline, cost,
                           "answer");
    if (spec.name == "critical_reviewer")
        return answer_tool(backend, make_request(ep, p.critical_reviewer, with_history(ctx.history, subtask)),
                           ctx.deadline, cost, "review");
    if (spec.name == "code_reasoner") return run_code_reasoner(services, ep, backend, subtask, ctx.deadline, cost);
    if (spec.name == "knowledge_searcher")
        return run_knowledge_searcher(services, ep, backend, subtask, ctx.deadline, cost);
    if (spec.name == "final_answer") {
        auto o = invoke_final_answer(backend, ep, p, ctx.question, ctx.history, ctx.deadline);
        o.cost_units = cost;
        return o;
    }
    return Observation::failure(Status::ExecErr, "'" + spec.name + "' is not an agent tool", cost);
}

Observation invoke_search(const ToolServices& services, const std::vector<std::string>& query_list,
                          Deadline deadline) {
    if (query_list.empty()) return Observation::skipped("schema mismatch: query_list needs at least 1 item(s)");
    const auto limit = std::min(deadline, Clock::now() + services.retrieval_timeout);

    std::vector<std::future<SearchResponse>> pending;
    pending.reserve(query_list.size());
    for (const auto& q : query_list)
        pending.push_back(std::async(std::launch::async, [&services, &q, limit] {
            return services.retrieval->search(q, limit);
        }));

    std::string text;
    Status worst = Status::Ok;
    std::string diagnostic;
    for (std::size_t i = 0; i < pending.size(); ++i) {
        auto r = pending[i].get();
        if (r.status != Status::Ok) {
            if (worst != Status::Timeout) worst = r.status;
            if (diagnostic.empty()) diagnostic = "query '" + query_list[i] + "': " + r.diagnostic;
            continue;
        }
        if (!text.empty()) text += "\n";
        text += "query: " + query_list[i];
        for (const auto& p : r.passages) text += "\n" + p;
    }
    if (worst != Status::Ok) return Observation::failure(worst, diagnostic, 0.0);
    return Observation::ok(text, 0.0);
}

Observation invoke_python(const ToolServices& services, const std::string& code, Deadline deadline) {
    const auto r = services.sandbox->run(code, services.sandbox_timeout, deadline);
    if (r.status != Status::Ok) return Observation::failure(r.status, "sandbox: " + r.diagnostic, 0.0);
    return Observation::ok({{"stdout", r.stdout_text}, {"stderr", r.stderr_text}, {"exit_status", r.exit_status}},
                           0.0);
}

Observation invoke_ensemble(const ToolServices& services, const std::string& question, Deadline deadline) {
    const double cost = builtin_cost_table().at("ensemble_solver");
    const auto model = services.ensemble_model.empty() ? services.pool->default_model() : services.ensemble_model;
    if (!services.pool->contains(model))
        return Observation::failure(Status::ExecErr, "unknown ensemble model '" + model + "'", cost);
    const auto& ep = services.pool->endpoint(model);
    const auto& backend = services.pool->backend(model);
    const auto req = make_request(ep, services.prompts.standard_reasoner, user_query(question));

    std::vector<std::future<ChatResponse>> samples;
    for (int i = 0; i < services.ensemble_samples; ++i)
        samples.push_back(std::async(std::launch::async, [&] { return backend.complete(req, deadline); }));

    std::vector<std::string> answers;
    std::int64_t tokens = 0;
    bool timed_out = false;
    for (auto& f : samples) {
        const auto r = f.get();
        tokens += r.total_tokens();
        if (r.status == Status::Timeout) timed_out = true;
        if (r.status != Status::Ok) continue;
        auto block = extract_last_tag(r.text, "answer");
        auto boxed = extract_boxed(block ? *block : r.text);
        if (boxed) answers.push_back(*boxed);
    }

    auto vote = majority_vote(answers);
    if (!vote) {
        auto o = Observation::failure(timed_out ? Status::Timeout : Status::ExecErr,
                                      "all " + std::to_string(services.ensemble_samples) + " samples failed", cost);
        o.tool_tokens = tokens;
        return o;
    }
    Json distribution = Json::object();
    for (const auto& a : answers) distribution[a] = distribution.value(a, 0) + 1;
    auto o = Observation::ok({{"answer", vote->answer},
                              {"votes", vote->count},
                              {"samples", services.ensemble_samples},
                              {"distribution", distribution}},
                             cost);
    o.tool_tokens = tokens;
    return o;
}

Observation invoke_final_answer(const ChatBackend& backend, const ModelEndpoint& endpoint, const PromptSet& prompts,
                                const std::string& question, const std::string& history, Deadline deadline) {
    const double cost = builtin_cost_table().at("final_answer");
    auto user = with_history(history, question) + "\n\n" + prompts.termination_instruction;
    const auto resp = backend.complete(make_request(endpoint, prompts.final_answer, user), deadline);
    if (resp.status != Status::Ok) return from_chat_failure(resp, cost);
    auto block = extract_last_tag(resp.text, "answer");
    auto boxed = extract_boxed(block ? *block : resp.text);
    if (!boxed) {
        auto o = Observation::failure(Status::ExecErr, "summarizer returned no boxed answer", cost);
        o.tool_tokens = resp.total_tokens();
        return o;
    }
    auto o = Observation::ok({{"answer", *boxed}, {"reasoning", extract_tag(resp.text, "reasoning").value_or("")}},
                             cost);
    o.tool_tokens = resp.total_tokens();
    return o;
}

ToolRegistry register_builtin_tools(const ToolServices& services) {
    if (!services.pool || services.pool->empty()) throw std::invalid_argument("tool pool: no model endpoints configured");
    if (services.pool->default_model().empty() || !services.pool->contains(services.pool->default_model()))
        throw std::invalid_argument("tool pool: default model is missing from the pool");
    if (!services.retrieval) throw std::invalid_argument("tool pool: no retrieval service");
    if (!services.sandbox) throw std::invalid_argument("tool pool: no sandbox service");

    const auto& costs = builtin_cost_table();
    auto s = std::make_shared<const ToolServices>(services);
    std::vector<RegisteredTool> tools;

    auto agent = [&](const std::string& name, const std::string& description, std::optional<std::string> subtool,
                     ToolKind kind) {
        ToolSpec spec{name, description, kAgentSchema, std::move(subtool), costs.at(name), kind, s->model_timeout};
        auto adapter = std::make_shared<FunctionAdapter>([s, spec](const ToolCallRequest& call, const CallContext& ctx) {
            auto model = arg_string(call.arguments, "model_id");
            if (model.empty()) model = arg_string(call.arguments, "model");
            return invoke_agent_tool(*s, spec, arg_string(call.arguments, "subtask"), model, ctx);
        });
        tools.push_back({std::move(spec), std::move(adapter)});
    };

    agent("standard_reasoner", "General logic reasoning", std::nullopt, ToolKind::ModelBacked);
    agent("critical_reviewer", "Consistency and fact checker", std::nullopt, ToolKind::ModelBacked);
    agent("knowledge_searcher", "Fact retrieval with the search tool", "search", ToolKind::ModelBacked);

    tools.push_back({ToolSpec{"search", "Wiki search for the subtask", kSearchSchema, std::nullopt, costs.at("search"),
                              ToolKind::Retrieval, s->retrieval_timeout},
                     std::make_shared<FunctionAdapter>([s](const ToolCallRequest& call, const CallContext& ctx) {
                         return invoke_search(*s, call.arguments.at("query_list").get<std::vector<std::string>>(),
                                              ctx.deadline);
                     })});

    agent("code_reasoner", "Solve the problem using python code", "python", ToolKind::ModelBacked);

    tools.push_back({ToolSpec{"python", "Isolated python code execution in the sandbox", kPythonSchema, std::nullopt,
                              costs.at("python"), ToolKind::Sandbox, s->sandbox_timeout},
                     std::make_shared<FunctionAdapter>([s](const ToolCallRequest& call, const CallContext& ctx) {
                         return invoke_python(*s, call.arguments.at("code").get<std::string>(), ctx.deadline);
                     })});

    tools.push_back({ToolSpec{"ensemble_solver", "Multi-path reasoning aggregator", kOpenSchema, std::nullopt,
                              costs.at("ensemble_solver"), ToolKind::ModelBacked, s->model_timeout},
                     std::make_shared<FunctionAdapter>([s](const ToolCallRequest&, const CallContext& ctx) {
                         return invoke_ensemble(*s, ctx.question, ctx.deadline);
                     })});

    {
        ToolSpec spec{"final_answer", "End the reasoning and return the final answer", kOpenSchema, std::nullopt,
                      costs.at("final_answer"), ToolKind::Terminal, s->model_timeout};
        auto adapter = std::make_shared<FunctionAdapter>([s, spec](const ToolCallRequest&, const CallContext& ctx) {
            return invoke_agent_tool(*s, spec, {}, {}, ctx);
        });
        tools.push_back({std::move(spec), std::move(adapter)});
    }
    return ToolRegistry(std::move(tools));
}

}  // namespace agentool
