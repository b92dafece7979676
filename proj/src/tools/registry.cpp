#include "agentool/tools/registry.hpp"

#include <stdexcept>

namespace agentool {

std::chrono::milliseconds remaining(Deadline deadline) {
    const auto now = Clock::now();
    if (deadline <= now) return std::chrono::milliseconds{0};
    if (deadline == Clock::time_point::max()) return std::chrono::milliseconds{std::chrono::hours(24 * 365)};
    return std::chrono::duration_cast<std::chrono::milliseconds>(deadline - now);
}

std::string_view to_string(ToolKind kind) {
    switch (kind) {
        case ToolKind::ModelBacked: return "model_backed";
        case ToolKind::Sandbox: return "sandbox";
        case ToolKind::Retrieval: return "retrieval";
        case ToolKind::Terminal: return "terminal";
    }
    return "model_backed";
}

ToolRegistry::ToolRegistry(std::vector<RegisteredTool> tools) : tools_(std::move(tools)) {
    for (std::size_t i = 0; i < tools_.size(); ++i) {
        const auto& t = tools_[i];
        if (t.spec.name.empty()) throw std::invalid_argument("tool with empty name");
        if (!t.adapter) throw std::invalid_argument("tool '" + t.spec.name + "' has no adapter");
        if (t.spec.cost_units < 0) throw std::invalid_argument("tool '" + t.spec.name + "' has negative cost");
        if (!index_.emplace(t.spec.name, i).second)
            throw std::invalid_argument("duplicate tool '" + t.spec.name + "'");
    }
}

const ToolSpec* ToolRegistry::find(std::string_view name) const {
    auto it = index_.find(name);
    return it == index_.end() ? nullptr : &tools_[it->second].spec;
}

const ToolAdapter* ToolRegistry::adapter(std::string_view name) const {
    auto it = index_.find(name);
    return it == index_.end() ? nullptr : tools_[it->second].adapter.get();
}

std::shared_ptr<const ToolAdapter> ToolRegistry::shared_adapter(std::string_view name) const {
    auto it = index_.find(name);
    return it == index_.end() ? nullptr : tools_[it->second].adapter;
}

namespace {

bool type_matches(const std::string& type, const Json& v) {
    if (type == "string") return v.is_string();
    if (type == "array") return v.is_array();
    if (type == "object") return v.is_object();
    if (type == "number") return v.is_number();
    if (type == "integer") return v.is_number_integer();
    if (type == "boolean") return v.is_boolean();
    if (type == "null") return v.is_null();
    return true;
}

std::string check(const Json& schema, const Json& v, const std::string& where) {
    if (auto t = schema.find("type"); t != schema.end() && !type_matches(t->get<std::string>(), v))
        return "schema mismatch: " + where + " must be " + t->get<std::string>();

    if (v.is_array()) {
        if (auto m = schema.find("minItems"); m != schema.end() && v.size() < m->get<std::size_t>())
            return "schema mismatch: " + where + " needs at least " + std::to_string(m->get<std::size_t>()) +
                   " item(s)";
        if (auto items = schema.find("items"); items != schema.end()) {
            for (std::size_t i = 0; i < v.size(); ++i)
                if (auto r = check(*items, v[i], where + "[" + std::to_string(i) + "]"); !r.empty()) return r;
        }
    }

    if (v.is_object()) {
        const Json props = schema.value("properties", Json::object());
        for (const auto& req : schema.value("required", Json::array()))
            if (!v.contains(req.get<std::string>()))
                return "schema mismatch: missing required argument '" + req.get<std::string>() + "'";
        const bool open = schema.value("additionalProperties", true);
        for (const auto& [key, val] : v.items()) {
            auto p = props.find(key);
            if (p == props.end()) {
                if (!open) return "schema mismatch: unexpected argument '" + key + "'";
                continue;
            }
            if (auto r = check(*p, val, "'" + key + "'"); !r.empty()) return r;
        }
    }
    return {};
}

}  // namespace

std::string validate_arguments(const Json& schema, const Json& arguments) {
    if (!arguments.is_object()) return "schema mismatch: arguments must be an object";
    return check(schema, arguments, "arguments");
}

void validate_endpoint(const ModelEndpoint& ep) {
    if (ep.model_id.empty()) throw std::invalid_argument("model endpoint: model_id must be non-empty");
    if (ep.max_tokens <= 0) throw std::invalid_argument("model endpoint '" + ep.model_id + "': max_tokens must be positive");
    if (ep.temperature < 0) throw std::invalid_argument("model endpoint '" + ep.model_id + "': temperature must be >= 0");
    if (ep.timeout_ms <= 0) throw std::invalid_argument("model endpoint '" + ep.model_id + "': timeout_ms must be positive");
}

void ModelPool::add(ModelEndpoint endpoint, std::shared_ptr<const ChatBackend> backend) {
    validate_endpoint(endpoint);
    if (!backend) throw std::invalid_argument("model '" + endpoint.model_id + "' has no backend");
    auto id = endpoint.model_id;
    entries_.insert_or_assign(std::move(id), Entry{std::move(endpoint), std::move(backend)});
}

bool ModelPool::contains(std::string_view model_id) const { return entries_.find(model_id) != entries_.end(); }

const ModelEndpoint& ModelPool::endpoint(std::string_view model_id) const {
    auto it = entries_.find(model_id);
    if (it == entries_.end()) throw std::out_of_range("unknown model '" + std::string(model_id) + "'");
    return it->second.endpoint;
}

const ChatBackend& ModelPool::backend(std::string_view model_id) const {
    auto it = entries_.find(model_id);
    if (it == entries_.end()) throw std::out_of_range("unknown model '" + std::string(model_id) + "'");
    return *it->second.backend;
}

std::vector<std::string> ModelPool::model_ids() const {
    std::vector<std::string> ids;
    for (const auto& [id, _] : entries_) ids.push_back(id);
    return ids;
}

const std::map<std::string, double, std::less<>>& builtin_cost_table() {
    static const std::map<std::string, double, std::less<>> table = {
        {"standard_reasoner", 1.0}, {"critical_reviewer", 1.0}, {"knowledge_searcher", 1.0},
        {"search", 0.0},            {"code_reasoner", 1.0},     {"python", 0.0},
        {"ensemble_solver", 4.0},   {"final_answer", 1.0},
    };
    return table;
}

std::optional<Vote> majority_vote(const std::vector<std::string>& answers) {
    if (answers.empty()) return std::nullopt;
    std::map<std::string, int> counts;
    for (const auto& a : answers) ++counts[a];
    Vote best;
    // std::map iterates in lexicographic order, so strict '>' keeps the smallest on ties
    for (const auto& [answer, n] : counts)
        if (n > best.count) best = {answer, n};
    return best;
}

}  // namespace agentool
