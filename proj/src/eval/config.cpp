#include "agentool/eval/config.hpp"

#include <charconv>
#include <cstdlib>
#include <set>
#include <stdexcept>

#include <yaml-cpp/yaml.h>

extern char** environ;

namespace agentool {

namespace {

Json endpoint_json(const ModelEndpoint& e) {
    return {{"base_url", e.base_url},       {"model_id", e.model_id}, {"max_tokens", e.max_tokens},
            {"temperature", e.temperature}, {"timeout_ms", e.timeout_ms}, {"api_key_env", e.api_key_env}};
}

const Json& endpoint_schema() {
    static const Json s = endpoint_json(ModelEndpoint{});
    return s;
}

std::string lower(std::string s) {
    for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

[[noreturn]] void bad(const std::string& field, const std::string& what) {
    throw std::invalid_argument("config field '" + field + "': " + what);
}

std::optional<std::int64_t> to_int(const std::string& s) {
    std::int64_t v{};
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) return std::nullopt;
    return v;
}

std::optional<double> to_double(const std::string& s) {
    if (s.empty()) return std::nullopt;
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end != s.c_str() + s.size()) return std::nullopt;
    return v;
}

// Converts scalar text to the JSON type of the default value at that field.
Json coerce_text(const std::string& text, const Json& schema, const std::string& field) {
    if (schema.is_string()) return text;
    if (schema.is_boolean()) {
        const auto t = lower(text);
        if (t == "true" || t == "yes" || t == "on" || t == "1") return true;
        if (t == "false" || t == "no" || t == "off" || t == "0") return false;
        bad(field, "expected a boolean, got '" + text + "'");
    }
    if (schema.is_number_integer()) {
        if (auto v = to_int(text)) return *v;
        bad(field, "expected an integer, got '" + text + "'");
    }
    if (schema.is_number()) {
        if (auto v = to_double(text)) return *v;
        bad(field, "expected a number, got '" + text + "'");
    }
    if (schema.is_null()) {  // optional integer (the seed)
        const auto t = lower(text);
        if (t.empty() || t == "null" || t == "~") return nullptr;
        if (auto v = to_int(text)) return *v;
        bad(field, "expected an integer or null, got '" + text + "'");
    }
    bad(field, "is a section, not a value");
}

Json coerce_yaml(const YAML::Node& node, const Json& schema, const std::string& field);

void merge_yaml(Json& target, const YAML::Node& node, const std::string& field) {
    if (!node.IsMap()) bad(field, "expected a mapping");
    for (const auto& kv : node) {
        const auto key = kv.first.as<std::string>();
        const auto sub = field.empty() ? key : field + "." + key;
        if (!target.contains(key)) bad(sub, "unknown key");
        if (target[key].is_object()) merge_yaml(target[key], kv.second, sub);
        else target[key] = coerce_yaml(kv.second, target[key], sub);
    }
}

Json coerce_yaml(const YAML::Node& node, const Json& schema, const std::string& field) {
    if (schema.is_array()) {  // list of endpoints
        if (node.IsNull()) return Json::array();
        if (!node.IsSequence()) bad(field, "expected a list");
        Json out = Json::array();
        for (std::size_t i = 0; i < node.size(); ++i) {
            Json item = endpoint_schema();
            merge_yaml(item, node[i], field + "[" + std::to_string(i) + "]");
            out.push_back(std::move(item));
        }
        return out;
    }
    if (schema.is_object()) {
        Json out = schema;
        merge_yaml(out, node, field);
        return out;
    }
    if (node.IsNull()) {
        if (schema.is_null() || schema.is_string()) return schema.is_null() ? Json(nullptr) : Json("");
        bad(field, "must not be empty");
    }
    if (!node.IsScalar()) bad(field, "expected a scalar");
    return coerce_text(node.Scalar(), schema, field);
}

void apply_override(Json& tree, const std::string& path, const std::string& value, std::set<std::string>& touched) {
    Json* cur = &tree;
    std::size_t start = 0;
    for (;;) {
        const auto dot = path.find('.', start);
        const auto key = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
        if (!cur->is_object() || !cur->contains(key)) bad(path, "unknown key");
        cur = &(*cur)[key];
        if (dot == std::string::npos) break;
        start = dot + 1;
    }
    if (cur->is_object()) bad(path, "is a section, not a value");
    if (cur->is_array()) *cur = coerce_yaml(YAML::Load(value), *cur, path);
    else *cur = coerce_text(value, *cur, path);
    touched.insert(path);
}

void touched_keys(const YAML::Node& node, const std::string& prefix, std::set<std::string>& out) {
    if (!node.IsMap()) return;
    for (const auto& kv : node) {
        const auto key = prefix.empty() ? kv.first.as<std::string>() : prefix + "." + kv.first.as<std::string>();
        out.insert(key);
        touched_keys(kv.second, key, out);
    }
}

template <class T>
T field(const Json& tree, const std::string& section, const std::string& key) {
    try {
        return tree.at(section).at(key).get<T>();
    } catch (const Json::exception&) {
        bad(section + "." + key, "has the wrong type");
    }
}

ModelEndpoint endpoint_from(const Json& j, const std::string& where) {
    try {
        ModelEndpoint e;
        e.base_url = j.at("base_url").get<std::string>();
        e.model_id = j.at("model_id").get<std::string>();
        e.max_tokens = j.at("max_tokens").get<int>();
        e.temperature = j.at("temperature").get<double>();
        e.timeout_ms = j.at("timeout_ms").get<int>();
        e.api_key_env = j.at("api_key_env").get<std::string>();
        return e;
    } catch (const Json::exception&) {
        bad(where, "malformed endpoint");
    }
}

std::string ratio_mode_name(RatioMode m) { return m == RatioMode::Sequence ? "sequence" : "per_token"; }

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
    if (p.empty() || base.empty()) return p;
    std::filesystem::path path(p);
    return path.is_absolute() ? path : base / path;
}

void positive(const std::string& f, double v) {
    if (!(v > 0)) bad(f, "must be positive");
}

}  // namespace

Json RuntimeConfig::to_json() const {
    Json endpoints = Json::array();
    for (const auto& e : models.endpoints) endpoints.push_back(endpoint_json(e));
    return {
        {"orchestrator",
         {{"max_rounds", orchestrator.max_rounds},
          {"max_parallel", orchestrator.max_parallel},
          {"max_response_tokens", orchestrator.max_response_tokens},
          {"count_tool_tokens", orchestrator.count_tool_tokens}}},
        {"reward",
         {{"theta_par", reward.theta_par},
          {"theta_tool", reward.theta_tool},
          {"length_target", reward.length_target},
          {"cost_target", reward.cost_target},
          {"length_max", reward.length_max},
          {"cost_max", reward.cost_max}}},
        {"grpo",
         {{"delta", grpo.delta},
          {"clip_low", grpo.clip_low},
          {"clip_high", grpo.clip_high},
          {"group_size", grpo.group_size},
          {"ratio_mode", ratio_mode_name(grpo.ratio_mode)}}},
        {"curation",
         {{"samples_per_instance", curation.samples_per_instance},
          {"balance_cap", curation.balance_cap},
          {"dedup_key", curation.dedup_key},
          {"tool_count", curation.tool_count}}},
        {"eval",
         {{"k", eval.k},
          {"questions_file", eval.questions_file.string()},
          {"ground_truth_file", eval.ground_truth_file.string()},
          {"backend_mode", eval.backend_mode == BackendMode::Mock ? "mock" : "remote"},
          {"episode_parallelism", eval.episode_parallelism},
          {"output_dir", eval.output_dir.string()},
          {"seed", eval.seed ? Json(*eval.seed) : Json(nullptr)}}},
        {"models",
         {{"manager", endpoint_json(models.manager)},
          {"endpoints", endpoints},
          {"default_model", models.default_model},
          {"summarizer", endpoint_json(models.summarizer)},
          {"ensemble_model", models.ensemble_model}}},
        {"services",
         {{"retrieval_url", services.retrieval_url},
          {"retrieval_topk", services.retrieval_topk},
          {"sandbox_url", services.sandbox_url},
          {"model_timeout_ms", services.model_timeout_ms},
          {"sandbox_timeout_ms", services.sandbox_timeout_ms},
          {"retrieval_timeout_ms", services.retrieval_timeout_ms},
          {"ensemble_samples", services.ensemble_samples},
          {"code_reasoner_max_iterations", services.code_reasoner_max_iterations}}},
        {"mock",
         {{"correct_rate", mock.correct_rate},
          {"schedule_file", mock.schedule_file.string()},
          {"max_tool_rounds", mock.max_tool_rounds}}},
        {"training",
         {{"sft_train_batch_size", training.sft_train_batch_size},
          {"sft_max_length", training.sft_max_length},
          {"sft_total_steps", training.sft_total_steps},
          {"sft_learning_rate", training.sft_learning_rate},
          {"sft_lr_scheduler", training.sft_lr_scheduler},
          {"rl_train_batch_size", training.rl_train_batch_size},
          {"rl_max_prompt_length", training.rl_max_prompt_length},
          {"rl_max_response_length", training.rl_max_response_length},
          {"rl_actor_learning_rate", training.rl_actor_learning_rate},
          {"rl_mini_batch_size", training.rl_mini_batch_size},
          {"rollout_temperature", training.rollout_temperature},
          {"rollout_top_p", training.rollout_top_p},
          {"rl_total_steps", training.rl_total_steps}}},
        {"prompts", {{"dir", prompts_dir.string()}}},
    };
}

void RuntimeConfig::validate() const {
    orchestrator.validate();
    reward.validate();
    grpo.validate();
    curation.validate();

    if (eval.k < 1) bad("eval.k", "must be >= 1");
    if (eval.episode_parallelism < 1) bad("eval.episode_parallelism", "must be >= 1");
    if (eval.backend_mode == BackendMode::Mock && !eval.seed) bad("eval.seed", "mock mode requires a seed");

    validate_endpoint(models.manager);
    validate_endpoint(models.summarizer);
    std::set<std::string> ids;
    for (const auto& e : models.endpoints) {
        validate_endpoint(e);
        if (!ids.insert(e.model_id).second) bad("models.endpoints", "duplicate model_id '" + e.model_id + "'");
    }
    if (eval.backend_mode == BackendMode::Remote && models.endpoints.empty())
        bad("models.endpoints", "remote mode needs at least one tool model");
    if (!models.default_model.empty() && !models.endpoints.empty() && !ids.count(models.default_model))
        bad("models.default_model", "'" + models.default_model + "' is not in models.endpoints");
    if (!models.ensemble_model.empty() && !models.endpoints.empty() && !ids.count(models.ensemble_model))
        bad("models.ensemble_model", "'" + models.ensemble_model + "' is not in models.endpoints");

    positive("services.retrieval_topk", services.retrieval_topk);
    positive("services.model_timeout_ms", services.model_timeout_ms);
    positive("services.sandbox_timeout_ms", services.sandbox_timeout_ms);
    positive("services.retrieval_timeout_ms", services.retrieval_timeout_ms);
    positive("services.ensemble_samples", services.ensemble_samples);
    positive("services.code_reasoner_max_iterations", services.code_reasoner_max_iterations);

    if (!(mock.correct_rate >= 0 && mock.correct_rate <= 1)) bad("mock.correct_rate", "must be in [0,1]");
    if (mock.max_tool_rounds < 0 || mock.max_tool_rounds >= orchestrator.max_rounds)
        bad("mock.max_tool_rounds", "must be in [0, orchestrator.max_rounds)");

    positive("training.sft_train_batch_size", training.sft_train_batch_size);
    positive("training.sft_max_length", training.sft_max_length);
    positive("training.sft_total_steps", training.sft_total_steps);
    positive("training.sft_learning_rate", training.sft_learning_rate);
    positive("training.rl_train_batch_size", training.rl_train_batch_size);
    positive("training.rl_max_prompt_length", training.rl_max_prompt_length);
    positive("training.rl_max_response_length", training.rl_max_response_length);
    positive("training.rl_actor_learning_rate", training.rl_actor_learning_rate);
    positive("training.rl_mini_batch_size", training.rl_mini_batch_size);
    if (training.rollout_temperature < 0) bad("training.rollout_temperature", "must be >= 0");
    if (!(training.rollout_top_p > 0 && training.rollout_top_p <= 1)) bad("training.rollout_top_p", "must be in (0,1]");
    positive("training.rl_total_steps", training.rl_total_steps);
}

Overrides parse_overrides(const std::vector<std::string>& assignments) {
    Overrides out;
    for (const auto& a : assignments) {
        const auto eq = a.find('=');
        if (eq == std::string::npos || eq == 0) throw std::invalid_argument("override '" + a + "' is not key=value");
        out[a.substr(0, eq)] = a.substr(eq + 1);
    }
    return out;
}

Overrides environment_overrides() {
    constexpr std::string_view kPrefix = "AGENTOOL_";
    Overrides out;
    for (char** e = environ; e && *e; ++e) {
        std::string_view entry(*e);
        if (!entry.starts_with(kPrefix)) continue;
        const auto eq = entry.find('=');
        if (eq == std::string_view::npos) continue;
        std::string name(entry.substr(kPrefix.size(), eq - kPrefix.size()));
        const auto sep = name.find("__");
        if (sep == std::string::npos) continue;
        std::string key = lower(name.substr(0, sep)) + "." + lower(name.substr(sep + 2));
        for (std::size_t p; (p = key.find("__")) != std::string::npos;) key.replace(p, 2, ".");
        out[key] = std::string(entry.substr(eq + 1));
    }
    return out;
}

RuntimeConfig load_config(const std::optional<std::filesystem::path>& path, const Overrides& env,
                          const Overrides& flags) {
    Json tree = RuntimeConfig{}.to_json();
    std::set<std::string> touched;
    std::filesystem::path base;

    if (path) {
        YAML::Node root;
        try {
            root = YAML::LoadFile(path->string());
        } catch (const YAML::BadFile&) {
            throw std::runtime_error("cannot read config file " + path->string());
        } catch (const YAML::Exception& e) {
            throw std::runtime_error(path->string() + ": " + e.what());
        }
        if (!root.IsNull()) {
            merge_yaml(tree, root, "");
            touched_keys(root, "", touched);
        }
        base = path->parent_path();
    }
    for (const auto& [k, v] : env) apply_override(tree, k, v, touched);
    for (const auto& [k, v] : flags) apply_override(tree, k, v, touched);

    RuntimeConfig c;
    auto& o = c.orchestrator;
    o.max_rounds = field<int>(tree, "orchestrator", "max_rounds");
    o.max_parallel = field<int>(tree, "orchestrator", "max_parallel");
    o.max_response_tokens = field<int>(tree, "orchestrator", "max_response_tokens");
    o.count_tool_tokens = field<bool>(tree, "orchestrator", "count_tool_tokens");

    auto& r = c.reward;
    r.theta_par = field<double>(tree, "reward", "theta_par");
    r.theta_tool = field<int>(tree, "reward", "theta_tool");
    r.length_target = field<std::int64_t>(tree, "reward", "length_target");
    r.cost_target = field<double>(tree, "reward", "cost_target");
    // maxima follow their targets unless given explicitly
    r.length_max = touched.count("reward.length_max") ? field<std::int64_t>(tree, "reward", "length_max")
                                                      : 2 * r.length_target;
    r.cost_max = touched.count("reward.cost_max") ? field<double>(tree, "reward", "cost_max") : 2 * r.cost_target;

    auto& g = c.grpo;
    g.delta = field<double>(tree, "grpo", "delta");
    g.clip_low = field<double>(tree, "grpo", "clip_low");
    g.clip_high = field<double>(tree, "grpo", "clip_high");
    g.group_size = field<int>(tree, "grpo", "group_size");
    const auto mode = field<std::string>(tree, "grpo", "ratio_mode");
    if (mode == "sequence") g.ratio_mode = RatioMode::Sequence;
    else if (mode == "per_token") g.ratio_mode = RatioMode::PerToken;
    else bad("grpo.ratio_mode", "expected 'sequence' or 'per_token', got '" + mode + "'");

    auto& cu = c.curation;
    cu.samples_per_instance = field<int>(tree, "curation", "samples_per_instance");
    cu.balance_cap = field<double>(tree, "curation", "balance_cap");
    cu.dedup_key = field<std::string>(tree, "curation", "dedup_key");
    cu.tool_count = field<int>(tree, "curation", "tool_count");

    auto& e = c.eval;
    e.k = field<int>(tree, "eval", "k");
    e.questions_file = resolve(base, field<std::string>(tree, "eval", "questions_file"));
    e.ground_truth_file = resolve(base, field<std::string>(tree, "eval", "ground_truth_file"));
    const auto backend = field<std::string>(tree, "eval", "backend_mode");
    if (backend == "mock") e.backend_mode = BackendMode::Mock;
    else if (backend == "remote") e.backend_mode = BackendMode::Remote;
    else bad("eval.backend_mode", "expected 'mock' or 'remote', got '" + backend + "'");
    e.episode_parallelism = field<int>(tree, "eval", "episode_parallelism");
    e.output_dir = field<std::string>(tree, "eval", "output_dir");
    if (const auto& s = tree["eval"]["seed"]; !s.is_null()) {
        if (!s.is_number_integer() || s.get<std::int64_t>() < 0) bad("eval.seed", "must be a non-negative integer");
        e.seed = s.get<std::uint64_t>();
    }

    auto& m = c.models;
    m.manager = endpoint_from(tree["models"]["manager"], "models.manager");
    m.summarizer = endpoint_from(tree["models"]["summarizer"], "models.summarizer");
    for (std::size_t i = 0; i < tree["models"]["endpoints"].size(); ++i)
        m.endpoints.push_back(
            endpoint_from(tree["models"]["endpoints"][i], "models.endpoints[" + std::to_string(i) + "]"));
    m.default_model = field<std::string>(tree, "models", "default_model");
    if (m.default_model.empty() && !m.endpoints.empty()) m.default_model = m.endpoints.front().model_id;
    m.ensemble_model = field<std::string>(tree, "models", "ensemble_model");
    o.summarizer_endpoint = m.summarizer;

    auto& s = c.services;
    s.retrieval_url = field<std::string>(tree, "services", "retrieval_url");
    s.retrieval_topk = field<int>(tree, "services", "retrieval_topk");
    s.sandbox_url = field<std::string>(tree, "services", "sandbox_url");
    s.model_timeout_ms = field<int>(tree, "services", "model_timeout_ms");
    s.sandbox_timeout_ms = field<int>(tree, "services", "sandbox_timeout_ms");
    s.retrieval_timeout_ms = field<int>(tree, "services", "retrieval_timeout_ms");
    s.ensemble_samples = field<int>(tree, "services", "ensemble_samples");
    s.code_reasoner_max_iterations = field<int>(tree, "services", "code_reasoner_max_iterations");

    c.mock.correct_rate = field<double>(tree, "mock", "correct_rate");
    c.mock.schedule_file = resolve(base, field<std::string>(tree, "mock", "schedule_file"));
    c.mock.max_tool_rounds = field<int>(tree, "mock", "max_tool_rounds");

    auto& t = c.training;
    t.sft_train_batch_size = field<int>(tree, "training", "sft_train_batch_size");
    t.sft_max_length = field<int>(tree, "training", "sft_max_length");
    t.sft_total_steps = field<int>(tree, "training", "sft_total_steps");
    t.sft_learning_rate = field<double>(tree, "training", "sft_learning_rate");
    t.sft_lr_scheduler = field<std::string>(tree, "training", "sft_lr_scheduler");
    t.rl_train_batch_size = field<int>(tree, "training", "rl_train_batch_size");
    t.rl_max_prompt_length = field<int>(tree, "training", "rl_max_prompt_length");
    t.rl_max_response_length = field<int>(tree, "training", "rl_max_response_length");
    t.rl_actor_learning_rate = field<double>(tree, "training", "rl_actor_learning_rate");
    t.rl_mini_batch_size = field<int>(tree, "training", "rl_mini_batch_size");
    t.rollout_temperature = field<double>(tree, "training", "rollout_temperature");
    t.rollout_top_p = field<double>(tree, "training", "rollout_top_p");
    t.rl_total_steps = field<int>(tree, "training", "rl_total_steps");

    c.prompts_dir = resolve(base, field<std::string>(tree, "prompts", "dir"));
    c.orchestrator.prompts = c.prompts_dir.empty() ? PromptSet::builtin() : PromptSet::load(c.prompts_dir);

    c.validate();
    return c;
}

}  // namespace agentool
