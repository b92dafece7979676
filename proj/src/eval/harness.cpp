#include "agentool/eval/harness.hpp"

#include <cstdlib>
#include <fstream>
#include <random>
#include <stdexcept>

#include "agentool/protocol/manager_turn.hpp"
#include "agentool/protocol/trajectory_io.hpp"
#include "agentool/tools/http_services.hpp"
#include "agentool/tools/mock_services.hpp"

namespace agentool {

std::vector<EvalItem> load_eval_items(const std::filesystem::path& questions_file,
                                      const std::filesystem::path& ground_truth_file) {
    const auto qs = read_jsonl(questions_file);
    std::vector<Json> gts;
    if (!ground_truth_file.empty()) {
        gts = read_jsonl(ground_truth_file);
        if (gts.size() != qs.size())
            throw std::runtime_error(ground_truth_file.string() + ": " + std::to_string(gts.size()) +
                                     " answers for " + std::to_string(qs.size()) + " questions");
    }
    std::vector<EvalItem> items;
    for (std::size_t i = 0; i < qs.size(); ++i) {
        const auto where = questions_file.string() + ":" + std::to_string(i + 1);
        const auto& src = gts.empty() ? qs[i] : gts[i];
        if (!qs[i].contains("question") || !qs[i]["question"].is_string() || qs[i]["question"].get<std::string>().empty())
            throw std::runtime_error(where + ": missing non-empty \"question\"");
        if (!src.contains("answer")) throw std::runtime_error(where + ": no \"answer\" for this question");
        EvalItem item{qs[i]["question"].get<std::string>(),
                      src["answer"].is_string() ? src["answer"].get<std::string>() : src["answer"].dump()};
        if (normalize_question(item.ground_truth).empty()) throw std::runtime_error(where + ": empty answer");
        items.push_back(std::move(item));
    }
    if (items.empty()) throw std::runtime_error(questions_file.string() + ": no questions");
    return items;
}

GroundTruth GroundTruth::load(const std::filesystem::path& path) {
    GroundTruth gt;
    bool keyed = true;
    const auto lines = read_jsonl(path);
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const auto& j = lines[i];
        if (!j.contains("answer"))
            throw std::runtime_error(path.string() + ":" + std::to_string(i + 1) + ": missing \"answer\"");
        auto answer = j["answer"].is_string() ? j["answer"].get<std::string>() : j["answer"].dump();
        if (j.contains("question") && j["question"].is_string()) gt.by_question[j["question"].get<std::string>()] = answer;
        else keyed = false;
        gt.by_position.push_back(std::move(answer));
    }
    if (!keyed) gt.by_question.clear();
    return gt;
}

const std::string& GroundTruth::lookup(const Trajectory& traj, std::size_t index) const {
    if (!by_question.empty()) {
        auto it = by_question.find(traj.question);
        if (it == by_question.end()) throw std::runtime_error("no ground truth for question '" + traj.question + "'");
        return it->second;
    }
    if (index >= by_position.size())
        throw std::runtime_error("no ground truth for trajectory " + std::to_string(index + 1));
    return by_position[index];
}

MockSchedule load_mock_schedule(const std::filesystem::path& path) {
    MockSchedule out;
    for (const auto& j : read_jsonl(path)) {
        auto& slot = out[j.at("question").get<std::string>()];
        for (const auto& v : j.at("correct")) {
            const int c = v.get<int>();
            if (c < -1 || c > 1) throw std::runtime_error(path.string() + ": correct entries must be 1, 0 or -1");
            slot.push_back(c);
        }
    }
    return out;
}

namespace {

ToolServices tool_services(const RuntimeConfig& cfg, std::shared_ptr<const ModelPool> pool,
                           std::shared_ptr<const RetrievalService> retrieval,
                           std::shared_ptr<const SandboxService> sandbox) {
    ToolServices s;
    s.pool = std::move(pool);
    s.retrieval = std::move(retrieval);
    s.sandbox = std::move(sandbox);
    s.prompts = cfg.orchestrator.prompts;
    s.ensemble_model = cfg.models.ensemble_model;
    s.ensemble_samples = cfg.services.ensemble_samples;
    s.code_reasoner_max_iterations = cfg.services.code_reasoner_max_iterations;
    s.model_timeout = std::chrono::milliseconds(cfg.services.model_timeout_ms);
    s.sandbox_timeout = std::chrono::milliseconds(cfg.services.sandbox_timeout_ms);
    s.retrieval_timeout = std::chrono::milliseconds(cfg.services.retrieval_timeout_ms);
    return s;
}

std::string api_key(const ModelEndpoint& e) {
    if (e.api_key_env.empty()) return {};
    const char* v = std::getenv(e.api_key_env.c_str());
    return v ? v : "";
}

class RemoteFactory final : public BackendFactory {
public:
    explicit RemoteFactory(const RuntimeConfig& cfg) : cfg_(cfg) {
        auto pool = std::make_shared<ModelPool>();
        for (const auto& e : cfg.models.endpoints)
            pool->add(e, std::make_shared<HttpChatBackend>(e.base_url, api_key(e)));
        pool->set_default(cfg.models.default_model);
        registry_ = register_builtin_tools(
            tool_services(cfg, pool, std::make_shared<HttpRetrievalService>(cfg.services.retrieval_url, cfg.services.retrieval_topk),
                          std::make_shared<HttpSandboxService>(cfg.services.sandbox_url)));
        manager_ = std::make_shared<HttpChatBackend>(cfg.models.manager.base_url, api_key(cfg.models.manager));
        summarizer_ = std::make_shared<HttpChatBackend>(cfg.models.summarizer.base_url, api_key(cfg.models.summarizer));
    }

    const ToolRegistry& registry() const override { return registry_; }

    EpisodeBackends episode(const EvalItem&, std::size_t, int) const override {
        return {std::make_unique<ChatPolicy>(manager_, cfg_.models.manager), summarizer_};
    }

private:
    RuntimeConfig cfg_;
    ToolRegistry registry_;
    std::shared_ptr<const ChatBackend> manager_;
    std::shared_ptr<const ChatBackend> summarizer_;
};

// Portable draws: the standard distributions are not reproducible across libraries.
std::uint64_t draw(std::mt19937_64& rng, std::uint64_t n) { return rng() % n; }
double unit(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

ToolCallRequest mock_call(const std::string& question, std::mt19937_64& rng) {
    static const char* kTools[] = {"standard_reasoner", "critical_reviewer", "knowledge_searcher", "search",
                                   "code_reasoner",     "python",            "ensemble_solver"};
    const std::string name = kTools[draw(rng, std::size(kTools))];
    if (name == "search") return {name, {{"query_list", Json::array({question})}}};
    if (name == "python") return {name, {{"code", "print(" + std::to_string(draw(rng, 1000)) + ")"}}};
    if (name == "critical_reviewer" || name == "ensemble_solver") return {name, Json::object()};
    return {name, {{"subtask", question}}};
}

class MockFactory final : public BackendFactory {
public:
    explicit MockFactory(const RuntimeConfig& cfg) : cfg_(cfg) {
        if (!cfg.eval.seed) throw std::invalid_argument("config field 'eval.seed': mock mode requires a seed");
        auto pool = std::make_shared<ModelPool>();
        auto chat = std::make_shared<RoleAwareMockChat>();
        if (cfg.models.endpoints.empty()) {
            pool->add({"mock://pool", "mock-model"}, chat);
            pool->set_default("mock-model");
        } else {
            for (const auto& e : cfg.models.endpoints) pool->add(e, chat);
            pool->set_default(cfg.models.default_model);
        }
        registry_ = register_builtin_tools(tool_services(cfg, pool, std::make_shared<MockRetrievalService>(),
                                                         std::make_shared<MockSandboxService>()));
        if (!cfg.mock.schedule_file.empty()) schedule_ = load_mock_schedule(cfg.mock.schedule_file);
    }

    const ToolRegistry& registry() const override { return registry_; }

    EpisodeBackends episode(const EvalItem& item, std::size_t q, int sample) const override {
        const auto seed = *cfg_.eval.seed;
        std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                          static_cast<std::uint32_t>(q), static_cast<std::uint32_t>(sample)};
        std::mt19937_64 rng(seq);

        int outcome = unit(rng) < cfg_.mock.correct_rate ? 1 : 0;
        if (auto it = schedule_.find(item.question); it != schedule_.end()) {
            if (static_cast<std::size_t>(sample) >= it->second.size())
                throw std::runtime_error("mock schedule for '" + item.question + "' has no entry for sample " +
                                         std::to_string(sample + 1));
            outcome = it->second[static_cast<std::size_t>(sample)];
        }

        const int tool_rounds = cfg_.mock.max_tool_rounds ? 1 + static_cast<int>(draw(rng, cfg_.mock.max_tool_rounds)) : 0;
        const int width = std::min(3, cfg_.orchestrator.max_parallel);
        std::vector<std::string> turns;
        for (int t = 0; t < tool_rounds; ++t) {
            std::vector<ToolCallRequest> calls;
            const auto n = 1 + draw(rng, static_cast<std::uint64_t>(width));
            for (std::uint64_t j = 0; j < n; ++j) calls.push_back(mock_call(item.question, rng));
            turns.push_back(serialize_turn("Round " + std::to_string(t + 1) + ": gather evidence.", calls));
        }
        turns.push_back(serialize_turn("Evidence is sufficient.", {{std::string(kFinalAnswerTool), Json::object()}}));

        EpisodeBackends b;
        if (outcome < 0) {
            b.policy = std::make_unique<ScriptedPolicy>(ScriptedPolicy::Script(
                [](const PolicyRequest&) -> std::string { throw PolicyFailure("mock policy: scheduled hard failure", false); }));
        } else {
            b.policy = std::make_unique<ScriptedPolicy>(std::move(turns));
        }
        const auto answer = outcome == 1 ? item.ground_truth : (item.ground_truth == "0" ? "1" : "0");
        b.summarizer = ScriptedChatBackend::fixed("<reasoning>Summarized the tool evidence.</reasoning>\n<answer>\n\\boxed{" +
                                                  answer + "}\n</answer>");
        return b;
    }

private:
    RuntimeConfig cfg_;
    ToolRegistry registry_;
    MockSchedule schedule_;
};

EpisodeResult run_one(const std::vector<EvalItem>& items, const BackendFactory& factory, const RuntimeConfig& cfg,
                      std::size_t idx) {
    const auto k = static_cast<std::size_t>(cfg.eval.k);
    EpisodeResult r;
    r.question_index = idx / k;
    r.sample = static_cast<int>(idx % k);
    const auto& item = items[r.question_index];

    auto ocfg = cfg.orchestrator;
    ocfg.measure_elapsed = cfg.eval.backend_mode != BackendMode::Mock;
    try {
        auto b = factory.episode(item, r.question_index, r.sample);
        r.trajectory = run_episode(item.question, *b.policy, factory.registry(), *b.summarizer, ocfg);
    } catch (const EpisodeAborted& e) {
        r.trajectory = e.partial();
        r.aborted = true;
    } catch (const std::exception& e) {
        r.trajectory = Trajectory{};
        r.trajectory.question = item.question;
        r.trajectory.error = e.what();
        r.aborted = true;
    }
    r.correct = r.aborted ? 0 : static_cast<int>(reward_task(r.trajectory, item.ground_truth));
    return r;
}

EvalSummary summarize(const std::vector<EvalItem>& items, int k, std::vector<EpisodeResult> results) {
    EvalSummary s;
    s.k = k;
    s.items = items;
    s.results = std::move(results);
    double total = 0;
    for (std::size_t q = 0; q < items.size(); ++q) {
        double sum = 0;
        for (int j = 0; j < k; ++j) sum += s.results[q * k + j].correct;
        s.per_question_mean.push_back(sum / k);
        total += sum;
    }
    for (const auto& r : s.results) s.aborted += r.aborted;
    s.mean_at_k = s.results.empty() ? 0.0 : total / static_cast<double>(s.results.size());
    return s;
}

}  // namespace

std::unique_ptr<BackendFactory> make_remote_factory(const RuntimeConfig& cfg) { return std::make_unique<RemoteFactory>(cfg); }
std::unique_ptr<BackendFactory> make_mock_factory(const RuntimeConfig& cfg) { return std::make_unique<MockFactory>(cfg); }

EvalSummary run_episodes_serial(const std::vector<EvalItem>& items, const BackendFactory& factory,
                                const RuntimeConfig& cfg) {
    const std::size_t n = items.size() * static_cast<std::size_t>(cfg.eval.k);
    std::vector<EpisodeResult> results(n);
    for (std::size_t i = 0; i < n; ++i) results[i] = run_one(items, factory, cfg, i);
    return summarize(items, cfg.eval.k, std::move(results));
}

EvalSummary run_episodes(const std::vector<EvalItem>& items, const BackendFactory& factory, const RuntimeConfig& cfg) {
    const auto n = static_cast<std::ptrdiff_t>(items.size() * static_cast<std::size_t>(cfg.eval.k));
    std::vector<EpisodeResult> results(static_cast<std::size_t>(n));
#pragma omp parallel for schedule(dynamic, 1) num_threads(cfg.eval.episode_parallelism)
    for (std::ptrdiff_t i = 0; i < n; ++i) results[i] = run_one(items, factory, cfg, static_cast<std::size_t>(i));
    return summarize(items, cfg.eval.k, std::move(results));
}

Json EvalSummary::to_json() const {
    Json qs = Json::array();
    for (std::size_t q = 0; q < items.size(); ++q) {
        Json correct = Json::array();
        for (int j = 0; j < k; ++j) correct.push_back(results[q * k + j].correct);
        qs.push_back({{"question", items[q].question},
                      {"ground_truth", items[q].ground_truth},
                      {"correct", correct},
                      {"mean", per_question_mean[q]}});
    }
    return {{"k", k},
            {"questions", qs},
            {"episodes", results.size()},
            {"aborted", aborted},
            {"mean_at_k", mean_at_k}};
}

void write_eval_outputs(const std::filesystem::path& dir, const EvalSummary& summary) {
    std::filesystem::create_directories(dir);
    std::vector<Json> records;
    for (const auto& r : summary.results) {
        auto j = to_json(r.trajectory);
        j["question_index"] = r.question_index;
        j["sample"] = r.sample;
        records.push_back(std::move(j));
    }
    write_jsonl(dir / "trajectories.jsonl", records);
    std::ofstream out(dir / "summary.json", std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + (dir / "summary.json").string());
    out << summary.to_json().dump(2) << "\n";
}

EvalSummary run_eval(const RuntimeConfig& cfg) {
    const auto items = load_eval_items(cfg.eval.questions_file, cfg.eval.ground_truth_file);
    const auto factory =
        cfg.eval.backend_mode == BackendMode::Mock ? make_mock_factory(cfg) : make_remote_factory(cfg);
    auto summary = run_episodes(items, *factory, cfg);

    write_eval_outputs(cfg.eval.output_dir, summary);
    return summary;
}

}  // namespace agentool
