// One PASS/FAIL line per acceptance criterion. argv[1] is the CLI binary.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include "agentool/curation.hpp"
#include "agentool/eval/config.hpp"
#include "agentool/eval/harness.hpp"
#include "agentool/executor.hpp"
#include "agentool/fault_lab.hpp"
#include "agentool/orchestrator.hpp"
#include "agentool/protocol/manager_turn.hpp"
#include "agentool/rewards.hpp"
#include "agentool/rl_math.hpp"
#include "agentool/tools/mock_services.hpp"
#include "traj_builder.hpp"

using namespace agentool;
using namespace std::chrono_literals;
using fixtures::call;

namespace {

// Collects the first failed expectation of a criterion.
struct Probe {
    std::string first_failure;
    int failures = 0;
    void expect(bool ok, const std::string& what) {
        if (ok) return;
        if (!failures) first_failure = what;
        ++failures;
    }
};

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

void write(const std::filesystem::path& p, const std::string& text) { std::ofstream(p, std::ios::binary) << text; }

OrchestratorConfig orchestrator_config() {
    OrchestratorConfig cfg;
    cfg.summarizer_endpoint = {"mock://summarizer", "summarizer"};
    return cfg;
}

void reward_oracle(Probe& p) {
    const auto t0 = std::chrono::steady_clock::now();
    std::mt19937_64 rng(991);
    RewardConfig cfg;
    const oracles::RewardParams c;
    for (int i = 0; i < 1000; ++i) {
        const auto params = oracles::random_params(rng);
        const auto want = oracles::reward(params, c);
        const auto got = reward_total(fixtures::build(params), "42", cfg);
        p.expect(std::abs(got.total - want.total) <= 1e-12, "trajectory " + std::to_string(i) + " total differs");
        p.expect(std::abs(got.format - want.format) <= 1e-12 && std::abs(got.diversity - want.diversity) <= 1e-12 &&
                     std::abs(got.efficiency - want.efficiency) <= 1e-12 && got.task == want.task,
                 "trajectory " + std::to_string(i) + " term differs");
    }
    p.expect(std::chrono::steady_clock::now() - t0 < 5s, "took 5 s or more");
}

void constants(Probe& p) {
    const auto c = load_config(std::filesystem::path(AGENTOOL_CONFIG_DIR) / "default.yaml", {}, {});
    p.expect(c.reward.theta_par == 1.25, "theta_par");
    p.expect(c.reward.theta_tool == 3, "theta_tool");
    p.expect(c.reward.length_target == 12288, "length_target");
    p.expect(c.reward.cost_target == 8, "cost_target");
    p.expect(c.reward.length_max == 24576, "length_max");
    p.expect(c.reward.cost_max == 16, "cost_max");
    p.expect(c.orchestrator.max_rounds == 12, "max_rounds");
    p.expect(c.orchestrator.max_parallel == 4, "max_parallel");
    p.expect(c.grpo.group_size == 8, "group_size");
    p.expect(c.grpo.clip_low == 0.2 && c.grpo.clip_high == 0.28, "clip range");
    const auto& costs = builtin_cost_table();
    p.expect(costs.at("ensemble_solver") == 4, "ensemble cost");
    p.expect(costs.at("python") == 0 && costs.at("search") == 0, "python/search cost");
    for (const char* n : {"standard_reasoner", "critical_reviewer", "knowledge_searcher", "code_reasoner", "final_answer"})
        p.expect(costs.at(n) == 1, std::string(n) + " cost");
    p.expect(fixtures::mock_builtin_registry().find("ensemble_solver")->cost_units == 4, "registered ensemble cost");
    // struct defaults agree with the file
    p.expect(RewardConfig{}.theta_par == 1.25 && GrpoConfig{}.group_size == 8 && OrchestratorConfig{}.max_rounds == 12,
             "struct defaults");
}

void efficiency_points(Probe& p) {
    RewardConfig cfg;
    p.expect(soft_budget(12288, cfg.length_target) == 1.0, "R_len(12288)");
    p.expect(soft_budget(18432, cfg.length_target) == 0.5, "R_len(18432)");
    p.expect(soft_budget(24576, cfg.length_target) == 0.0, "R_len(24576)");
    p.expect(soft_budget(8, cfg.cost_target) == 1.0, "R_cost(8)");
    p.expect(soft_budget(12, cfg.cost_target) == 0.5, "R_cost(12)");
    p.expect(soft_budget(16, cfg.cost_target) == 0.0, "R_cost(16)");
    Trajectory t;
    t.rounds = {fixtures::ok_round(1, {call("final_answer")})};
    t.total_tokens = 18432;
    t.total_cost = 12;
    p.expect(reward_efficiency(t, cfg) == 0.5, "reward_efficiency at the midpoints");
}

void grpo(Probe& p) {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(0.0, 4.0);
    for (int i = 0; i < 10000; ++i) {
        std::vector<double> r(8);
        for (auto& x : r) x = rng() % 3 == 0 ? std::round(u(rng)) : u(rng);
        const auto a = group_advantages(r, 1e-4);
        double sum = 0;
        for (double x : a) sum += x;
        p.expect(std::abs(sum) <= 1e-9, "advantages do not sum to 0");
        const double shift = u(rng) * 3 - 6;
        auto shifted = r;
        for (auto& x : shifted) x += shift;
        const auto b = group_advantages(shifted, 1e-4);
        for (int g = 0; g < 8; ++g) p.expect(std::abs(a[g] - b[g]) <= 1e-12, "shift changed an advantage");
    }
    for (int i = 0; i < 500; ++i) {
        const std::size_t n = 2 + rng() % 50;
        LinearizedSequence s;
        s.tokens.assign(n, "t");
        std::vector<double> lp(n);
        for (auto& x : lp) x = -u(rng);
        for (std::size_t k = 0; k < n; ++k) s.mask.push_back(rng() % 2);
        s.logp_new = lp;
        s.logp_old = lp;
        p.expect(masked_ratio(s) == 1.0, "ratio under identical log-probs");
        for (auto& x : *s.logp_old) x -= 0.01 * u(rng);
        const double before = masked_ratio(s);
        for (std::size_t k = 0; k < n; ++k)
            if (!s.mask[k]) {
                (*s.logp_new)[k] -= u(rng);
                (*s.logp_old)[k] += u(rng);
            }
        p.expect(masked_ratio(s) == before, "mask-0 perturbation moved the ratio");
    }
    GrpoConfig cfg;
    p.expect(std::abs(clipped_surrogate(std::vector<double>{2.0}, {1.0}, cfg) - 1.28) <= 1e-15, "surrogate(2, 1)");
    p.expect(std::abs(clipped_surrogate(std::vector<double>{0.5}, {-1.0}, cfg) + 0.8) <= 1e-15, "surrogate(0.5, -1)");
}

// Registry with one echo tool sleeping `ms` and counting invocations.
class Sleeper final : public ToolAdapter {
public:
    explicit Sleeper(std::shared_ptr<std::atomic<int>> n) : n_(std::move(n)) {}
    Observation invoke(const ToolCallRequest& c, const CallContext& ctx) const override {
        ++*n_;
        std::this_thread::sleep_for(std::chrono::milliseconds(c.arguments.value("ms", 0)));
        return Observation::ok(ctx.slot);
    }

private:
    std::shared_ptr<std::atomic<int>> n_;
};

void executor(Probe& p) {
    auto n = std::make_shared<std::atomic<int>>(0);
    ToolSpec spec;
    spec.name = "echo";
    spec.parameter_schema = {{"type", "object"}, {"properties", {{"ms", {{"type", "integer"}}}}}};
    spec.cost_units = 1;
    ToolRegistry reg({{spec, std::make_shared<Sleeper>(n)}});

    const std::vector<ToolCallRequest> bad = {call("nope"), call("echo", {{"ms", "x"}}), call("echo", Json::array())};
    const auto obs = execute_round(reg, bad);
    for (const auto& o : obs) p.expect(o.status == Status::ParseErr && !o.value, "invalid call not PARSE_ERR with no value");
    p.expect(*n == 0, "adapter invoked for invalid calls");

    std::mt19937 rng(12);
    for (int round = 0; round < 1000; ++round) {
        std::vector<ToolCallRequest> calls;
        const int k = 1 + static_cast<int>(rng() % 4);
        for (int j = 0; j < k; ++j) calls.push_back(rng() % 3 ? call("echo") : call("nope"));
        const auto out = execute_round(reg, calls);
        p.expect(out.size() == calls.size(), "observation count");
        for (int j = 0; j < k && j < static_cast<int>(out.size()); ++j) {
            if (calls[j].tool_name == "echo")
                p.expect(out[j].status == Status::Ok && out[j].value == Json(j + 1), "slot order broken");
            else
                p.expect(out[j].status == Status::ParseErr, "invalid slot not PARSE_ERR");
        }
    }

    const auto t0 = std::chrono::steady_clock::now();
    const auto par = execute_round(reg, std::vector<ToolCallRequest>(4, call("echo", {{"ms", 100}})));
    const auto wall = std::chrono::steady_clock::now() - t0;
    for (const auto& o : par) p.expect(o.status == Status::Ok, "concurrent call failed");
    p.expect(wall < 250ms, "4 x 100 ms took " +
                               std::to_string(std::chrono::duration_cast<std::chrono::milliseconds>(wall).count()) + " ms");
}

void recovery(Probe& p) {
    const auto reg = fixtures::mock_builtin_registry();
    const auto py = serialize_turn("compute", {call("python", {{"code", "print(55)"}})});
    const auto fin = serialize_turn("done", {call("final_answer")});
    auto sum = ScriptedChatBackend::fixed("<answer>\\boxed{55}</answer>");

    ScriptedPolicy faulty({py, py, fin});
    const auto recovered =
        run_episode("sum?", faulty, wrap_registry(reg, {{{1, 1, Status::ExecErr}}}), *sum, orchestrator_config());
    p.expect(recovered.rounds.at(0).observations.at(0).status == Status::ExecErr, "fault not injected in round 1");
    p.expect(recovered.rounds.at(1).observations.at(0).status == Status::Ok, "round 2 not corrected");
    p.expect(has_recovery(recovered), "not classified as recovery");

    ScriptedPolicy clean({py, py, fin});
    const auto sibling = run_episode("sum?", clean, reg, *sum, orchestrator_config());
    p.expect(!has_recovery(sibling), "sibling classified as recovery");
    p.expect(reward_task(recovered, "55") == 1 && reward_task(sibling, "55") == 1, "not equally correct");

    for (const auto& order : {std::vector<Trajectory>{sibling, recovered}, std::vector<Trajectory>{recovered, sibling}}) {
        const auto pick = select_sft_trajectory({"sum?", "55", order, {1, 1}});
        p.expect(pick && *pick == recovered, "selection did not prefer the recovery");
    }
}

void bounds(Probe& p) {
    const auto reg = fixtures::mock_builtin_registry();
    auto sum = ScriptedChatBackend::fixed("<answer>\\boxed{3}</answer>");
    ScriptedPolicy forever({serialize_turn("again", {call("python", {{"code", "print(3)"}})})});
    const auto t = run_episode("q", forever, reg, *sum, orchestrator_config());
    p.expect(t.round_count == 12 && t.rounds.size() == 12, "round count " + std::to_string(t.round_count));
    p.expect(forever.calls() == 12, "policy consulted " + std::to_string(forever.calls()) + " times");
    p.expect(t.budget_forced && sum->calls() == 1 && t.final_answer == "3", "no forced synthesis");

    const auto six = serialize_turn("wide", std::vector<ToolCallRequest>(6, call("python", {{"code", "print(1)"}})));
    ScriptedPolicy wide({six, serialize_turn("done", {call("final_answer")})});
    const auto w = run_episode("q", wide, reg, *sum, orchestrator_config());
    const auto& obs = w.rounds.at(0).observations;
    p.expect(obs.size() == 6, "observation count");
    int executed = 0, parse_err = 0;
    for (std::size_t j = 0; j < obs.size(); ++j) {
        if (obs[j].executed && obs[j].status == Status::Ok && j < 4) ++executed;
        if (!obs[j].executed && obs[j].status == Status::ParseErr && j >= 4) ++parse_err;
    }
    p.expect(executed == 4 && parse_err == 2, "expected 4 executed + 2 PARSE_ERR");
}

Trajectory single_tool(const std::string& tool, int rounds) {
    Trajectory t;
    t.question = "q";
    for (int i = 1; i < rounds; ++i) t.rounds.push_back(fixtures::ok_round(i, {call(tool)}));
    t.rounds.push_back(fixtures::ok_round(rounds, {call("final_answer")}));
    t.final_answer = "1";
    t.recount();
    return t;
}

void curation(Probe& p) {
    std::vector<SampledInstance> all;
    for (int mask = 0; mask < 256; ++mask) {
        std::vector<int> c;
        for (int b = 0; b < 8; ++b) c.push_back((mask >> b) & 1);
        all.push_back({"q", "1", std::vector<Trajectory>(8, single_tool("python", 2)), c});
    }
    const auto kept = filter_rl_instances(all);
    p.expect(kept.size() == 254, "kept " + std::to_string(kept.size()) + " patterns");
    for (const auto& k : kept) {
        int n = 0;
        for (int x : k.correctness) n += x;
        p.expect(n > 0 && n < 8, "unanimous instance kept");
    }

    std::mt19937 rng(31);
    const std::vector<std::string> tools = {"python", "search", "code_reasoner", "standard_reasoner",
                                            "critical_reviewer", "knowledge_searcher", "ensemble_solver"};
    for (int iter = 0; iter < 200; ++iter) {
        CurationConfig cfg;
        cfg.balance_cap = std::vector<double>{0.2, 0.3, 0.5, 0.8}[rng() % 4];
        std::vector<Trajectory> in;
        const int n = 1 + static_cast<int>(rng() % 80);
        const auto& heavy = tools[rng() % tools.size()];
        for (int i = 0; i < n; ++i)
            in.push_back(single_tool(rng() % 2 ? heavy : tools[rng() % tools.size()], 2 + static_cast<int>(rng() % 4)));
        const auto r = enforce_tool_balance(in, cfg);
        std::map<std::string, std::size_t> counts;
        for (const auto& t : r.kept) ++counts[dominant_tool(t)];
        for (const auto& [tool, count] : counts)
            if (count > 1)
                p.expect(static_cast<double>(count) <= cfg.balance_cap * static_cast<double>(r.kept.size()) + 1e-12,
                         "dominant share above cap for " + tool);
    }

    for (int i = 0; i < 200; ++i) {
        const std::vector<std::string> words = {"Alpha", "beta", "GAMMA", "delta", "eps"};
        auto phrase = [&] {
            std::string s(rng() % 2, ' ');
            for (int k = 0; k < 3; ++k) s += words[rng() % words.size()] + std::string(1 + rng() % 3, rng() % 2 ? ' ' : '\t');
            return s;
        };
        std::vector<std::string> sft, rl;
        for (int k = 0; k < 8; ++k) sft.push_back(phrase());
        for (int k = 0; k < 8; ++k) rl.push_back(phrase());
        // independent normalization: lowercase, split on whitespace, rejoin
        auto norm = [](const std::string& s) {
            std::istringstream in(s);
            std::string w, out;
            while (in >> w) {
                for (auto& ch : w) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
                out += (out.empty() ? "" : " ") + w;
            }
            return out;
        };
        std::set<std::string> rl_norm;
        for (const auto& q : rl) rl_norm.insert(norm(q));
        for (const auto& q : dedup_against(sft, rl)) p.expect(!rl_norm.count(norm(q)), "overlap survived dedup");
    }
}

void determinism(Probe& p, const std::string& cli) {
    const auto dir = fixtures::temp_dir("accept_det");
    write(dir / "questions.jsonl", "{\"question\": \"What is 6*7?\", \"answer\": \"42\"}\n"
                                   "{\"question\": \"Sum of A?\", \"answer\": \"55\"}\n"
                                   "{\"question\": \"Capital of France?\", \"answer\": \"Paris\"}\n");
    const auto config = std::filesystem::path(AGENTOOL_CONFIG_DIR) / "default.yaml";
    auto run = [&](const std::string& out) {
        const std::string cmd = "\"" + cli + "\" run -c \"" + config.string() + "\" --questions \"" +
                                (dir / "questions.jsonl").string() + "\" --seed 17 -k 3 -o \"" + (dir / out).string() +
                                "\" > /dev/null 2>&1";
        p.expect(std::system(cmd.c_str()) == 0, "cli run failed");
        return slurp(dir / out / "trajectories.jsonl");
    };
    const auto a = run("a");
    const auto b = run("b");
    p.expect(!a.empty(), "empty trajectory file");
    p.expect(a == b, "trajectory JSONL differs between identical runs");

    write(dir / "two.jsonl", "{\"question\": \"What is 6*7?\", \"answer\": \"42\"}\n"
                             "{\"question\": \"Sum of A?\", \"answer\": \"55\"}\n");
    write(dir / "schedule.jsonl", "{\"question\": \"What is 6*7?\", \"correct\": [1, 1]}\n"
                                  "{\"question\": \"Sum of A?\", \"correct\": [1, 0]}\n");
    const auto c = load_config(config, {},
                               {{"eval.k", "2"},
                                {"eval.questions_file", (dir / "two.jsonl").string()},
                                {"mock.schedule_file", (dir / "schedule.jsonl").string()},
                                {"eval.output_dir", (dir / "m").string()}});
    const auto s = run_eval(c);
    p.expect(s.mean_at_k == 0.75, "mean@2 = " + std::to_string(s.mean_at_k));
}

void grammar(Probe& p) {
    std::ifstream in(fixtures::data_dir() / "format_corpus.jsonl");
    p.expect(static_cast<bool>(in), "corpus missing");
    std::string line;
    int cases = 0;
    while (std::getline(in, line)) {
        const auto j = Json::parse(line);
        const auto t = parse_manager_turn(j["raw"].get<std::string>());
        p.expect(t.well_formed == j["well_formed"].get<bool>() && t.calls.size() == j["calls"].get<std::size_t>() &&
                     check_format(t) == (j["well_formed"].get<bool>() ? 1 : 0),
                 "case " + j["id"].dump() + " mismatched");
        ++cases;
    }
    p.expect(cases == 50, "corpus has " + std::to_string(cases) + " cases");
}

}  // namespace

int main(int argc, char** argv) {
    if (argc < 2) {
        std::cerr << "usage: acceptance <path-to-agentool>\n";
        return 2;
    }
    const std::string cli = argv[1];
    const std::vector<std::pair<std::string, std::function<void(Probe&)>>> criteria = {
        {"reward-oracle-equivalence", reward_oracle},
        {"default-constants", constants},
        {"efficiency-curve-points", efficiency_points},
        {"grpo-properties", grpo},
        {"executor-semantics", executor},
        {"closed-loop-recovery", recovery},
        {"round-and-parallelism-bounds", bounds},
        {"curation-rules", curation},
        {"determinism-and-mean-at-k", [&](Probe& p) { determinism(p, cli); }},
        {"format-grammar", grammar},
    };
    int failed = 0;
    for (const auto& [name, fn] : criteria) {
        Probe p;
        try {
            fn(p);
        } catch (const std::exception& e) {
            p.expect(false, std::string("exception: ") + e.what());
        }
        if (p.failures) {
            ++failed;
            std::cout << "FAIL " << name << " (" << p.failures << " failed checks; first: " << p.first_failure << ")\n";
        } else {
            std::cout << "PASS " << name << "\n";
        }
    }
    return failed ? 1 : 0;
}
