#include <doctest.h>

#include <sstream>

#include "agentool/orchestrator.hpp"
#include "agentool/tools/mock_services.hpp"
#include "fixtures.hpp"

using namespace agentool;
using fixtures::call;

namespace {

std::string py_turn(const std::string& code = "print(2)") {
    return serialize_turn("run it", {call("python", {{"code", code}})});
}
const std::string kFinal = serialize_turn("done", {call("final_answer")});

OrchestratorConfig config() {
    OrchestratorConfig cfg;
    cfg.summarizer_endpoint = {"mock://summarizer", "summarizer"};
    return cfg;
}

std::shared_ptr<ScriptedChatBackend> summarizer(const std::string& answer = "55") {
    return ScriptedChatBackend::fixed("<reasoning>summary</reasoning>\n<answer>\\boxed{" + answer + "}</answer>");
}

std::int64_t words(const std::string& s) {
    std::istringstream in(s);
    std::string w;
    std::int64_t n = 0;
    while (in >> w) ++n;
    return n;
}

std::vector<std::string> tools_of(const RoundRecord& r) {
    std::vector<std::string> out;
    for (const auto& c : r.turn.calls) out.push_back(c.tool_name);
    return out;
}

}  // namespace

TEST_CASE("python round then final_answer") {
    const auto reg = fixtures::mock_builtin_registry();
    ScriptedPolicy policy({py_turn(), kFinal});
    auto sum = summarizer();
    const auto traj = run_episode("what is 2?", policy, reg, *sum, config());

    CHECK(traj.round_count == 2);
    CHECK(traj.rounds.size() == 2);
    CHECK(tools_of(traj.rounds[1]) == std::vector<std::string>{"final_answer"});
    CHECK(traj.rounds[0].observations[0].status == Status::Ok);
    CHECK((*traj.rounds[0].observations[0].value)["stdout"] == "2\n");
    CHECK(traj.final_answer == "55");
    CHECK_FALSE(traj.budget_forced);
    CHECK_FALSE(traj.error);
    CHECK(traj.total_cost == 1.0);
    CHECK(traj.rounds[1].observations[0].cost_units == 1.0);
    CHECK(policy.calls() == 2);
    CHECK(sum->calls() == 1);
}

TEST_CASE("a policy that never terminates is cut off after twelve rounds") {
    const auto reg = fixtures::mock_builtin_registry();
    ScriptedPolicy policy({py_turn()});
    auto sum = summarizer("7");
    const auto traj = run_episode("q", policy, reg, *sum, config());
    CHECK(traj.round_count == 12);
    CHECK(policy.calls() == 12);
    CHECK(traj.budget_forced);
    CHECK(sum->calls() == 1);
    CHECK(traj.final_answer == "7");
    for (int t = 0; t < 12; ++t) CHECK(traj.rounds[t].round_index == t + 1);
}

TEST_CASE("round budget follows max_rounds") {
    const auto reg = fixtures::mock_builtin_registry();
    auto cfg = config();
    cfg.max_rounds = 3;
    std::vector<int> seen;
    ScriptedPolicy policy([&](const PolicyRequest& r) {
        seen.push_back(r.round_index);
        CHECK(r.prompt.user.find("remaining rounds: " + std::to_string(3 - r.round_index + 1)) != std::string::npos);
        return py_turn();
    });
    auto sum = summarizer();
    const auto traj = run_episode("q", policy, reg, *sum, cfg);
    CHECK(traj.round_count == 3);
    CHECK(seen == std::vector<int>{1, 2, 3});
}

TEST_CASE("malformed turn then a corrected turn") {
    const auto reg = fixtures::mock_builtin_registry();
    ScriptedPolicy policy({"I will just think about it", py_turn(), kFinal});
    auto sum = summarizer();
    const auto traj = run_episode("q", policy, reg, *sum, config());
    REQUIRE(traj.round_count == 3);
    CHECK_FALSE(traj.rounds[0].turn.well_formed);
    for (const auto& o : traj.rounds[0].observations) CHECK(o.status == Status::ParseErr);
    CHECK(traj.rounds[1].turn.well_formed);
    CHECK(traj.rounds[1].observations[0].status == Status::Ok);
    CHECK(traj.final_answer == "55");
}

TEST_CASE("tool failures never abort the episode") {
    const auto reg = fixtures::mock_builtin_registry();
    ScriptedPolicy policy({serialize_turn("x", {call("nope"), call("python", {{"code", 1}})}), kFinal});
    auto cfg = config();
    auto sum = summarizer();
    const auto traj = run_episode("q", policy, reg, *sum, cfg);
    CHECK(traj.round_count == 2);
    CHECK(traj.rounds[0].observations[0].status == Status::ParseErr);
    CHECK(traj.final_answer);
}

TEST_CASE("companion calls run before the summarizer and are visible to it") {
    const auto reg = fixtures::mock_builtin_registry();
    ScriptedPolicy policy({serialize_turn("both", {call("python", {{"code", "print(31)"}}), call("final_answer")})});
    auto sum = summarizer();
    const auto traj = run_episode("q", policy, reg, *sum, config());
    REQUIRE(traj.round_count == 1);
    CHECK(traj.rounds[0].observations[0].status == Status::Ok);
    CHECK(traj.rounds[0].observations[1].status == Status::Ok);
    CHECK((*traj.rounds[0].observations[1].value)["answer"] == "55");
    const auto history = sum->last_request().messages[1].content;
    CHECK(history.find("31") != std::string::npos);
    CHECK(history.find("<round index=1>") != std::string::npos);
}

TEST_CASE("second final_answer in a turn is skipped") {
    const auto reg = fixtures::mock_builtin_registry();
    ScriptedPolicy policy({serialize_turn("x", {call("final_answer"), call("final_answer")})});
    auto sum = summarizer();
    const auto traj = run_episode("q", policy, reg, *sum, config());
    CHECK(traj.round_count == 1);
    CHECK(traj.rounds[0].observations[0].status == Status::Ok);
    CHECK(traj.rounds[0].observations[1].status == Status::ParseErr);
    CHECK(traj.rounds[0].observations[1].diagnostic == "duplicate final_answer call");
    CHECK(sum->calls() == 1);
    CHECK(traj.total_cost == 1.0);
}

TEST_CASE("final_answer past n_max does not terminate") {
    const auto reg = fixtures::mock_builtin_registry();
    std::vector<ToolCallRequest> five(4, call("python", {{"code", "print(1)"}}));
    five.push_back(call("final_answer"));
    ScriptedPolicy policy({serialize_turn("x", five), kFinal});
    auto sum = summarizer();
    const auto traj = run_episode("q", policy, reg, *sum, config());
    CHECK(traj.round_count == 2);
    CHECK(traj.rounds[0].observations[4].diagnostic == "parallelism budget exceeded");
}

TEST_CASE("summarizer failure leaves the episode unanswered") {
    const auto reg = fixtures::mock_builtin_registry();
    ScriptedPolicy policy({kFinal});
    SUBCASE("no boxed answer") {
        auto sum = ScriptedChatBackend::fixed("<answer>fifty five</answer>");
        const auto traj = run_episode("q", policy, reg, *sum, config());
        CHECK_FALSE(traj.final_answer);
        CHECK(traj.rounds[0].observations[0].status == Status::ExecErr);
    }
    SUBCASE("unreachable") {
        auto sum = ScriptedChatBackend::unreachable();
        const auto traj = run_episode("q", policy, reg, *sum, config());
        CHECK_FALSE(traj.final_answer);
        CHECK_FALSE(traj.error);
    }
}

TEST_CASE("synthesize_final_answer") {
    Trajectory traj;
    traj.question = "how many?";
    RoundRecord r = fixtures::ok_round(1, {call("code_reasoner")});
    r.observations[0] = Observation::ok({{"execution_result", "55\n"}}, 1);
    traj.rounds.push_back(r);
    auto sum = summarizer("55");
    const auto o = synthesize_final_answer(traj, *sum, config());
    CHECK(o.status == Status::Ok);
    CHECK(traj.final_answer == "55");
    const auto req = sum->last_request();
    CHECK(req.model == "summarizer");
    CHECK(req.messages[0].content == PromptSet::builtin().final_answer);
    CHECK(req.messages[1].content.find("how many?") != std::string::npos);
    CHECK(req.messages[1].content.find("55") != std::string::npos);

    auto bad = ScriptedChatBackend::fixed("no box");
    synthesize_final_answer(traj, *bad, config());
    CHECK_FALSE(traj.final_answer);

    Trajectory empty;
    empty.question = "q";
    CHECK_THROWS_AS(synthesize_final_answer(empty, *sum, config()), std::invalid_argument);
}

TEST_CASE("render_state") {
    const auto reg = fixtures::mock_builtin_registry();
    OrchestratorState fresh{"What is 6*7?", {}, {12, 24576}};
    const auto p = render_state(fresh, reg);
    CHECK(p.system.rfind(PromptSet::builtin().manager, 0) == 0);
    CHECK(p.system.find("- ensemble_solver") != std::string::npos);
    CHECK(p.user == "<user_query>\nWhat is 6*7?\n</user_query>\n\nremaining rounds: 12");

    OrchestratorState one = fresh;
    RoundRecord r;
    r.turn = parse_manager_turn(serialize_turn("x", {call("nope")}));
    r.observations = {Observation::skipped("unregistered tool 'nope'")};
    one.history = {r};
    one.budget.rounds_left = 11;
    const auto q = render_state(one, reg);
    CHECK(q.user.find("unregistered tool 'nope'") != std::string::npos);
    CHECK(q.user.find("PARSE_ERR") != std::string::npos);
    CHECK(q.user.find("remaining rounds: 11") != std::string::npos);

    CHECK(render_state(one, reg).text() == q.text());
}

TEST_CASE("scripted policy is a function of the rendering") {
    ScriptedPolicy a([](const PolicyRequest& r) { return std::to_string(r.prompt.text().size()); });
    PolicyRequest req{{"s", "u"}, 1};
    CHECK(a.generate(req).text == a.generate(req).text);
    CHECK_THROWS_AS(ScriptedPolicy(std::vector<std::string>{}), std::invalid_argument);
}

TEST_CASE("policy failures") {
    const auto reg = fixtures::mock_builtin_registry();
    auto sum = summarizer();
    SUBCASE("one transient failure is retried") {
        int calls = 0;
        ScriptedPolicy inner({kFinal});
        struct Flaky : PolicyBackend {
            int* calls;
            ScriptedPolicy* inner;
            PolicyReply generate(const PolicyRequest& r) override {
                if ((*calls)++ == 0) throw PolicyFailure("503", true);
                return inner->generate(r);
            }
        } flaky;
        flaky.calls = &calls;
        flaky.inner = &inner;
        const auto traj = run_episode("q", flaky, reg, *sum, config());
        CHECK(calls == 2);
        CHECK(traj.final_answer == "55");
    }
    SUBCASE("two transient failures abort") {
        struct Down : PolicyBackend {
            int calls = 0;
            PolicyReply generate(const PolicyRequest&) override {
                ++calls;
                throw PolicyFailure("503", true);
            }
        } down;
        CHECK_THROWS_AS(run_episode("q", down, reg, *sum, config()), EpisodeAborted);
        CHECK(down.calls == 2);
    }
    SUBCASE("hard failure aborts with the partial trajectory") {
        ScriptedPolicy policy([](const PolicyRequest& r) -> std::string {
            if (r.round_index == 2) throw PolicyFailure("bad request", false);
            return py_turn();
        });
        try {
            run_episode("q", policy, reg, *sum, config());
            FAIL("expected EpisodeAborted");
        } catch (const EpisodeAborted& e) {
            CHECK(e.partial().round_count == 1);
            CHECK(e.partial().error);
            CHECK(std::string(e.what()).find("bad request") != std::string::npos);
        }
        CHECK(policy.calls() == 2);
    }
    SUBCASE("chat policy maps backend errors") {
        ChatPolicy chat(ScriptedChatBackend::unreachable(), {"mock://m", "m"});
        CHECK_THROWS_AS(run_episode("q", chat, reg, *sum, config()), EpisodeAborted);
    }
}

TEST_CASE("token accounting") {
    const auto reg = fixtures::mock_builtin_registry();
    auto sum = summarizer();
    std::int64_t expected = 0;
    ScriptedPolicy policy({py_turn(), kFinal});
    auto traj = run_episode("q", policy, reg, *sum, config());
    // recompute with the same renderer and a fresh policy
    ScriptedPolicy probe([&](const PolicyRequest& r) {
        const auto text = r.round_index == 1 ? py_turn() : kFinal;
        expected += words(r.prompt.text()) + words(text);
        return text;
    });
    run_episode("q", probe, reg, *sum, config());
    CHECK(traj.total_tokens == expected);

    auto cfg = config();
    cfg.count_tool_tokens = true;
    ScriptedPolicy again({py_turn(), kFinal});
    const auto with_tools = run_episode("q", again, reg, *sum, cfg);
    CHECK(with_tools.total_tokens > traj.total_tokens);
}

TEST_CASE("chat policy sends the rendered prompt") {
    const auto reg = fixtures::mock_builtin_registry();
    auto backend = ScriptedChatBackend::fixed(kFinal);
    ChatPolicy policy(backend, {"mock://m", "manager-model"});
    auto sum = summarizer();
    const auto traj = run_episode("the question", policy, reg, *sum, config());
    CHECK(traj.round_count == 1);
    const auto req = backend->last_request();
    CHECK(req.model == "manager-model");
    CHECK(req.messages.size() == 2);
    CHECK(req.messages[1].content.find("the question") != std::string::npos);
    CHECK(traj.total_tokens > 0);
}

TEST_CASE("config validation") {
    auto cfg = config();
    CHECK_NOTHROW(cfg.validate());
    cfg.max_rounds = 0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = config();
    cfg.max_parallel = 0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    const auto reg = fixtures::mock_builtin_registry();
    ScriptedPolicy policy({kFinal});
    auto sum = summarizer();
    CHECK_THROWS_AS(run_episode("", policy, reg, *sum, config()), std::invalid_argument);
}
