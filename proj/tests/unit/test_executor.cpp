#include <doctest.h>

#include <random>
#include <thread>

#include "agentool/executor.hpp"
#include "fixtures.hpp"

using namespace agentool;
using namespace std::chrono_literals;
using fixtures::call;

namespace {

// Adapter whose behaviour is a function of the call; counts invocations.
class FnAdapter final : public ToolAdapter {
public:
    using Fn = std::function<Observation(const ToolCallRequest&, const CallContext&)>;
    FnAdapter(Fn fn, std::shared_ptr<std::atomic<int>> n) : fn_(std::move(fn)), n_(std::move(n)) {}
    Observation invoke(const ToolCallRequest& c, const CallContext& ctx) const override {
        ++*n_;
        return fn_(c, ctx);
    }

private:
    Fn fn_;
    std::shared_ptr<std::atomic<int>> n_;
};

struct Lab {
    ToolRegistry registry;
    std::shared_ptr<std::atomic<int>> invocations = std::make_shared<std::atomic<int>>(0);

    Lab(std::chrono::milliseconds timeout = 2s) {
        auto add = [&](std::vector<RegisteredTool>& v, std::string name, Json schema, FnAdapter::Fn fn) {
            ToolSpec s;
            s.name = std::move(name);
            s.parameter_schema = std::move(schema);
            s.cost_units = 1;
            s.timeout = timeout;
            v.push_back({s, std::make_shared<FnAdapter>(std::move(fn), invocations)});
        };
        std::vector<RegisteredTool> tools;
        // echo: sleeps "ms" then returns its slot
        add(tools, "echo", {{"type", "object"}, {"properties", {{"ms", {{"type", "integer"}}}}}},
            [](const ToolCallRequest& c, const CallContext& ctx) {
                std::this_thread::sleep_for(std::chrono::milliseconds(c.arguments.value("ms", 0)));
                return Observation::ok(ctx.slot);
            });
        add(tools, "fail", {{"type", "object"}},
            [](const ToolCallRequest&, const CallContext&) { return Observation::failure(Status::ExecErr, "boom"); });
        add(tools, "throws", {{"type", "object"}},
            [](const ToolCallRequest&, const CallContext&) -> Observation { throw std::runtime_error("kaput"); });
        add(tools, "hang", {{"type", "object"}}, [](const ToolCallRequest&, const CallContext&) {
            std::this_thread::sleep_for(1500ms);
            return Observation::ok("late");
        });
        registry = ToolRegistry(std::move(tools));
    }
};

std::vector<Status> statuses(const std::vector<Observation>& obs) {
    std::vector<Status> s;
    for (const auto& o : obs) s.push_back(o.status);
    return s;
}

}  // namespace

TEST_CASE("validate checks each call on its own") {
    const auto reg = fixtures::mock_builtin_registry();
    std::vector<ToolCallRequest> calls = {call("python", {{"code", "x"}})};
    CHECK(validate(reg, calls).per_call == std::vector<int>{1});

    calls = {call("unknown_tool")};
    auto r = validate(reg, calls);
    CHECK(r.per_call == std::vector<int>{0});
    CHECK(r.reasons[0].find("unregistered tool") != std::string::npos);

    calls = {call("search", {{"query_list", "not a list"}})};
    r = validate(reg, calls);
    CHECK(r.per_call == std::vector<int>{0});
    CHECK(r.reasons[0].find("schema mismatch") != std::string::npos);

    calls = {call("python"), call("python", {{"code", "1"}}), call("python", {{"code", 1}}),
             call("search", {{"query_list", Json::array()}}), call("python", {{"code", "1"}, {"extra", 1}})};
    CHECK(validate(reg, calls).per_call == std::vector<int>{0, 1, 0, 0, 0});
}

TEST_CASE("validity of one call does not depend on the others") {
    const auto reg = fixtures::mock_builtin_registry();
    const std::vector<ToolCallRequest> pool = {call("python", {{"code", "x"}}), call("nope"),
                                               call("search", {{"query_list", {"a"}}}), call("search"),
                                               call("standard_reasoner", {{"subtask", "s"}}),
                                               call("standard_reasoner", {{"subtask", 3}})};
    std::vector<int> alone;
    for (const auto& c : pool) alone.push_back(validate(reg, std::vector<ToolCallRequest>{c}).per_call[0]);
    std::mt19937 rng(1);
    for (int i = 0; i < 200; ++i) {
        std::vector<ToolCallRequest> calls;
        std::vector<int> expected;
        const int n = 1 + static_cast<int>(rng() % 6);
        for (int k = 0; k < n; ++k) {
            const auto idx = rng() % pool.size();
            calls.push_back(pool[idx]);
            expected.push_back(alone[idx]);
        }
        CHECK(validate(reg, calls).per_call == expected);
    }
}

TEST_CASE("two valid and one invalid call") {
    Lab lab;
    const std::vector<ToolCallRequest> calls = {call("echo"), call("echo"), call("missing")};
    const auto obs = execute_round(lab.registry, calls);
    CHECK(statuses(obs) == std::vector<Status>{Status::Ok, Status::Ok, Status::ParseErr});
    CHECK(obs[0].value == Json(1));
    CHECK(obs[1].value == Json(2));
    CHECK_FALSE(obs[2].value);
    CHECK_FALSE(obs[2].executed);
    CHECK(obs[2].cost_units == 0);
    CHECK(obs[0].cost_units == 1);
    CHECK(*lab.invocations == 2);
}

TEST_CASE("all invalid calls invoke nothing") {
    Lab lab;
    const std::vector<ToolCallRequest> calls = {call("missing"), call("echo", {{"ms", "slow"}}), call("other")};
    const auto obs = execute_round(lab.registry, calls);
    CHECK(statuses(obs) == std::vector<Status>(3, Status::ParseErr));
    CHECK(*lab.invocations == 0);
}

TEST_CASE("empty call list gives one PARSE_ERR") {
    Lab lab;
    const auto obs = execute_round(lab.registry, std::vector<ToolCallRequest>{});
    REQUIRE(obs.size() == 1);
    CHECK(obs[0].status == Status::ParseErr);
    CHECK(*lab.invocations == 0);
}

TEST_CASE("valid calls run concurrently") {
    Lab lab;
    const std::vector<ToolCallRequest> calls(4, call("echo", {{"ms", 100}}));
    const auto t0 = Clock::now();
    const auto obs = execute_round(lab.registry, calls);
    const auto wall = Clock::now() - t0;
    CHECK(statuses(obs) == std::vector<Status>(4, Status::Ok));
    CHECK(wall < 250ms);
    CHECK(wall >= 100ms);
}

TEST_CASE("parallel_limit bounds calls in flight") {
    auto in_flight = std::make_shared<std::atomic<int>>(0);
    auto peak = std::make_shared<std::atomic<int>>(0);
    ToolSpec s;
    s.name = "probe";
    s.parameter_schema = {{"type", "object"}};
    auto n = std::make_shared<std::atomic<int>>(0);
    ToolRegistry reg({{s, std::make_shared<FnAdapter>(
                              [=](const ToolCallRequest&, const CallContext&) {
                                  const int now = ++*in_flight;
                                  int p = *peak;
                                  while (now > p && !peak->compare_exchange_weak(p, now)) {
                                  }
                                  std::this_thread::sleep_for(30ms);
                                  --*in_flight;
                                  return Observation::ok(1);
                              },
                              n)}});
    ExecuteOptions opts;
    opts.parallel_limit = 2;
    opts.max_calls = 4;
    const auto obs = execute_round(reg, std::vector<ToolCallRequest>(4, call("probe")), opts);
    CHECK(statuses(obs) == std::vector<Status>(4, Status::Ok));
    CHECK(*peak <= 2);
    CHECK(*n == 4);
}

TEST_CASE("output order matches input order") {
    Lab lab;
    std::mt19937 rng(42);
    const std::vector<std::string> names = {"echo", "fail", "missing", "throws"};
    for (int round = 0; round < 1000; ++round) {
        const int n = 1 + static_cast<int>(rng() % 4);
        std::vector<ToolCallRequest> calls;
        for (int j = 0; j < n; ++j) calls.push_back(call(names[rng() % names.size()]));
        const auto obs = execute_round(lab.registry, calls);
        REQUIRE(obs.size() == calls.size());
        for (int j = 0; j < n; ++j) {
            const auto& name = calls[j].tool_name;
            if (name == "echo") {
                CHECK(obs[j].status == Status::Ok);
                CHECK(obs[j].value == Json(j + 1));
            } else if (name == "missing") {
                CHECK(obs[j].status == Status::ParseErr);
            } else {
                CHECK(obs[j].status == Status::ExecErr);
                CHECK_FALSE(obs[j].value);
            }
        }
    }
}

TEST_CASE("calls beyond n_max get the budget diagnostic") {
    Lab lab;
    const std::vector<ToolCallRequest> calls(6, call("echo"));
    const auto obs = execute_round(lab.registry, calls);
    CHECK(statuses(obs) == std::vector<Status>{Status::Ok, Status::Ok, Status::Ok, Status::Ok, Status::ParseErr,
                                               Status::ParseErr});
    CHECK(obs[4].diagnostic == "parallelism budget exceeded");
    CHECK(obs[5].diagnostic == "parallelism budget exceeded");
    CHECK(*lab.invocations == 4);
}

TEST_CASE("duplicate calls run separately") {
    Lab lab;
    const auto obs = execute_round(lab.registry, std::vector<ToolCallRequest>(3, call("echo")));
    CHECK(*lab.invocations == 3);
    CHECK(obs[2].value == Json(3));
}

TEST_CASE("one failing slot leaves its siblings alone") {
    Lab lab;
    const std::vector<ToolCallRequest> clean = {call("echo"), call("echo"), call("echo"), call("echo")};
    const auto baseline = execute_round(lab.registry, clean);
    for (std::size_t bad = 0; bad < clean.size(); ++bad) {
        for (const char* fault : {"fail", "throws", "hang"}) {
            auto calls = clean;
            calls[bad] = call(fault);
            ExecuteOptions opts;
            CallContext base;
            base.deadline = Clock::now() + 200ms;
            const auto obs = execute_round(lab.registry, calls, opts, base);
            for (std::size_t j = 0; j < calls.size(); ++j) {
                if (j == bad) {
                    CHECK(obs[j].status != Status::Ok);
                    CHECK(obs[j].executed);
                } else {
                    CHECK(obs[j].status == baseline[j].status);
                    CHECK(obs[j].value == baseline[j].value);
                }
            }
        }
    }
}

TEST_CASE("a call past its timeout becomes TIMEOUT") {
    Lab lab(100ms);
    const std::vector<ToolCallRequest> calls = {call("hang"), call("echo")};
    const auto t0 = Clock::now();
    const auto obs = execute_round(lab.registry, calls);
    CHECK(Clock::now() - t0 < 600ms);
    CHECK(obs[0].status == Status::Timeout);
    CHECK_FALSE(obs[0].value);
    CHECK(obs[0].cost_units == 1);
    CHECK(obs[1].status == Status::Ok);
}

TEST_CASE("adapter exceptions become EXEC_ERR") {
    Lab lab;
    const auto obs = execute_round(lab.registry, std::vector<ToolCallRequest>{call("throws")});
    CHECK(obs[0].status == Status::ExecErr);
    CHECK(obs[0].diagnostic.find("kaput") != std::string::npos);
}

TEST_CASE("deferred slots are left to the caller") {
    Lab lab;
    ExecuteOptions opts;
    opts.deferred = {1};
    const auto obs = execute_round(lab.registry, std::vector<ToolCallRequest>{call("echo"), call("missing")}, opts);
    CHECK(obs[0].status == Status::Ok);
    CHECK(obs[1] == Observation{});
    CHECK(*lab.invocations == 1);
}

TEST_CASE("elapsed time is measured unless disabled") {
    Lab lab;
    const std::vector<ToolCallRequest> calls = {call("echo", {{"ms", 30}})};
    CHECK(execute_round(lab.registry, calls)[0].elapsed_ms >= 25);
    ExecuteOptions opts;
    opts.measure_elapsed = false;
    CHECK(execute_round(lab.registry, calls, opts)[0].elapsed_ms == 0);
}

TEST_CASE("concurrent rounds on one registry") {
    Lab lab;
    std::vector<std::thread> ts;
    std::atomic<int> good{0};
    for (int i = 0; i < 4; ++i)
        ts.emplace_back([&] {
            const auto obs = execute_round(lab.registry, std::vector<ToolCallRequest>(3, call("echo", {{"ms", 10}})));
            if (statuses(obs) == std::vector<Status>(3, Status::Ok)) ++good;
        });
    for (auto& t : ts) t.join();
    CHECK(good == 4);
}
