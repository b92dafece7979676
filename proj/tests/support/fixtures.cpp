#include "fixtures.hpp"

#include <atomic>
#include <random>
#include <thread>

#include "agentool/tools/mock_services.hpp"

namespace fixtures {

namespace {

class CountingAdapter final : public ToolAdapter {
public:
    CountingAdapter(std::shared_ptr<std::atomic<int>> n, std::chrono::milliseconds delay) : n_(std::move(n)), delay_(delay) {}
    Observation invoke(const ToolCallRequest& c, const CallContext& ctx) const override {
        ++*n_;
        if (delay_.count()) std::this_thread::sleep_for(delay_);
        return Observation::ok(c.tool_name + ":" + std::to_string(ctx.slot));
    }

private:
    std::shared_ptr<std::atomic<int>> n_;
    std::chrono::milliseconds delay_;
};

}  // namespace

RoundRecord ok_round(int index, const std::vector<ToolCallRequest>& calls) {
    RoundRecord r;
    r.round_index = index;
    r.turn = turn("step " + std::to_string(index), calls);
    for (const auto& c : calls) {
        auto it = builtin_cost_table().find(c.tool_name);
        r.observations.push_back(ok(it == builtin_cost_table().end() ? 1.0 : it->second));
    }
    return r;
}

CountingRegistry counting_registry(const std::vector<std::string>& names, std::chrono::milliseconds delay) {
    CountingRegistry out;
    std::vector<RegisteredTool> tools;
    for (const auto& n : names) {
        ToolSpec spec;
        spec.name = n;
        spec.parameter_schema = {{"type", "object"}};
        spec.cost_units = 1.0;
        tools.push_back({spec, std::make_shared<CountingAdapter>(out.invocations, delay)});
    }
    out.registry = ToolRegistry(std::move(tools));
    return out;
}

ToolRegistry mock_builtin_registry() {
    auto pool = std::make_shared<ModelPool>();
    pool->add({"mock://pool", "mock-model"}, std::make_shared<RoleAwareMockChat>());
    pool->set_default("mock-model");
    ToolServices s;
    s.pool = pool;
    s.retrieval = std::make_shared<MockRetrievalService>();
    s.sandbox = std::make_shared<MockSandboxService>();
    return register_builtin_tools(s);
}

std::filesystem::path temp_dir(const std::string& tag) {
    static std::atomic<int> counter{0};
    std::random_device rd;
    auto p = std::filesystem::temp_directory_path() /
             ("agentool-" + tag + "-" + std::to_string(rd()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p;
}

std::filesystem::path data_dir() { return AGENTOOL_TEST_DATA_DIR; }

}  // namespace fixtures
