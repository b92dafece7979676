#include "agentool/executor.hpp"

#include <algorithm>
#include <future>
#include <semaphore>
#include <thread>

namespace agentool {

ValidationReport validate(const ToolRegistry& registry, std::span<const ToolCallRequest> calls) {
    ValidationReport report;
    report.per_call.reserve(calls.size());
    report.reasons.reserve(calls.size());
    for (const auto& call : calls) {
        const ToolSpec* spec = registry.find(call.tool_name);
        std::string reason;
        if (!spec) reason = "unregistered tool '" + call.tool_name + "'";
        else reason = validate_arguments(spec->parameter_schema, call.arguments);
        report.per_call.push_back(reason.empty() ? 1 : 0);
        report.reasons.push_back(std::move(reason));
    }
    return report;
}

namespace {

constexpr auto kGrace = std::chrono::milliseconds(20);

// The adapter runs on a detached thread so a hung adapter cannot hold the
// round past its deadline; its late result is simply dropped.
Observation run_with_deadline(std::shared_ptr<const ToolAdapter> adapter, const ToolCallRequest& call,
                              const CallContext& ctx, const ToolSpec& spec) {
    auto promise = std::make_shared<std::promise<Observation>>();
    auto result = promise->get_future();
    std::thread([adapter = std::move(adapter), call, ctx, promise] {
        Observation o;
        try {
            o = adapter->invoke(call, ctx);
        } catch (const std::exception& e) {
            o = Observation::failure(Status::ExecErr, std::string("adapter error: ") + e.what());
        } catch (...) {
            o = Observation::failure(Status::ExecErr, "adapter error");
        }
        promise->set_value(std::move(o));
    }).detach();

    if (ctx.deadline == Clock::time_point::max()) return result.get();
    if (result.wait_until(ctx.deadline + kGrace) == std::future_status::ready) return result.get();
    return Observation::failure(Status::Timeout,
                                "'" + spec.name + "' exceeded its time limit of " +
                                    std::to_string(spec.timeout.count()) + " ms");
}

}  // namespace

std::vector<Observation> execute_round(const ToolRegistry& registry, std::span<const ToolCallRequest> calls,
                                       const ExecuteOptions& options, const CallContext& base) {
    if (calls.empty()) return {Observation::skipped("no parseable <tool_call> block in turn")};

    const auto report = validate(registry, calls);
    std::vector<Observation> out(calls.size());
    std::vector<std::size_t> runnable;
    for (std::size_t j = 0; j < calls.size(); ++j) {
        if (std::find(options.deferred.begin(), options.deferred.end(), j) != options.deferred.end()) continue;
        if (!report.per_call[j]) out[j] = Observation::skipped(report.reasons[j]);
        else if (static_cast<int>(j) >= options.max_calls) out[j] = Observation::skipped("parallelism budget exceeded");
        else runnable.push_back(j);
    }

    std::counting_semaphore<> in_flight(std::max(1, options.parallel_limit));
    {
        std::vector<std::jthread> workers;
        workers.reserve(runnable.size());
        for (std::size_t j : runnable) {
            workers.emplace_back([&, j] {
                in_flight.acquire();
                const ToolSpec& spec = *registry.find(calls[j].tool_name);
                CallContext ctx = base;
                ctx.slot = static_cast<int>(j) + 1;
                const auto start = Clock::now();
                ctx.deadline = std::min(base.deadline, start + spec.timeout);

                Observation o = run_with_deadline(registry.shared_adapter(spec.name), calls[j], ctx, spec);
                in_flight.release();

                if (options.measure_elapsed)
                    o.elapsed_ms =
                        std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() - start).count();
                o.executed = true;
                o.cost_units = spec.cost_units;
                if (o.status != Status::Ok) {
                    o.value.reset();
                    if (o.diagnostic.empty()) o.diagnostic = std::string(to_string(o.status));
                }
                out[j] = std::move(o);
            });
        }
    }
    return out;
}

}  // namespace agentool
