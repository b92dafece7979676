// Serial references against the OpenMP batch kernels.

#include <benchmark/benchmark.h>

#include <random>

#include "agentool/eval/harness.hpp"
#include "agentool/rewards.hpp"
#include "agentool/rl_math.hpp"
#include "traj_builder.hpp"

using namespace agentool;

namespace {

struct RewardBatch {
    std::vector<Trajectory> trajs;
    std::vector<std::string> truths;
};

const RewardBatch& reward_batch(std::size_t n) {
    static std::map<std::size_t, RewardBatch> cache;
    auto& b = cache[n];
    if (b.trajs.empty()) {
        std::mt19937_64 rng(1);
        for (std::size_t i = 0; i < n; ++i) {
            b.trajs.push_back(fixtures::build(oracles::random_params(rng)));
            b.truths.push_back("42");
        }
    }
    return b;
}

const std::vector<Group>& groups(std::size_t n) {
    static std::map<std::size_t, std::vector<Group>> cache;
    auto& out = cache[n];
    if (out.empty()) {
        std::mt19937_64 rng(2);
        std::uniform_real_distribution<double> lp(-3.0, 0.0), r(0.0, 4.0);
        for (std::size_t g = 0; g < n; ++g) {
            Group grp;
            for (int s = 0; s < 8; ++s) {
                grp.rewards.push_back(r(rng));
                LinearizedSequence seq;
                const std::size_t len = 2048;
                seq.tokens.assign(len, "t");
                std::vector<double> a(len), b(len);
                for (std::size_t k = 0; k < len; ++k) {
                    b[k] = lp(rng);
                    a[k] = b[k] + 0.01 * (lp(rng) + 1.5);
                    seq.mask.push_back(rng() % 3 != 0);
                }
                seq.logp_new = a;
                seq.logp_old = b;
                grp.sequences.push_back(std::move(seq));
            }
            out.push_back(std::move(grp));
        }
    }
    return out;
}

template <auto Fn>
void BM_score_batch(benchmark::State& state) {
    const auto& b = reward_batch(static_cast<std::size_t>(state.range(0)));
    RewardConfig cfg;
    for (auto _ : state) benchmark::DoNotOptimize(Fn(b.trajs, b.truths, cfg));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

template <auto Fn>
void BM_score_groups(benchmark::State& state) {
    const auto& g = groups(static_cast<std::size_t>(state.range(0)));
    GrpoConfig cfg;
    for (auto _ : state) benchmark::DoNotOptimize(Fn(g, cfg));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

template <auto Fn>
void BM_run_episodes(benchmark::State& state) {
    auto cfg = load_config(std::nullopt, {}, {{"eval.seed", "3"}, {"eval.k", "8"}});
    std::vector<EvalItem> items;
    for (int i = 0; i < state.range(0); ++i) items.push_back({"question " + std::to_string(i), "42"});
    const auto factory = make_mock_factory(cfg);
    for (auto _ : state) benchmark::DoNotOptimize(Fn(items, *factory, cfg));
    state.SetItemsProcessed(state.iterations() * state.range(0) * 8);
}

}  // namespace

BENCHMARK(BM_score_batch<score_batch_serial>)->Arg(1000)->Arg(10000);
BENCHMARK(BM_score_batch<score_batch>)->Arg(1000)->Arg(10000);
BENCHMARK(BM_score_groups<score_groups_serial>)->Arg(64)->Arg(256);
BENCHMARK(BM_score_groups<score_groups>)->Arg(64)->Arg(256);
BENCHMARK(BM_run_episodes<run_episodes_serial>)->Arg(16)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_run_episodes<run_episodes>)->Arg(16)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
