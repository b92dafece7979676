// agentool: command-line front end (run, score, grpo-score, curate,
// validate-config, fault-run).

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <set>

#include <CLI11.hpp>

#include "agentool/curation.hpp"
#include "agentool/eval/config.hpp"
#include "agentool/eval/harness.hpp"
#include "agentool/fault_lab.hpp"
#include "agentool/protocol/trajectory_io.hpp"
#include "agentool/rewards.hpp"
#include "agentool/rl_math.hpp"

using namespace agentool;
namespace fs = std::filesystem;

namespace {

struct ConfigArgs {
    std::string path;
    std::vector<std::string> sets;

    void add_to(CLI::App* app) {
        app->add_option("-c,--config", path, "YAML config file")->check(CLI::ExistingFile);
        app->add_option("--set", sets, "override, section.key=value (repeatable)");
    }

    RuntimeConfig load(Overrides extra = {}) const {
        auto flags = parse_overrides(sets);
        // explicit --set wins over convenience flags
        for (auto& [k, v] : extra) flags.emplace(k, v);
        return load_config(path.empty() ? std::nullopt : std::optional<fs::path>(path), environment_overrides(), flags);
    }
};

// Commands that never run episodes; the mock seed they must carry is unused.
const Overrides kNoEpisodes = {{"eval.seed", "0"}};

void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
}

// Registry with faults injected, delegating episodes to the wrapped factory.
class FaultFactory final : public BackendFactory {
public:
    FaultFactory(std::unique_ptr<BackendFactory> inner, FaultSchedule schedule)
        : inner_(std::move(inner)), registry_(wrap_registry(inner_->registry(), std::move(schedule))) {}
    const ToolRegistry& registry() const override { return registry_; }
    EpisodeBackends episode(const EvalItem& item, std::size_t q, int s) const override { return inner_->episode(item, q, s); }

private:
    std::unique_ptr<BackendFactory> inner_;
    ToolRegistry registry_;
};

Overrides run_shortcuts(const std::string& questions, const std::string& truth, const std::string& out,
                        const std::string& seed, const std::string& k, const std::string& mode) {
    // paths given on the command line are relative to the working directory
    auto abs = [](const std::string& p) { return fs::absolute(p).string(); };
    Overrides o;
    if (!questions.empty()) o["eval.questions_file"] = abs(questions);
    if (!truth.empty()) o["eval.ground_truth_file"] = abs(truth);
    if (!out.empty()) o["eval.output_dir"] = abs(out);
    if (!seed.empty()) o["eval.seed"] = seed;
    if (!k.empty()) o["eval.k"] = k;
    if (!mode.empty()) o["eval.backend_mode"] = mode;
    return o;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Parallel tool-calling orchestration runtime"};
    app.require_subcommand(1);

    // run
    ConfigArgs run_cfg;
    std::string run_q, run_gt, run_out, run_seed, run_k, run_mode;
    auto* run = app.add_subcommand("run", "run k episodes per question and write trajectories");
    run_cfg.add_to(run);
    run->add_option("--questions", run_q, "questions JSONL");
    run->add_option("--ground-truth", run_gt, "answers JSONL aligned with the questions");
    run->add_option("-o,--out", run_out, "output directory");
    run->add_option("--seed", run_seed, "mock seed");
    run->add_option("-k", run_k, "episodes per question");
    run->add_option("--backend", run_mode, "mock or remote")->check(CLI::IsMember({"mock", "remote"}));

    // score
    ConfigArgs score_cfg;
    std::string score_traj, score_gt, score_out;
    auto* score = app.add_subcommand("score", "reward breakdown per trajectory");
    score_cfg.add_to(score);
    score->add_option("-t,--trajectories", score_traj, "trajectory JSONL")->required()->check(CLI::ExistingFile);
    score->add_option("-g,--ground-truth", score_gt, "answers JSONL")->required()->check(CLI::ExistingFile);
    score->add_option("-o,--out", score_out, "breakdown JSONL (default stdout)");

    // grpo-score
    ConfigArgs grpo_cfg;
    std::string grpo_in, grpo_out;
    auto* grpo = app.add_subcommand("grpo-score", "advantages, ratios and surrogate per group");
    grpo_cfg.add_to(grpo);
    grpo->add_option("-i,--groups", grpo_in, "group JSONL")->required()->check(CLI::ExistingFile);
    grpo->add_option("-o,--out", grpo_out, "result JSONL (default stdout)");

    // curate
    ConfigArgs cur_cfg;
    std::string cur_in, cur_out;
    auto* curate = app.add_subcommand("curate", "RL filtering, SFT selection, balance and dedup");
    cur_cfg.add_to(curate);
    curate->add_option("-i,--instances", cur_in, "sampled-instance JSONL")->required()->check(CLI::ExistingFile);
    curate->add_option("-o,--out", cur_out, "output directory")->required();

    // validate-config
    ConfigArgs val_cfg;
    auto* validate = app.add_subcommand("validate-config", "load, validate and print the effective config");
    val_cfg.add_to(validate);

    // fault-run
    ConfigArgs fault_cfg;
    std::string fault_sched, fault_q, fault_gt, fault_out, fault_seed, fault_k;
    bool fault_plot = false;
    auto* fault = app.add_subcommand("fault-run", "mock episodes under a fault schedule, with a usage report");
    fault_cfg.add_to(fault);
    fault->add_option("-s,--schedule", fault_sched, "fault schedule JSON")->required()->check(CLI::ExistingFile);
    fault->add_option("--questions", fault_q, "questions JSONL");
    fault->add_option("--ground-truth", fault_gt, "answers JSONL");
    fault->add_option("-o,--out", fault_out, "output directory");
    fault->add_option("--seed", fault_seed, "mock seed");
    fault->add_option("-k", fault_k, "episodes per question");
    fault->add_flag("--plot", fault_plot, "also write usage.svg");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) {
            const auto cfg = run_cfg.load(run_shortcuts(run_q, run_gt, run_out, run_seed, run_k, run_mode));
            const auto s = run_eval(cfg);
            std::printf("episodes=%zu aborted=%zu mean@%d=%.6f\n", s.results.size(), s.aborted, s.k, s.mean_at_k);
            return 0;
        }

        if (score->parsed()) {
            const auto cfg = score_cfg.load(kNoEpisodes);
            const auto trajs = read_trajectories(score_traj);
            const auto gt = GroundTruth::load(score_gt);
            std::vector<std::string> truths;
            for (std::size_t i = 0; i < trajs.size(); ++i) truths.push_back(gt.lookup(trajs[i], i));
            const auto scores = score_batch(trajs, truths, cfg.reward);

            std::vector<Json> records;
            RewardBreakdown mean;
            for (std::size_t i = 0; i < scores.size(); ++i) {
                auto j = to_json(scores[i]);
                j["question"] = trajs[i].question;
                records.push_back(std::move(j));
                mean.task += scores[i].task;
                mean.format += scores[i].format;
                mean.diversity += scores[i].diversity;
                mean.efficiency += scores[i].efficiency;
                mean.total += scores[i].total;
            }
            const double n = scores.empty() ? 1.0 : static_cast<double>(scores.size());
            Json summary = {{"trajectories", scores.size()}, {"mean_task", mean.task / n},
                            {"mean_format", mean.format / n}, {"mean_diversity", mean.diversity / n},
                            {"mean_efficiency", mean.efficiency / n}, {"mean_total", mean.total / n}};
            if (score_out.empty()) {
                for (const auto& r : records) write_jsonl_line(std::cout, r);
                std::cerr << summary.dump() << "\n";
            } else {
                write_jsonl(score_out, records);
                std::cout << summary.dump(2) << "\n";
            }
            return 0;
        }

        if (grpo->parsed()) {
            const auto cfg = grpo_cfg.load(kNoEpisodes);
            std::vector<Group> groups;
            for (const auto& j : read_jsonl(grpo_in)) {
                Group g;
                g.rewards = j.at("rewards").get<std::vector<double>>();
                for (const auto& s : j.at("sequences")) g.sequences.push_back(sequence_from_json(s));
                groups.push_back(std::move(g));
            }
            const auto scores = score_groups(groups, cfg.grpo);
            std::vector<Json> records;
            for (const auto& s : scores)
                records.push_back({{"advantages", s.advantages}, {"ratios", s.ratios}, {"surrogate", s.surrogate}});
            if (grpo_out.empty()) for (const auto& r : records) write_jsonl_line(std::cout, r);
            else write_jsonl(grpo_out, records);
            return 0;
        }

        if (curate->parsed()) {
            const auto cfg = cur_cfg.load(kNoEpisodes);
            std::vector<SampledInstance> instances;
            for (const auto& j : read_jsonl(cur_in)) {
                SampledInstance inst;
                inst.question = j.at("question").get<std::string>();
                inst.ground_truth = j.value("ground_truth", "");
                for (const auto& t : j.at("trajectories")) inst.trajectories.push_back(trajectory_from_json(t));
                inst.correctness = j.at("correctness").get<std::vector<int>>();
                inst.check();
                instances.push_back(std::move(inst));
            }

            const auto rl = filter_rl_instances(instances, cfg.curation);
            std::vector<std::string> rl_questions;
            for (const auto& i : rl) rl_questions.push_back(i.question);
            std::set<std::string> rl_norm;
            for (const auto& q : rl_questions) rl_norm.insert(normalize_question(q));

            std::vector<Trajectory> selected;
            std::size_t no_correct = 0, overlap = 0;
            for (const auto& inst : instances) {
                auto t = select_sft_trajectory(inst);
                if (!t) { ++no_correct; continue; }
                if (rl_norm.count(normalize_question(inst.question))) { ++overlap; continue; }
                selected.push_back(std::move(*t));
            }
            const auto balanced = enforce_tool_balance(selected, cfg.curation);

            fs::create_directories(cur_out);
            write_trajectories(fs::path(cur_out) / "sft.jsonl", balanced.kept);
            std::vector<Json> rl_records;
            for (const auto& i : rl) rl_records.push_back({{"question", i.question}, {"ground_truth", i.ground_truth}});
            write_jsonl(fs::path(cur_out) / "rl.jsonl", rl_records);

            std::map<std::string, double> share;
            for (const auto& t : balanced.kept) share[dominant_tool(t).empty() ? "(none)" : dominant_tool(t)] += 1;
            for (auto& [_, v] : share) v = 100.0 * v / static_cast<double>(balanced.kept.size());
            Json report = {
                {"instances", instances.size()},
                {"rl_kept", rl.size()},
                {"rl_dropped_unanimous", instances.size() - rl.size()},
                {"sft_kept", balanced.kept.size()},
                {"sft_dropped",
                 {{"no_correct_trajectory", no_correct}, {"overlaps_rl", overlap}, {"tool_balance", balanced.dropped.size()}}},
                {"balance_cap", cfg.curation.balance_cap},
                {"dominant_tool_share_percent", share},
            };
            write_text(fs::path(cur_out) / "report.json", report.dump(2) + "\n");
            std::cout << report.dump(2) << "\n";
            return 0;
        }

        if (validate->parsed()) {
            const auto cfg = val_cfg.load();
            std::cout << cfg.to_json().dump(2) << "\n";
            return 0;
        }

        if (fault->parsed()) {
            auto cfg = fault_cfg.load(run_shortcuts(fault_q, fault_gt, fault_out, fault_seed, fault_k, "mock"));
            auto schedule = FaultSchedule::load(fault_sched);
            schedule.validate(cfg.orchestrator.max_rounds, cfg.orchestrator.max_parallel);
            const auto items = load_eval_items(cfg.eval.questions_file, cfg.eval.ground_truth_file);
            FaultFactory factory(make_mock_factory(cfg), schedule);
            const auto s = run_episodes(items, factory, cfg);
            write_eval_outputs(cfg.eval.output_dir, s);

            std::vector<Trajectory> trajs;
            for (const auto& r : s.results) trajs.push_back(r.trajectory);
            const auto usage = usage_report(trajs, cfg.models.default_model.empty() ? "mock-model" : cfg.models.default_model);
            Json report = {{"schedule", schedule.to_json()}, {"usage", usage.to_json()}, {"mean_at_k", s.mean_at_k},
                           {"aborted", s.aborted}};
            write_text(cfg.eval.output_dir / "report.json", report.dump(2) + "\n");
            if (fault_plot) write_text(cfg.eval.output_dir / "usage.svg", usage_svg(usage));
            std::cout << report.dump(2) << "\n";
            return 0;
        }
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
