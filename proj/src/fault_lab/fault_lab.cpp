#include "agentool/fault_lab.hpp"

#include <cstdio>
#include <fstream>
#include <set>
#include <stdexcept>

#include "agentool/curation.hpp"

namespace agentool {

void FaultSchedule::validate(int max_rounds, int max_slots) const {
    std::set<std::pair<int, int>> seen;
    for (const auto& e : entries) {
        const auto at = "fault (" + std::to_string(e.round_index) + "," + std::to_string(e.slot) + ")";
        if (e.status == Status::Ok) throw std::invalid_argument(at + ": forced status must not be OK");
        if (e.round_index < 1 || e.round_index > max_rounds)
            throw std::invalid_argument(at + ": round outside 1.." + std::to_string(max_rounds));
        if (e.slot < 1 || e.slot > max_slots)
            throw std::invalid_argument(at + ": slot outside 1.." + std::to_string(max_slots));
        if (!seen.emplace(e.round_index, e.slot).second) throw std::invalid_argument(at + ": scheduled twice");
    }
}

std::optional<Status> FaultSchedule::lookup(int round_index, int slot) const {
    for (const auto& e : entries)
        if (e.round_index == round_index && e.slot == slot) return e.status;
    return std::nullopt;
}

FaultSchedule FaultSchedule::from_json(const Json& j) {
    if (!j.is_object() || !j.contains("entries") || !j["entries"].is_array())
        throw std::invalid_argument("fault schedule: expected an object with an 'entries' array");
    FaultSchedule s;
    for (const auto& e : j["entries"])
        s.entries.push_back({e.at("round").get<int>(), e.at("slot").get<int>(),
                             status_from_string(e.at("status").get<std::string>())});
    return s;
}

FaultSchedule FaultSchedule::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open fault schedule " + path.string());
    try {
        return from_json(Json::parse(in));
    } catch (const Json::exception& e) {
        throw std::runtime_error(path.string() + ": " + e.what());
    }
}

Json FaultSchedule::to_json() const {
    Json arr = Json::array();
    for (const auto& e : entries)
        arr.push_back({{"round", e.round_index}, {"slot", e.slot}, {"status", std::string(agentool::to_string(e.status))}});
    return {{"entries", arr}};
}

namespace {

class FaultAdapter final : public ToolAdapter {
public:
    FaultAdapter(std::shared_ptr<const ToolAdapter> inner, std::shared_ptr<const FaultSchedule> schedule)
        : inner_(std::move(inner)), schedule_(std::move(schedule)) {}

    Observation invoke(const ToolCallRequest& call, const CallContext& ctx) const override {
        if (auto forced = schedule_->lookup(ctx.round_index, ctx.slot))
            return Observation::failure(*forced, "injected fault at round " + std::to_string(ctx.round_index) +
                                                     " slot " + std::to_string(ctx.slot));
        return inner_->invoke(call, ctx);
    }

private:
    std::shared_ptr<const ToolAdapter> inner_;
    std::shared_ptr<const FaultSchedule> schedule_;
};

const std::set<std::string, std::less<>> kModelTools = {"standard_reasoner", "critical_reviewer",
                                                        "knowledge_searcher", "code_reasoner"};

void to_percent(std::map<std::string, double>& m, std::size_t total) {
    for (auto& [_, v] : m) v = total ? 100.0 * v / static_cast<double>(total) : 0.0;
}

}  // namespace

ToolRegistry wrap_registry(const ToolRegistry& registry, FaultSchedule schedule) {
    auto shared = std::make_shared<const FaultSchedule>(std::move(schedule));
    std::vector<RegisteredTool> tools;
    for (const auto& t : registry.tools())
        tools.push_back({t.spec, std::make_shared<FaultAdapter>(t.adapter, shared)});
    return ToolRegistry(std::move(tools));
}

UsageReport usage_report(const std::vector<Trajectory>& trajs, const std::string& default_model) {
    if (trajs.empty()) throw std::invalid_argument("usage report needs at least one trajectory");
    UsageReport r;
    r.trajectories = trajs.size();
    double rounds = 0, parallel = 0, cost = 0, recovered = 0;
    for (const auto& t : trajs) {
        rounds += static_cast<double>(t.rounds.size());
        cost += t.total_cost;
        std::size_t calls = 0;
        for (const auto& round : t.rounds) {
            calls += round.turn.calls.size();
            for (const auto& c : round.turn.calls) {
                if (c.tool_name == kFinalAnswerTool) continue;
                ++r.tool_share[c.tool_name];
                ++r.tool_calls;
                if (!kModelTools.count(c.tool_name)) continue;
                std::string model = default_model;
                for (const char* key : {"model_id", "model"})
                    if (auto it = c.arguments.find(key); it != c.arguments.end() && it->is_string()) {
                        model = it->get<std::string>();
                        break;
                    }
                ++r.model_share[model];
                ++r.model_calls;
            }
        }
        if (!t.rounds.empty()) parallel += static_cast<double>(calls) / static_cast<double>(t.rounds.size());
        if (has_recovery(t)) ++recovered;
    }
    to_percent(r.tool_share, r.tool_calls);
    to_percent(r.model_share, r.model_calls);
    const double n = static_cast<double>(trajs.size());
    r.mean_rounds = rounds / n;
    r.mean_parallelism = parallel / n;
    r.mean_cost = cost / n;
    r.recovery_rate = recovered / n;
    return r;
}

Json UsageReport::to_json() const {
    return {{"trajectories", trajectories},       {"tool_calls", tool_calls},
            {"model_calls", model_calls},         {"tool_share_percent", tool_share},
            {"model_share_percent", model_share}, {"mean_rounds", mean_rounds},
            {"mean_parallelism", mean_parallelism}, {"mean_cost", mean_cost},
            {"recovery_rate", recovery_rate}};
}

namespace {

std::string escape_xml(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '&': out += "&amp;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.1f", v);
    return buf;
}

void bars(std::string& svg, int& y, const std::string& title, const std::map<std::string, double>& shares) {
    constexpr int kLabel = 170, kWidth = 360, kRow = 22;
    svg += "<text x=\"10\" y=\"" + std::to_string(y) + "\" font-weight=\"bold\">" + escape_xml(title) + "</text>\n";
    y += 10;
    for (const auto& [name, pct] : shares) {
        const int w = static_cast<int>(pct / 100.0 * kWidth + 0.5);
        svg += "<text x=\"10\" y=\"" + std::to_string(y + 14) + "\">" + escape_xml(name) + "</text>\n";
        svg += "<rect x=\"" + std::to_string(kLabel) + "\" y=\"" + std::to_string(y + 2) + "\" width=\"" +
               std::to_string(w) + "\" height=\"16\" fill=\"#4477aa\"/>\n";
        svg += "<text x=\"" + std::to_string(kLabel + w + 6) + "\" y=\"" + std::to_string(y + 14) + "\">" +
               fmt(pct) + "%</text>\n";
        y += kRow;
    }
    y += 20;
}

}  // namespace

std::string usage_svg(const UsageReport& report) {
    std::string body;
    int y = 24;
    bars(body, y, "Tool call share", report.tool_share);
    bars(body, y, "Model call share", report.model_share);
    return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"" + std::to_string(y) +
           "\" font-family=\"sans-serif\" font-size=\"12\">\n" + body + "</svg>\n";
}

}  // namespace agentool
