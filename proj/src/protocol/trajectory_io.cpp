#include "agentool/protocol/trajectory_io.hpp"

#include <fstream>
#include <stdexcept>

namespace agentool {

Json to_json(const ToolCallRequest& call) {
    return {{"name", call.tool_name}, {"arguments", call.arguments}};
}

Json to_json(const Observation& obs) {
    return {
        {"value", obs.value ? *obs.value : Json(nullptr)},
        {"status", std::string(to_string(obs.status))},
        {"diagnostic", obs.diagnostic},
        {"elapsed_ms", obs.elapsed_ms},
        {"cost_units", obs.cost_units},
        {"executed", obs.executed},
        {"tool_tokens", obs.tool_tokens},
    };
}

Json to_json(const ManagerTurn& turn) {
    Json calls = Json::array();
    for (const auto& c : turn.calls) calls.push_back(to_json(c));
    return {
        {"raw_text", turn.raw_text},
        {"reasoning", turn.reasoning ? Json(*turn.reasoning) : Json(nullptr)},
        {"calls", std::move(calls)},
        {"well_formed", turn.well_formed},
    };
}

Json to_json(const RoundRecord& round) {
    Json obs = Json::array();
    for (const auto& o : round.observations) obs.push_back(to_json(o));
    return {{"round_index", round.round_index}, {"turn", to_json(round.turn)}, {"observations", std::move(obs)}};
}

Json to_json(const Trajectory& traj) {
    Json rounds = Json::array();
    for (const auto& r : traj.rounds) rounds.push_back(to_json(r));
    return {
        {"question", traj.question},
        {"rounds", std::move(rounds)},
        {"final_answer", traj.final_answer ? Json(*traj.final_answer) : Json(nullptr)},
        {"round_count", traj.round_count},
        {"total_tokens", traj.total_tokens},
        {"total_cost", traj.total_cost},
        {"budget_forced", traj.budget_forced},
        {"error", traj.error ? Json(*traj.error) : Json(nullptr)},
    };
}

Json to_json(const LinearizedSequence& seq) {
    Json j = {{"tokens", seq.tokens}, {"mask", seq.mask}};
    if (seq.logp_new) j["logp_new"] = *seq.logp_new;
    if (seq.logp_old) j["logp_old"] = *seq.logp_old;
    return j;
}

namespace {

std::optional<std::string> opt_string(const Json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return std::nullopt;
    return it->get<std::string>();
}

}  // namespace

ToolCallRequest call_from_json(const Json& j) {
    return {j.at("name").get<std::string>(), j.value("arguments", Json::object())};
}

Observation observation_from_json(const Json& j) {
    Observation o;
    if (auto it = j.find("value"); it != j.end() && !it->is_null()) o.value = *it;
    o.status = status_from_string(j.at("status").get<std::string>());
    o.diagnostic = j.value("diagnostic", std::string{});
    o.elapsed_ms = j.value("elapsed_ms", std::int64_t{0});
    o.cost_units = j.value("cost_units", 0.0);
    o.executed = j.value("executed", true);
    o.tool_tokens = j.value("tool_tokens", std::int64_t{0});
    return o;
}

ManagerTurn turn_from_json(const Json& j) {
    ManagerTurn t;
    t.raw_text = j.value("raw_text", std::string{});
    t.reasoning = opt_string(j, "reasoning");
    for (const auto& c : j.value("calls", Json::array())) t.calls.push_back(call_from_json(c));
    t.well_formed = j.value("well_formed", false);
    return t;
}

RoundRecord round_from_json(const Json& j) {
    RoundRecord r;
    r.round_index = j.value("round_index", 1);
    r.turn = turn_from_json(j.at("turn"));
    for (const auto& o : j.value("observations", Json::array())) r.observations.push_back(observation_from_json(o));
    return r;
}

Trajectory trajectory_from_json(const Json& j) {
    Trajectory t;
    t.question = j.at("question").get<std::string>();
    for (const auto& r : j.value("rounds", Json::array())) t.rounds.push_back(round_from_json(r));
    t.final_answer = opt_string(j, "final_answer");
    t.round_count = j.value("round_count", static_cast<int>(t.rounds.size()));
    t.total_tokens = j.value("total_tokens", std::int64_t{0});
    t.total_cost = j.value("total_cost", 0.0);
    t.budget_forced = j.value("budget_forced", false);
    t.error = opt_string(j, "error");
    return t;
}

LinearizedSequence sequence_from_json(const Json& j) {
    LinearizedSequence s;
    for (const auto& tok : j.at("tokens")) s.tokens.push_back(tok.is_string() ? tok.get<std::string>() : tok.dump());
    s.mask = j.at("mask").get<std::vector<std::uint8_t>>();
    if (auto it = j.find("logp_new"); it != j.end() && !it->is_null()) s.logp_new = it->get<std::vector<double>>();
    if (auto it = j.find("logp_old"); it != j.end() && !it->is_null()) s.logp_old = it->get<std::vector<double>>();
    s.check_shape();
    return s;
}

std::vector<Json> read_jsonl(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::vector<Json> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        Json j = Json::parse(line, nullptr, false);
        if (j.is_discarded())
            throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": malformed JSON");
        out.push_back(std::move(j));
    }
    return out;
}

void write_jsonl_line(std::ostream& out, const Json& record) {
    out << record.dump(-1, ' ', false, Json::error_handler_t::replace) << '\n';
}

void write_jsonl(const std::filesystem::path& path, const std::vector<Json>& records) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    for (const auto& r : records) write_jsonl_line(out, r);
}

std::vector<Trajectory> read_trajectories(const std::filesystem::path& path) {
    std::vector<Trajectory> out;
    for (const auto& j : read_jsonl(path)) out.push_back(trajectory_from_json(j));
    return out;
}

void write_trajectories(const std::filesystem::path& path, const std::vector<Trajectory>& trajs) {
    std::vector<Json> records;
    records.reserve(trajs.size());
    for (const auto& t : trajs) records.push_back(to_json(t));
    write_jsonl(path, records);
}

}  // namespace agentool
