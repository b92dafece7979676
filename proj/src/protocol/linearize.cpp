#include "agentool/protocol/linearize.hpp"

#include <stdexcept>

namespace agentool {

std::vector<std::string> whitespace_tokenize(std::string_view text) {
    constexpr std::string_view kWs = " \t\r\n\f\v";
    std::vector<std::string> out;
    std::size_t pos = text.find_first_not_of(kWs);
    while (pos != std::string_view::npos) {
        const auto end = text.find_first_of(kWs, pos);
        out.emplace_back(text.substr(pos, end == std::string_view::npos ? end : end - pos));
        if (end == std::string_view::npos) break;
        pos = text.find_first_not_of(kWs, end);
    }
    return out;
}

std::string render_observation(std::string_view tool_name, const Observation& obs) {
    std::string out = "<tool_response name=";
    out += tool_name;
    out += " status=";
    out += to_string(obs.status);
    out += ">";
    if (obs.status == Status::Ok && obs.value) {
        if (obs.value->is_string()) out += obs.value->get<std::string>();
        else out += obs.value->dump(-1, ' ', false, Json::error_handler_t::replace);
    } else {
        out += obs.diagnostic;
    }
    out += "</tool_response>";
    return out;
}

std::string render_round_observations(const RoundRecord& round) {
    std::string out;
    for (std::size_t j = 0; j < round.observations.size(); ++j) {
        if (j) out += "\n";
        const std::string_view name =
            j < round.turn.calls.size() ? std::string_view(round.turn.calls[j].tool_name) : "unknown";
        out += render_observation(name, round.observations[j]);
    }
    return out;
}

namespace {

void append(LinearizedSequence& seq, const Tokenizer& tok, std::string_view text, std::uint8_t m) {
    for (auto& t : tok(text)) {
        seq.tokens.push_back(std::move(t));
        seq.mask.push_back(m);
    }
}

}  // namespace

LinearizedSequence linearize(const Trajectory& traj, const Tokenizer& tokenizer) {
    if (traj.rounds.empty()) throw std::invalid_argument("cannot linearize a trajectory with zero rounds");
    LinearizedSequence seq;
    append(seq, tokenizer, traj.question, 0);
    for (const auto& round : traj.rounds) {
        append(seq, tokenizer, round.turn.raw_text, 1);
        append(seq, tokenizer, render_round_observations(round), 0);
    }
    return seq;
}

std::size_t linearized_length(const Trajectory& traj, const Tokenizer& tokenizer) {
    std::size_t n = tokenizer(traj.question).size();
    for (const auto& round : traj.rounds)
        n += tokenizer(round.turn.raw_text).size() + tokenizer(render_round_observations(round)).size();
    return n;
}

}  // namespace agentool
