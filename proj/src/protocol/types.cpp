#include "agentool/protocol/types.hpp"

#include <stdexcept>

namespace agentool {

std::string_view to_string(Status s) {
    switch (s) {
        case Status::Ok: return "OK";
        case Status::ParseErr: return "PARSE_ERR";
        case Status::ExecErr: return "EXEC_ERR";
        case Status::Timeout: return "TIMEOUT";
    }
    return "EXEC_ERR";
}

Status status_from_string(std::string_view s) {
    if (s == "OK") return Status::Ok;
    if (s == "PARSE_ERR") return Status::ParseErr;
    if (s == "EXEC_ERR") return Status::ExecErr;
    if (s == "TIMEOUT") return Status::Timeout;
    throw std::invalid_argument("unknown status '" + std::string(s) + "'");
}

Observation Observation::ok(Json value, double cost) {
    Observation o;
    o.value = std::move(value);
    o.status = Status::Ok;
    o.cost_units = cost;
    return o;
}

Observation Observation::failure(Status status, std::string diagnostic, double cost) {
    Observation o;
    o.status = status;
    o.diagnostic = std::move(diagnostic);
    o.cost_units = cost;
    return o;
}

Observation Observation::skipped(std::string reason) {
    Observation o = failure(Status::ParseErr, std::move(reason), 0.0);
    o.executed = false;
    return o;
}

void Trajectory::recount() {
    round_count = static_cast<int>(rounds.size());
    total_cost = 0.0;
    for (const auto& r : rounds)
        for (const auto& o : r.observations) total_cost += o.cost_units;
}

void LinearizedSequence::check_shape() const {
    if (mask.size() != tokens.size())
        throw std::invalid_argument("mask length differs from token count");
    if (logp_new && logp_new->size() != tokens.size())
        throw std::invalid_argument("logp_new length differs from token count");
    if (logp_old && logp_old->size() != tokens.size())
        throw std::invalid_argument("logp_old length differs from token count");
}

}  // namespace agentool
