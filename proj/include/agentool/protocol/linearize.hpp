#pragma once

#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "agentool/protocol/types.hpp"

namespace agentool {

/// Maps a text segment to tokens. Must be deterministic.
using Tokenizer = std::function<std::vector<std::string>(std::string_view)>;

/// Whitespace-split tokenizer: one word is one token.
std::vector<std::string> whitespace_tokenize(std::string_view text);

/// Text form of one observation as the manager sees it, e.g.
/// `<tool_response name=python status=OK>2</tool_response>`.
std::string render_observation(std::string_view tool_name, const Observation& obs);

/// All observations of a round, one per line, aligned with the turn's calls.
std::string render_round_observations(const RoundRecord& round);

/// Builds Seq(tau): question, then per round the manager turn followed by
/// its observations. Mask is 1 exactly on manager-turn tokens.
/// Throws std::invalid_argument for a trajectory without rounds.
LinearizedSequence linearize(const Trajectory& traj, const Tokenizer& tokenizer);

/// Number of tokens `linearize` would produce.
std::size_t linearized_length(const Trajectory& traj, const Tokenizer& tokenizer);

}  // namespace agentool
