#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "agentool/protocol/types.hpp"

namespace agentool {

/// Parses one manager output.
///
/// The accepted template is exactly one `<reasoning>...</reasoning>` block
/// followed by one or more `<tool_call>...</tool_call>` blocks, whitespace
/// only in between. Every call block must hold a JSON object with exactly the
/// fields `name` (non-empty string) and `arguments` (object).
///
/// Never fails. When the template is violated the turn is marked not
/// well-formed and every call block that still parses on its own is kept.
ManagerTurn parse_manager_turn(std::string_view raw);

/// Fmt(y_t): 1 iff the turn matched the template.
int check_format(const ManagerTurn& turn);

/// Parses the body of a single `<tool_call>` block. Empty on any schema violation.
std::optional<ToolCallRequest> parse_call_block(std::string_view body);

/// Canonical wire text for a turn. Re-parsing the result of a well-formed
/// turn reproduces its reasoning and calls.
std::string serialize_turn(std::string_view reasoning, const std::vector<ToolCallRequest>& calls);
std::string serialize_turn(const ManagerTurn& turn);

/// Content of the first `<tag>...</tag>` block, if any.
std::optional<std::string> extract_tag(std::string_view text, std::string_view tag);
/// Content of the last `<tag>...</tag>` block, if any.
std::optional<std::string> extract_last_tag(std::string_view text, std::string_view tag);

/// Argument of the last `\boxed{...}` in `text`, brace-balanced and
/// whitespace-normalized.
std::optional<std::string> extract_boxed(std::string_view text);

/// Trim plus collapse of internal whitespace runs to a single space.
std::string collapse_whitespace(std::string_view text);

}  // namespace agentool
