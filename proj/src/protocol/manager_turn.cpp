#include "agentool/protocol/manager_turn.hpp"

namespace agentool {

namespace {

constexpr std::string_view kWs = " \t\r\n\f\v";
constexpr std::string_view kReasonOpen = "<reasoning>";
constexpr std::string_view kReasonClose = "</reasoning>";
constexpr std::string_view kCallOpen = "<tool_call>";
constexpr std::string_view kCallClose = "</tool_call>";

std::size_t skip_ws(std::string_view s, std::size_t pos) {
    auto p = s.find_first_not_of(kWs, pos);
    return p == std::string_view::npos ? s.size() : p;
}

bool at(std::string_view s, std::size_t pos, std::string_view token) {
    return s.substr(pos, token.size()) == token;
}

// Strict pass over the template. Returns false on the first deviation.
bool parse_strict(std::string_view raw, std::string& reasoning, std::vector<ToolCallRequest>& calls) {
    std::size_t pos = skip_ws(raw, 0);
    if (!at(raw, pos, kReasonOpen)) return false;
    const std::size_t body = pos + kReasonOpen.size();
    const std::size_t close = raw.find(kReasonClose, body);
    if (close == std::string_view::npos) return false;
    const auto content = raw.substr(body, close - body);
    if (content.find(kReasonOpen) != std::string_view::npos) return false;
    reasoning.assign(content);
    pos = close + kReasonClose.size();

    while (true) {
        pos = skip_ws(raw, pos);
        if (pos == raw.size()) break;
        if (!at(raw, pos, kCallOpen)) return false;
        const std::size_t call_body = pos + kCallOpen.size();
        const std::size_t call_close = raw.find(kCallClose, call_body);
        if (call_close == std::string_view::npos) return false;
        const auto block = raw.substr(call_body, call_close - call_body);
        if (block.find(kCallOpen) != std::string_view::npos) return false;
        auto call = parse_call_block(block);
        if (!call) return false;
        calls.push_back(std::move(*call));
        pos = call_close + kCallClose.size();
    }
    return !calls.empty();
}

std::vector<ToolCallRequest> salvage_calls(std::string_view raw) {
    std::vector<ToolCallRequest> calls;
    std::size_t pos = 0;
    while (true) {
        std::size_t open = raw.find(kCallOpen, pos);
        if (open == std::string_view::npos) break;
        const std::size_t close = raw.find(kCallClose, open + kCallOpen.size());
        if (close == std::string_view::npos) break;
        // an unclosed opener followed by a complete block: use the innermost opener
        for (std::size_t next = raw.find(kCallOpen, open + kCallOpen.size());
             next != std::string_view::npos && next < close;
             next = raw.find(kCallOpen, open + kCallOpen.size()))
            open = next;
        const std::size_t body = open + kCallOpen.size();
        if (auto call = parse_call_block(raw.substr(body, close - body))) calls.push_back(std::move(*call));
        pos = close + kCallClose.size();
    }
    return calls;
}

}  // namespace

std::optional<ToolCallRequest> parse_call_block(std::string_view body) {
    Json j = Json::parse(body.begin(), body.end(), nullptr, /*allow_exceptions=*/false);
    if (j.is_discarded() || !j.is_object() || j.size() != 2) return std::nullopt;
    auto name = j.find("name");
    auto args = j.find("arguments");
    if (name == j.end() || args == j.end()) return std::nullopt;
    if (!name->is_string() || !args->is_object()) return std::nullopt;
    auto tool = name->get<std::string>();
    if (tool.empty()) return std::nullopt;
    return ToolCallRequest{std::move(tool), std::move(*args)};
}

ManagerTurn parse_manager_turn(std::string_view raw) {
    ManagerTurn turn;
    turn.raw_text.assign(raw);

    std::string reasoning;
    std::vector<ToolCallRequest> calls;
    if (parse_strict(raw, reasoning, calls)) {
        turn.reasoning = std::move(reasoning);
        turn.calls = std::move(calls);
        turn.well_formed = true;
        return turn;
    }
    turn.reasoning = extract_tag(raw, "reasoning");
    turn.calls = salvage_calls(raw);
    turn.well_formed = false;
    return turn;
}

int check_format(const ManagerTurn& turn) {
    return parse_manager_turn(turn.raw_text).well_formed ? 1 : 0;
}

std::string serialize_turn(std::string_view reasoning, const std::vector<ToolCallRequest>& calls) {
    std::string out;
    out += kReasonOpen;
    out += reasoning;
    out += kReasonClose;
    for (const auto& c : calls) {
        Json block = {{"name", c.tool_name}, {"arguments", c.arguments}};
        out += "\n";
        out += kCallOpen;
        out += "\n";
        out += block.dump(-1, ' ', false, Json::error_handler_t::replace);
        out += "\n";
        out += kCallClose;
    }
    return out;
}

std::string serialize_turn(const ManagerTurn& turn) {
    return serialize_turn(turn.reasoning.value_or(""), turn.calls);
}

std::optional<std::string> extract_tag(std::string_view text, std::string_view tag) {
    const std::string open = "<" + std::string(tag) + ">";
    const std::string close = "</" + std::string(tag) + ">";
    const auto o = text.find(open);
    if (o == std::string_view::npos) return std::nullopt;
    const auto c = text.find(close, o + open.size());
    if (c == std::string_view::npos) return std::nullopt;
    return std::string(text.substr(o + open.size(), c - o - open.size()));
}

std::optional<std::string> extract_last_tag(std::string_view text, std::string_view tag) {
    const std::string open = "<" + std::string(tag) + ">";
    const std::string close = "</" + std::string(tag) + ">";
    auto o = text.rfind(open);
    while (o != std::string_view::npos) {
        const auto c = text.find(close, o + open.size());
        if (c != std::string_view::npos)
            return std::string(text.substr(o + open.size(), c - o - open.size()));
        if (o == 0) break;
        o = text.rfind(open, o - 1);
    }
    return std::nullopt;
}

std::optional<std::string> extract_boxed(std::string_view text) {
    constexpr std::string_view kBoxed = "\\boxed{";
    auto start = text.rfind(kBoxed);
    while (start != std::string_view::npos) {
        int depth = 1;
        std::size_t i = start + kBoxed.size();
        for (; i < text.size() && depth > 0; ++i) {
            if (text[i] == '{') ++depth;
            else if (text[i] == '}') --depth;
        }
        if (depth == 0) {
            const auto body = text.substr(start + kBoxed.size(), i - 1 - start - kBoxed.size());
            return collapse_whitespace(body);
        }
        // unbalanced occurrence: fall back to an earlier one
        if (start == 0) break;
        start = text.rfind(kBoxed, start - 1);
    }
    return std::nullopt;
}

std::string collapse_whitespace(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    bool pending_space = false;
    for (char ch : text) {
        if (kWs.find(ch) != std::string_view::npos) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) out.push_back(' ');
        pending_space = false;
        out.push_back(ch);
    }
    return out;
}

}  // namespace agentool
