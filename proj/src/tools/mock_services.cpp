#include "agentool/tools/mock_services.hpp"

#include <cstdint>
#include <regex>
#include <thread>

#include "agentool/protocol/linearize.hpp"

namespace agentool {

ConcurrencyProbe::Scope::Scope(ConcurrencyProbe& p) : probe_(p) {
    probe_.calls_.fetch_add(1);
    const int now = probe_.in_flight_.fetch_add(1) + 1;
    int peak = probe_.peak_.load();
    while (now > peak && !probe_.peak_.compare_exchange_weak(peak, now)) {
    }
}

ConcurrencyProbe::Scope::~Scope() { probe_.in_flight_.fetch_sub(1); }

bool sleep_within(std::chrono::milliseconds delay, Deadline deadline) {
    const auto wake = Clock::now() + delay;
    if (wake <= deadline) {
        std::this_thread::sleep_until(wake);
        return true;
    }
    std::this_thread::sleep_until(deadline);
    return false;
}

namespace {

std::int64_t word_count(std::string_view s) { return static_cast<std::int64_t>(whitespace_tokenize(s).size()); }

std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

ChatResponse with_usage(const ChatRequest& req, ChatResponse r) {
    if (r.status == Status::Ok && r.prompt_tokens == 0 && r.completion_tokens == 0) {
        for (const auto& m : req.messages) r.prompt_tokens += word_count(m.content);
        r.completion_tokens = word_count(r.text);
    }
    return r;
}

}  // namespace

ScriptedChatBackend::ScriptedChatBackend(Responder responder, std::chrono::milliseconds delay)
    : responder_(std::move(responder)), delay_(delay) {}

std::shared_ptr<ScriptedChatBackend> ScriptedChatBackend::fixed(std::string text) {
    return std::make_shared<ScriptedChatBackend>([text = std::move(text)](const ChatRequest&) {
        ChatResponse r;
        r.text = text;
        return r;
    });
}

std::shared_ptr<ScriptedChatBackend> ScriptedChatBackend::sequence(std::vector<std::string> texts) {
    auto next = std::make_shared<std::atomic<std::size_t>>(0);
    return std::make_shared<ScriptedChatBackend>([texts = std::move(texts), next](const ChatRequest&) {
        ChatResponse r;
        if (!texts.empty()) r.text = texts[std::min(next->fetch_add(1), texts.size() - 1)];
        return r;
    });
}

std::shared_ptr<ScriptedChatBackend> ScriptedChatBackend::unreachable() {
    return std::make_shared<ScriptedChatBackend>([](const ChatRequest&) {
        ChatResponse r;
        r.status = Status::ExecErr;
        r.diagnostic = "connection refused";
        r.transient = true;
        return r;
    });
}

ChatResponse ScriptedChatBackend::complete(const ChatRequest& request, Deadline deadline) const {
    ConcurrencyProbe::Scope scope(probe_);
    {
        std::lock_guard lock(mu_);
        last_ = request;
    }
    if (Clock::now() >= deadline || !sleep_within(delay_, deadline)) {
        ChatResponse r;
        r.status = Status::Timeout;
        r.diagnostic = "deadline expired";
        return r;
    }
    return with_usage(request, responder_(request));
}

ChatRequest ScriptedChatBackend::last_request() const {
    std::lock_guard lock(mu_);
    return last_;
}

ChatResponse RoleAwareMockChat::complete(const ChatRequest& request, Deadline deadline) const {
    ChatResponse r;
    if (Clock::now() >= deadline) {
        r.status = Status::Timeout;
        r.diagnostic = "deadline expired";
        return r;
    }
    const std::string system = request.messages.empty() ? "" : request.messages.front().content;
    std::string user;
    for (std::size_t i = 1; i < request.messages.size(); ++i) user += request.messages[i].content;
    const auto h = fnv1a(request.model + "\x1f" + user);
    const auto n = std::to_string(h % 100);

    if (system.find("Code_Reasoner") != std::string::npos)
        r.text = "<reasoning>compute it</reasoning>\n<code>\nprint(" + n + ")\n</code>";
    else if (system.find("Knowledge_Searcher") != std::string::npos)
        r.text = "<reasoning>look it up</reasoning>\n<query>\nfact " + n + "\n</query>";
    else if (system.find("Critical_Reviewer") != std::string::npos)
        r.text = "<reasoning>checked each step</reasoning>\n<answer>\nNo issues found.\n</answer>";
    else
        r.text = "<reasoning>worked it out</reasoning>\n<answer>\n\\boxed{" + n + "}\n</answer>";
    return with_usage(request, std::move(r));
}

MockRetrievalService::MockRetrievalService(std::map<std::string, std::vector<std::string>> corpus,
                                           std::chrono::milliseconds delay)
    : corpus_(std::move(corpus)), delay_(delay) {}

SearchResponse MockRetrievalService::search(const std::string& query, Deadline deadline) const {
    ConcurrencyProbe::Scope scope(probe_);
    SearchResponse r;
    if (!sleep_within(delay_, deadline)) {
        r.status = Status::Timeout;
        r.diagnostic = "retrieval deadline expired";
        return r;
    }
    if (failing_) {
        r.status = Status::ExecErr;
        r.diagnostic = "retrieval service returned 503";
        return r;
    }
    if (auto it = corpus_.find(query); it != corpus_.end()) r.passages = it->second;
    else r.passages = {"(no passage for '" + query + "')"};
    return r;
}

MockSandboxService::MockSandboxService(std::map<std::string, SandboxResponse> script,
                                       std::chrono::milliseconds delay)
    : script_(std::move(script)), delay_(delay) {}

SandboxResponse MockSandboxService::run(const std::string& code, std::chrono::milliseconds limit,
                                        Deadline deadline) const {
    ConcurrencyProbe::Scope scope(probe_);
    SandboxResponse r;
    if (unreachable_) {
        r.status = Status::ExecErr;
        r.diagnostic = "sandbox unreachable";
        return r;
    }
    const auto stop = std::min(deadline, Clock::now() + limit);
    if (code.find("while True") != std::string::npos) {
        std::this_thread::sleep_until(stop);
        r.status = Status::Timeout;
        r.diagnostic = "wall-clock limit exceeded";
        return r;
    }
    if (!sleep_within(delay_, stop)) {
        r.status = Status::Timeout;
        r.diagnostic = "wall-clock limit exceeded";
        return r;
    }
    if (auto it = script_.find(code); it != script_.end()) return it->second;

    static const std::regex print_int(R"(^\s*print\((-?\d+)\)\s*$)");
    std::smatch m;
    if (std::regex_match(code, m, print_int)) r.stdout_text = m[1].str() + "\n";
    return r;
}

}  // namespace agentool
