#pragma once

#include <atomic>
#include <chrono>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "agentool/tools/services.hpp"

namespace agentool {

/// Tracks how many invocations are in flight and the peak seen so far.
class ConcurrencyProbe {
public:
    class Scope {
    public:
        explicit Scope(ConcurrencyProbe& p);
        ~Scope();
        Scope(const Scope&) = delete;
        Scope& operator=(const Scope&) = delete;

    private:
        ConcurrencyProbe& probe_;
    };

    int calls() const { return calls_.load(); }
    int peak() const { return peak_.load(); }

private:
    std::atomic<int> calls_{0};
    std::atomic<int> in_flight_{0};
    std::atomic<int> peak_{0};
};

/// Sleeps for `delay` unless the deadline comes first. Returns false on expiry.
bool sleep_within(std::chrono::milliseconds delay, Deadline deadline);

/// Chat backend answering through a caller-supplied function. Token usage
/// defaults to whitespace word counts of the prompt and the reply.
class ScriptedChatBackend final : public ChatBackend {
public:
    using Responder = std::function<ChatResponse(const ChatRequest&)>;

    explicit ScriptedChatBackend(Responder responder, std::chrono::milliseconds delay = {});

    /// Always replies with `text`.
    static std::shared_ptr<ScriptedChatBackend> fixed(std::string text);
    /// Replies with texts[i] on the i-th call (thread-safe); the last entry repeats.
    static std::shared_ptr<ScriptedChatBackend> sequence(std::vector<std::string> texts);
    /// Every call fails like a refused connection.
    static std::shared_ptr<ScriptedChatBackend> unreachable();

    ChatResponse complete(const ChatRequest& request, Deadline deadline) const override;

    int calls() const { return probe_.calls(); }
    int peak_concurrency() const { return probe_.peak(); }
    /// Last request seen, for prompt assertions.
    ChatRequest last_request() const;

private:
    Responder responder_;
    std::chrono::milliseconds delay_;
    mutable ConcurrencyProbe probe_;
    mutable std::mutex mu_;
    mutable ChatRequest last_;
};

/// Deterministic stand-in for the agent tools' model pool. Replies in the tag
/// format each role's prompt asks for, with content derived from a hash of
/// the request, so equal requests always get equal replies.
class RoleAwareMockChat final : public ChatBackend {
public:
    ChatResponse complete(const ChatRequest& request, Deadline deadline) const override;
};

/// Retrieval stand-in seeded with passages per query.
class MockRetrievalService final : public RetrievalService {
public:
    explicit MockRetrievalService(std::map<std::string, std::vector<std::string>> corpus = {},
                                  std::chrono::milliseconds delay = {});
    SearchResponse search(const std::string& query, Deadline deadline) const override;

    int calls() const { return probe_.calls(); }
    int peak_concurrency() const { return probe_.peak(); }
    void set_failing(bool failing) { failing_ = failing; }

private:
    std::map<std::string, std::vector<std::string>> corpus_;
    std::chrono::milliseconds delay_;
    std::atomic<bool> failing_{false};
    mutable ConcurrencyProbe probe_;
};

/// Sandbox stand-in returning scripted results by exact code text. Code
/// containing `while True` never finishes and runs into the limit.
class MockSandboxService final : public SandboxService {
public:
    explicit MockSandboxService(std::map<std::string, SandboxResponse> script = {},
                                std::chrono::milliseconds delay = {});
    SandboxResponse run(const std::string& code, std::chrono::milliseconds limit,
                        Deadline deadline) const override;

    int calls() const { return probe_.calls(); }
    void set_unreachable(bool v) { unreachable_ = v; }

private:
    std::map<std::string, SandboxResponse> script_;
    std::chrono::milliseconds delay_;
    std::atomic<bool> unreachable_{false};
    mutable ConcurrencyProbe probe_;
};

}  // namespace agentool
