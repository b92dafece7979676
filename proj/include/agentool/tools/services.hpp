#pragma once

// Client-side contracts for the three external services the tool pool talks
// to: an OpenAI-style chat-completion endpoint, a passage retriever and a
// code sandbox. Implementations report failures as values; none of them
// throw across these interfaces.

#include <chrono>
#include <cstdint>
#include <string>
#include <vector>

#include "agentool/protocol/types.hpp"

namespace agentool {

using Clock = std::chrono::steady_clock;
using Deadline = Clock::time_point;

/// Milliseconds left before `deadline`, floored at zero.
std::chrono::milliseconds remaining(Deadline deadline);

struct ChatMessage {
    std::string role;
    std::string content;
};

struct ChatRequest {
    std::string model;
    std::vector<ChatMessage> messages;
    double temperature = 1.0;
    int max_tokens = 24576;
};

struct ChatResponse {
    Status status = Status::Ok;  // Ok, ExecErr or Timeout
    std::string text;
    std::int64_t prompt_tokens = 0;
    std::int64_t completion_tokens = 0;
    std::string diagnostic;
    bool transient = false;  // network flake, 429 or 5xx

    std::int64_t total_tokens() const { return prompt_tokens + completion_tokens; }
};

class ChatBackend {
public:
    virtual ~ChatBackend() = default;
    virtual ChatResponse complete(const ChatRequest& request, Deadline deadline) const = 0;
};

struct SearchResponse {
    Status status = Status::Ok;
    std::vector<std::string> passages;
    std::string diagnostic;
};

class RetrievalService {
public:
    virtual ~RetrievalService() = default;
    /// One query per request; callers fan out for batches.
    virtual SearchResponse search(const std::string& query, Deadline deadline) const = 0;
};

struct SandboxResponse {
    Status status = Status::Ok;  // Ok whenever the service ran the code, whatever the program did
    std::string stdout_text;
    std::string stderr_text;
    int exit_status = 0;
    std::string diagnostic;
};

class SandboxService {
public:
    virtual ~SandboxService() = default;
    virtual SandboxResponse run(const std::string& code, std::chrono::milliseconds limit,
                                Deadline deadline) const = 0;
};

}  // namespace agentool
