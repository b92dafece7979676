#pragma once

#include <string>

#include "agentool/tools/services.hpp"

namespace agentool {

/// Splits `http://host:port/prefix` into origin and path prefix.
struct UrlParts {
    std::string origin;
    std::string path;
};
UrlParts split_url(const std::string& url);

/// POST {base_url}/chat/completions in the open chat-completions schema.
class HttpChatBackend final : public ChatBackend {
public:
    HttpChatBackend(std::string base_url, std::string api_key);
    ChatResponse complete(const ChatRequest& request, Deadline deadline) const override;

private:
    UrlParts url_;
    std::string api_key_;
};

/// POST {base_url}/retrieve with {"query_list": [q], "topk": k};
/// expects {"passages": [[...]]}.
class HttpRetrievalService final : public RetrievalService {
public:
    HttpRetrievalService(std::string base_url, int topk);
    SearchResponse search(const std::string& query, Deadline deadline) const override;

private:
    UrlParts url_;
    int topk_;
};

/// POST {base_url}/run with {"code", "timeout"}; expects
/// {"stdout", "stderr", "exit_status", optional "timed_out"}.
class HttpSandboxService final : public SandboxService {
public:
    explicit HttpSandboxService(std::string base_url);
    SandboxResponse run(const std::string& code, std::chrono::milliseconds limit,
                        Deadline deadline) const override;

private:
    UrlParts url_;
};

Json chat_request_body(const ChatRequest& request);
/// Parses a chat-completions response body. Malformed bodies yield EXEC_ERR.
ChatResponse parse_chat_response(const std::string& body);

}  // namespace agentool
