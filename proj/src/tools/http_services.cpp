#include "agentool/tools/http_services.hpp"

#include <httplib.h>

namespace agentool {

UrlParts split_url(const std::string& url) {
    const auto scheme = url.find("://");
    const auto host_start = scheme == std::string::npos ? 0 : scheme + 3;
    const auto slash = url.find('/', host_start);
    if (slash == std::string::npos) return {url, ""};
    std::string path = url.substr(slash);
    while (!path.empty() && path.back() == '/') path.pop_back();
    return {url.substr(0, slash), path};
}

namespace {

void apply_deadline(httplib::Client& cli, Deadline deadline) {
    const auto ms = std::max<std::int64_t>(1, remaining(deadline).count());
    const auto sec = static_cast<time_t>(ms / 1000);
    const auto usec = static_cast<time_t>((ms % 1000) * 1000);
    cli.set_connection_timeout(sec, usec);
    cli.set_read_timeout(sec, usec);
    cli.set_write_timeout(sec, usec);
}

struct Posted {
    Status status = Status::Ok;
    int http_status = 0;
    std::string body;
    std::string diagnostic;
    bool transient = false;
};

Posted post_json(const UrlParts& url, const std::string& path, const Json& body, Deadline deadline,
                 const httplib::Headers& headers = {}) {
    Posted out;
    if (Clock::now() >= deadline) {
        out.status = Status::Timeout;
        out.diagnostic = "deadline expired before dispatch";
        return out;
    }
    httplib::Client cli(url.origin);
    apply_deadline(cli, deadline);
    auto res = cli.Post(url.path + path, headers, body.dump(-1, ' ', false, Json::error_handler_t::replace),
                        "application/json");
    if (!res) {
        // socket timeouts fire a little before the deadline itself
        out.status = Clock::now() + std::chrono::milliseconds(25) >= deadline ? Status::Timeout : Status::ExecErr;
        out.diagnostic = "request to " + url.origin + url.path + path + " failed: " + httplib::to_string(res.error());
        out.transient = true;
        return out;
    }
    out.http_status = res->status;
    out.body = res->body;
    if (res->status != 200) {
        out.status = Status::ExecErr;
        out.diagnostic = "HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 200);
        out.transient = res->status == 429 || res->status >= 500;
    }
    return out;
}

}  // namespace

Json chat_request_body(const ChatRequest& request) {
    Json messages = Json::array();
    for (const auto& m : request.messages) messages.push_back({{"role", m.role}, {"content", m.content}});
    return {{"model", request.model},
            {"messages", std::move(messages)},
            {"temperature", request.temperature},
            {"max_tokens", request.max_tokens}};
}

ChatResponse parse_chat_response(const std::string& body) {
    ChatResponse r;
    Json j = Json::parse(body, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
        r.status = Status::ExecErr;
        r.diagnostic = "unparseable chat-completion response";
        return r;
    }
    try {
        const auto& content = j.at("choices").at(0).at("message").at("content");
        r.text = content.is_string() ? content.get<std::string>() : std::string{};
        if (auto u = j.find("usage"); u != j.end() && u->is_object()) {
            r.prompt_tokens = u->value("prompt_tokens", std::int64_t{0});
            r.completion_tokens = u->value("completion_tokens", std::int64_t{0});
        }
    } catch (const Json::exception& e) {
        r.status = Status::ExecErr;
        r.diagnostic = std::string("malformed chat-completion response: ") + e.what();
    }
    return r;
}

HttpChatBackend::HttpChatBackend(std::string base_url, std::string api_key)
    : url_(split_url(base_url)), api_key_(std::move(api_key)) {}

ChatResponse HttpChatBackend::complete(const ChatRequest& request, Deadline deadline) const {
    httplib::Headers headers;
    if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);
    auto posted = post_json(url_, "/chat/completions", chat_request_body(request), deadline, headers);
    if (posted.status != Status::Ok) {
        ChatResponse r;
        r.status = posted.status;
        r.diagnostic = posted.diagnostic;
        r.transient = posted.transient;
        return r;
    }
    return parse_chat_response(posted.body);
}

HttpRetrievalService::HttpRetrievalService(std::string base_url, int topk)
    : url_(split_url(base_url)), topk_(topk) {}

SearchResponse HttpRetrievalService::search(const std::string& query, Deadline deadline) const {
    SearchResponse r;
    auto posted = post_json(url_, "/retrieve", {{"query_list", {query}}, {"topk", topk_}}, deadline);
    if (posted.status != Status::Ok) {
        r.status = posted.status;
        r.diagnostic = posted.diagnostic;
        return r;
    }
    Json j = Json::parse(posted.body, nullptr, false);
    try {
        for (const auto& p : j.at("passages").at(0)) r.passages.push_back(p.get<std::string>());
    } catch (const Json::exception& e) {
        r.status = Status::ExecErr;
        r.diagnostic = std::string("malformed retrieval response: ") + e.what();
    }
    return r;
}

HttpSandboxService::HttpSandboxService(std::string base_url) : url_(split_url(base_url)) {}

SandboxResponse HttpSandboxService::run(const std::string& code, std::chrono::milliseconds limit,
                                        Deadline deadline) const {
    SandboxResponse r;
    const auto stop = std::min(deadline, Clock::now() + limit);
    const double seconds = static_cast<double>(limit.count()) / 1000.0;
    auto posted = post_json(url_, "/run", {{"code", code}, {"timeout", seconds}}, stop);
    if (posted.status != Status::Ok) {
        r.status = posted.status;
        r.diagnostic = posted.diagnostic;
        return r;
    }
    Json j = Json::parse(posted.body, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
        r.status = Status::ExecErr;
        r.diagnostic = "unparseable sandbox response";
        return r;
    }
    if (j.value("timed_out", false)) {
        r.status = Status::Timeout;
        r.diagnostic = "wall-clock limit exceeded";
        return r;
    }
    r.stdout_text = j.value("stdout", std::string{});
    r.stderr_text = j.value("stderr", std::string{});
    r.exit_status = j.value("exit_status", 0);
    return r;
}

}  // namespace agentool
