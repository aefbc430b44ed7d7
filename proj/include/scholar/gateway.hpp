#pragma once

#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "scholar/text.hpp"

namespace scholar::llm {

inline constexpr std::size_t kMaxStopSequences = 8;

struct CompletionRequest {
    std::string prompt;
    std::vector<std::string> stop_sequences;
    int max_tokens = 512;
    double temperature = 0.0;
    // Sent as a chat system message by the HTTP backend; ignored by scripted matching.
    std::string system_prompt;

    // Throws GatewayError(invalid_request) when an invariant is violated.
    void validate() const;
};

enum class FinishReason { stop_sequence, length, end };

std::string to_string(FinishReason r);

struct CompletionResponse {
    std::string text;
    FinishReason finish_reason = FinishReason::end;
};

class GatewayError : public Error {
public:
    enum class Kind { invalid_request, transport, http_status, bad_response, script_exhausted, script_mismatch };

    GatewayError(Kind kind, const std::string& what, bool retryable = false)
        : Error(what), kind_(kind), retryable_(retryable) {}

    Kind kind() const { return kind_; }
    // Transport failures are worth retrying; the rest are not.
    bool retryable() const { return retryable_; }

private:
    Kind kind_;
    bool retryable_;
};

// Cuts `text` at the earliest occurrence of any stop sequence.
// Returns true when a cut happened.
bool truncate_at_stop(std::string& text, const std::vector<std::string>& stops);

// Shared post-processing: stop truncation, then max_tokens (whitespace
// tokens) truncation, producing the finish reason.
CompletionResponse finish(std::string raw, const CompletionRequest& req, bool backend_hit_length = false);

class Backend {
public:
    virtual ~Backend() = default;
    virtual CompletionResponse complete(const CompletionRequest& request) = 0;
    virtual std::string id() const = 0;
};

struct ScriptStep {
    std::string matcher;  // substring of the prompt; empty matches anything
    std::string reply;
};

// Replays a fixed list of replies in order. The cursor is per instance,
// so one instance serves one session.
class ScriptedBackend final : public Backend {
public:
    explicit ScriptedBackend(std::vector<ScriptStep> steps);

    CompletionResponse complete(const CompletionRequest& request) override;
    std::string id() const override { return "scripted"; }

    std::size_t cursor() const;
    std::size_t size() const { return steps_.size(); }

private:
    std::vector<ScriptStep> steps_;
    mutable std::mutex mu_;
    std::size_t cursor_ = 0;
};

ScriptedBackend make_scripted_backend(std::vector<ScriptStep> steps);

// Script file: [{"match": "...", "reply": "..."}, ...]
std::vector<ScriptStep> load_script(const std::string& path);
std::vector<ScriptStep> script_from_json(const json& j);

// Wraps a function; the function must be safe to call concurrently.
class CallbackBackend final : public Backend {
public:
    using Fn = std::function<std::string(const CompletionRequest&)>;
    CallbackBackend(std::string id, Fn fn) : id_(std::move(id)), fn_(std::move(fn)) {}

    CompletionResponse complete(const CompletionRequest& request) override;
    std::string id() const override { return id_; }

private:
    std::string id_;
    Fn fn_;
};

struct GatewayConfig {
    std::string backend = "scripted";  // "scripted" | "http"
    std::string url;
    std::string auth_env_var;
    std::string model;
    double timeout_s = 60.0;
    std::string script;  // path to a script file for the scripted backend

    static GatewayConfig from_json(const json& j);
};

// Chat-completions style endpoint: POST {url} with
// {"model", "messages", "max_tokens", "temperature", "stop"}.
class HttpBackend final : public Backend {
public:
    explicit HttpBackend(GatewayConfig config);

    CompletionResponse complete(const CompletionRequest& request) override;
    std::string id() const override { return "http:" + config_.model; }

private:
    GatewayConfig config_;
    std::string token_;
};

using BackendFactory = std::function<std::unique_ptr<Backend>()>;

// Each call yields a fresh backend; scripted backends start at cursor 0.
BackendFactory make_backend_factory(const GatewayConfig& config);

}  // namespace scholar::llm
