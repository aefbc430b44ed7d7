#include "scholar/gateway.hpp"

#include <algorithm>
#include <cctype>

namespace scholar::llm {

void CompletionRequest::validate() const {
    if (prompt.empty()) throw GatewayError(GatewayError::Kind::invalid_request, "prompt must be non-empty");
    if (max_tokens < 1) throw GatewayError(GatewayError::Kind::invalid_request, "max_tokens must be >= 1");
    if (temperature < 0.0)
        throw GatewayError(GatewayError::Kind::invalid_request, "temperature must be non-negative");
    if (stop_sequences.size() > kMaxStopSequences)
        throw GatewayError(GatewayError::Kind::invalid_request, "at most 8 stop sequences");
    for (const auto& s : stop_sequences)
        if (s.empty()) throw GatewayError(GatewayError::Kind::invalid_request, "empty stop sequence");
}

std::string to_string(FinishReason r) {
    switch (r) {
        case FinishReason::stop_sequence: return "stop_sequence";
        case FinishReason::length: return "length";
        case FinishReason::end: return "end";
    }
    return "end";
}

bool truncate_at_stop(std::string& text, const std::vector<std::string>& stops) {
    auto cut = std::string::npos;
    for (const auto& s : stops) {
        if (s.empty()) continue;
        cut = std::min(cut, text.find(s));
    }
    if (cut == std::string::npos) return false;
    text.resize(cut);
    return true;
}

CompletionResponse finish(std::string raw, const CompletionRequest& req, bool backend_hit_length) {
    CompletionResponse resp;
    if (truncate_at_stop(raw, req.stop_sequences)) {
        resp.text = std::move(raw);
        resp.finish_reason = FinishReason::stop_sequence;
        return resp;
    }
    // Cut after the max_tokens-th whitespace token.
    std::size_t tokens = 0;
    bool in_token = false;
    for (std::size_t i = 0; i < raw.size(); ++i) {
        const bool ws = std::isspace(static_cast<unsigned char>(raw[i]));
        if (!ws && !in_token && ++tokens > static_cast<std::size_t>(req.max_tokens)) {
            raw.resize(i);
            resp.text = text::trim_right(raw);
            resp.finish_reason = FinishReason::length;
            return resp;
        }
        in_token = !ws;
    }
    resp.text = std::move(raw);
    resp.finish_reason = backend_hit_length ? FinishReason::length : FinishReason::end;
    return resp;
}

ScriptedBackend::ScriptedBackend(std::vector<ScriptStep> steps) : steps_(std::move(steps)) {
    if (steps_.empty()) throw Error("scripted backend needs at least one step");
}

CompletionResponse ScriptedBackend::complete(const CompletionRequest& request) {
    request.validate();
    std::lock_guard lock(mu_);
    if (cursor_ >= steps_.size())
        throw GatewayError(GatewayError::Kind::script_exhausted,
                           "script exhausted after " + std::to_string(steps_.size()) + " steps");
    const auto& step = steps_[cursor_];
    if (!step.matcher.empty() && request.prompt.find(step.matcher) == std::string::npos)
        throw GatewayError(GatewayError::Kind::script_mismatch,
                           "script step " + std::to_string(cursor_) + " expected prompt containing \"" +
                               step.matcher + "\"");
    ++cursor_;
    return finish(step.reply, request);
}

std::size_t ScriptedBackend::cursor() const {
    std::lock_guard lock(mu_);
    return cursor_;
}

ScriptedBackend make_scripted_backend(std::vector<ScriptStep> steps) {
    return ScriptedBackend(std::move(steps));
}

std::vector<ScriptStep> script_from_json(const json& j) {
    if (!j.is_array()) throw Error("script must be a JSON array of {match, reply}");
    std::vector<ScriptStep> steps;
    for (const auto& s : j) {
        if (!s.is_object() || !s.contains("reply") || !s["reply"].is_string())
            throw Error("script step needs a string \"reply\"");
        steps.push_back({s.value("match", std::string{}), s["reply"].get<std::string>()});
    }
    return steps;
}

std::vector<ScriptStep> load_script(const std::string& path) {
    return script_from_json(json::parse(read_file(path)));
}

CompletionResponse CallbackBackend::complete(const CompletionRequest& request) {
    request.validate();
    return finish(fn_(request), request);
}

GatewayConfig GatewayConfig::from_json(const json& j) {
    GatewayConfig c;
    c.backend = j.value("backend", c.backend);
    c.url = j.value("url", c.url);
    c.auth_env_var = j.value("auth_env_var", c.auth_env_var);
    c.model = j.value("model", c.model);
    c.timeout_s = j.value("timeout_s", c.timeout_s);
    c.script = j.value("script", c.script);
    if (c.backend != "scripted" && c.backend != "http")
        throw Error("llm.backend must be \"scripted\" or \"http\", got \"" + c.backend + "\"");
    if (c.timeout_s <= 0) throw Error("llm.timeout_s must be positive");
    return c;
}

BackendFactory make_backend_factory(const GatewayConfig& config) {
    if (config.backend == "http") {
        return [config] { return std::make_unique<HttpBackend>(config); };
    }
    if (config.script.empty()) throw Error("scripted backend requires llm.script");
    auto steps = load_script(config.script);
    return [steps] { return std::make_unique<ScriptedBackend>(steps); };
}

}  // namespace scholar::llm
