#include <chrono>
#include <cstdlib>

#include <httplib.h>

#include "net.hpp"
#include "scholar/gateway.hpp"

namespace scholar::llm {

HttpBackend::HttpBackend(GatewayConfig config) : config_(std::move(config)) {
    if (config_.url.empty()) throw Error("http backend requires llm.url");
    net::parse_url(config_.url);
    if (!config_.auth_env_var.empty()) {
        if (const char* tok = std::getenv(config_.auth_env_var.c_str())) token_ = tok;
    }
}

CompletionResponse HttpBackend::complete(const CompletionRequest& request) {
    request.validate();
    const auto url = net::parse_url(config_.url);
    if (url.scheme != "http")
        throw GatewayError(GatewayError::Kind::transport, "only http:// endpoints are supported: " + config_.url);

    httplib::Client cli(url.host, url.port);
    const auto timeout = std::chrono::duration<double>(config_.timeout_s);
    cli.set_connection_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
    cli.set_read_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
    cli.set_write_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));

    json messages = json::array();
    if (!request.system_prompt.empty()) messages.push_back({{"role", "system"}, {"content", request.system_prompt}});
    messages.push_back({{"role", "user"}, {"content", request.prompt}});
    json body = {{"model", config_.model},
                 {"messages", messages},
                 {"max_tokens", request.max_tokens},
                 {"temperature", request.temperature}};
    if (!request.stop_sequences.empty()) body["stop"] = request.stop_sequences;

    httplib::Headers headers;
    if (!token_.empty()) headers.emplace("Authorization", "Bearer " + token_);

    auto res = cli.Post(url.path, headers, body.dump(), "application/json");
    if (!res)
        throw GatewayError(GatewayError::Kind::transport,
                           "cannot reach " + config_.url + " (" + httplib::to_string(res.error()) +
                               "); retry later",
                           true);
    if (res->status != 200)
        throw GatewayError(GatewayError::Kind::http_status,
                           "endpoint returned HTTP " + std::to_string(res->status), res->status >= 500);

    try {
        const auto reply = json::parse(res->body);
        const auto& choice = reply.at("choices").at(0);
        std::string content;
        if (choice.contains("message"))
            content = choice["message"].at("content").get<std::string>();
        else
            content = choice.at("text").get<std::string>();
        const bool hit_length = choice.value("finish_reason", std::string{}) == "length";
        return finish(std::move(content), request, hit_length);
    } catch (const json::exception& e) {
        throw GatewayError(GatewayError::Kind::bad_response, std::string("unexpected completion payload: ") + e.what());
    }
}

}  // namespace scholar::llm
