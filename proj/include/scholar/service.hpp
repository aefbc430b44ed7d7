#pragma once

#include <atomic>
#include <chrono>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "scholar/config.hpp"
#include "scholar/gateway.hpp"
#include "scholar/react.hpp"
#include "scholar/toolbox.hpp"

namespace httplib {
class Server;
}

namespace scholar::service {

// One server-sent event. `seq` counts from 0 within one message stream.
struct StreamEvent {
    std::uint64_t seq = 0;
    std::string kind;  // thought | action | observation | final | error
    ordered_json payload;

    bool terminal() const { return kind == "final" || kind == "error"; }
    ordered_json to_json() const;
    // "event: <kind>\ndata: <json>\n\n"
    std::string to_sse() const;
    static StreamEvent from_json(const ordered_json& j);
};

// Parses a text/event-stream body back into events.
std::vector<StreamEvent> parse_sse(std::string_view body);

class NotFound : public Error {
public:
    using Error::Error;
};

class Conflict : public Error {
public:
    using Error::Error;
};

class InvalidRequest : public Error {
public:
    using Error::Error;
};

struct Overrides {
    std::optional<std::size_t> max_steps;

    // {"max_steps": n}; anything else is rejected.
    static Overrides from_json(const json& j);
};

struct SessionOptions {
    llm::BackendFactory backend_factory;
    std::shared_ptr<const tools::ToolRegistry> tools;
    std::size_t max_steps = 8;
    int max_tokens = 1024;
    std::string journal_dir;  // empty: in memory only
    std::function<std::chrono::system_clock::time_point()> clock;
};

class SessionManager;

// Holds a session's in-flight slot; released on destruction.
class MessageLease {
public:
    struct Session;

    ~MessageLease();
    MessageLease(const MessageLease&) = delete;
    MessageLease& operator=(const MessageLease&) = delete;

    const std::string& session_id() const;
    void release();

private:
    friend class SessionManager;
    explicit MessageLease(std::shared_ptr<Session> s);
    std::shared_ptr<Session> session_;
    bool released_ = false;
};

using EventSink = std::function<void(const StreamEvent&)>;

class SessionManager {
public:
    // Replays the journal directory, if configured.
    explicit SessionManager(SessionOptions options);
    ~SessionManager();

    std::string create(const Overrides& overrides = {});
    ordered_json get(const std::string& id) const;
    ordered_json list() const;
    // Throws Conflict while a message is in flight.
    void remove(const std::string& id);

    // Claims the session for one message; NotFound or Conflict.
    std::unique_ptr<MessageLease> begin_message(const std::string& id);

    // Runs one episode and forwards each trace event; always ends with one
    // final or error event. Returns the events sent.
    std::vector<StreamEvent> run_message(MessageLease& lease, const std::string& text, const EventSink& sink = {});

    // begin_message + run_message.
    std::vector<StreamEvent> post_message(const std::string& id, const std::string& text, const EventSink& sink = {});

    std::size_t size() const;

private:
    using Session = MessageLease::Session;

    std::shared_ptr<Session> find(const std::string& id) const;
    std::shared_ptr<Session> make_session(std::string id, std::size_t max_steps);
    void journal(const Session& s, const ordered_json& line) const;
    void replay_journal();

    SessionOptions options_;
    mutable std::mutex mu_;
    std::map<std::string, std::shared_ptr<Session>> sessions_;
};

// REST + SSE front end:
//   POST   /v1/sessions                 -> 201 session
//   GET    /v1/sessions                 -> {"sessions": [...]}
//   GET    /v1/sessions/{id}            -> session with dialogue state
//   DELETE /v1/sessions/{id}            -> 204
//   POST   /v1/sessions/{id}/messages   -> text/event-stream
// Errors are {"error": {"code", "message"}} with 400, 404 or 409.
class HttpService {
public:
    HttpService(SessionManager& sessions, std::string cors_origin = "*");
    ~HttpService();

    // Port 0 picks a free port. Returns the bound port, or -1.
    int bind(const std::string& host, int port);
    // Blocks until stop().
    bool listen();
    void stop();
    bool running() const;

private:
    void routes();

    SessionManager& sessions_;
    std::string cors_origin_;
    std::unique_ptr<httplib::Server> server_;
};

}  // namespace scholar::service
