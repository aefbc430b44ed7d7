#include "scholar/service.hpp"

#include <filesystem>
#include <fstream>
#include <random>

#include <httplib.h>

namespace scholar::service {

namespace fs = std::filesystem;

struct MessageLease::Session {
    std::string id;
    std::chrono::system_clock::time_point created;
    std::chrono::system_clock::time_point updated;
    std::size_t max_steps = 8;
    std::unique_ptr<llm::Backend> backend;
    agent::DialogueState state;
    bool in_flight = false;  // guarded by the manager's mutex
    mutable std::mutex mu;   // guards state and updated
    std::mutex* manager_mu = nullptr;
};

namespace {

std::string new_session_id() {
    static std::mutex mu;
    static std::mt19937_64 rng{std::random_device{}()};
    std::lock_guard lock(mu);
    char buf[33];
    std::snprintf(buf, sizeof buf, "%016llx%016llx", static_cast<unsigned long long>(rng()),
                  static_cast<unsigned long long>(rng()));
    return buf;
}

ordered_json summary(const MessageLease::Session& s) {
    std::lock_guard lock(s.mu);
    return {{"id", s.id},
            {"created", agent::format_timestamp(s.created)},
            {"updated", agent::format_timestamp(s.updated)},
            {"config", {{"max_steps", s.max_steps}}},
            {"turns", s.state.turns.size()}};
}

}  // namespace

ordered_json StreamEvent::to_json() const { return {{"seq", seq}, {"kind", kind}, {"payload", payload}}; }

std::string StreamEvent::to_sse() const { return "event: " + kind + "\ndata: " + to_json().dump() + "\n\n"; }

StreamEvent StreamEvent::from_json(const ordered_json& j) {
    StreamEvent e;
    e.seq = j.at("seq").get<std::uint64_t>();
    e.kind = j.at("kind").get<std::string>();
    e.payload = j.at("payload");
    return e;
}

std::vector<StreamEvent> parse_sse(std::string_view body) {
    std::vector<StreamEvent> out;
    std::string data;
    const auto flush = [&] {
        if (!data.empty()) out.push_back(StreamEvent::from_json(ordered_json::parse(data)));
        data.clear();
    };
    for (const auto& raw : text::split(body, '\n')) {
        const auto line = text::trim_right(raw);
        if (line.empty()) {
            flush();
        } else if (line.rfind("data:", 0) == 0) {
            if (!data.empty()) data += "\n";
            data += text::trim(line.substr(5));
        }
    }
    flush();
    return out;
}

Overrides Overrides::from_json(const json& j) {
    Overrides o;
    if (j.is_null()) return o;
    if (!j.is_object()) throw InvalidRequest("overrides must be a JSON object");
    for (const auto& [k, v] : j.items()) {
        if (k != "max_steps") throw InvalidRequest("unknown override \"" + k + "\"");
        if (!v.is_number_integer() || v.get<long long>() < 1)
            throw InvalidRequest("max_steps must be an integer >= 1");
        o.max_steps = v.get<std::size_t>();
    }
    return o;
}

MessageLease::MessageLease(std::shared_ptr<Session> s) : session_(std::move(s)) {}

MessageLease::~MessageLease() { release(); }

const std::string& MessageLease::session_id() const { return session_->id; }

void MessageLease::release() {
    if (released_) return;
    released_ = true;
    std::lock_guard lock(*session_->manager_mu);
    session_->in_flight = false;
}

SessionManager::SessionManager(SessionOptions options) : options_(std::move(options)) {
    if (!options_.backend_factory) throw Error("session manager needs a backend factory");
    if (!options_.tools) throw Error("session manager needs a tool registry");
    if (!options_.clock) options_.clock = [] { return std::chrono::system_clock::now(); };
    if (!options_.journal_dir.empty()) {
        fs::create_directories(options_.journal_dir);
        replay_journal();
    }
}

SessionManager::~SessionManager() = default;

std::shared_ptr<MessageLease::Session> SessionManager::make_session(std::string id, std::size_t max_steps) {
    auto s = std::make_shared<Session>();
    s->id = std::move(id);
    s->created = s->updated = options_.clock();
    s->max_steps = max_steps;
    s->backend = options_.backend_factory();
    s->manager_mu = &mu_;
    return s;
}

void SessionManager::journal(const Session& s, const ordered_json& line) const {
    if (options_.journal_dir.empty()) return;
    std::ofstream out(fs::path(options_.journal_dir) / (s.id + ".jsonl"), std::ios::app);
    out << line.dump() << "\n";
    if (!out) throw Error("cannot write session journal for " + s.id);
}

void SessionManager::replay_journal() {
    for (const auto& entry : fs::directory_iterator(options_.journal_dir)) {
        if (!entry.is_regular_file() || entry.path().extension() != ".jsonl") continue;
        std::ifstream in(entry.path());
        std::shared_ptr<Session> s;
        jsonl::for_each(
            in,
            [&](std::size_t, const json& j) {
                const auto type = j.value("type", std::string{});
                if (type == "session") {
                    s = make_session(j.at("id").get<std::string>(), j.at("max_steps").get<std::size_t>());
                    s->created = s->updated = agent::parse_timestamp(j.at("created").get<std::string>());
                } else if (type == "turn" && s) {
                    s->state.turns.push_back({agent::Speaker::user, j.at("question").get<std::string>()});
                    s->state.turns.push_back({agent::Speaker::ai, j.at("answer").get<std::string>()});
                    std::vector<agent::TraceEvent> trace;
                    for (const auto& e : j.at("trace")) trace.push_back(agent::TraceEvent::from_json(e));
                    s->state.episodes.push_back(std::move(trace));
                    s->updated = agent::parse_timestamp(j.at("updated").get<std::string>());
                }
            },
            // a torn last line from a crash loses only that turn
            [](std::size_t, const std::string&) {});
        if (s) sessions_[s->id] = s;
    }
}

std::string SessionManager::create(const Overrides& overrides) {
    auto s = make_session(new_session_id(), overrides.max_steps.value_or(options_.max_steps));
    journal(*s, {{"type", "session"},
                 {"id", s->id},
                 {"created", agent::format_timestamp(s->created)},
                 {"max_steps", s->max_steps}});
    std::lock_guard lock(mu_);
    sessions_[s->id] = s;
    return s->id;
}

std::shared_ptr<MessageLease::Session> SessionManager::find(const std::string& id) const {
    std::lock_guard lock(mu_);
    const auto it = sessions_.find(id);
    if (it == sessions_.end()) throw NotFound("no session " + id);
    return it->second;
}

ordered_json SessionManager::get(const std::string& id) const {
    const auto s = find(id);
    auto j = summary(*s);
    std::lock_guard lock(s->mu);
    j["state"] = ordered_json::parse(s->state.to_json().dump());
    return j;
}

ordered_json SessionManager::list() const {
    std::vector<std::shared_ptr<Session>> all;
    {
        std::lock_guard lock(mu_);
        for (const auto& [_, s] : sessions_) all.push_back(s);
    }
    ordered_json out = ordered_json::array();
    for (const auto& s : all) out.push_back(summary(*s));
    return out;
}

void SessionManager::remove(const std::string& id) {
    std::lock_guard lock(mu_);
    const auto it = sessions_.find(id);
    if (it == sessions_.end()) throw NotFound("no session " + id);
    if (it->second->in_flight) throw Conflict("a message is in flight for session " + id);
    sessions_.erase(it);
    if (!options_.journal_dir.empty()) {
        std::error_code ec;
        fs::remove(fs::path(options_.journal_dir) / (id + ".jsonl"), ec);
    }
}

std::unique_ptr<MessageLease> SessionManager::begin_message(const std::string& id) {
    std::lock_guard lock(mu_);
    const auto it = sessions_.find(id);
    if (it == sessions_.end()) throw NotFound("no session " + id);
    if (it->second->in_flight) throw Conflict("a message is already in flight for session " + id);
    it->second->in_flight = true;
    return std::unique_ptr<MessageLease>(new MessageLease(it->second));
}

std::vector<StreamEvent> SessionManager::run_message(MessageLease& lease, const std::string& text,
                                                     const EventSink& sink) {
    auto& s = *lease.session_;
    std::vector<StreamEvent> sent;
    const auto emit = [&](std::string kind, ordered_json payload) {
        StreamEvent e{sent.size(), std::move(kind), std::move(payload)};
        sent.push_back(e);
        if (sink) sink(sent.back());
    };

    agent::DialogueState state;
    {
        std::lock_guard lock(s.mu);
        state = s.state;
    }
    agent::AgentConfig cfg;
    cfg.max_steps = s.max_steps;
    cfg.tools = options_.tools.get();
    cfg.backend = s.backend.get();
    cfg.max_tokens = options_.max_tokens;
    cfg.clock = options_.clock;
    cfg.on_event = [&](const agent::TraceEvent& ev) { emit(std::string(agent::to_string(ev.kind)), ev.to_json()); };

    try {
        auto result = agent::run_episode(text, state, cfg);
        const auto now = options_.clock();
        ordered_json trace = ordered_json::array();
        for (const auto& e : result.trace) trace.push_back(e.to_json());
        journal(s, {{"type", "turn"},
                    {"question", text},
                    {"answer", result.answer},
                    {"trace", trace},
                    {"updated", agent::format_timestamp(now)}});
        std::lock_guard lock(s.mu);
        s.state = std::move(state);
        s.updated = now;
    } catch (const std::exception& e) {
        emit("error", {{"message", e.what()}});
    }
    lease.release();
    return sent;
}

std::vector<StreamEvent> SessionManager::post_message(const std::string& id, const std::string& text,
                                                      const EventSink& sink) {
    auto lease = begin_message(id);
    return run_message(*lease, text, sink);
}

std::size_t SessionManager::size() const {
    std::lock_guard lock(mu_);
    return sessions_.size();
}

// ---- HTTP -----------------------------------------------------------------

namespace {

void send_error(httplib::Response& res, int status, const std::string& code, const std::string& message) {
    res.status = status;
    res.set_content(ordered_json{{"error", {{"code", code}, {"message", message}}}}.dump(), "application/json");
}

void send_json(httplib::Response& res, int status, const ordered_json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

json parse_body(const httplib::Request& req) {
    if (text::trim(req.body).empty()) return json();
    try {
        return json::parse(req.body);
    } catch (const json::exception& e) {
        throw InvalidRequest(std::string("body is not JSON: ") + e.what());
    }
}

template <typename Fn>
void guarded(httplib::Response& res, Fn&& fn) {
    try {
        fn();
    } catch (const InvalidRequest& e) {
        send_error(res, 400, "invalid_request", e.what());
    } catch (const NotFound& e) {
        send_error(res, 404, "not_found", e.what());
    } catch (const Conflict& e) {
        send_error(res, 409, "conflict", e.what());
    }
}

}  // namespace

HttpService::HttpService(SessionManager& sessions, std::string cors_origin)
    : sessions_(sessions), cors_origin_(std::move(cors_origin)), server_(std::make_unique<httplib::Server>()) {
    server_->new_task_queue = [] { return new httplib::ThreadPool(32); };
    routes();
}

HttpService::~HttpService() { stop(); }

void HttpService::routes() {
    auto& svr = *server_;
    svr.set_default_headers({{"Access-Control-Allow-Origin", cors_origin_},
                             {"Access-Control-Allow-Methods", "GET, POST, DELETE, OPTIONS"},
                             {"Access-Control-Allow-Headers", "Content-Type"}});
    svr.Options(R"(.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

    svr.Post("/v1/sessions", [this](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] {
            const auto id = sessions_.create(Overrides::from_json(parse_body(req)));
            send_json(res, 201, sessions_.get(id));
        });
    });
    svr.Get("/v1/sessions", [this](const httplib::Request&, httplib::Response& res) {
        send_json(res, 200, {{"sessions", sessions_.list()}});
    });
    svr.Get(R"(/v1/sessions/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] { send_json(res, 200, sessions_.get(req.matches[1])); });
    });
    svr.Delete(R"(/v1/sessions/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] {
            sessions_.remove(req.matches[1]);
            res.status = 204;
        });
    });
    svr.Post(R"(/v1/sessions/([^/]+)/messages)", [this](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] {
            const auto body = parse_body(req);
            if (!body.is_object() || !body.contains("text") || !body["text"].is_string() ||
                text::trim(body["text"].get<std::string>()).empty())
                throw InvalidRequest("body must be {\"text\": <non-empty string>}");
            std::shared_ptr<MessageLease> lease = sessions_.begin_message(req.matches[1]);
            const auto question = body["text"].get<std::string>();
            res.set_header("Cache-Control", "no-cache");
            res.set_chunked_content_provider(
                "text/event-stream",
                [this, lease, question](std::size_t, httplib::DataSink& sink) {
                    sessions_.run_message(*lease, question, [&](const StreamEvent& e) {
                        const auto chunk = e.to_sse();
                        if (sink.is_writable()) sink.write(chunk.data(), chunk.size());
                    });
                    sink.done();
                    return true;
                },
                [lease](bool) { lease->release(); });
        });
    });
    svr.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
        std::string what = "internal error";
        try {
            std::rethrow_exception(ep);
        } catch (const std::exception& e) {
            what = e.what();
        } catch (...) {
        }
        send_error(res, 500, "internal", what);
    });
}

int HttpService::bind(const std::string& host, int port) {
    if (port == 0) return server_->bind_to_any_port(host);
    return server_->bind_to_port(host, port) ? port : -1;
}

bool HttpService::listen() { return server_->listen_after_bind(); }

void HttpService::stop() {
    if (server_ && server_->is_running()) server_->stop();
}

bool HttpService::running() const { return server_->is_running(); }

}  // namespace scholar::service
