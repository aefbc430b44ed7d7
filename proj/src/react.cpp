#include "scholar/react.hpp"

#include <cctype>
#include <cstdio>
#include <ctime>
#include <sstream>

namespace scholar::agent {

namespace {

constexpr std::string_view kFinalAnswer = "Final Answer:";
constexpr std::string_view kAction = "Action:";
constexpr std::string_view kThought = "Thought:";

bool starts_fence(std::string_view s, std::size_t i) {
    return s.compare(i, 3, "```") == 0 || s.compare(i, 3, "'''") == 0;
}

// Positions of `needle` that are not inside a ``` / ''' fenced region.
std::size_t find_unfenced(std::string_view s, std::string_view needle, std::size_t from = 0) {
    bool fenced = false;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (starts_fence(s, i)) {
            fenced = !fenced;
            i += 2;
            continue;
        }
        if (!fenced && i >= from && s.compare(i, needle.size(), needle) == 0) return i;
    }
    return std::string_view::npos;
}

void append_json_string(std::string& out, std::string_view s) { out += json(std::string(s)).dump(); }

}  // namespace

std::string strip_fences(std::string_view text) {
    auto s = text::trim(text);
    if (s.size() >= 3 && starts_fence(s, 0)) {
        const std::string fence = s.substr(0, 3);
        auto body_start = s.find('\n');
        // A fence on one line: ```{...}```
        if (body_start == std::string::npos) body_start = 2;
        // Only a language tag may follow the opening fence on its line.
        const auto tag = text::trim(std::string_view(s).substr(3, body_start > 3 ? body_start - 3 : 0));
        if (!tag.empty() && (tag.front() == '{' || tag.front() == '[')) body_start = 2;
        s = s.substr(body_start + 1);
        const auto close = s.rfind(fence);
        if (close != std::string::npos) s.resize(close);
        return text::trim(s);
    }
    return s;
}

std::string normalize_pseudo_json(std::string_view in) {
    std::string out;
    out.reserve(in.size() + 16);
    const auto last_significant = [&]() -> char {
        for (auto it = out.rbegin(); it != out.rend(); ++it)
            if (!std::isspace(static_cast<unsigned char>(*it))) return *it;
        return '\0';
    };
    std::size_t i = 0;
    while (i < in.size()) {
        const char c = in[i];
        if (c == '"') {
            out += c;
            ++i;
            while (i < in.size()) {
                out += in[i];
                if (in[i] == '\\' && i + 1 < in.size()) {
                    out += in[++i];
                } else if (in[i] == '"') {
                    ++i;
                    break;
                }
                ++i;
            }
        } else if (c == '\'') {
            std::string lit;
            ++i;
            while (i < in.size() && in[i] != '\'') {
                if (in[i] == '\\' && i + 1 < in.size()) {
                    if (in[i + 1] == '\'') {
                        lit += '\'';
                    } else {
                        lit += in[i];
                        lit += in[i + 1];
                    }
                    i += 2;
                    continue;
                }
                if (in[i] == '"') lit += '\\';
                lit += in[i++];
            }
            ++i;
            out += '"';
            out += lit;
            out += '"';
        } else if (std::isalpha(static_cast<unsigned char>(c)) || c == '_' || c == '$') {
            std::size_t j = i;
            while (j < in.size() &&
                   (std::isalnum(static_cast<unsigned char>(in[j])) || in[j] == '_' || in[j] == '$'))
                ++j;
            const auto word = in.substr(i, j - i);
            std::size_t k = j;
            while (k < in.size() && std::isspace(static_cast<unsigned char>(in[k]))) ++k;
            const char prev = last_significant();
            if (k < in.size() && in[k] == ':' && (prev == '{' || prev == ',')) {
                out += '"';
                out += word;
                out += '"';
            } else if (word == "True") {
                out += "true";
            } else if (word == "False") {
                out += "false";
            } else if (word == "None") {
                out += "null";
            } else {
                out += word;
            }
            i = j;
        } else {
            out += c;
            ++i;
        }
    }
    return out;
}

ActionBlob parse_action_blob(std::string_view text) {
    using V = MalformedBlob::Violation;
    const auto body = strip_fences(text);
    json j;
    try {
        j = json::parse(body);
    } catch (const json::parse_error&) {
        try {
            j = json::parse(normalize_pseudo_json(body));
        } catch (const json::parse_error&) {
            throw MalformedBlob(V::not_json, "not JSON");
        }
    }
    if (j.is_array()) throw MalformedBlob(V::multiple_actions, "multiple actions");
    if (!j.is_object()) throw MalformedBlob(V::not_object, "not an object");
    for (const auto& [key, _] : j.items())
        if (key != "action" && key != "action_input") throw MalformedBlob(V::extra_key, "extra key: " + key);
    if (!j.contains("action")) throw MalformedBlob(V::missing_key, "missing key: action");
    if (!j.contains("action_input")) throw MalformedBlob(V::missing_key, "missing key: action_input");
    if (!j["action"].is_string() || j["action"].get<std::string>().empty())
        throw MalformedBlob(V::bad_action, "action must be a non-empty string");
    if (!j["action_input"].is_object()) throw MalformedBlob(V::bad_action_input, "action_input must be an object");
    return {j["action"].get<std::string>(), j["action_input"]};
}

ParsedStep parse_model_output(std::string_view text) {
    ParsedStep step;
    if (const auto fa = find_unfenced(text, kFinalAnswer); fa != std::string_view::npos) {
        step.kind = ParsedStep::Kind::final_answer;
        step.answer = text::trim(text.substr(fa + kFinalAnswer.size()));
        return step;
    }
    const auto act = find_unfenced(text, kAction);
    if (act == std::string_view::npos) {
        step.reason = "no Action or Final Answer";
        return step;
    }
    auto head = text.substr(0, act);
    if (const auto th = head.find(kThought); th != std::string_view::npos) head = head.substr(th + kThought.size());
    step.thought = text::trim(head);

    auto rest = std::string_view(text).substr(act + kAction.size());
    std::size_t i = 0;
    while (i < rest.size() && std::isspace(static_cast<unsigned char>(rest[i]))) ++i;
    std::string region;
    if (i < rest.size() && starts_fence(rest, i)) {
        const auto close = rest.find(rest.substr(i, 3), i + 3);
        region = std::string(rest.substr(i, close == std::string_view::npos ? std::string_view::npos : close + 3 - i));
    } else {
        const auto open = rest.find_first_of("{[", i);
        if (open == std::string_view::npos) {
            step.reason = "no JSON blob after Action:";
            return step;
        }
        const auto close = text::match_bracket(rest, open);
        region = std::string(rest.substr(open, close == std::string_view::npos ? std::string_view::npos : close + 1 - open));
    }
    try {
        step.blob = parse_action_blob(region);
        step.kind = ParsedStep::Kind::action;
    } catch (const MalformedBlob& e) {
        step.reason = e.what();
    }
    return step;
}

std::string_view to_string(EventKind k) {
    switch (k) {
        case EventKind::thought: return "thought";
        case EventKind::action: return "action";
        case EventKind::observation: return "observation";
        case EventKind::final_answer: return "final";
    }
    return "thought";
}

std::optional<EventKind> event_kind_from_string(std::string_view s) {
    for (auto k : {EventKind::thought, EventKind::action, EventKind::observation, EventKind::final_answer})
        if (to_string(k) == s) return k;
    return std::nullopt;
}

std::string format_timestamp(std::chrono::system_clock::time_point t) {
    const auto ms = std::chrono::floor<std::chrono::milliseconds>(t.time_since_epoch()).count();
    const auto sub = ((ms % 1000) + 1000) % 1000;
    const std::time_t secs = static_cast<std::time_t>((ms - sub) / 1000);
    std::tm tm{};
    gmtime_r(&secs, &tm);
    char buf[64];
    std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02d.%03dZ", tm.tm_year + 1900, tm.tm_mon + 1, tm.tm_mday,
                  tm.tm_hour, tm.tm_min, tm.tm_sec, static_cast<int>(sub));
    return buf;
}

std::chrono::system_clock::time_point parse_timestamp(const std::string& s) {
    std::tm tm{};
    int ms = 0;
    if (std::sscanf(s.c_str(), "%d-%d-%dT%d:%d:%d.%dZ", &tm.tm_year, &tm.tm_mon, &tm.tm_mday, &tm.tm_hour,
                    &tm.tm_min, &tm.tm_sec, &ms) < 6)
        throw Error("bad timestamp: " + s);
    tm.tm_year -= 1900;
    tm.tm_mon -= 1;
    return std::chrono::system_clock::from_time_t(timegm(&tm)) + std::chrono::milliseconds(ms);
}

ordered_json TraceEvent::to_json() const {
    ordered_json j;
    j["step"] = step_index;
    j["kind"] = std::string(to_string(kind));
    if (kind == EventKind::action && action) {
        j["payload"] = {{"action", action->action}, {"action_input", action->action_input}};
    } else {
        j["payload"] = text;
    }
    if (kind == EventKind::observation) j["ok"] = ok;
    j["ts"] = format_timestamp(timestamp);
    return j;
}

TraceEvent TraceEvent::from_json(const json& j) {
    TraceEvent e;
    e.step_index = j.at("step").get<std::size_t>();
    const auto kind = event_kind_from_string(j.at("kind").get<std::string>());
    if (!kind) throw Error("unknown trace event kind: " + j.at("kind").get<std::string>());
    e.kind = *kind;
    if (e.kind == EventKind::action) {
        e.action = ActionBlob{j.at("payload").at("action").get<std::string>(), j.at("payload").at("action_input")};
    } else {
        e.text = j.at("payload").get<std::string>();
    }
    e.ok = j.value("ok", true);
    if (j.contains("ts")) e.timestamp = parse_timestamp(j["ts"].get<std::string>());
    return e;
}

std::string trace_to_jsonl(const std::vector<TraceEvent>& trace) {
    std::string out;
    for (const auto& e : trace) out += e.to_json().dump() + "\n";
    return out;
}

std::vector<TraceEvent> trace_from_jsonl(std::string_view jsonl) {
    std::vector<TraceEvent> out;
    std::istringstream in{std::string(jsonl)};
    jsonl::for_each(in, [&](std::size_t, const json& row) { out.push_back(TraceEvent::from_json(row)); });
    return out;
}

std::string DialogueState::render_history() const {
    std::string out;
    for (std::size_t i = 0; i + 1 < turns.size(); i += 2) {
        out += "User: " + turns[i].text + "\n";
        out += "AI: " + turns[i + 1].text + "\n\n";
    }
    return out;
}

json DialogueState::to_json() const {
    json t = json::array();
    for (const auto& turn : turns)
        t.push_back({{"speaker", turn.speaker == Speaker::user ? "User" : "AI"}, {"text", turn.text}});
    json eps = json::array();
    for (const auto& ep : episodes) {
        json events = json::array();
        for (const auto& e : ep) events.push_back(json(e.to_json()));
        eps.push_back(events);
    }
    return {{"turns", t}, {"episodes", eps}};
}

DialogueState DialogueState::from_json(const json& j) {
    DialogueState s;
    for (const auto& t : j.at("turns"))
        s.turns.push_back({t.at("speaker").get<std::string>() == "User" ? Speaker::user : Speaker::ai,
                           t.at("text").get<std::string>()});
    for (const auto& ep : j.at("episodes")) {
        std::vector<TraceEvent> events;
        for (const auto& e : ep) events.push_back(TraceEvent::from_json(e));
        s.episodes.push_back(std::move(events));
    }
    return s;
}

std::string render_tool_section(const tools::ToolSpec& spec) {
    std::string out = spec.name + ":\n{\"description\": ";
    append_json_string(out, spec.description);
    out += ", \"input_parameters\": {";
    bool first = true;
    for (const auto& p : spec.ordered_parameters()) {
        if (!first) out += ", ";
        first = false;
        append_json_string(out, p.name);
        out += ": {\"type\": ";
        append_json_string(out, p.type);
        out += ", \"description\": ";
        append_json_string(out, p.description);
        out += "}";
    }
    out += "}, \"example of INPUT\": ";
    append_json_string(out, spec.input_example);
    out += "}";
    return out;
}

std::string build_system_prompt(const tools::ToolRegistry& tools) {
    if (tools.size() == 0) throw ConfigError("the agent needs at least one registered tool");
    std::string out =
        "You are a pan-academic literature reading assistant. You can rigorously answer users' academic questions. "
        "You have access to the following tools:\n\n";
    for (const auto& spec : tools.specs()) out += render_tool_section(spec) + "\n\n";
    out +=
        "The way you use the tools is by specifying a Json blob.\n"
        "Specifically, this Json should have a `action` key (with the name of the tool to use) and a `action_input` "
        "key (with the input to the tool going here).\n\n"
        "The only values that should be in the \"action\" field are: " +
        text::join(tools.names(), ", ") +
        "\n\n"
        "The $JSON_BLOB should only contain a SINGLE action, do NOT return a list of multiple actions.\n"
        "$JSON_BLOB should start with '''. Here is an example of a valid $JSON_BLOB:\n\n"
        "{\n"
        "  action: $TOOL_NAME,\n"
        "  action_input: $INPUT\n"
        "}\n\n"
        "ALWAYS use the following format:\n\n"
        "Thought: you should always think about what to do\n"
        "Action:\n"
        "$JSON_BLOB\n\n"
        "Observation: the result of the action... (this Thought/Action/Observation can repeat N times)\n"
        "Thought: I now know the final answer\n"
        "Final Answer: the final answer to the original input question\n";
    return out;
}

std::string build_episode_prompt(const std::string& system_prompt, const DialogueState& state,
                                 const std::string& question) {
    return system_prompt + "\n" + state.render_history() + "User: " + question + "\n";
}

EpisodeResult run_episode(const std::string& question, DialogueState& state, const AgentConfig& config) {
    if (text::trim(question).empty()) throw Error("question must be non-empty");
    if (config.max_steps < 1) throw ConfigError("max_steps must be >= 1");
    if (!config.tools || !config.backend) throw ConfigError("agent needs a tool registry and a backend");

    EpisodeResult result;
    const auto now = [&] { return config.clock ? config.clock() : std::chrono::system_clock::now(); };
    const auto event = [](EventKind kind, std::string text) {
        TraceEvent e;
        e.kind = kind;
        e.text = std::move(text);
        return e;
    };
    const auto record = [&](TraceEvent e) {
        e.step_index = result.trace.size();
        e.timestamp = now();
        result.trace.push_back(e);
        if (config.on_event) config.on_event(result.trace.back());
    };
    const auto complete = [&](const std::string& prompt) {
        llm::CompletionRequest req;
        req.prompt = prompt;
        req.stop_sequences = {std::string(kObservationStop)};
        req.max_tokens = config.max_tokens;
        req.temperature = config.temperature;
        ++result.completions;
        try {
            return config.backend->complete(req);
        } catch (const std::exception& e) {
            throw EpisodeError(std::string("backend failure: ") + e.what(), result.trace);
        }
    };

    std::string prompt = build_episode_prompt(build_system_prompt(*config.tools), state, question);
    bool answered = false;
    for (std::size_t step = 0; step < config.max_steps; ++step) {
        const auto reply = complete(prompt);
        const auto parsed = parse_model_output(reply.text);
        if (parsed.kind == ParsedStep::Kind::final_answer) {
            result.answer = parsed.answer;
            record(event(EventKind::final_answer, parsed.answer));
            answered = true;
            break;
        }
        std::string observation;
        if (parsed.kind == ParsedStep::Kind::action) {
            if (!parsed.thought.empty()) record(event(EventKind::thought, parsed.thought));
            auto act = event(EventKind::action, {});
            act.action = parsed.blob;
            record(act);
            auto obs = config.tools->invoke(parsed.blob->action, parsed.blob->action_input);
            auto ev = event(EventKind::observation, obs.content);
            ev.ok = obs.ok;
            record(ev);
            observation = obs.content;
        } else {
            auto ev = event(EventKind::observation, std::string(kInvalidActionObservation));
            ev.ok = false;
            record(ev);
            observation = std::string(kInvalidActionObservation);
        }
        prompt += text::trim_right(reply.text) + "\n" + std::string(kObservationStop) + " " + observation + "\n";
    }
    if (!answered) {
        const auto reply = complete(prompt + std::string(kForcedFinalSuffix));
        auto answer = text::trim(reply.text);
        result.answer = answer;
        result.forced_final = true;
        record(event(EventKind::final_answer, answer));
    }

    state.turns.push_back({Speaker::user, question});
    state.turns.push_back({Speaker::ai, result.answer});
    state.episodes.push_back(result.trace);
    return result;
}

}  // namespace scholar::agent
