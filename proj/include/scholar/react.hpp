#pragma once

#include <chrono>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "scholar/gateway.hpp"
#include "scholar/toolbox.hpp"

namespace scholar::agent {

// ---- action blobs ---------------------------------------------------------

struct ActionBlob {
    std::string action;
    json action_input = json::object();

    bool operator==(const ActionBlob&) const = default;
};

class MalformedBlob : public Error {
public:
    enum class Violation { not_json, multiple_actions, not_object, missing_key, extra_key, bad_action, bad_action_input };

    MalformedBlob(Violation v, const std::string& what) : Error(what), violation_(v) {}
    Violation violation() const { return violation_; }

private:
    Violation violation_;
};

// Removes a surrounding ``` or ''' fence (with an optional language tag).
std::string strip_fences(std::string_view text);

// Rewrites Python-style pseudo-JSON into JSON: single-quoted strings become
// double-quoted, bare object keys are quoted, True/False/None are mapped.
// Double-quoted strings pass through untouched.
std::string normalize_pseudo_json(std::string_view text);

// Accepts exactly {"action": <non-empty string>, "action_input": <object>}.
ActionBlob parse_action_blob(std::string_view text);

// ---- model output ---------------------------------------------------------

struct ParsedStep {
    enum class Kind { action, final_answer, malformed };

    Kind kind = Kind::malformed;
    std::string thought;
    std::optional<ActionBlob> blob;
    std::string answer;
    std::string reason;  // set for malformed
};

ParsedStep parse_model_output(std::string_view text);

// ---- trace ----------------------------------------------------------------

enum class EventKind { thought, action, observation, final_answer };

std::string_view to_string(EventKind k);
std::optional<EventKind> event_kind_from_string(std::string_view s);

struct TraceEvent {
    EventKind kind = EventKind::thought;
    std::string text;                   // thought, observation, or answer
    std::optional<ActionBlob> action;   // set for action events
    bool ok = true;                     // observation status
    std::size_t step_index = 0;
    std::chrono::system_clock::time_point timestamp{};

    ordered_json to_json() const;
    static TraceEvent from_json(const json& j);
};

std::string trace_to_jsonl(const std::vector<TraceEvent>& trace);
std::vector<TraceEvent> trace_from_jsonl(std::string_view jsonl);

// "2024-01-31T12:00:00.000Z"
std::string format_timestamp(std::chrono::system_clock::time_point t);
std::chrono::system_clock::time_point parse_timestamp(const std::string& s);

// ---- dialogue memory ------------------------------------------------------

enum class Speaker { user, ai };

struct Turn {
    Speaker speaker = Speaker::user;
    std::string text;
};

struct DialogueState {
    std::vector<Turn> turns;
    std::vector<std::vector<TraceEvent>> episodes;

    // Prior (User, AI) pairs as they re-enter the prompt.
    std::string render_history() const;

    json to_json() const;
    static DialogueState from_json(const json& j);
};

// ---- prompt ---------------------------------------------------------------

inline constexpr std::string_view kObservationStop = "Observation:";
inline constexpr std::string_view kForcedFinalSuffix = "Thought: I now know the final answer\nFinal Answer:";
inline constexpr std::string_view kInvalidActionObservation =
    "Invalid action format \xE2\x80\x94 emit one JSON blob with keys action, action_input.";

class ConfigError : public Error {
public:
    using Error::Error;
};

// One "Name:\n{...}" block as shown to the model.
std::string render_tool_section(const tools::ToolSpec& spec);

// Throws ConfigError when the registry is empty.
std::string build_system_prompt(const tools::ToolRegistry& tools);

// System prompt, prior turns, then the new user question.
std::string build_episode_prompt(const std::string& system_prompt, const DialogueState& state,
                                 const std::string& question);

// ---- episode loop ---------------------------------------------------------

struct AgentConfig {
    std::size_t max_steps = 8;
    const tools::ToolRegistry* tools = nullptr;
    llm::Backend* backend = nullptr;
    int max_tokens = 1024;
    double temperature = 0.0;
    std::function<std::chrono::system_clock::time_point()> clock;  // defaults to system_clock::now
    std::function<void(const TraceEvent&)> on_event;              // called as each event is recorded
};

struct EpisodeResult {
    std::string answer;
    std::vector<TraceEvent> trace;
    std::size_t completions = 0;
    bool forced_final = false;
};

class EpisodeError : public Error {
public:
    EpisodeError(const std::string& what, std::vector<TraceEvent> partial)
        : Error(what), partial_trace_(std::move(partial)) {}
    const std::vector<TraceEvent>& partial_trace() const { return partial_trace_; }

private:
    std::vector<TraceEvent> partial_trace_;
};

// Runs one Thought/Action/Observation loop. On success, `state` gains the
// (User, AI) pair and the episode trace. Backend failures raise EpisodeError
// and leave `state` unchanged.
EpisodeResult run_episode(const std::string& question, DialogueState& state, const AgentConfig& config);

}  // namespace scholar::agent
