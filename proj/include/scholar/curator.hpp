#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "scholar/gateway.hpp"
#include "scholar/text.hpp"

namespace scholar::curator {

inline constexpr std::string_view kSysPrompt =
    "In terms of checking data quality, you are a helpful and precise assistant.";

// Label prompt body; the sample follows after a blank line.
extern const std::string kLabelPrompt;

struct LabelPrompt {
    std::string system_prompt;
    std::string user_prompt;
};

LabelPrompt build_label_prompt(std::string_view sample_text);

enum class Quality { excellent, average, poor };
enum class Depth { beginner, intermediate, advanced, expert };
enum class Suitability { highly_suitable, average, not_suitable };

inline constexpr std::array<Quality, 3> kAllQualities = {Quality::excellent, Quality::average, Quality::poor};
inline constexpr std::array<Depth, 4> kAllDepths = {Depth::beginner, Depth::intermediate, Depth::advanced,
                                                    Depth::expert};
inline constexpr std::array<Suitability, 3> kAllSuitabilities = {Suitability::highly_suitable, Suitability::average,
                                                                 Suitability::not_suitable};

std::string_view to_string(Quality q);
std::string_view to_string(Depth d);
std::string_view to_string(Suitability s);

// Values named in the prompt's output schema.
const std::vector<std::string>& listed_domains();
const std::vector<std::string>& listed_categories();

struct Verdict {
    Quality quality = Quality::poor;
    std::string domain;
    Depth depth = Depth::beginner;
    std::string category;
    Suitability suitability = Suitability::not_suitable;

    bool operator==(const Verdict&) const = default;
};

class VerdictError : public Error {
public:
    enum class Kind { unparseable, missing_field, invalid_value };
    VerdictError(Kind kind, std::string field, const std::string& what)
        : Error(what), kind_(kind), field_(std::move(field)) {}
    Kind kind() const { return kind_; }
    const std::string& field() const { return field_; }

private:
    Kind kind_;
    std::string field_;
};

// First object in the reply that yields a verdict. Strict JSON is tried
// first, then the unquoted "Key: Value," form the prompt itself shows.
// Keys are case-insensitive; "Suitability Rating" is read as Suitability.
Verdict parse_verdict(std::string_view reply);

ordered_json render(const Verdict& v);

struct Condition {
    std::string field;  // quality | domain | depth | category | suitability
    std::vector<std::string> any_of;
};

struct Rule {
    std::string name;
    std::vector<Condition> all;  // every condition must hold
    bool keep = true;
};

// First matching rule decides; otherwise the default.
struct Policy {
    std::vector<Rule> rules;
    bool default_keep = false;

    static Policy default_policy();
    // {"rules": [{"name", "when": {field: [values]}, "action": "keep"|"drop"}], "default": "keep"|"drop"}
    static Policy from_json(const json& j);
    ordered_json to_json() const;
};

class PolicyError : public Error {
public:
    using Error::Error;
};

struct FilterDecision {
    bool keep = false;
    std::string reason;  // matched rule name, or "default"
};

FilterDecision filter_decision(const Verdict& v, const Policy& policy);

struct GenerationRecord {
    std::string introduction;
    std::optional<std::string> experiments;
    std::optional<std::string> results;
    std::string title;
    std::string abstract;

    static GenerationRecord from_json(const json& j);
};

struct Sections {
    bool experiments = false;
    bool results = false;
};

inline constexpr std::string_view kBeginGenerate = "<begin_generate>";
inline constexpr std::string_view kAbstractDelimiter = ";Abstract:";

class FormatError : public Error {
public:
    using Error::Error;
};

std::string format_title_abstract_record(const GenerationRecord& record, Sections include);

// Inverse for the target part: (title, abstract).
std::pair<std::string, std::string> parse_title_abstract(std::string_view formatted);

struct LabelOutcome {
    std::optional<Verdict> verdict;
    std::string error;
};

// One completion per sample, up to `parallelism` in flight; results are in
// input order. Backend failures and bad replies become per-sample errors.
std::vector<LabelOutcome> label_samples(const std::vector<std::string>& samples, llm::Backend& backend,
                                        std::size_t parallelism = 1);

}  // namespace scholar::curator
