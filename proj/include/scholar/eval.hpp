#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "scholar/gateway.hpp"
#include "scholar/text.hpp"

namespace scholar::eval {

enum class Format { mmlu, ceval, pubmedqa, scieval, csqa };

std::optional<Format> format_from_string(std::string_view s);
std::string_view to_string(Format f);
std::size_t default_shots(Format f);

struct QAItem {
    std::string id;
    std::string subject;
    std::string question;
    std::vector<std::string> options;  // aligned to the task's labels; empty when the question carries its own
    std::string context;
    std::string gold;
};

struct EvalTask {
    std::string name;
    Format format = Format::mmlu;
    std::size_t n_shots = 0;
    std::vector<std::string> choice_labels;
    std::vector<std::string> subjects;
    std::map<std::string, std::vector<QAItem>> dev_pool;
    std::vector<QAItem> test_items;

    // Throws ConfigError on label or shot-count violations.
    void validate() const;
};

class LoadError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

// RFC 4180 rows; a leading UTF-8 BOM is skipped.
std::vector<std::vector<std::string>> parse_csv(std::string_view data);

// Layouts:
//   mmlu     <dir>/dev/<subject>_dev.csv, <dir>/test/<subject>_test.csv; rows: question, A, B, C, D, answer
//   ceval    <dir>/dev/<subject>_dev.csv, <dir>/val/<subject>_val.csv; header id,question,A,B,C,D,answer[,...]
//   pubmedqa <file> or <dir>/ori_pqal.json: {pmid: {QUESTION, CONTEXTS, final_decision}}
//   scieval  <file> or <dir>/scieval-valid.json (+ optional scieval-dev.json); multiple-choice items only
//   csqa     <file>.jsonl or every *.jsonl in <dir>; items as written by the benchmark builder
// Formats without a dev split reserve the first n_shots items per subject as exemplars.
EvalTask load_task(Format format, const std::string& path, std::optional<std::size_t> n_shots = std::nullopt);

inline constexpr std::string_view kTemplateVersion = "mc-fewshot-v1";

std::string build_fewshot_prompt(const EvalTask& task, const QAItem& item);

// First label occurring at ASCII token boundaries. Single-letter labels are
// case-sensitive; word labels ("yes") are not.
std::optional<std::string> extract_answer(std::string_view completion, const std::vector<std::string>& labels);

struct SubjectScore {
    std::size_t correct = 0;
    std::size_t total = 0;
    double accuracy() const { return total ? static_cast<double>(correct) / static_cast<double>(total) : 0.0; }
};

struct EvalReport {
    std::string task;
    std::size_t shots = 0;
    std::string backend;
    std::uint64_t seed = 0;
    std::string template_version{kTemplateVersion};
    std::map<std::string, SubjectScore> per_subject;
    std::size_t correct = 0;
    std::size_t total = 0;
    std::size_t unparsed_count = 0;

    double accuracy() const { return total ? static_cast<double>(correct) / static_cast<double>(total) : 0.0; }
    // Unweighted mean of per-subject accuracies.
    double macro_accuracy() const;
    ordered_json to_json() const;
};

class PartialReportError : public Error {
public:
    PartialReportError(const std::string& what, EvalReport partial) : Error(what), partial_(std::move(partial)) {}
    const EvalReport& partial() const { return partial_; }

private:
    EvalReport partial_;
};

struct EvalOptions {
    std::uint64_t seed = 0;
    std::size_t parallelism = 1;
    int max_tokens = 16;
};

// Unparsed completions count as incorrect. The backend must tolerate
// concurrent calls when parallelism > 1.
EvalReport evaluate(const EvalTask& task, llm::Backend& backend, const EvalOptions& options = {});

}  // namespace scholar::eval
