#include "scholar/eval.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <mutex>
#include <set>
#include <thread>

namespace scholar::eval {

namespace {

bool ascii_alnum(unsigned char c) { return c < 0x80 && std::isalnum(c); }

std::string subject_display(const std::string& s) {
    std::string out = s;
    std::replace(out.begin(), out.end(), '_', ' ');
    return out;
}

void append_block(std::string& out, const EvalTask& task, const QAItem& item) {
    if (!item.context.empty()) out += "Context: " + item.context + "\n";
    out += "Question: " + item.question + "\n";
    if (!item.options.empty()) {
        for (std::size_t i = 0; i < item.options.size(); ++i)
            out += task.choice_labels[i] + ". " + item.options[i] + "\n";
    } else if (std::any_of(task.choice_labels.begin(), task.choice_labels.end(),
                           [](const std::string& l) { return l.size() > 1; })) {
        out += "Choices: " + text::join(task.choice_labels, ", ") + "\n";
    }
}

}  // namespace

std::optional<Format> format_from_string(std::string_view s) {
    for (auto f : {Format::mmlu, Format::ceval, Format::pubmedqa, Format::scieval, Format::csqa})
        if (to_string(f) == s) return f;
    return std::nullopt;
}

std::string_view to_string(Format f) {
    switch (f) {
        case Format::mmlu: return "mmlu";
        case Format::ceval: return "ceval";
        case Format::pubmedqa: return "pubmedqa";
        case Format::scieval: return "scieval";
        case Format::csqa: return "csqa";
    }
    return "mmlu";
}

std::size_t default_shots(Format f) {
    switch (f) {
        case Format::mmlu:
        case Format::ceval:
        case Format::pubmedqa: return 5;
        case Format::scieval:
        case Format::csqa: return 3;
    }
    return 5;
}

void EvalTask::validate() const {
    std::set<std::string> uniq(choice_labels.begin(), choice_labels.end());
    if (choice_labels.empty() || uniq.size() != choice_labels.size())
        throw ConfigError("choice labels must be non-empty and pairwise distinct");
    std::set<std::string> with_tests;
    for (const auto& it : test_items) with_tests.insert(it.subject);
    for (const auto& s : with_tests) {
        const auto it = dev_pool.find(s);
        const auto have = it == dev_pool.end() ? 0 : it->second.size();
        if (have < n_shots)
            throw ConfigError("subject \"" + s + "\" has " + std::to_string(have) + " exemplars, " +
                              std::to_string(n_shots) + " shots requested");
    }
    for (const auto& it : test_items) {
        if (uniq.count(it.gold) == 0) throw ConfigError("item " + it.id + " has gold label outside the label set");
        if (!it.options.empty() && it.options.size() != choice_labels.size())
            throw ConfigError("item " + it.id + " has " + std::to_string(it.options.size()) + " options for " +
                              std::to_string(choice_labels.size()) + " labels");
    }
}

std::string build_fewshot_prompt(const EvalTask& task, const QAItem& item) {
    std::string out = "The following are multiple choice questions (with answers) about " +
                      subject_display(item.subject) + ".\n\n";
    const auto it = task.dev_pool.find(item.subject);
    if (it != task.dev_pool.end()) {
        std::size_t used = 0;
        for (const auto& ex : it->second) {
            if (used == task.n_shots) break;
            if (ex.id == item.id) continue;
            append_block(out, task, ex);
            out += "Answer: " + ex.gold + "\n\n";
            ++used;
        }
    }
    append_block(out, task, item);
    out += "Answer:";
    return out;
}

std::optional<std::string> extract_answer(std::string_view completion, const std::vector<std::string>& labels) {
    for (std::size_t i = 0; i < completion.size(); ++i) {
        if (i > 0 && ascii_alnum(static_cast<unsigned char>(completion[i - 1]))) continue;
        for (const auto& label : labels) {
            if (label.empty() || i + label.size() > completion.size()) continue;
            const auto cand = completion.substr(i, label.size());
            const bool hit = label.size() == 1 ? cand == label : text::iequals(cand, label);
            if (!hit) continue;
            const auto end = i + label.size();
            if (end < completion.size() && ascii_alnum(static_cast<unsigned char>(completion[end]))) continue;
            return label;
        }
    }
    return std::nullopt;
}

double EvalReport::macro_accuracy() const {
    if (per_subject.empty()) return 0.0;
    double sum = 0.0;
    for (const auto& [_, s] : per_subject) sum += s.accuracy();
    return sum / static_cast<double>(per_subject.size());
}

ordered_json EvalReport::to_json() const {
    ordered_json j;
    j["task"] = task;
    j["shots"] = shots;
    j["backend"] = backend;
    j["seed"] = seed;
    j["template_version"] = template_version;
    j["per_subject"] = ordered_json::object();
    for (const auto& [name, s] : per_subject)
        j["per_subject"][name] = {{"correct", s.correct}, {"total", s.total}, {"accuracy", s.accuracy()}};
    j["overall"] = {{"correct", correct}, {"total", total}, {"accuracy", accuracy()}};
    j["macro_accuracy"] = macro_accuracy();
    j["headline"] = "overall.accuracy (micro)";
    j["unparsed_count"] = unparsed_count;
    return j;
}

EvalReport evaluate(const EvalTask& task, llm::Backend& backend, const EvalOptions& options) {
    task.validate();
    EvalReport report;
    report.task = task.name;
    report.shots = task.n_shots;
    report.backend = backend.id();
    report.seed = options.seed;

    enum class Outcome : char { pending, correct, wrong, unparsed };
    std::vector<Outcome> outcomes(task.test_items.size(), Outcome::pending);
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::mutex err_mu;
    std::string first_error;

    const auto worker = [&] {
        while (!failed.load()) {
            const auto i = next.fetch_add(1);
            if (i >= task.test_items.size()) return;
            const auto& item = task.test_items[i];
            llm::CompletionRequest req;
            req.prompt = build_fewshot_prompt(task, item);
            req.stop_sequences = {"\n\n", "\nQuestion:"};
            req.max_tokens = options.max_tokens;
            try {
                const auto resp = backend.complete(req);
                const auto label = extract_answer(resp.text, task.choice_labels);
                outcomes[i] = !label ? Outcome::unparsed : (*label == item.gold ? Outcome::correct : Outcome::wrong);
            } catch (const std::exception& e) {
                std::lock_guard lock(err_mu);
                if (!failed.exchange(true)) first_error = e.what();
                return;
            }
        }
    };
    const auto n_threads = std::max<std::size_t>(1, std::min(options.parallelism, task.test_items.size()));
    if (n_threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    for (std::size_t i = 0; i < outcomes.size(); ++i) {
        if (outcomes[i] == Outcome::pending) continue;
        auto& s = report.per_subject[task.test_items[i].subject];
        ++s.total;
        ++report.total;
        if (outcomes[i] == Outcome::correct) {
            ++s.correct;
            ++report.correct;
        } else if (outcomes[i] == Outcome::unparsed) {
            ++report.unparsed_count;
        }
    }
    if (failed) throw PartialReportError("backend failure after " + std::to_string(report.total) + " of " +
                                             std::to_string(task.test_items.size()) + " items: " + first_error,
                                         report);
    return report;
}

}  // namespace scholar::eval
