#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>

#include "scholar/eval.hpp"

namespace scholar::eval {

namespace fs = std::filesystem;

namespace {

const std::vector<std::string> kLetters = {"A", "B", "C", "D"};
const std::vector<std::string> kYesNoMaybe = {"yes", "no", "maybe"};

std::string locator(const fs::path& file, std::size_t row) { return file.string() + ":" + std::to_string(row); }

// Files in `dir` ending with `suffix`, sorted by name; empty if dir is missing.
std::vector<fs::path> files_with_suffix(const fs::path& dir, const std::string& suffix) {
    std::vector<fs::path> out;
    if (!fs::is_directory(dir)) return out;
    for (const auto& e : fs::directory_iterator(dir)) {
        const auto name = e.path().filename().string();
        if (e.is_regular_file() && name.size() > suffix.size() &&
            name.compare(name.size() - suffix.size(), suffix.size(), suffix) == 0)
            out.push_back(e.path());
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::string subject_of(const fs::path& file, const std::string& suffix) {
    const auto name = file.filename().string();
    return name.substr(0, name.size() - suffix.size());
}

std::string normalize_letter(const std::string& raw, const fs::path& file, std::size_t row) {
    const auto a = text::trim(raw);
    if (a.size() == 1 && std::find(kLetters.begin(), kLetters.end(), a) != kLetters.end()) return a;
    throw LoadError(locator(file, row) + ": answer must be one of A-D, got \"" + a + "\"");
}

// MMLU rows carry no header: question, A, B, C, D, answer.
std::vector<QAItem> load_mmlu_csv(const fs::path& file, const std::string& subject) {
    const auto rows = parse_csv(read_file(file.string()));
    std::vector<QAItem> out;
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const auto& row = rows[r];
        if (row.size() == 1 && text::trim(row[0]).empty()) continue;
        if (row.size() != 6)
            throw LoadError(locator(file, r + 1) + ": expected 6 columns, got " + std::to_string(row.size()));
        QAItem it;
        it.id = subject + "/" + file.stem().string() + "/" + std::to_string(r + 1);
        it.subject = subject;
        it.question = row[0];
        it.options = {row[1], row[2], row[3], row[4]};
        it.gold = normalize_letter(row[5], file, r + 1);
        out.push_back(std::move(it));
    }
    return out;
}

// CEval rows have a header naming the columns.
std::vector<QAItem> load_ceval_csv(const fs::path& file, const std::string& subject) {
    const auto rows = parse_csv(read_file(file.string()));
    std::vector<QAItem> out;
    if (rows.empty()) return out;
    const auto& header = rows[0];
    const auto col = [&](const std::string& name) -> std::size_t {
        const auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end()) throw LoadError(locator(file, 1) + ": missing column \"" + name + "\"");
        return static_cast<std::size_t>(it - header.begin());
    };
    const auto q = col("question"), a = col("A"), b = col("B"), c = col("C"), d = col("D"), ans = col("answer");
    const auto width = std::max({q, a, b, c, d, ans}) + 1;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& row = rows[r];
        if (row.size() == 1 && text::trim(row[0]).empty()) continue;
        if (row.size() < width)
            throw LoadError(locator(file, r + 1) + ": expected at least " + std::to_string(width) + " columns");
        QAItem it;
        it.id = subject + "/" + file.stem().string() + "/" + std::to_string(r);
        it.subject = subject;
        it.question = row[q];
        it.options = {row[a], row[b], row[c], row[d]};
        it.gold = normalize_letter(row[ans], file, r + 1);
        out.push_back(std::move(it));
    }
    return out;
}

fs::path resolve_file(const fs::path& path, const std::string& default_name) {
    if (fs::is_directory(path)) return path / default_name;
    return path;
}

// Splits "stem\nA. x\nB. y\nC. z\nD. w" into the stem and four options.
bool split_embedded_options(const std::string& q, std::string& stem, std::vector<std::string>& options) {
    const auto lines = text::split(q, '\n');
    std::vector<std::string> head;
    std::vector<std::string> opts;
    for (const auto& line : lines) {
        const auto t = text::trim(line);
        const auto idx = opts.size();
        if (idx < kLetters.size() && t.size() >= 2 && t.compare(0, 1, kLetters[idx]) == 0 &&
            (t[1] == '.' || t[1] == ')' || t[1] == ':')) {
            opts.push_back(text::trim(t.substr(2)));
        } else if (opts.empty()) {
            head.push_back(line);
        } else {
            return false;
        }
    }
    if (opts.size() != kLetters.size()) return false;
    stem = text::trim(text::join(head, "\n"));
    options = std::move(opts);
    return true;
}

std::vector<QAItem> load_scieval_file(const fs::path& file) {
    const auto data = json::parse(read_file(file.string()));
    if (!data.is_array()) throw LoadError(file.string() + ": expected a JSON array");
    std::vector<QAItem> out;
    for (std::size_t i = 0; i < data.size(); ++i) {
        const auto& row = data[i];
        if (!row.is_object()) throw LoadError(locator(file, i) + ": item must be an object");
        if (row.value("type", std::string{}) != "multiple-choice") continue;
        QAItem it;
        it.id = row.contains("id") ? row["id"].dump() : std::to_string(i);
        it.subject = row.value("category", std::string{});
        if (it.subject.empty()) throw LoadError(locator(file, i) + ": missing category");
        const auto q = row.value("question", std::string{});
        if (!split_embedded_options(q, it.question, it.options)) {
            it.question = q;
            it.options.clear();
        }
        const auto& ans = row.contains("answer") ? row["answer"] : json();
        std::string gold;
        if (ans.is_array() && !ans.empty() && ans[0].is_string())
            gold = ans[0].get<std::string>();
        else if (ans.is_string())
            gold = ans.get<std::string>();
        it.gold = normalize_letter(gold, file, i);
        out.push_back(std::move(it));
    }
    return out;
}

// Moves the first k items of each subject into the dev pool.
void reserve_exemplars(std::vector<QAItem> all, std::size_t k, EvalTask& task) {
    std::map<std::string, std::size_t> taken;
    for (auto& it : all) {
        auto& n = taken[it.subject];
        if (n < k) {
            ++n;
            task.dev_pool[it.subject].push_back(std::move(it));
        } else {
            task.test_items.push_back(std::move(it));
        }
    }
}

void finalize_subjects(EvalTask& task) {
    std::set<std::string> s;
    for (const auto& it : task.test_items) s.insert(it.subject);
    for (const auto& [subject, _] : task.dev_pool) s.insert(subject);
    task.subjects.assign(s.begin(), s.end());
}

}  // namespace

std::vector<std::vector<std::string>> parse_csv(std::string_view data) {
    if (data.size() >= 3 && data.compare(0, 3, "\xEF\xBB\xBF") == 0) data.remove_prefix(3);
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> row;
    std::string field;
    bool quoted = false;
    bool any = false;
    for (std::size_t i = 0; i < data.size(); ++i) {
        const char c = data[i];
        any = true;
        if (quoted) {
            if (c == '"') {
                if (i + 1 < data.size() && data[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            row.push_back(std::move(field));
            field.clear();
        } else if (c == '\n' || c == '\r') {
            if (c == '\r' && i + 1 < data.size() && data[i + 1] == '\n') ++i;
            row.push_back(std::move(field));
            field.clear();
            rows.push_back(std::move(row));
            row.clear();
            any = false;
        } else {
            field += c;
        }
    }
    if (quoted) throw LoadError("unterminated quoted CSV field");
    if (any) {
        row.push_back(std::move(field));
        rows.push_back(std::move(row));
    }
    return rows;
}

EvalTask load_task(Format format, const std::string& path_str, std::optional<std::size_t> n_shots) {
    const fs::path path(path_str);
    if (!fs::exists(path)) throw LoadError("no such file or directory: " + path_str);
    EvalTask task;
    task.name = std::string(to_string(format));
    task.format = format;
    task.n_shots = n_shots.value_or(default_shots(format));
    task.choice_labels = kLetters;

    try {
        switch (format) {
            case Format::mmlu: {
                for (const auto& f : files_with_suffix(path / "dev", "_dev.csv")) {
                    const auto subj = subject_of(f, "_dev.csv");
                    task.dev_pool[subj] = load_mmlu_csv(f, subj);
                }
                for (const auto& f : files_with_suffix(path / "test", "_test.csv")) {
                    auto items = load_mmlu_csv(f, subject_of(f, "_test.csv"));
                    task.test_items.insert(task.test_items.end(), items.begin(), items.end());
                }
                break;
            }
            case Format::ceval: {
                for (const auto& f : files_with_suffix(path / "dev", "_dev.csv")) {
                    const auto subj = subject_of(f, "_dev.csv");
                    task.dev_pool[subj] = load_ceval_csv(f, subj);
                }
                for (const auto& f : files_with_suffix(path / "val", "_val.csv")) {
                    auto items = load_ceval_csv(f, subject_of(f, "_val.csv"));
                    task.test_items.insert(task.test_items.end(), items.begin(), items.end());
                }
                break;
            }
            case Format::pubmedqa: {
                task.choice_labels = kYesNoMaybe;
                const auto file = resolve_file(path, "ori_pqal.json");
                const auto data = ordered_json::parse(read_file(file.string()));
                if (!data.is_object()) throw LoadError(file.string() + ": expected an object keyed by PMID");
                std::vector<QAItem> all;
                for (const auto& [pmid, row] : data.items()) {
                    QAItem it;
                    it.id = pmid;
                    it.subject = "biomedical_research";
                    it.question = row.at("QUESTION").get<std::string>();
                    std::vector<std::string> ctx;
                    for (const auto& c : row.at("CONTEXTS")) ctx.push_back(c.get<std::string>());
                    it.context = text::join(ctx, " ");
                    it.gold = text::to_lower(row.at("final_decision").get<std::string>());
                    if (std::find(kYesNoMaybe.begin(), kYesNoMaybe.end(), it.gold) == kYesNoMaybe.end())
                        throw LoadError(file.string() + ":" + pmid + ": final_decision must be yes/no/maybe");
                    all.push_back(std::move(it));
                }
                reserve_exemplars(std::move(all), task.n_shots, task);
                break;
            }
            case Format::scieval: {
                const auto file = resolve_file(path, "scieval-valid.json");
                auto items = load_scieval_file(file);
                const auto dev = file.parent_path() / "scieval-dev.json";
                if (fs::is_directory(path) && fs::exists(dev)) {
                    for (auto& it : load_scieval_file(dev)) task.dev_pool[it.subject].push_back(std::move(it));
                    task.test_items = std::move(items);
                } else {
                    reserve_exemplars(std::move(items), task.n_shots, task);
                }
                break;
            }
            case Format::csqa: {
                std::vector<fs::path> files;
                if (fs::is_directory(path))
                    files = files_with_suffix(path, ".jsonl");
                else
                    files.push_back(path);
                std::vector<QAItem> all;
                for (const auto& f : files) {
                    std::ifstream in(f);
                    jsonl::for_each(in, [&](std::size_t line, const json& row) {
                        try {
                            QAItem it;
                            it.id = row.at("id").get<std::string>();
                            it.subject = row.at("qtype").get<std::string>();
                            it.question = row.at("question").get<std::string>();
                            for (const auto& o : row.at("options")) it.options.push_back(o.get<std::string>());
                            const auto idx = row.at("answer_index").get<int>();
                            if (idx < 0 || idx > 3) throw LoadError("answer_index out of range");
                            it.gold = kLetters[static_cast<std::size_t>(idx)];
                            all.push_back(std::move(it));
                        } catch (const std::exception& e) {
                            throw LoadError(locator(f, line) + ": " + e.what());
                        }
                    });
                }
                reserve_exemplars(std::move(all), task.n_shots, task);
                break;
            }
        }
    } catch (const LoadError&) {
        throw;
    } catch (const jsonl::ParseError& e) {
        throw LoadError(path_str + ": " + e.what());
    } catch (const json::exception& e) {
        throw LoadError(path_str + ": " + e.what());
    }
    finalize_subjects(task);
    task.validate();
    return task;
}

}  // namespace scholar::eval
