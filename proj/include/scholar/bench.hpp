#pragma once

#include <array>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "scholar/text.hpp"

namespace scholar::bench {

// Removes http:// and https:// URL tokens (to the next whitespace or closing
// bracket) and collapses the whitespace left behind. Text without URLs is
// returned unchanged.
std::string strip_links(std::string_view text);

inline constexpr std::string_view kMaskToken = "()";

// Replaces case-insensitive, word-bounded occurrences of full_name, then of
// name, with "()". Both passes scan the original text, so an inserted "()"
// is never re-matched.
std::string mask_description(std::string_view description, std::string_view name, std::string_view full_name);

struct MethodRecord {
    std::string name;
    std::string full_name;
    std::string description;
    std::string introducing_paper_title;
    std::string collection_path;  // area/category/collection
    std::string area;
};

struct DatasetRecord {
    std::string name;
    std::string full_name;
    std::string description;
    std::string introducing_paper_title;
    std::string modality;
};

enum class QType { method_intro, method_refer, dataset_intro, dataset_refer };

std::string_view to_string(QType q);
bool is_intro(QType q);

struct Provenance {
    std::string source;
    std::vector<std::string> distractors;
    std::uint64_t seed = 0;
};

struct BenchmarkItem {
    std::string id;
    QType qtype = QType::method_intro;
    std::string question;
    std::array<std::string, 4> options;
    int answer_index = 0;
    Provenance provenance;

    ordered_json to_json() const;
    static BenchmarkItem from_json(const json& j);
};

class SkipRecord : public Error {
public:
    using Error::Error;
};

class DumpParseError : public Error {
public:
    DumpParseError(std::size_t line, const std::string& what)
        : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

// A record reduced to what item construction needs. Methods group by
// collection then area; datasets by modality.
struct Candidate {
    std::string name;
    std::string full_name;
    std::string description;
    std::string paper_title;
    std::string group;  // collection_path or modality
    std::string area;   // empty for datasets

    std::string display_name() const { return full_name.empty() ? name : full_name; }
};

Candidate to_candidate(const MethodRecord& m);
Candidate to_candidate(const DatasetRecord& d);

// Option text shown for a description: links stripped, own name masked.
std::string processed_description(const Candidate& c);

std::string question_for(QType q, const Candidate& c);

// Builds one item. `pool` must not contain `record`; distractors come from
// the same group first, then the same area, then anywhere. Throws
// SkipRecord when fewer than 3 distinct distractors exist or the gold
// option would leak the record's name.
BenchmarkItem make_item(QType qtype, const Candidate& record, const std::vector<const Candidate*>& pool,
                        std::uint64_t seed);

std::vector<MethodRecord> parse_methods(std::istream& in);
std::vector<DatasetRecord> parse_datasets(std::istream& in);

struct Skipped {
    std::string record;
    QType qtype;
    std::string reason;
};

struct BuildStats {
    std::map<std::string, std::size_t> by_qtype;
    std::vector<Skipped> skipped;

    ordered_json to_json() const;
};

struct BuildOptions {
    std::uint64_t seed = 0;
    // Alternate intro/refer by record index instead of emitting both.
    bool one_per_record = false;
};

struct BuildResult {
    std::vector<BenchmarkItem> items;
    BuildStats stats;
};

BuildResult build_dataset(const std::vector<MethodRecord>& methods, const std::vector<DatasetRecord>& datasets,
                          const BuildOptions& options);

// One item per line, in build order.
std::string serialize_items(const std::vector<BenchmarkItem>& items);

// Per-item seed; independent of evaluation order.
std::uint64_t item_seed(std::uint64_t base, std::size_t record_index, QType q);

}  // namespace scholar::bench
