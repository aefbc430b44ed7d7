#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <istream>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "scholar/text.hpp"

namespace scholar::kg {

struct Date {
    int year = 0;
    int month = 0;
    int day = 0;

    // "yyyy/MM/dd"; nullopt unless it names a real calendar day.
    static std::optional<Date> parse(std::string_view s);
    std::string str() const;

    auto operator<=>(const Date&) const = default;
};

struct PaperRecord {
    std::string id;
    std::string title;
    std::string abstract;
    std::vector<std::string> authors;
    std::string field_of_study;
    Date publish_date;
    std::string venue;
    long long citation_count = 0;
    std::vector<std::string> references;
    std::vector<std::string> keywords;

    json to_json() const;
};

// Searchable text fields, named as in the agent's tool schema.
enum class Field { abstracts, authors, fieldOfStudy, title, venue };
inline constexpr std::size_t kFieldCount = 5;

std::optional<Field> field_from_name(std::string_view name);
std::string_view field_name(Field f);

// Fields a query may project or sort on: the text fields plus
// publishDate and citationCount.
bool is_result_parameter(std::string_view name);

class QueryError : public Error {
public:
    using Error::Error;
};

class NotFound : public Error {
public:
    using Error::Error;
};

struct DateRange {
    std::optional<Date> gte;
    std::optional<Date> lte;
    bool contains(const Date& d) const { return (!gte || d >= *gte) && (!lte || d <= *lte); }
};

struct SortSpec {
    std::string field;
    bool descending = true;
};

struct KgQuery {
    std::map<Field, std::string> clauses;
    std::optional<DateRange> date_range;
    std::optional<SortSpec> sort_by;
    std::vector<std::string> result_parameters;
    std::size_t limit = 10;

    // Throws QueryError on any contract violation.
    void validate() const;

    // Accepts the agent tool's input shape:
    // {"title": "...", "authors": [..] | "...", "publishDate": {"gte","lte"},
    //  "sort_by": {"publishDate": "desc"}, "resultParameters": [...], "limit": N}
    static KgQuery from_json(const json& j);
};

struct KgHit {
    std::string id;
    double score = 0.0;
    ordered_json fields;  // exactly the requested result parameters, in request order
};

struct RejectedLine {
    std::size_t line = 0;
    std::string reason;
};

struct IndexStats {
    std::size_t accepted = 0;
    std::size_t rejected = 0;
    std::vector<RejectedLine> reasons;
};

// Validates one JSON object; nullopt + reason on failure.
std::optional<PaperRecord> record_from_json(const json& j, std::string& reason);

struct Bm25Params {
    double k1 = 1.2;
    double b = 0.75;
};

struct SimilarityWeights {
    double references = 0.7;
    double keywords = 0.3;
};

// |A ∩ B| / |A ∪ B|, with 0 for an empty union.
double jaccard(const std::vector<std::string>& a, const std::vector<std::string>& b);

// Immutable after construction; safe for concurrent reads.
class KgIndex {
public:
    KgIndex() = default;
    explicit KgIndex(std::vector<PaperRecord> records, Bm25Params params = {});

    const std::vector<PaperRecord>& records() const { return records_; }
    std::size_t size() const { return records_.size(); }
    const PaperRecord* find(const std::string& id) const;

    std::vector<KgHit> search(const KgQuery& query) const;

    std::vector<std::pair<std::string, double>> recommend_similar(const std::string& paper_id, std::size_t k,
                                                                  SimilarityWeights w = {}) const;

    // BM25 score of the query terms against one field of one document.
    double field_score(Field f, std::size_t doc, const std::vector<std::string>& query_terms) const;

    // Versioned JSON document: {"format": "scholar-kg", "version": 1, "records": [...]}
    json to_json() const;
    static KgIndex from_json(const json& j);
    void save(const std::string& path) const;
    static KgIndex load(const std::string& path);

private:
    struct Posting {
        std::uint32_t doc;
        std::uint32_t tf;
    };
    struct FieldIndex {
        std::unordered_map<std::string, std::vector<Posting>> postings;
        std::vector<std::uint32_t> doc_len;
        double avg_len = 0.0;
    };

    double clause_score(Field f, std::size_t doc, const std::string& clause) const;

    std::vector<PaperRecord> records_;
    std::unordered_map<std::string, std::size_t> by_id_;
    std::array<FieldIndex, kFieldCount> fields_;
    // Per field, per doc: term -> tf.
    std::array<std::vector<std::unordered_map<std::string, std::uint32_t>>, kFieldCount> doc_terms_;
    Bm25Params params_;
};

// Parses a JSON Lines stream; malformed or duplicate records are rejected
// with their line numbers, the first occurrence of an id wins.
std::pair<std::shared_ptr<const KgIndex>, IndexStats> ingest(std::istream& in, Bm25Params params = {});

std::string field_text(const PaperRecord& r, Field f);
json field_value(const PaperRecord& r, std::string_view result_parameter);

}  // namespace scholar::kg
