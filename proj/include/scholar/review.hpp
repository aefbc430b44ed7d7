#pragma once

#include <array>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "scholar/text.hpp"

namespace scholar::review {

enum class Aspect { clarity, meaningful_comparison, motivation, originality, replicability, soundness, substance };

inline constexpr std::array<Aspect, 7> kAllAspects = {
    Aspect::clarity,     Aspect::meaningful_comparison, Aspect::motivation, Aspect::originality,
    Aspect::replicability, Aspect::soundness,           Aspect::substance};

using AspectSet = std::set<Aspect>;

std::string_view to_string(Aspect a);
std::optional<Aspect> aspect_from_string(std::string_view s);

enum class Decision { accept, reject };
std::string_view to_string(Decision d);
// "accept", "Accept (Poster)", "Reject" ... ; nullopt otherwise.
std::optional<Decision> decision_from_string(std::string_view s);

class InputError : public Error {
public:
    using Error::Error;
};

struct Scale {
    int min = 1;
    int max = 10;
    bool contains(int v) const { return v >= min && v <= max; }
};

struct ReviewRecord {
    std::string paper_id;
    std::string review_id;
    std::string text;
    Decision recommendation = Decision::reject;  // accept-leaning / reject-leaning
    int confidence = 1;
    Scale confidence_scale{1, 5};
    AspectSet aspects;

    // Accepts either "recommendation" or "rating" with "rating_scale" [min, max];
    // ratings strictly above the midpoint lean accept.
    static ReviewRecord from_json(const json& j);
    ordered_json to_json() const;
};

struct MetaReview {
    std::string paper_id;
    Decision decision = Decision::reject;
    AspectSet aspects;

    static MetaReview from_json(const json& j);
};

struct Prediction {
    std::string paper_id;
    Decision recommendation = Decision::reject;
    AspectSet aspects;

    static Prediction from_json(const json& j);
};

std::vector<ReviewRecord> read_reviews(std::istream& in);
std::vector<MetaReview> read_metas(std::istream& in);
std::vector<Prediction> read_predictions(std::istream& in);

// Throws InputError on a second meta for the same paper.
std::map<std::string, MetaReview> index_metas(const std::vector<MetaReview>& metas);

enum class ConsistencyRule {
    // contradicts the decision AND holds the strict minimum confidence among
    // the paper's remaining reviews; applied until nothing changes
    conjunctive,
    // drop the lowest-confidence contradicting review(s) of each paper, one pass
    lowest_contradicting,
};

struct CleanOptions {
    std::size_t min_tokens = 100;
    std::size_t max_tokens = 2000;
    double max_newline_ratio = 0.15;
    std::size_t max_blank_run = 5;  // a run this long is excessive
    ConsistencyRule rule = ConsistencyRule::conjunctive;
};

inline constexpr std::string_view kReasonTooShort = "too-short";
inline constexpr std::string_view kReasonTooLong = "too-long";
inline constexpr std::string_view kReasonLineBreaks = "excessive-line-breaks";
inline constexpr std::string_view kReasonInconsistent = "inconsistent-low-confidence";

struct Removed {
    ReviewRecord record;
    std::vector<std::string> reasons;
};

struct CleanResult {
    std::vector<ReviewRecord> kept;
    std::vector<Removed> removed;
};

bool excessive_line_breaks(std::string_view text, const CleanOptions& options = {});

// Keeps input order in both outputs. Reviews of papers without a meta are
// never removed for inconsistency.
CleanResult clean_reviews(const std::vector<ReviewRecord>& records, const std::map<std::string, MetaReview>& metas,
                          const CleanOptions& options = {});

std::vector<std::string> default_boilerplate_patterns();

// Removes every match of the patterns (ECMAScript regex), repeating until
// the text is stable.
std::string strip_boilerplate(std::string_view paper_text);
std::string strip_boilerplate(std::string_view paper_text, const std::vector<std::string>& patterns);

inline constexpr std::string_view kReviewInstruction =
    "You are a professional reviewer in the field of computer science and artificial intelligence. I will give "
    "you a paper. You need to review this paper and discuss the novelty and originality of ideas, correctness, "
    "clarity, the significance of results, potential impact, and quality of the presentation. You need to give "
    "a complete review opinion including the strengths of this paper, your main concerns regarding this paper, "
    "and specific reasons for its assessment. This is the paper for your review: {Paper Content}";

struct SftRecord {
    std::string prompt;
    std::string output;

    ordered_json to_json() const { return {{"prompt", prompt}, {"output", output}}; }
};

SftRecord format_sft_record(std::string_view paper_text, std::string_view review_text);

// Exact ratio; a zero denominator reads as 0.
struct Ratio {
    std::uint64_t num = 0;
    std::uint64_t den = 0;

    double value() const { return den ? static_cast<double>(num) / static_cast<double>(den) : 0.0; }
    std::string str() const { return std::to_string(num) + "/" + std::to_string(den); }
    bool operator==(const Ratio&) const = default;
};

// Throws InputError listing every prediction paper_id without a meta.
Ratio recommendation_accuracy(const std::vector<Prediction>& predictions,
                              const std::map<std::string, MetaReview>& metas);

struct AspectMetrics {
    Ratio recall;    // L/N over all meta aspect mentions
    Ratio accuracy;  // micro: correct / all predicted aspects
    double macro_accuracy = 0.0;  // mean per-prediction accuracy over predictions with aspects
};

AspectMetrics aspect_metrics(const std::vector<Prediction>& predictions,
                             const std::map<std::string, MetaReview>& metas);

struct ReviewMetrics {
    Ratio recommendation;
    AspectMetrics aspects;

    ordered_json to_json() const;
    // Markdown table with the column names used in published comparisons.
    std::string table() const;
};

ReviewMetrics compute_metrics(const std::vector<Prediction>& predictions,
                              const std::map<std::string, MetaReview>& metas);

}  // namespace scholar::review
