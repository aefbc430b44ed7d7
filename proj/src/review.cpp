#include "scholar/review.hpp"

#include <algorithm>
#include <regex>
#include <sstream>

namespace scholar::review {

namespace {

constexpr std::array<std::string_view, 7> kAspectNames = {
    "clarity", "meaningful_comparison", "motivation", "originality", "replicability", "soundness", "substance"};

AspectSet aspects_from_json(const json& j, const char* key) {
    AspectSet out;
    if (!j.contains(key)) return out;
    const auto& arr = j.at(key);
    if (!arr.is_array()) throw InputError(std::string(key) + " must be a list");
    for (const auto& a : arr) {
        if (!a.is_string()) throw InputError(std::string(key) + " entries must be strings");
        const auto s = a.get<std::string>();
        const auto asp = aspect_from_string(s);
        if (!asp) throw InputError("unknown aspect \"" + s + "\"");
        out.insert(*asp);
    }
    return out;
}

Decision decision_field(const json& j, const char* key) {
    const auto s = j.at(key).get<std::string>();
    const auto d = decision_from_string(s);
    if (!d) throw InputError(std::string(key) + ": cannot read \"" + s + "\" as accept or reject");
    return *d;
}

Scale scale_from_json(const json& j, const char* key, Scale fallback) {
    if (!j.contains(key)) return fallback;
    const auto& s = j.at(key);
    if (!s.is_array() || s.size() != 2) throw InputError(std::string(key) + " must be [min, max]");
    Scale out{s[0].get<int>(), s[1].get<int>()};
    if (out.min > out.max) throw InputError(std::string(key) + " has min > max");
    return out;
}

template <typename T>
std::vector<T> read_lines(std::istream& in) {
    std::vector<T> out;
    jsonl::for_each(in, [&](std::size_t line, const json& j) {
        try {
            out.push_back(T::from_json(j));
        } catch (const json::exception& e) {
            throw InputError("line " + std::to_string(line) + ": " + e.what());
        } catch (const InputError& e) {
            throw InputError("line " + std::to_string(line) + ": " + e.what());
        }
    });
    return out;
}

bool contradicts(const ReviewRecord& r, const std::map<std::string, MetaReview>& metas) {
    const auto it = metas.find(r.paper_id);
    return it != metas.end() && it->second.decision != r.recommendation;
}

void require_metas(const std::vector<Prediction>& predictions, const std::map<std::string, MetaReview>& metas) {
    std::vector<std::string> missing;
    for (const auto& p : predictions)
        if (!metas.count(p.paper_id)) missing.push_back(p.paper_id);
    if (!missing.empty()) throw InputError("no meta-review for: " + text::join(missing, ", "));
}

std::string pct(const Ratio& r) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", r.value());
    return std::string(buf) + " (" + r.str() + ")";
}

}  // namespace

std::string_view to_string(Aspect a) { return kAspectNames[static_cast<std::size_t>(a)]; }

std::optional<Aspect> aspect_from_string(std::string_view s) {
    auto key = text::to_lower(text::trim(s));
    std::replace(key.begin(), key.end(), ' ', '_');
    for (std::size_t i = 0; i < kAspectNames.size(); ++i)
        if (kAspectNames[i] == key) return kAllAspects[i];
    return std::nullopt;
}

std::string_view to_string(Decision d) { return d == Decision::accept ? "accept" : "reject"; }

std::optional<Decision> decision_from_string(std::string_view s) {
    const auto t = text::trim(s);
    if (text::starts_with_icase(t, "accept")) return Decision::accept;
    if (text::starts_with_icase(t, "reject")) return Decision::reject;
    return std::nullopt;
}

ReviewRecord ReviewRecord::from_json(const json& j) {
    ReviewRecord r;
    r.paper_id = j.at("paper_id").get<std::string>();
    r.review_id = j.value("review_id", std::string{});
    r.text = j.at("text").get<std::string>();
    if (j.contains("recommendation")) {
        r.recommendation = decision_field(j, "recommendation");
    } else {
        const auto scale = scale_from_json(j, "rating_scale", Scale{1, 10});
        const int rating = j.at("rating").get<int>();
        if (!scale.contains(rating)) throw InputError("rating outside its scale");
        r.recommendation = 2 * rating > scale.min + scale.max ? Decision::accept : Decision::reject;
    }
    r.confidence_scale = scale_from_json(j, "confidence_scale", Scale{1, 5});
    r.confidence = j.at("confidence").get<int>();
    if (!r.confidence_scale.contains(r.confidence)) throw InputError("confidence outside its scale");
    r.aspects = aspects_from_json(j, "aspects");
    return r;
}

ordered_json ReviewRecord::to_json() const {
    ordered_json j;
    j["paper_id"] = paper_id;
    if (!review_id.empty()) j["review_id"] = review_id;
    j["text"] = text;
    j["recommendation"] = to_string(recommendation);
    j["confidence"] = confidence;
    j["confidence_scale"] = {confidence_scale.min, confidence_scale.max};
    auto a = ordered_json::array();
    for (auto x : aspects) a.push_back(to_string(x));
    j["aspects"] = a;
    return j;
}

MetaReview MetaReview::from_json(const json& j) {
    MetaReview m;
    m.paper_id = j.at("paper_id").get<std::string>();
    m.decision = decision_field(j, "decision");
    m.aspects = aspects_from_json(j, "aspects");
    return m;
}

Prediction Prediction::from_json(const json& j) {
    Prediction p;
    p.paper_id = j.at("paper_id").get<std::string>();
    p.recommendation = decision_field(j, "recommendation");
    p.aspects = aspects_from_json(j, "aspects");
    return p;
}

std::vector<ReviewRecord> read_reviews(std::istream& in) { return read_lines<ReviewRecord>(in); }
std::vector<MetaReview> read_metas(std::istream& in) { return read_lines<MetaReview>(in); }
std::vector<Prediction> read_predictions(std::istream& in) { return read_lines<Prediction>(in); }

std::map<std::string, MetaReview> index_metas(const std::vector<MetaReview>& metas) {
    std::map<std::string, MetaReview> out;
    for (const auto& m : metas)
        if (!out.emplace(m.paper_id, m).second) throw InputError("duplicate meta-review for " + m.paper_id);
    return out;
}

bool excessive_line_breaks(std::string_view t, const CleanOptions& options) {
    if (t.empty()) return false;
    const auto newlines = static_cast<std::size_t>(std::count(t.begin(), t.end(), '\n'));
    if (static_cast<double>(newlines) > options.max_newline_ratio * static_cast<double>(t.size())) return true;
    // Lines between newlines; the tail after the last newline is not a line.
    std::size_t run = 0;
    std::size_t start = 0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (t[i] != '\n') continue;
        const bool blank = text::trim(t.substr(start, i - start)).empty();
        run = blank ? run + 1 : 0;
        if (run >= options.max_blank_run) return true;
        start = i + 1;
    }
    return false;
}

CleanResult clean_reviews(const std::vector<ReviewRecord>& records, const std::map<std::string, MetaReview>& metas,
                          const CleanOptions& options) {
    std::vector<std::vector<std::string>> reasons(records.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto n = text::count_ws_tokens(records[i].text);
        if (n < options.min_tokens) reasons[i].emplace_back(kReasonTooShort);
        if (n > options.max_tokens) reasons[i].emplace_back(kReasonTooLong);
        if (excessive_line_breaks(records[i].text, options)) reasons[i].emplace_back(kReasonLineBreaks);
    }

    std::map<std::string, std::vector<std::size_t>> by_paper;
    for (std::size_t i = 0; i < records.size(); ++i)
        if (reasons[i].empty()) by_paper[records[i].paper_id].push_back(i);

    for (auto& [paper, idx] : by_paper) {
        if (!metas.count(paper)) continue;
        if (options.rule == ConsistencyRule::conjunctive) {
            // A lone review has nothing to be lowest against.
            while (idx.size() >= 2) {
                const auto lo = std::min_element(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
                    return records[a].confidence < records[b].confidence;
                });
                const int c = records[*lo].confidence;
                const auto ties = std::count_if(idx.begin(), idx.end(),
                                                [&](std::size_t k) { return records[k].confidence == c; });
                if (ties != 1 || !contradicts(records[*lo], metas)) break;
                reasons[*lo].emplace_back(kReasonInconsistent);
                idx.erase(lo);
            }
        } else {
            std::vector<std::size_t> bad;
            for (auto k : idx)
                if (contradicts(records[k], metas)) bad.push_back(k);
            if (bad.empty()) continue;
            int c = records[bad.front()].confidence;
            for (auto k : bad) c = std::min(c, records[k].confidence);
            for (auto k : bad)
                if (records[k].confidence == c) reasons[k].emplace_back(kReasonInconsistent);
        }
    }

    CleanResult out;
    for (std::size_t i = 0; i < records.size(); ++i) {
        if (reasons[i].empty())
            out.kept.push_back(records[i]);
        else
            out.removed.push_back({records[i], std::move(reasons[i])});
    }
    return out;
}

std::vector<std::string> default_boilerplate_patterns() {
    return {R"(Under\s+review\s+as\s+a\s+conference\s+paper\s+at\s+ICLR\s+\d{4})",
            R"(Anonymous\s+authors\s+Paper\s+under\s+double-blind\s+review)"};
}

std::string strip_boilerplate(std::string_view paper_text) {
    static const auto patterns = default_boilerplate_patterns();
    return strip_boilerplate(paper_text, patterns);
}

std::string strip_boilerplate(std::string_view paper_text, const std::vector<std::string>& patterns) {
    std::vector<std::regex> res;
    res.reserve(patterns.size());
    for (const auto& p : patterns) res.emplace_back(p, std::regex::ECMAScript | std::regex::optimize);
    std::string cur(paper_text);
    for (;;) {
        std::string next = cur;
        for (const auto& re : res) next = std::regex_replace(next, re, "");
        if (next == cur) return cur;
        cur = std::move(next);
    }
}

SftRecord format_sft_record(std::string_view paper_text, std::string_view review_text) {
    if (text::trim(paper_text).empty()) throw InputError("paper text must be non-empty");
    if (text::trim(review_text).empty()) throw InputError("review text must be non-empty");
    constexpr std::string_view slot = "{Paper Content}";
    std::string prompt(kReviewInstruction);
    prompt.replace(prompt.find(slot), slot.size(), paper_text);
    return {std::move(prompt), std::string(review_text)};
}

Ratio recommendation_accuracy(const std::vector<Prediction>& predictions,
                              const std::map<std::string, MetaReview>& metas) {
    require_metas(predictions, metas);
    Ratio r{0, predictions.size()};
    for (const auto& p : predictions)
        if (metas.at(p.paper_id).decision == p.recommendation) ++r.num;
    return r;
}

AspectMetrics aspect_metrics(const std::vector<Prediction>& predictions,
                             const std::map<std::string, MetaReview>& metas) {
    require_metas(predictions, metas);
    AspectMetrics m;
    double macro_sum = 0.0;
    std::size_t macro_n = 0;
    for (const auto& p : predictions) {
        const auto& meta = metas.at(p.paper_id).aspects;
        std::uint64_t hit = 0;
        for (auto a : p.aspects) hit += meta.count(a);
        m.recall.num += hit;
        m.recall.den += meta.size();
        m.accuracy.num += hit;
        m.accuracy.den += p.aspects.size();
        if (!p.aspects.empty()) {
            macro_sum += static_cast<double>(hit) / static_cast<double>(p.aspects.size());
            ++macro_n;
        }
    }
    m.macro_accuracy = macro_n ? macro_sum / static_cast<double>(macro_n) : 0.0;
    return m;
}

ReviewMetrics compute_metrics(const std::vector<Prediction>& predictions,
                              const std::map<std::string, MetaReview>& metas) {
    return {recommendation_accuracy(predictions, metas), aspect_metrics(predictions, metas)};
}

ordered_json ReviewMetrics::to_json() const {
    const auto ratio = [](const Ratio& r) {
        return ordered_json{{"num", r.num}, {"den", r.den}, {"value", r.value()}};
    };
    return {{"final_recommendation_accuracy", ratio(recommendation)},
            {"aspect_recall", ratio(aspects.recall)},
            {"aspect_accuracy", ratio(aspects.accuracy)},
            {"aspect_accuracy_macro", aspects.macro_accuracy}};
}

std::string ReviewMetrics::table() const {
    std::ostringstream os;
    os << "| Final Recommendation Accuracy | Aspect Recall | Aspect Accuracy |\n"
       << "|---|---|---|\n"
       << "| " << pct(recommendation) << " | " << pct(aspects.recall) << " | " << pct(aspects.accuracy) << " |\n";
    return os.str();
}

}  // namespace scholar::review
