#include "scholar/curator.hpp"

#include <algorithm>
#include <atomic>
#include <regex>
#include <thread>

namespace scholar::curator {

const std::string kLabelPrompt =
    "Please assess the provided CommonCrawl sample based on the following criteria and return the results in the "
    "specified JSON format.\n"
    "\n"
    "The evaluation criteria are as follows:\n"
    "1. Quality: Evaluate grammar completeness, language coherence, information accuracy, and the presence of "
    "low-quality content such as explicit, violent, advertising, promotional, or recruitment-related information. "
    "Categorize quality as \"Excellent\", \"Average\", or \"Poor\";\n"
    "\n"
    "2. Domain: Determine if the sample is related to fields such as computer science, natural sciences, social "
    "sciences, engineering and technology, medical and health, arts and literature, humanities, economics and "
    "management, law, education, agricultural sciences, space sciences, etc., and categorize it accordingly;\n"
    "\n"
    "3. Depth: Assess the content as \"Beginner\", \"Intermediate\", \"Advanced\", or \"Expert\";\n"
    "\n"
    "4. Category: Identify whether it falls under the category of \"Academic Article\", \"Academic Report\", "
    "\"Monograph\", \"Whitepaper\", \"Technical Blog\", \"Popular Science Article\",\"Forum Discussion\",\"News "
    "Report\", or \"Promotional Content\";\n"
    "\n"
    "5. Suitability Rating: Determine whether the sample is suitable for training academic large models, "
    "imparting serious knowledge to the model, enhancing the model's academic, common-sense, logical, and "
    "reasoning capabilities. Suitability has three standards: \"Highly Suitable\", \"Average\", or \"Not "
    "Suitable\".\n"
    "\n"
    "The returned results should be in the following format:\n"
    "{\n"
    "Quality: Excellent/Average/Poor,\n"
    "Domain: Computer Science/Natural Sciences/Social Sciences/Engineering and Technology/Medical and "
    "Health/Arts and Literature/Other/Promotional Content,\n"
    "Depth: Beginner/Intermediate/Advanced/Expert,\n"
    "Category: Academic Article/Academic Report/Monograph/Whitepaper/Technical Blog/Popular Science Article/Forum "
    "Discussion/News Report/Promotional Content/Other,\n"
    "Suitability: Highly Suitable/Average/Not Suitable\n"
    "}.\n"
    "\n"
    "Please note that you only need to directly return the JSON results without providing any additional "
    "unnecessary text.";

namespace {

constexpr std::array<std::string_view, 3> kQualityNames = {"Excellent", "Average", "Poor"};
constexpr std::array<std::string_view, 4> kDepthNames = {"Beginner", "Intermediate", "Advanced", "Expert"};
constexpr std::array<std::string_view, 3> kSuitabilityNames = {"Highly Suitable", "Average", "Not Suitable"};

const char* const kFields[] = {"quality", "domain", "depth", "category", "suitability"};

template <typename E, std::size_t N>
E closed_value(const std::string& field, const std::string& raw, const std::array<std::string_view, N>& names) {
    const auto v = text::trim(raw);
    for (std::size_t i = 0; i < N; ++i)
        if (text::iequals(v, names[i])) return static_cast<E>(i);
    throw VerdictError(VerdictError::Kind::invalid_value, field, "invalid value for " + field + ": \"" + v + "\"");
}

std::string open_value(const std::string& field, const std::string& raw, const std::vector<std::string>& listed) {
    const auto v = text::trim(raw);
    if (v.empty()) throw VerdictError(VerdictError::Kind::invalid_value, field, "empty value for " + field);
    for (const auto& l : listed)
        if (text::iequals(v, l)) return l;
    return v;
}

std::string canonical_key(std::string_view key) {
    auto k = text::to_lower(text::trim(key));
    if (k == "suitability rating") return "suitability";
    return k;
}

Verdict verdict_from_fields(const std::map<std::string, std::string>& fields) {
    for (const char* f : kFields)
        if (!fields.count(f))
            throw VerdictError(VerdictError::Kind::missing_field, f, std::string("missing field: ") + f);
    Verdict v;
    v.quality = closed_value<Quality>("quality", fields.at("quality"), kQualityNames);
    v.domain = open_value("domain", fields.at("domain"), listed_domains());
    v.depth = closed_value<Depth>("depth", fields.at("depth"), kDepthNames);
    v.category = open_value("category", fields.at("category"), listed_categories());
    v.suitability = closed_value<Suitability>("suitability", fields.at("suitability"), kSuitabilityNames);
    return v;
}

std::optional<std::map<std::string, std::string>> strict_fields(std::string_view block) {
    json j;
    try {
        j = json::parse(block);
    } catch (const json::exception&) {
        return std::nullopt;
    }
    if (!j.is_object()) return std::nullopt;
    std::map<std::string, std::string> out;
    for (const auto& [k, val] : j.items()) {
        const auto key = canonical_key(k);
        if (val.is_string()) out[key] = val.get<std::string>();
        else out[key] = val.dump();
    }
    return out;
}

std::map<std::string, std::string> lenient_fields(std::string_view block) {
    static const std::regex key_re(R"((["']?)(quality|domain|depth|category|suitability rating|suitability)\1\s*:)",
                                   std::regex::icase | std::regex::ECMAScript);
    const std::string body(block.substr(1, block.size() - 2));
    std::vector<std::pair<std::string, std::pair<std::size_t, std::size_t>>> keys;  // key, (match start, value start)
    for (auto it = std::sregex_iterator(body.begin(), body.end(), key_re); it != std::sregex_iterator(); ++it) {
        const auto pos = static_cast<std::size_t>(it->position(0));
        // keys must start a field, not sit inside a value
        if (pos > 0) {
            const auto before = text::trim_right(std::string_view(body).substr(0, pos));
            if (!before.empty() && before.back() != ',' && before.back() != '\n') continue;
        }
        keys.push_back({canonical_key((*it)[2].str()), {pos, pos + static_cast<std::size_t>(it->length(0))}});
    }
    std::map<std::string, std::string> out;
    for (std::size_t i = 0; i < keys.size(); ++i) {
        const auto end = i + 1 < keys.size() ? keys[i + 1].second.first : body.size();
        auto v = text::trim(std::string_view(body).substr(keys[i].second.second, end - keys[i].second.second));
        while (!v.empty() && (v.back() == ',' || v.back() == '.')) v = text::trim(v.substr(0, v.size() - 1));
        if (v.size() >= 2 && (v.front() == '"' || v.front() == '\'') && v.back() == v.front())
            v = v.substr(1, v.size() - 2);
        out.emplace(keys[i].first, v);
    }
    return out;
}

std::string field_value(const Verdict& v, const std::string& field) {
    if (field == "quality") return std::string(to_string(v.quality));
    if (field == "domain") return v.domain;
    if (field == "depth") return std::string(to_string(v.depth));
    if (field == "category") return v.category;
    return std::string(to_string(v.suitability));
}

void check_condition(const Condition& c) {
    if (std::find_if(std::begin(kFields), std::end(kFields), [&](const char* f) { return c.field == f; }) ==
        std::end(kFields))
        throw PolicyError("unknown policy field \"" + c.field + "\"");
    if (c.any_of.empty()) throw PolicyError("condition on " + c.field + " lists no values");
    const auto closed = [&]() -> std::vector<std::string_view> {
        if (c.field == "quality") return {kQualityNames.begin(), kQualityNames.end()};
        if (c.field == "depth") return {kDepthNames.begin(), kDepthNames.end()};
        if (c.field == "suitability") return {kSuitabilityNames.begin(), kSuitabilityNames.end()};
        return {};
    }();
    if (closed.empty()) return;
    for (const auto& v : c.any_of)
        if (std::none_of(closed.begin(), closed.end(), [&](std::string_view n) { return text::iequals(v, n); }))
            throw PolicyError("\"" + v + "\" is not a " + c.field + " value");
}

}  // namespace

LabelPrompt build_label_prompt(std::string_view sample_text) {
    if (text::trim(sample_text).empty()) throw Error("sample text must be non-empty");
    return {std::string(kSysPrompt), kLabelPrompt + "\n\n" + std::string(sample_text)};
}

std::string_view to_string(Quality q) { return kQualityNames[static_cast<std::size_t>(q)]; }
std::string_view to_string(Depth d) { return kDepthNames[static_cast<std::size_t>(d)]; }
std::string_view to_string(Suitability s) { return kSuitabilityNames[static_cast<std::size_t>(s)]; }

const std::vector<std::string>& listed_domains() {
    static const std::vector<std::string> v = {"Computer Science",       "Natural Sciences", "Social Sciences",
                                               "Engineering and Technology", "Medical and Health",
                                               "Arts and Literature",    "Other",            "Promotional Content"};
    return v;
}

const std::vector<std::string>& listed_categories() {
    static const std::vector<std::string> v = {"Academic Article", "Academic Report",        "Monograph",
                                               "Whitepaper",       "Technical Blog",         "Popular Science Article",
                                               "Forum Discussion", "News Report",            "Promotional Content",
                                               "Other"};
    return v;
}

Verdict parse_verdict(std::string_view reply) {
    std::optional<VerdictError> first_error;
    for (std::size_t pos = reply.find('{'); pos != std::string_view::npos; pos = reply.find('{', pos + 1)) {
        const auto close = text::match_bracket(reply, pos);
        if (close == std::string_view::npos) continue;
        const auto block = reply.substr(pos, close - pos + 1);
        auto fields = strict_fields(block);
        if (!fields) fields = lenient_fields(block);
        if (fields->empty()) continue;
        try {
            return verdict_from_fields(*fields);
        } catch (const VerdictError& e) {
            if (!first_error) first_error = e;
        }
    }
    if (first_error) throw *first_error;
    throw VerdictError(VerdictError::Kind::unparseable, "", "no verdict object found in reply");
}

ordered_json render(const Verdict& v) {
    return {{"Quality", to_string(v.quality)},
            {"Domain", v.domain},
            {"Depth", to_string(v.depth)},
            {"Category", v.category},
            {"Suitability", to_string(v.suitability)}};
}

Policy Policy::default_policy() {
    Policy p;
    p.rules.push_back({"highly-suitable", {{"suitability", {"Highly Suitable"}}}, true});
    p.rules.push_back(
        {"excellent-and-average", {{"quality", {"Excellent"}}, {"suitability", {"Average"}}}, true});
    p.default_keep = false;
    return p;
}

Policy Policy::from_json(const json& j) {
    const auto action = [](const json& a) {
        const auto s = text::to_lower(a.get<std::string>());
        if (s == "keep") return true;
        if (s == "drop") return false;
        throw PolicyError("action must be keep or drop, got \"" + s + "\"");
    };
    try {
        Policy p;
        for (const auto& r : j.at("rules")) {
            Rule rule;
            rule.name = r.value("name", "rule-" + std::to_string(p.rules.size() + 1));
            for (const auto& [field, vals] : r.at("when").items()) {
                Condition c{canonical_key(field), {}};
                if (vals.is_string())
                    c.any_of.push_back(vals.get<std::string>());
                else
                    for (const auto& v : vals) c.any_of.push_back(v.get<std::string>());
                check_condition(c);
                rule.all.push_back(std::move(c));
            }
            rule.keep = action(r.at("action"));
            p.rules.push_back(std::move(rule));
        }
        p.default_keep = j.contains("default") ? action(j.at("default")) : false;
        return p;
    } catch (const json::exception& e) {
        throw PolicyError(std::string("bad policy: ") + e.what());
    }
}

ordered_json Policy::to_json() const {
    ordered_json rs = ordered_json::array();
    for (const auto& r : rules) {
        ordered_json when = ordered_json::object();
        for (const auto& c : r.all) when[c.field] = c.any_of;
        rs.push_back({{"name", r.name}, {"when", when}, {"action", r.keep ? "keep" : "drop"}});
    }
    return {{"rules", rs}, {"default", default_keep ? "keep" : "drop"}};
}

FilterDecision filter_decision(const Verdict& v, const Policy& policy) {
    for (const auto& r : policy.rules) {
        const bool match = std::all_of(r.all.begin(), r.all.end(), [&](const Condition& c) {
            const auto have = field_value(v, c.field);
            return std::any_of(c.any_of.begin(), c.any_of.end(),
                               [&](const std::string& want) { return text::iequals(have, want); });
        });
        if (match) return {r.keep, r.name};
    }
    return {policy.default_keep, "default"};
}

GenerationRecord GenerationRecord::from_json(const json& j) {
    GenerationRecord r;
    r.introduction = j.at("introduction").get<std::string>();
    if (j.contains("experiments") && !j["experiments"].is_null()) r.experiments = j["experiments"].get<std::string>();
    if (j.contains("results") && !j["results"].is_null()) r.results = j["results"].get<std::string>();
    r.title = j.at("title").get<std::string>();
    r.abstract = j.at("abstract").get<std::string>();
    return r;
}

std::string format_title_abstract_record(const GenerationRecord& record, Sections include) {
    if (text::trim(record.introduction).empty()) throw FormatError("introduction must be non-empty");
    if (text::trim(record.title).empty()) throw FormatError("title must be non-empty");
    if (text::trim(record.abstract).empty()) throw FormatError("abstract must be non-empty");
    if (include.experiments && !record.experiments) throw FormatError("experiments section requested but missing");
    if (include.results && !record.results) throw FormatError("results section requested but missing");

    std::vector<std::string> parts{record.introduction};
    if (include.experiments) parts.push_back(*record.experiments);
    if (include.results) parts.push_back(*record.results);
    for (const auto& p : parts)
        if (p.find(kBeginGenerate) != std::string::npos) throw FormatError("section contains <begin_generate>");
    for (const auto* f : {&record.title, &record.abstract})
        if (f->find(kBeginGenerate) != std::string::npos || f->find(kAbstractDelimiter) != std::string::npos)
            throw FormatError("title/abstract contains a reserved delimiter");

    return text::join(parts, "\n") + std::string(kBeginGenerate) + "Title:" + record.title +
           std::string(kAbstractDelimiter) + record.abstract;
}

std::pair<std::string, std::string> parse_title_abstract(std::string_view formatted) {
    const auto g = formatted.find(kBeginGenerate);
    if (g == std::string_view::npos) throw FormatError("no <begin_generate> token");
    auto target = formatted.substr(g + kBeginGenerate.size());
    if (target.substr(0, 6) != "Title:") throw FormatError("target does not start with Title:");
    target.remove_prefix(6);
    const auto a = target.find(kAbstractDelimiter);
    if (a == std::string_view::npos) throw FormatError("no ;Abstract: delimiter");
    return {std::string(target.substr(0, a)), std::string(target.substr(a + kAbstractDelimiter.size()))};
}

std::vector<LabelOutcome> label_samples(const std::vector<std::string>& samples, llm::Backend& backend,
                                        std::size_t parallelism) {
    std::vector<LabelOutcome> out(samples.size());
    std::atomic<std::size_t> next{0};
    const auto worker = [&] {
        for (;;) {
            const auto i = next.fetch_add(1);
            if (i >= samples.size()) return;
            try {
                const auto prompt = build_label_prompt(samples[i]);
                llm::CompletionRequest req;
                req.system_prompt = prompt.system_prompt;
                req.prompt = prompt.user_prompt;
                req.max_tokens = 256;
                out[i].verdict = parse_verdict(backend.complete(req).text);
            } catch (const std::exception& e) {
                out[i].error = e.what();
            }
        }
    };
    const auto n = std::max<std::size_t>(1, std::min(parallelism, samples.size()));
    if (n == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < n; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    return out;
}

}  // namespace scholar::curator
