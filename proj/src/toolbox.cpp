#include "scholar/toolbox.hpp"

#include <algorithm>

namespace scholar::tools {

std::vector<ToolParam> ToolSpec::ordered_parameters() const {
    auto params = input_parameters;
    std::stable_partition(params.begin(), params.end(), [](const ToolParam& p) { return p.required; });
    return params;
}

ToolObservation ToolObservation::success(std::string source, std::string content) {
    return {true, std::move(content), std::move(source)};
}

ToolObservation ToolObservation::failure(std::string source, std::string content) {
    return {false, std::move(content), std::move(source)};
}

ToolObservation cap_observation(ToolObservation obs, std::size_t cap) {
    if (obs.content.empty()) obs.content = "(empty result)";
    if (obs.content.size() > cap) {
        const auto keep = cap > kTruncationMarker.size() ? cap - kTruncationMarker.size() : 0;
        obs.content = text::utf8_prefix(obs.content, keep);
        obs.content += kTruncationMarker;
    }
    return obs;
}

void ToolRegistry::register_tool(ToolSpec spec, ToolHandler handler) {
    if (spec.name.empty()) throw RegistrationError("tool name must be non-empty");
    if (!handler) throw RegistrationError("tool " + spec.name + " has no handler");
    if (has(spec.name)) throw RegistrationError("tool already registered: " + spec.name);
    index_.emplace(spec.name, specs_.size());
    specs_.push_back(std::move(spec));
    handlers_.push_back(std::move(handler));
}

const ToolSpec* ToolRegistry::find(const std::string& name) const {
    const auto it = index_.find(name);
    return it == index_.end() ? nullptr : &specs_[it->second];
}

std::vector<std::string> ToolRegistry::names() const {
    std::vector<std::string> out;
    for (const auto& s : specs_) out.push_back(s.name);
    return out;
}

ToolObservation ToolRegistry::invoke(const std::string& name, const json& input) const {
    const auto it = index_.find(name);
    if (it == index_.end()) {
        return cap_observation(
            ToolObservation::failure(name, "Unknown tool \"" + name + "\". Valid tools: " + text::join(names(), ", ")),
            cap_);
    }
    ToolObservation obs;
    try {
        obs = handlers_[it->second](input);
    } catch (const std::exception& e) {
        obs = ToolObservation::failure(name, std::string("Tool error: ") + e.what());
    } catch (...) {
        obs = ToolObservation::failure(name, "Tool error: unknown failure");
    }
    obs.source = name;
    return cap_observation(std::move(obs), cap_);
}

ToolSpec academic_search_spec() {
    ToolSpec s;
    s.name = "AcademicSearch";
    s.description =
        "This is an tool for retrieving academic knowledge base through fuzzy matching on abstracts, authors, title, "
        "fieldOfStudy, publishDate or venue.";
    s.input_parameters = {
        {"abstracts", "str", "The query of the abstract. ", false},
        {"authors", "list(str)", "The authors of paper.", false},
        {"fieldOfStudy", "str", "The field of the paper. ", false},
        {"publishDate", "json",
         "The key is gte or lte, and value is date(yyyy/MM/dd), such as {'gte': '2020/01/01', 'lte': '2023/12/31'}.",
         false},
        {"title", "str",
         "The title of paper. If there are multiple papers, use ';' to distinguish them, such as title1;title2.",
         false},
        {"venue", "str", "Published journals or conferences.", false},
        {"sort_by", "json",
         "The Key is abstracts, authors, fieldOfStudy, publishDate, title or venue. The value is 'desc' (descending) "
         "or 'asc' (ascending).",
         false},
        {"resultParameters", "list(str)",
         "Must required. Each item in the list should be abstracts, authors, fieldOfStudy, publishDate, title, venue "
         "or citationCount(the number of citations of the paper). Format should be like ['xxx', 'xxx']",
         true},
    };
    s.input_example = "{'title': 'xxx', 'resultParameters': ['authors', 'publishDate', 'abstracts']}";
    return s;
}

namespace {

std::string value_text(const json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_array()) {
        std::vector<std::string> parts;
        for (const auto& e : v) parts.push_back(value_text(e));
        return text::join(parts, "; ");
    }
    return v.dump();
}

}  // namespace

std::string render_hits(const std::vector<kg::KgHit>& hits) {
    if (hits.empty()) return "No matching papers found.";
    std::string out;
    for (std::size_t i = 0; i < hits.size(); ++i) {
        const auto prefix = std::to_string(i + 1) + ". ";
        const std::string indent(prefix.size(), ' ');
        bool first = true;
        for (const auto& [key, value] : hits[i].fields.items()) {
            out += first ? prefix : indent;
            out += key + ": " + value_text(value) + "\n";
            first = false;
        }
    }
    out.pop_back();
    return out;
}

ToolHandler make_academic_search(IndexProvider index) {
    return [index = std::move(index)](const json& input) -> ToolObservation {
        const std::string name = "AcademicSearch";
        if (!input.is_object())
            return ToolObservation::failure(name, "action_input must be a JSON object of search parameters.");
        const auto rp = input.find("resultParameters");
        if (rp == input.end() || (rp->is_array() && rp->empty()))
            return ToolObservation::failure(
                name,
                "Missing required parameter \"resultParameters\": give a non-empty list such as ['title', 'authors'].");
        kg::KgQuery query;
        try {
            query = kg::KgQuery::from_json(input);
        } catch (const kg::QueryError& e) {
            return ToolObservation::failure(name, std::string("Invalid search parameters: ") + e.what());
        }
        const auto idx = index();
        if (!idx) return ToolObservation::failure(name, "Knowledge base is not loaded.");
        return ToolObservation::success(name, render_hits(idx->search(query)));
    };
}

ToolSpec web_search_spec() {
    ToolSpec s;
    s.name = "WebSearchEngine";
    s.description =
        "This is a web search engine. This tool will be very useful when you need to query basic academic knowledge "
        "and the latest academic knowledge.";
    s.input_parameters = {
        {"query", "str", "Must required. Input is the search query related to the question.", true},
    };
    s.input_example = "{'query': 'xxx'}";
    return s;
}

}  // namespace scholar::tools
