#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "scholar/kg.hpp"
#include "scholar/text.hpp"

namespace scholar::tools {

struct ToolParam {
    std::string name;
    std::string type;  // as shown to the model: "str", "list(str)", "json"
    std::string description;
    bool required = false;
};

struct ToolSpec {
    std::string name;
    std::string description;
    std::vector<ToolParam> input_parameters;
    std::string input_example;

    // Required parameters first, declaration order otherwise.
    std::vector<ToolParam> ordered_parameters() const;
};

inline constexpr std::size_t kDefaultObservationCap = 4000;
inline constexpr std::string_view kTruncationMarker = "\n...[truncated]";

struct ToolObservation {
    bool ok = true;
    std::string content;
    std::string source;

    static ToolObservation success(std::string source, std::string content);
    static ToolObservation failure(std::string source, std::string content);
};

// Enforces the content cap: content longer than `cap` bytes is cut so that
// cut + marker fits in `cap`. Empty content becomes "(empty result)".
ToolObservation cap_observation(ToolObservation obs, std::size_t cap);

using ToolHandler = std::function<ToolObservation(const json& input)>;

class RegistrationError : public Error {
public:
    using Error::Error;
};

class ToolRegistry {
public:
    explicit ToolRegistry(std::size_t observation_cap = kDefaultObservationCap) : cap_(observation_cap) {}

    // Throws RegistrationError on a duplicate or empty name.
    void register_tool(ToolSpec spec, ToolHandler handler);

    bool has(const std::string& name) const { return index_.count(name) > 0; }
    const ToolSpec* find(const std::string& name) const;
    std::vector<std::string> names() const;
    const std::vector<ToolSpec>& specs() const { return specs_; }
    std::size_t size() const { return specs_.size(); }
    std::size_t observation_cap() const { return cap_; }

    // Never throws: unknown tools and handler exceptions become ok=false observations.
    ToolObservation invoke(const std::string& name, const json& input) const;

private:
    std::vector<ToolSpec> specs_;
    std::vector<ToolHandler> handlers_;
    std::unordered_map<std::string, std::size_t> index_;
    std::size_t cap_;
};

// ---- AcademicSearch -------------------------------------------------------

ToolSpec academic_search_spec();

// Renders hits as a numbered plain-text list of the requested fields.
std::string render_hits(const std::vector<kg::KgHit>& hits);

using IndexProvider = std::function<std::shared_ptr<const kg::KgIndex>()>;

ToolHandler make_academic_search(IndexProvider index);

// ---- WebSearchEngine ------------------------------------------------------

struct SearchResult {
    std::string title;
    std::string snippet;
    std::string url;
};

class SearchUnavailable : public Error {
public:
    using Error::Error;
};

class SearchProvider {
public:
    virtual ~SearchProvider() = default;
    // Throws SearchUnavailable on transport or endpoint failure.
    virtual std::vector<SearchResult> search(const std::string& query, std::size_t top_n) = 0;
    // Page body for a result URL, used by site handlers.
    virtual std::optional<std::string> fetch_page(const std::string& url) = 0;
};

// Offline provider backed by a JSON fixture:
// {"results": {"<query>": [{"title","snippet","url"}, ...]}, "pages": {"<url>": "<body>"}}
class StubSearchProvider final : public SearchProvider {
public:
    explicit StubSearchProvider(const json& fixture);
    static std::unique_ptr<StubSearchProvider> from_file(const std::string& path);

    std::vector<SearchResult> search(const std::string& query, std::size_t top_n) override;
    std::optional<std::string> fetch_page(const std::string& url) override;

private:
    std::map<std::string, std::vector<SearchResult>> results_;
    std::map<std::string, std::string> pages_;
};

// GET {url}?q=<query>&count=<n>. Accepts {"results":[{title,snippet,url}]}
// or a Bing-style {"webPages":{"value":[{name,snippet,url}]}} payload.
class HttpSearchProvider final : public SearchProvider {
public:
    HttpSearchProvider(std::string url, std::string auth_env_var, double timeout_s = 10.0);

    std::vector<SearchResult> search(const std::string& query, std::size_t top_n) override;
    std::optional<std::string> fetch_page(const std::string& url) override;

private:
    std::string url_;
    std::string token_;
    double timeout_s_;
};

// Turns a fetched page into a structured summary that replaces the snippet.
using SiteExtractor = std::function<std::optional<std::string>(const std::string& page)>;

struct LeaderboardRow {
    std::string rank;
    std::string method;
    std::vector<std::pair<std::string, std::string>> metrics;
    std::string paper_title;
};

// PapersWithCode leaderboard pages: reads the embedded
// <script id="evaluation-table-data"> JSON, falling back to the first HTML table.
std::vector<LeaderboardRow> parse_leaderboard(const std::string& page);
std::optional<std::string> extract_paperswithcode(const std::string& page);

class SiteHandlerTable {
public:
    // Ships with paperswithcode.com.
    static SiteHandlerTable with_defaults();

    void add(std::string host, SiteExtractor extractor);
    const SiteExtractor* find_for_url(const std::string& url) const;

private:
    std::map<std::string, SiteExtractor> handlers_;
};

struct WebSearchConfig {
    std::string provider = "stub";  // "stub" | "http"
    std::string url;                // endpoint for http, fixture path for stub
    std::string auth_env_var;
    std::size_t top_n = 5;
    double timeout_s = 10.0;

    static WebSearchConfig from_json(const json& j);
};

ToolSpec web_search_spec();

std::unique_ptr<SearchProvider> make_search_provider(const WebSearchConfig& config);

ToolHandler make_web_search(std::shared_ptr<SearchProvider> provider, SiteHandlerTable sites, std::size_t top_n = 5);

}  // namespace scholar::tools
