#include <chrono>
#include <cstdlib>
#include <regex>

#include <httplib.h>

#include "net.hpp"
#include "scholar/toolbox.hpp"

namespace scholar::tools {

namespace {

SearchResult result_from_json(const json& r) {
    SearchResult out;
    out.title = r.value("title", r.value("name", std::string{}));
    out.snippet = r.value("snippet", std::string{});
    out.url = r.value("url", std::string{});
    return out;
}

std::vector<SearchResult> results_from_payload(const json& payload, std::size_t top_n) {
    const json* list = nullptr;
    if (payload.contains("results") && payload["results"].is_array())
        list = &payload["results"];
    else if (payload.contains("webPages") && payload["webPages"].contains("value"))
        list = &payload["webPages"]["value"];
    if (!list) throw SearchUnavailable("unrecognized search payload");
    std::vector<SearchResult> out;
    for (const auto& r : *list) {
        if (out.size() >= top_n) break;
        out.push_back(result_from_json(r));
    }
    return out;
}

std::chrono::microseconds to_us(double seconds) {
    return std::chrono::duration_cast<std::chrono::microseconds>(std::chrono::duration<double>(seconds));
}

std::string decode_entities(std::string s) {
    static const std::pair<const char*, const char*> kEntities[] = {
        {"&nbsp;", " "}, {"&lt;", "<"}, {"&gt;", ">"}, {"&quot;", "\""}, {"&#39;", "'"}, {"&#x27;", "'"}, {"&amp;", "&"}};
    for (const auto& [from, to] : kEntities) {
        std::string::size_type pos = 0;
        const std::string f = from;
        while ((pos = s.find(f, pos)) != std::string::npos) {
            s.replace(pos, f.size(), to);
            pos += std::char_traits<char>::length(to);
        }
    }
    return s;
}

std::string strip_tags(std::string_view html) {
    std::string out;
    bool in_tag = false;
    for (char c : html) {
        if (c == '<') {
            in_tag = true;
            out += ' ';
        } else if (c == '>') {
            in_tag = false;
        } else if (!in_tag) {
            out += c;
        }
    }
    return text::join(text::split_ws(decode_entities(out)), " ");
}

// Contents of each <tag ...>...</tag> element inside `html`, non-nested.
std::vector<std::string> elements(std::string_view html, std::string_view tag) {
    std::vector<std::string> out;
    const auto lower = text::to_lower(html);
    const std::string open = "<" + std::string(tag);
    const std::string close = "</" + std::string(tag) + ">";
    std::size_t pos = 0;
    while ((pos = lower.find(open, pos)) != std::string::npos) {
        const auto after = pos + open.size();
        if (after < lower.size() && lower[after] != '>' && lower[after] != ' ') {
            pos = after;
            continue;
        }
        const auto body_start = lower.find('>', after);
        if (body_start == std::string::npos) break;
        const auto end = lower.find(close, body_start);
        if (end == std::string::npos) break;
        out.emplace_back(html.substr(body_start + 1, end - body_start - 1));
        pos = end + close.size();
    }
    return out;
}

std::string scalar_text(const ordered_json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_null()) return "";
    return v.dump();
}

std::vector<LeaderboardRow> rows_from_table_json(const ordered_json& data) {
    std::vector<LeaderboardRow> rows;
    for (const auto& r : data) {
        if (!r.is_object()) continue;
        LeaderboardRow row;
        row.rank = scalar_text(r.value("rank", ordered_json()));
        row.method = scalar_text(r.value("method", ordered_json()));
        if (r.contains("metrics") && r["metrics"].is_object())
            for (const auto& [k, v] : r["metrics"].items()) row.metrics.emplace_back(k, scalar_text(v));
        if (r.contains("paper") && r["paper"].is_object())
            row.paper_title = scalar_text(r["paper"].value("title", ordered_json()));
        else
            row.paper_title = scalar_text(r.value("paper_title", ordered_json()));
        rows.push_back(std::move(row));
    }
    return rows;
}

std::vector<LeaderboardRow> rows_from_html_table(const std::string& page) {
    const auto tables = elements(page, "table");
    if (tables.empty()) return {};
    std::vector<std::string> headers;
    for (const auto& th : elements(tables.front(), "th")) headers.push_back(strip_tags(th));
    std::vector<LeaderboardRow> rows;
    for (const auto& tr : elements(tables.front(), "tr")) {
        const auto cells = elements(tr, "td");
        if (cells.empty()) continue;
        LeaderboardRow row;
        for (std::size_t i = 0; i < cells.size() && i < headers.size(); ++i) {
            const auto h = text::to_lower(headers[i]);
            const auto v = strip_tags(cells[i]);
            if (h == "rank")
                row.rank = v;
            else if (h == "model" || h == "method")
                row.method = v;
            else if (h == "paper" || h == "paper title")
                row.paper_title = v;
            else if (h != "year" && h != "code" && h != "result" && h != "tags" && h != "extra training data")
                row.metrics.emplace_back(headers[i], v);
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace

StubSearchProvider::StubSearchProvider(const json& fixture) {
    if (fixture.contains("results"))
        for (const auto& [query, list] : fixture["results"].items())
            for (const auto& r : list) results_[query].push_back(result_from_json(r));
    if (fixture.contains("pages"))
        for (const auto& [url, body] : fixture["pages"].items()) pages_[url] = body.get<std::string>();
}

std::unique_ptr<StubSearchProvider> StubSearchProvider::from_file(const std::string& path) {
    return std::make_unique<StubSearchProvider>(json::parse(read_file(path)));
}

std::vector<SearchResult> StubSearchProvider::search(const std::string& query, std::size_t top_n) {
    const auto it = results_.find(query);
    if (it == results_.end()) return {};
    std::vector<SearchResult> out(it->second.begin(),
                                  it->second.begin() + static_cast<std::ptrdiff_t>(std::min(top_n, it->second.size())));
    return out;
}

std::optional<std::string> StubSearchProvider::fetch_page(const std::string& url) {
    const auto it = pages_.find(url);
    if (it == pages_.end()) return std::nullopt;
    return it->second;
}

HttpSearchProvider::HttpSearchProvider(std::string url, std::string auth_env_var, double timeout_s)
    : url_(std::move(url)), timeout_s_(timeout_s) {
    net::parse_url(url_);
    if (!auth_env_var.empty())
        if (const char* tok = std::getenv(auth_env_var.c_str())) token_ = tok;
}

std::vector<SearchResult> HttpSearchProvider::search(const std::string& query, std::size_t top_n) {
    const auto u = net::parse_url(url_);
    if (u.scheme != "http") throw SearchUnavailable("only http:// search endpoints are supported");
    httplib::Client cli(u.host, u.port);
    cli.set_connection_timeout(to_us(timeout_s_));
    cli.set_read_timeout(to_us(timeout_s_));
    httplib::Headers headers;
    if (!token_.empty()) headers.emplace("Authorization", "Bearer " + token_);
    const auto path = u.path + (u.path.find('?') == std::string::npos ? "?" : "&") + "q=" + net::url_encode(query) +
                      "&count=" + std::to_string(top_n);
    auto res = cli.Get(path, headers);
    if (!res) throw SearchUnavailable("search endpoint unreachable: " + httplib::to_string(res.error()));
    if (res->status != 200) throw SearchUnavailable("search endpoint returned HTTP " + std::to_string(res->status));
    try {
        return results_from_payload(json::parse(res->body), top_n);
    } catch (const json::exception& e) {
        throw SearchUnavailable(std::string("bad search payload: ") + e.what());
    }
}

std::optional<std::string> HttpSearchProvider::fetch_page(const std::string& url) {
    net::Url u;
    try {
        u = net::parse_url(url);
    } catch (const Error&) {
        return std::nullopt;
    }
    if (u.scheme != "http") return std::nullopt;
    httplib::Client cli(u.host, u.port);
    cli.set_connection_timeout(to_us(timeout_s_));
    cli.set_read_timeout(to_us(timeout_s_));
    auto res = cli.Get(u.path);
    if (!res || res->status != 200) return std::nullopt;
    return res->body;
}

std::vector<LeaderboardRow> parse_leaderboard(const std::string& page) {
    static const std::regex kScript(R"(<script[^>]*id=["']evaluation-table-data["'][^>]*>([\s\S]*?)</script>)",
                                    std::regex::icase);
    std::smatch m;
    if (std::regex_search(page, m, kScript)) {
        try {
            const auto data = ordered_json::parse(m[1].str());
            if (data.is_array()) return rows_from_table_json(data);
        } catch (const json::exception&) {
        }
    }
    return rows_from_html_table(page);
}

std::optional<std::string> extract_paperswithcode(const std::string& page) {
    const auto rows = parse_leaderboard(page);
    if (rows.empty()) return std::nullopt;
    constexpr std::size_t kMaxRows = 10;
    std::string out = "Leaderboard:";
    for (std::size_t i = 0; i < rows.size() && i < kMaxRows; ++i) {
        const auto& r = rows[i];
        std::vector<std::string> cols;
        cols.push_back("Rank " + (r.rank.empty() ? std::to_string(i + 1) : r.rank));
        if (!r.method.empty()) cols.push_back(r.method);
        for (const auto& [k, v] : r.metrics) cols.push_back(k + " " + v);
        if (!r.paper_title.empty()) cols.push_back(r.paper_title);
        out += "\n" + text::join(cols, " | ");
    }
    return out;
}

SiteHandlerTable SiteHandlerTable::with_defaults() {
    SiteHandlerTable t;
    t.add("paperswithcode.com", extract_paperswithcode);
    return t;
}

void SiteHandlerTable::add(std::string host, SiteExtractor extractor) {
    handlers_[text::to_lower(host)] = std::move(extractor);
}

const SiteExtractor* SiteHandlerTable::find_for_url(const std::string& url) const {
    const auto host = net::host_of(url);
    const auto it = handlers_.find(host);
    return it == handlers_.end() ? nullptr : &it->second;
}

WebSearchConfig WebSearchConfig::from_json(const json& j) {
    WebSearchConfig c;
    c.provider = j.value("provider", c.provider);
    c.url = j.value("url", c.url);
    c.auth_env_var = j.value("auth_env_var", c.auth_env_var);
    c.top_n = j.value("top_n", c.top_n);
    c.timeout_s = j.value("timeout_s", c.timeout_s);
    if (c.provider != "stub" && c.provider != "http")
        throw Error("web_search.provider must be \"stub\" or \"http\", got \"" + c.provider + "\"");
    if (c.top_n == 0) throw Error("web_search.top_n must be positive");
    return c;
}

std::unique_ptr<SearchProvider> make_search_provider(const WebSearchConfig& config) {
    if (config.provider == "http") return std::make_unique<HttpSearchProvider>(config.url, config.auth_env_var, config.timeout_s);
    if (config.url.empty()) return std::make_unique<StubSearchProvider>(json::object());
    return StubSearchProvider::from_file(config.url);
}

ToolHandler make_web_search(std::shared_ptr<SearchProvider> provider, SiteHandlerTable sites, std::size_t top_n) {
    return [provider = std::move(provider), sites = std::move(sites), top_n](const json& input) -> ToolObservation {
        const std::string name = "WebSearchEngine";
        if (!input.is_object() || !input.contains("query") || !input["query"].is_string() ||
            text::trim(input["query"].get<std::string>()).empty())
            return ToolObservation::failure(name, "Missing required parameter \"query\": give a non-empty search query.");
        const auto query = input["query"].get<std::string>();
        std::vector<SearchResult> results;
        try {
            results = provider->search(query, top_n);
        } catch (const SearchUnavailable& e) {
            return ToolObservation::failure(name, std::string("Search unavailable: ") + e.what() + ". You may retry.");
        }
        if (results.empty()) return ToolObservation::success(name, "No web results found.");
        std::string out;
        for (std::size_t i = 0; i < results.size(); ++i) {
            const auto& r = results[i];
            std::string body = r.snippet;
            if (const auto* extractor = sites.find_for_url(r.url)) {
                if (auto page = provider->fetch_page(r.url))
                    if (auto extracted = (*extractor)(*page)) body = *extracted;
            }
            if (i) out += "\n";
            out += std::to_string(i + 1) + ". " + r.title + "\n   URL: " + r.url + "\n   " + body;
        }
        return ToolObservation::success(name, out);
    };
}

}  // namespace scholar::tools
