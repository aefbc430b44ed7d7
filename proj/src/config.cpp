#include "scholar/config.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>

namespace scholar {

namespace {

const std::set<std::string> kTopKeys = {"llm", "web_search", "kg_index", "agent", "observation_cap", "service"};

}  // namespace

AppConfig AppConfig::from_json(const json& j) {
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    for (const auto& [k, _] : j.items())
        if (!kTopKeys.count(k)) throw ConfigError("unknown config key \"" + k + "\"");
    AppConfig c;
    try {
        if (j.contains("llm")) c.llm = llm::GatewayConfig::from_json(j["llm"]);
        if (j.contains("web_search")) c.web_search = tools::WebSearchConfig::from_json(j["web_search"]);
        c.kg_index = j.value("kg_index", std::string{});
        if (j.contains("agent")) {
            const auto& a = j["agent"];
            c.max_steps = a.value("max_steps", c.max_steps);
            c.agent_max_tokens = a.value("max_tokens", c.agent_max_tokens);
        }
        c.observation_cap = j.value("observation_cap", c.observation_cap);
        if (j.contains("service")) {
            const auto& s = j["service"];
            c.service.host = s.value("host", c.service.host);
            c.service.port = s.value("port", c.service.port);
            c.service.cors_origin = s.value("cors_origin", c.service.cors_origin);
            c.service.journal_dir = s.value("journal_dir", c.service.journal_dir);
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("bad config: ") + e.what());
    }
    if (c.max_steps < 1) throw ConfigError("agent.max_steps must be >= 1");
    if (c.observation_cap <= tools::kTruncationMarker.size()) throw ConfigError("observation_cap too small");
    if (c.service.port < 0 || c.service.port > 65535) throw ConfigError("service.port out of range");
    return c;
}

AppConfig load_config(const std::string& path) {
    std::string p = path;
    if (p.empty())
        if (const char* env = std::getenv(kConfigEnvVar)) p = env;
    if (p.empty()) return {};
    json j;
    try {
        j = json::parse(read_file(p));
    } catch (const json::exception& e) {
        throw ConfigError(p + ": " + e.what());
    }
    auto c = AppConfig::from_json(j);
    // file paths in a config file are relative to that file
    const auto base = std::filesystem::path(p).parent_path();
    const auto rebase = [&](std::string& f) {
        if (!f.empty() && std::filesystem::path(f).is_relative()) f = (base / f).string();
    };
    rebase(c.llm.script);
    if (c.web_search.provider == "stub") rebase(c.web_search.url);
    rebase(c.kg_index);
    rebase(c.service.journal_dir);
    return c;
}

std::shared_ptr<const kg::KgIndex> load_index(const std::string& path) {
    if (path.size() >= 6 && path.compare(path.size() - 6, 6, ".jsonl") == 0) {
        std::ifstream in(path);
        if (!in) throw ConfigError("cannot open " + path);
        return kg::ingest(in).first;
    }
    return std::make_shared<const kg::KgIndex>(kg::KgIndex::load(path));
}

std::shared_ptr<tools::ToolRegistry> build_toolbox(const AppConfig& config,
                                                   std::shared_ptr<const kg::KgIndex> index) {
    if (!index) index = std::make_shared<const kg::KgIndex>();
    auto reg = std::make_shared<tools::ToolRegistry>(config.observation_cap);
    reg->register_tool(tools::academic_search_spec(), tools::make_academic_search([index] { return index; }));
    std::shared_ptr<tools::SearchProvider> provider = tools::make_search_provider(config.web_search);
    reg->register_tool(tools::web_search_spec(),
                       tools::make_web_search(provider, tools::SiteHandlerTable::with_defaults(),
                                              config.web_search.top_n));
    return reg;
}

}  // namespace scholar
