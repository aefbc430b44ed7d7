#pragma once

#include <memory>
#include <optional>
#include <string>

#include "scholar/gateway.hpp"
#include "scholar/kg.hpp"
#include "scholar/toolbox.hpp"

namespace scholar {

inline constexpr const char* kConfigEnvVar = "SCHOLAR_CONFIG";

struct ServiceConfig {
    std::string host = "127.0.0.1";
    int port = 8080;
    std::string cors_origin = "*";
    std::string journal_dir;  // empty keeps sessions in memory only
};

struct AppConfig {
    llm::GatewayConfig llm;
    tools::WebSearchConfig web_search;
    std::string kg_index;  // saved index file, or a .jsonl record dump
    std::size_t max_steps = 8;
    int agent_max_tokens = 1024;
    std::size_t observation_cap = tools::kDefaultObservationCap;
    ServiceConfig service;

    // {"llm": {...}, "web_search": {...}, "kg_index": "...",
    //  "agent": {"max_steps": 8, "max_tokens": 1024}, "observation_cap": 4000,
    //  "service": {"host", "port", "cors_origin", "journal_dir"}}
    static AppConfig from_json(const json& j);
};

class ConfigError : public Error {
public:
    using Error::Error;
};

// Reads `path`, or the file named by $SCHOLAR_CONFIG when path is empty;
// defaults when neither is given. Relative file paths inside resolve against
// the config file's directory.
AppConfig load_config(const std::string& path = {});

std::shared_ptr<const kg::KgIndex> load_index(const std::string& path);

// AcademicSearch over `index` (empty when null) plus WebSearch.
std::shared_ptr<tools::ToolRegistry> build_toolbox(const AppConfig& config,
                                                   std::shared_ptr<const kg::KgIndex> index);

}  // namespace scholar
