#include "scholar/cli.hpp"

#include <algorithm>
#include <csignal>
#include <fstream>
#include <sstream>

#include <CLI11.hpp>

#include "scholar/bench.hpp"
#include "scholar/config.hpp"
#include "scholar/curator.hpp"
#include "scholar/eval.hpp"
#include "scholar/kg.hpp"
#include "scholar/react.hpp"
#include "scholar/review.hpp"
#include "scholar/service.hpp"

namespace scholar::cli {

namespace {

std::ifstream open_in(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path);
    return in;
}

void write_out(const std::string& path, const std::string& contents, std::ostream& out) {
    if (path.empty() || path == "-")
        out << contents;
    else
        write_file(path, contents);
}

std::string jsonl_text(const std::vector<ordered_json>& rows) {
    std::string s;
    for (const auto& r : rows) s += r.dump() + "\n";
    return s;
}

service::HttpService* g_serving = nullptr;

void on_signal(int) {
    if (g_serving) g_serving->stop();
}

struct Globals {
    std::string config_path;
    AppConfig config() const { return load_config(config_path); }
};

// ---- agent ----------------------------------------------------------------

void print_event(std::ostream& out, const agent::TraceEvent& e) {
    switch (e.kind) {
        case agent::EventKind::thought: out << "Thought: " << e.text << "\n"; break;
        case agent::EventKind::action:
            out << "Action: " << e.action->action << " " << e.action->action_input.dump() << "\n";
            break;
        case agent::EventKind::observation:
            out << "Observation" << (e.ok ? "" : " (failed)") << ": " << e.text << "\n";
            break;
        case agent::EventKind::final_answer: out << "Answer: " << e.text << "\n"; break;
    }
}

int agent_chat(const Globals& g, std::size_t max_steps, std::istream& in, std::ostream& out, std::ostream& err) {
    const auto cfg = g.config();
    const auto index = cfg.kg_index.empty() ? nullptr : load_index(cfg.kg_index);
    const auto tools = build_toolbox(cfg, index);
    auto backend = llm::make_backend_factory(cfg.llm)();
    agent::DialogueState state;
    agent::AgentConfig ac;
    ac.max_steps = max_steps ? max_steps : cfg.max_steps;
    ac.tools = tools.get();
    ac.backend = backend.get();
    ac.max_tokens = cfg.agent_max_tokens;
    ac.on_event = [&](const agent::TraceEvent& e) { print_event(out, e); };
    std::string line;
    out << "> " << std::flush;
    while (std::getline(in, line)) {
        const auto q = text::trim(line);
        if (q == "/exit" || q == "/quit") break;
        if (!q.empty()) {
            try {
                agent::run_episode(q, state, ac);
            } catch (const agent::EpisodeError& e) {
                err << "error: " << e.what() << "\n";
            }
        }
        out << "> " << std::flush;
    }
    out << "\n";
    return kExitOk;
}

int serve(const Globals& g, std::string host, int port, std::ostream& out) {
    const auto cfg = g.config();
    if (host.empty()) host = cfg.service.host;
    if (port < 0) port = cfg.service.port;
    const auto index = cfg.kg_index.empty() ? nullptr : load_index(cfg.kg_index);
    service::SessionOptions so;
    so.backend_factory = llm::make_backend_factory(cfg.llm);
    so.tools = build_toolbox(cfg, index);
    so.max_steps = cfg.max_steps;
    so.max_tokens = cfg.agent_max_tokens;
    so.journal_dir = cfg.service.journal_dir;
    service::SessionManager sessions(so);
    service::HttpService http(sessions, cfg.service.cors_origin);
    const int bound = http.bind(host, port);
    if (bound < 0) throw Error("cannot bind " + host + ":" + std::to_string(port));
    out << "listening on http://" << host << ":" << bound << "\n" << std::flush;
    g_serving = &http;
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    http.listen();
    g_serving = nullptr;
    return kExitOk;
}

// ---- kg -------------------------------------------------------------------

int kg_ingest(const std::string& in_path, const std::string& out_path, std::ostream& out, std::ostream& err) {
    auto in = open_in(in_path);
    const auto [index, stats] = kg::ingest(in);
    for (const auto& r : stats.reasons) err << in_path << ":" << r.line << ": rejected: " << r.reason << "\n";
    index->save(out_path);
    out << "accepted " << stats.accepted << ", rejected " << stats.rejected << "\n";
    return kExitOk;
}

int kg_search(const std::string& index_path, const std::string& query, std::ostream& out) {
    const auto index = load_index(index_path);
    json q;
    try {
        q = json::parse(query);
    } catch (const json::exception& e) {
        throw kg::QueryError(std::string("query is not JSON: ") + e.what());
    }
    for (const auto& hit : index->search(kg::KgQuery::from_json(q))) {
        ordered_json row{{"id", hit.id}, {"score", hit.score}, {"fields", hit.fields}};
        out << row.dump() << "\n";
    }
    return kExitOk;
}

int kg_similar(const std::string& index_path, const std::string& id, std::size_t k, std::ostream& out) {
    const auto index = load_index(index_path);
    for (const auto& [other, score] : index->recommend_similar(id, k))
        out << ordered_json{{"id", other}, {"score", score}}.dump() << "\n";
    return kExitOk;
}

// ---- bench ----------------------------------------------------------------

struct BenchBuildArgs {
    std::string methods, datasets, output, stats;
    std::uint64_t seed = 0;
    bool one_per_record = false;
};

int bench_build(const BenchBuildArgs& a, std::ostream& out, std::ostream& err) {
    std::vector<bench::MethodRecord> methods;
    std::vector<bench::DatasetRecord> datasets;
    if (!a.methods.empty()) {
        auto in = open_in(a.methods);
        methods = bench::parse_methods(in);
    }
    if (!a.datasets.empty()) {
        auto in = open_in(a.datasets);
        datasets = bench::parse_datasets(in);
    }
    const auto result = bench::build_dataset(methods, datasets, {a.seed, a.one_per_record});
    write_out(a.output, bench::serialize_items(result.items), out);
    const auto stats = result.stats.to_json().dump(2) + "\n";
    if (!a.stats.empty())
        write_file(a.stats, stats);
    else
        err << stats;
    return kExitOk;
}

struct BenchEvalArgs {
    std::string task, path, report;
    std::optional<std::size_t> shots;
    std::uint64_t seed = 0;
    std::size_t parallelism = 1;
};

int bench_eval(const Globals& g, const BenchEvalArgs& a, std::ostream& out, std::ostream& err) {
    const auto format = eval::format_from_string(a.task);
    if (!format) throw eval::ConfigError("unknown task format \"" + a.task + "\"");
    const auto task = eval::load_task(*format, a.path, a.shots);
    const auto cfg = g.config();
    auto backend = llm::make_backend_factory(cfg.llm)();
    eval::EvalOptions opts;
    opts.seed = a.seed;
    opts.parallelism = a.parallelism;
    int rc = kExitOk;
    eval::EvalReport report;
    try {
        report = eval::evaluate(task, *backend, opts);
    } catch (const eval::PartialReportError& e) {
        err << "error: " << e.what() << "\n";
        report = e.partial();
        rc = kExitError;
    }
    const auto body = report.to_json().dump(2) + "\n";
    write_out(a.report, body, out);
    if (!a.report.empty()) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.4f", report.accuracy());
        out << a.task << " accuracy " << buf << " (" << report.correct << "/" << report.total << ")\n";
    }
    return rc;
}

// ---- review ---------------------------------------------------------------

struct ReviewCleanArgs {
    std::string in, meta, out, removed;
    std::string rule = "conjunctive";
};

int review_clean(const ReviewCleanArgs& a, std::ostream& out, std::ostream& err) {
    auto rin = open_in(a.in);
    const auto reviews = review::read_reviews(rin);
    std::map<std::string, review::MetaReview> metas;
    if (!a.meta.empty()) {
        auto min = open_in(a.meta);
        metas = review::index_metas(review::read_metas(min));
    }
    review::CleanOptions opts;
    opts.rule = a.rule == "lowest-contradicting" ? review::ConsistencyRule::lowest_contradicting
                                                 : review::ConsistencyRule::conjunctive;
    const auto result = review::clean_reviews(reviews, metas, opts);
    std::vector<ordered_json> kept;
    for (const auto& r : result.kept) kept.push_back(r.to_json());
    write_out(a.out, jsonl_text(kept), out);
    std::vector<ordered_json> removed;
    for (const auto& r : result.removed) {
        auto j = r.record.to_json();
        j["reasons"] = r.reasons;
        removed.push_back(std::move(j));
    }
    if (!a.removed.empty()) write_file(a.removed, jsonl_text(removed));
    err << "kept " << result.kept.size() << ", removed " << result.removed.size() << "\n";
    return kExitOk;
}

int review_sft(const std::string& in_path, const std::string& out_path, std::ostream& out) {
    auto in = open_in(in_path);
    std::vector<ordered_json> rows;
    jsonl::for_each(in, [&](std::size_t line, const json& j) {
        try {
            const auto paper = review::strip_boilerplate(j.at("paper").get<std::string>());
            rows.push_back(review::format_sft_record(paper, j.at("review").get<std::string>()).to_json());
        } catch (const std::exception& e) {
            throw Error(in_path + ":" + std::to_string(line) + ": " + e.what());
        }
    });
    write_out(out_path, jsonl_text(rows), out);
    return kExitOk;
}

int review_metrics(const std::string& pred, const std::string& meta, bool as_json, std::ostream& out) {
    auto pin = open_in(pred);
    auto min = open_in(meta);
    const auto predictions = review::read_predictions(pin);
    const auto metas = review::index_metas(review::read_metas(min));
    const auto m = review::compute_metrics(predictions, metas);
    out << (as_json ? m.to_json().dump(2) + "\n" : m.table());
    return kExitOk;
}

// ---- corpus ---------------------------------------------------------------

int corpus_label(const Globals& g, const std::string& in_path, const std::string& out_path, std::size_t parallelism,
                 std::ostream& out, std::ostream& err) {
    auto in = open_in(in_path);
    std::vector<json> rows;
    std::vector<std::string> samples;
    jsonl::for_each(in, [&](std::size_t line, const json& j) {
        if (!j.is_object() || !j.contains("text") || !j["text"].is_string())
            throw Error(in_path + ":" + std::to_string(line) + ": sample needs a \"text\" string");
        rows.push_back(j);
        samples.push_back(j["text"].get<std::string>());
    });
    const auto cfg = g.config();
    auto backend = llm::make_backend_factory(cfg.llm)();
    const auto outcomes = curator::label_samples(samples, *backend, parallelism);
    std::vector<ordered_json> lines;
    std::size_t failed = 0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        auto j = ordered_json::parse(rows[i].dump());
        if (outcomes[i].verdict) {
            j["verdict"] = curator::render(*outcomes[i].verdict);
        } else {
            j["verdict_error"] = outcomes[i].error;
            ++failed;
        }
        lines.push_back(std::move(j));
    }
    write_out(out_path, jsonl_text(lines), out);
    err << "labeled " << rows.size() - failed << ", failed " << failed << "\n";
    return kExitOk;
}

int corpus_filter(const std::string& in_path, const std::string& out_path, const std::string& policy_path,
                  std::ostream& out, std::ostream& err) {
    const auto policy = policy_path.empty() ? curator::Policy::default_policy()
                                            : curator::Policy::from_json(json::parse(read_file(policy_path)));
    auto in = open_in(in_path);
    std::string kept;
    std::size_t n_kept = 0, n_dropped = 0;
    jsonl::for_each(in, [&](std::size_t line, const json& j) {
        if (!j.contains("verdict")) {
            err << in_path << ":" << line << ": dropped: no verdict\n";
            ++n_dropped;
            return;
        }
        try {
            const auto v = curator::parse_verdict(j["verdict"].dump());
            const auto d = curator::filter_decision(v, policy);
            if (d.keep) {
                kept += j.dump() + "\n";
                ++n_kept;
            } else {
                ++n_dropped;
            }
        } catch (const curator::VerdictError& e) {
            err << in_path << ":" << line << ": dropped: " << e.what() << "\n";
            ++n_dropped;
        }
    });
    write_out(out_path, kept, out);
    err << "kept " << n_kept << ", dropped " << n_dropped << "\n";
    return kExitOk;
}

int corpus_sft_gen(const std::string& in_path, const std::string& out_path, const std::string& sections,
                   std::ostream& out) {
    curator::Sections inc;
    for (const auto& raw : text::split(sections, ',')) {
        const auto s = text::to_lower(text::trim(raw));
        if (s == "intro" || s == "introduction" || s.empty()) continue;
        if (s == "experiments") inc.experiments = true;
        else if (s == "results") inc.results = true;
        else throw CLI::ValidationError("--sections", "unknown section \"" + s + "\"");
    }
    auto in = open_in(in_path);
    std::vector<ordered_json> rows;
    jsonl::for_each(in, [&](std::size_t line, const json& j) {
        try {
            const auto rec = curator::GenerationRecord::from_json(j);
            rows.push_back({{"text", curator::format_title_abstract_record(rec, inc)}});
        } catch (const std::exception& e) {
            throw Error(in_path + ":" + std::to_string(line) + ": " + e.what());
        }
    });
    write_out(out_path, jsonl_text(rows), out);
    return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err, std::istream& in) {
    CLI::App app{"Academic research toolkit: agent, knowledge graph, benchmarks, reviews, corpus curation", "scholar"};
    app.require_subcommand(1);
    Globals g;
    app.add_option("--config", g.config_path, "JSON config file (default: $SCHOLAR_CONFIG)");

    std::function<int()> action;

    // agent
    auto* agent_cmd = app.add_subcommand("agent", "Question answering agent");
    agent_cmd->require_subcommand(1);
    std::size_t chat_steps = 0;
    auto* chat = agent_cmd->add_subcommand("chat", "Interactive terminal chat; the trace is printed inline");
    chat->add_option("--max-steps", chat_steps, "Step budget per question (default from config)");
    chat->callback([&] { action = [&] { return agent_chat(g, chat_steps, in, out, err); }; });

    std::string host;
    int port = -1;
    auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP session service");
    serve_cmd->add_option("--host", host, "Bind address (default from config)");
    serve_cmd->add_option("--port", port, "Port, 0 for any (default from config)");
    serve_cmd->callback([&] { action = [&] { return serve(g, host, port, out); }; });

    // kg
    auto* kg_cmd = app.add_subcommand("kg", "Paper knowledge graph");
    kg_cmd->require_subcommand(1);
    std::string kg_in, kg_out, kg_index, kg_query, kg_id;
    std::size_t kg_k = 10;
    auto* ingest = kg_cmd->add_subcommand("ingest", "Build an index from a JSON Lines paper dump");
    ingest->add_option("--in", kg_in, "Paper records (JSON Lines)")->required();
    ingest->add_option("-o,--out", kg_out, "Index file to write")->required();
    ingest->callback([&] { action = [&] { return kg_ingest(kg_in, kg_out, out, err); }; });
    auto* search = kg_cmd->add_subcommand("search", "Run an AcademicSearch-style JSON query");
    search->add_option("--index", kg_index, "Index file or JSON Lines dump")->required();
    search->add_option("--query", kg_query, "Query JSON")->required();
    search->callback([&] { action = [&] { return kg_search(kg_index, kg_query, out); }; });
    auto* similar = kg_cmd->add_subcommand("similar", "Papers similar by references and keywords");
    similar->add_option("--index", kg_index, "Index file or JSON Lines dump")->required();
    similar->add_option("--id", kg_id, "Paper id")->required();
    similar->add_option("-k", kg_k, "Number of results");
    similar->callback([&] { action = [&] { return kg_similar(kg_index, kg_id, kg_k, out); }; });

    // bench
    auto* bench_cmd = app.add_subcommand("bench", "Benchmark construction and evaluation");
    bench_cmd->require_subcommand(1);
    BenchBuildArgs bb;
    auto* build = bench_cmd->add_subcommand("build", "Build multiple-choice items from method/dataset dumps");
    build->add_option("--methods", bb.methods, "Method records (JSON Lines)");
    build->add_option("--datasets", bb.datasets, "Dataset records (JSON Lines)");
    build->add_option("--seed", bb.seed, "Random seed");
    build->add_option("-o,--out", bb.output, "Output JSON Lines (default stdout)");
    build->add_option("--stats", bb.stats, "Write build statistics here (default stderr)");
    build->add_flag("--one-per-record", bb.one_per_record, "Alternate intro/refer per record");
    build->callback([&] {
        if (bb.methods.empty() && bb.datasets.empty())
            throw CLI::ValidationError("bench build", "give --methods and/or --datasets");
        action = [&] { return bench_build(bb, out, err); };
    });
    BenchEvalArgs be;
    auto* evalc = bench_cmd->add_subcommand("eval", "Few-shot multiple-choice evaluation");
    evalc->add_option("--task", be.task, "mmlu | ceval | pubmedqa | scieval | csqa")
        ->required()
        ->check(CLI::IsMember({"mmlu", "ceval", "pubmedqa", "scieval", "csqa"}));
    evalc->add_option("--path", be.path, "Task data file or directory")->required();
    evalc->add_option("--shots", be.shots, "Exemplars per prompt (default per task)");
    evalc->add_option("--seed", be.seed, "Recorded in the report");
    evalc->add_option("--parallelism", be.parallelism, "Concurrent completions");
    evalc->add_option("--report", be.report, "Report JSON path (default stdout)");
    evalc->callback([&] { action = [&] { return bench_eval(g, be, out, err); }; });

    // review
    auto* review_cmd = app.add_subcommand("review", "Peer-review data and metrics");
    review_cmd->require_subcommand(1);
    ReviewCleanArgs rc;
    auto* clean = review_cmd->add_subcommand("clean", "Filter reviews by length, line breaks and consistency");
    clean->add_option("--in", rc.in, "Reviews (JSON Lines)")->required();
    clean->add_option("--meta", rc.meta, "Meta-reviews (JSON Lines)");
    clean->add_option("-o,--out", rc.out, "Kept reviews (default stdout)");
    clean->add_option("--removed", rc.removed, "Removed reviews with reasons");
    clean->add_option("--rule", rc.rule, "Consistency rule")
        ->check(CLI::IsMember({"conjunctive", "lowest-contradicting"}));
    clean->callback([&] { action = [&] { return review_clean(rc, out, err); }; });
    std::string sft_in, sft_out;
    auto* sft = review_cmd->add_subcommand("sft", "Format {paper, review} pairs as prompt/output records");
    sft->add_option("--in", sft_in, "Pairs (JSON Lines)")->required();
    sft->add_option("-o,--out", sft_out, "Output (default stdout)");
    sft->callback([&] { action = [&] { return review_sft(sft_in, sft_out, out); }; });
    std::string m_pred, m_meta;
    bool m_json = false;
    auto* metrics = review_cmd->add_subcommand("metrics", "Recommendation accuracy, aspect recall and accuracy");
    metrics->add_option("--pred", m_pred, "Predictions (JSON Lines)")->required();
    metrics->add_option("--meta", m_meta, "Meta-reviews (JSON Lines)")->required();
    metrics->add_flag("--json", m_json, "Print JSON instead of a table");
    metrics->callback([&] { action = [&] { return review_metrics(m_pred, m_meta, m_json, out); }; });

    // corpus
    auto* corpus_cmd = app.add_subcommand("corpus", "Pretraining-corpus curation");
    corpus_cmd->require_subcommand(1);
    std::string c_in, c_out, c_policy, c_sections = "intro";
    std::size_t c_par = 1;
    auto* label = corpus_cmd->add_subcommand("label", "Attach a quality verdict to each {\"text\"} sample");
    label->add_option("--in", c_in, "Samples (JSON Lines)")->required();
    label->add_option("-o,--out", c_out, "Output (default stdout)");
    label->add_option("--parallelism", c_par, "Concurrent completions");
    label->callback([&] { action = [&] { return corpus_label(g, c_in, c_out, c_par, out, err); }; });
    auto* filter = corpus_cmd->add_subcommand("filter", "Keep samples whose verdict passes the policy");
    filter->add_option("--in", c_in, "Labeled samples (JSON Lines)")->required();
    filter->add_option("-o,--out", c_out, "Output (default stdout)");
    filter->add_option("--policy", c_policy, "Policy JSON (default built-in)");
    filter->callback([&] { action = [&] { return corpus_filter(c_in, c_out, c_policy, out, err); }; });
    auto* gen = corpus_cmd->add_subcommand("sft-gen", "Format title/abstract generation records");
    gen->add_option("--in", c_in, "Records (JSON Lines)")->required();
    gen->add_option("-o,--out", c_out, "Output (default stdout)");
    gen->add_option("--sections", c_sections, "Comma list from intro,experiments,results");
    gen->callback([&] { action = [&] { return corpus_sft_gen(c_in, c_out, c_sections, out); }; });

    std::vector<std::string> rev(args.rbegin(), args.rend());
    try {
        app.parse(rev);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        if (args.empty()) err << app.help();
        return kExitUsage;
    }

    try {
        return action ? action() : kExitUsage;
    } catch (const CLI::ValidationError& e) {
        err << "usage error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitError;
    }
}

}  // namespace scholar::cli
