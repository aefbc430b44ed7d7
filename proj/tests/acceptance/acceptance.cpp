// Prints one PASS/FAIL line per acceptance criterion; exits 1 if any fail.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <future>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include <httplib.h>

#include "scholar/bench.hpp"
#include "scholar/cli.hpp"
#include "scholar/curator.hpp"
#include "scholar/eval.hpp"
#include "scholar/kg.hpp"
#include "scholar/react.hpp"
#include "scholar/review.hpp"
#include "scholar/service.hpp"
#include "support/oracles.hpp"
#include "support/synth.hpp"

using namespace scholar;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;
};

// Collects failure notes; the first few are kept.
struct Notes {
    bool ok = true;
    std::vector<std::string> why;
    void fail(std::string s) {
        ok = false;
        if (why.size() < 3) why.push_back(std::move(s));
    }
    void check(bool cond, const std::string& s) {
        if (!cond) fail(s);
    }
    Outcome done(std::string summary) const {
        if (ok) return {true, std::move(summary)};
        std::string d = summary;
        for (const auto& w : why) d += "; " + w;
        return {false, d};
    }
};

std::string fmt(double v, int prec = 4) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", prec, v);
    return buf;
}

// ---- 1 --------------------------------------------------------------------

Outcome golden_episode() {
    Notes n;
    const auto want = synth::read_fixture("react/golden_trace.jsonl");
    const auto t0 = std::chrono::steady_clock::now();
    const auto got = synth::run_golden_episode();
    const auto secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    n.check(got == want, "trace differs from golden file");
    n.check(secs < 1.0, "took " + fmt(secs, 3) + " s");
    return n.done(std::to_string(want.size()) + " bytes identical, " + fmt(secs, 3) + " s");
}

// ---- 2 --------------------------------------------------------------------

std::string violation_name(agent::MalformedBlob::Violation v) {
    using V = agent::MalformedBlob::Violation;
    switch (v) {
        case V::not_json: return "not_json";
        case V::multiple_actions: return "multiple_actions";
        case V::not_object: return "not_object";
        case V::missing_key: return "missing_key";
        case V::extra_key: return "extra_key";
        case V::bad_action: return "bad_action";
        case V::bad_action_input: return "bad_action_input";
    }
    return "?";
}

Outcome blob_grammar() {
    using V = agent::MalformedBlob::Violation;
    Notes n;
    const auto cases = json::parse(synth::read_fixture("react/blobs.json"));
    std::size_t passed = 0;
    for (const auto& c : cases) {
        const auto name = c["name"].get<std::string>();
        const auto text = c["text"].get<std::string>();
        try {
            const auto b = agent::parse_action_blob(text);
            if (c.contains("expect") && b.action == c["expect"]["action"].get<std::string>() &&
                b.action_input == c["expect"]["action_input"])
                ++passed;
            else
                n.fail("case \"" + name + "\"");
        } catch (const agent::MalformedBlob& e) {
            if (!c.contains("expect")) {
                const auto want = c["violation"].get<std::string>();
                if (violation_name(e.violation()) == want)
                    ++passed;
                else
                    n.fail("case \"" + name + "\" violation " + violation_name(e.violation()));
            } else {
                n.fail("case \"" + name + "\" rejected: " + e.what());
            }
        }
    }
    n.check(cases.size() == 30, "fixture has " + std::to_string(cases.size()) + " cases");

    // every JSON list of actions, any length, any wrapping
    std::mt19937_64 rng(31);
    const std::vector<std::string> acts = {
        R"({"action": "AcademicSearch", "action_input": {"title": "BERT", "resultParameters": ["authors"]}})",
        R"({"action": "WebSearchEngine", "action_input": {"query": "ImageNet leaderboard"}})",
        R"({"action": "Final Answer", "action_input": "done"})"};
    std::size_t lists = 0, rejected = 0;
    for (int i = 0; i < 500; ++i) {
        const auto k = static_cast<std::size_t>(uniform_below(rng, 5));  // 0..4 elements
        std::string body = "[";
        for (std::size_t j = 0; j < k; ++j) body += (j ? ", " : "") + acts[uniform_below(rng, acts.size())];
        body += "]";
        const auto wrap = uniform_below(rng, 3);
        const auto text = wrap == 0 ? body : wrap == 1 ? "```json\n" + body + "\n```" : "```\n" + body + "\n```";
        ++lists;
        try {
            agent::parse_action_blob(text);
        } catch (const agent::MalformedBlob& e) {
            if (e.violation() == V::multiple_actions) ++rejected;
        }
    }
    n.check(rejected == lists, std::to_string(lists - rejected) + " lists not rejected as multiple_actions");
    return n.done(std::to_string(passed) + "/" + std::to_string(cases.size()) + " fixture cases, " +
                  std::to_string(rejected) + "/" + std::to_string(lists) + " action lists rejected");
}

// ---- 3 --------------------------------------------------------------------

Outcome leakage() {
    Notes n;
    const auto ms = synth::methods(900, 101);
    const auto ds = synth::datasets(600, 102);
    std::map<std::string, std::string> full;
    for (const auto& m : ms) full[m.name] = m.full_name;
    for (const auto& d : ds) full[d.name] = d.full_name;
    const auto built = bench::build_dataset(ms, ds, {2024, false});
    std::size_t intro = 0, leaks = 0;
    for (const auto& it : built.items) {
        if (!bench::is_intro(it.qtype)) continue;
        ++intro;
        const auto& gold = it.options[static_cast<std::size_t>(it.answer_index)];
        const auto& name = it.provenance.source;
        const auto& fn = full[name];
        if (oracle::contains_icase(gold, name) || (!fn.empty() && oracle::contains_icase(gold, fn))) ++leaks;
    }
    n.check(intro >= 1000, "only " + std::to_string(intro) + " intro items");
    n.check(leaks == 0, std::to_string(leaks) + " leaking items");

    const auto pairs = synth::methods(1000, 103);
    std::size_t mismatches = 0;
    for (const auto& m : pairs)
        if (bench::mask_description(m.description, m.name, m.full_name) != oracle::mask(m.description, m.name, m.full_name))
            ++mismatches;
    n.check(mismatches == 0, std::to_string(mismatches) + " mask mismatches");
    return n.done(std::to_string(intro) + " intro items, " + std::to_string(leaks) + " leaks; mask oracle " +
                  std::to_string(pairs.size() - mismatches) + "/" + std::to_string(pairs.size()));
}

// ---- 4 --------------------------------------------------------------------

Outcome bench_determinism() {
    Notes n;
    synth::TempDir dir;
    write_file(dir.file("m.jsonl"), synth::methods_jsonl(synth::methods(900, 7)));
    write_file(dir.file("d.jsonl"), synth::datasets_jsonl(synth::datasets(600, 8)));
    std::ostringstream out, err;
    for (const char* f : {"a.jsonl", "b.jsonl"}) {
        const int rc = cli::run_cli({"bench", "build", "--methods", dir.file("m.jsonl"), "--datasets", dir.file("d.jsonl"),
                                     "--seed", "17", "-o", dir.file(f), "--stats", dir.file("stats.json")},
                                    out, err);
        n.check(rc == 0, "bench build exited " + std::to_string(rc) + ": " + err.str());
    }
    const auto a = read_file(dir.file("a.jsonl"));
    n.check(!a.empty() && a == read_file(dir.file("b.jsonl")), "outputs differ");

    std::array<std::size_t, 4> freq{};
    std::size_t total = 0;
    std::istringstream in(a);
    jsonl::for_each(in, [&](std::size_t, const json& j) {
        ++freq[j.at("answer_index").get<std::size_t>()];
        ++total;
    });
    n.check(total >= 2000, "only " + std::to_string(total) + " items");
    std::string fs;
    for (std::size_t i = 0; i < 4; ++i) {
        const double f = total ? static_cast<double>(freq[i]) / static_cast<double>(total) : 0;
        n.check(std::abs(f - 0.25) <= 0.03, "index " + std::to_string(i) + " frequency " + fmt(f));
        fs += (i ? "/" : "") + fmt(f, 3);
    }
    return n.done("byte-identical " + std::to_string(a.size()) + " bytes, " + std::to_string(total) +
                  " items, answer frequencies " + fs);
}

// ---- 5 --------------------------------------------------------------------

Outcome calibration() {
    Notes n;
    const auto task = synth::synthetic_task(2400, 55);
    auto gold = synth::gold_backend(task);
    const auto g = eval::evaluate(task, *gold, {1, 4, 16});
    n.check(g.correct == g.total && g.total == 2400, "gold scored " + std::to_string(g.correct) + "/" + std::to_string(g.total));

    auto rnd = synth::random_backend(task.choice_labels, 99);
    const auto r = eval::evaluate(task, *rnd, {1, 4, 16});
    const double bound = 3.0 * std::sqrt(0.1875 / static_cast<double>(r.total));
    const double dev = std::abs(r.accuracy() - 0.25);
    n.check(r.total >= 2000, "random run has " + std::to_string(r.total) + " items");
    n.check(dev <= bound, "random accuracy " + fmt(r.accuracy()) + " outside 0.25 +- " + fmt(bound));

    std::string real = "real-file counts not checked (set SCHOLAR_CEVAL_DIR / SCHOLAR_SCIEVAL_PATH)";
    std::vector<std::string> checked;
    if (const char* p = std::getenv("SCHOLAR_CEVAL_DIR")) {
        const auto t = eval::load_task(eval::Format::ceval, p, 0);
        n.check(t.test_items.size() == 1346, "CEval valid has " + std::to_string(t.test_items.size()) + " items");
        std::set<std::string> subj;
        for (const auto& it : t.test_items) subj.insert(it.subject);
        n.check(subj.size() == 52, "CEval valid covers " + std::to_string(subj.size()) + " subjects");
        checked.push_back("CEval " + std::to_string(t.test_items.size()));
    }
    if (const char* p = std::getenv("SCHOLAR_SCIEVAL_PATH")) {
        const auto t = eval::load_task(eval::Format::scieval, p, 0);
        std::map<std::string, std::size_t> per;
        for (const auto& it : t.test_items) ++per[it.subject];
        n.check(per["biology"] == 380 && per["chemistry"] == 643 && per["physics"] == 164,
                "SCIEval counts " + std::to_string(per["biology"]) + "/" + std::to_string(per["chemistry"]) + "/" +
                    std::to_string(per["physics"]));
        checked.push_back("SCIEval " + std::to_string(per["biology"]) + "/" + std::to_string(per["chemistry"]) + "/" +
                          std::to_string(per["physics"]));
    }
    if (!checked.empty()) real = "real files: " + text::join(checked, ", ");
    return n.done("gold " + fmt(g.accuracy(), 3) + " (" + std::to_string(g.total) + "), random " + fmt(r.accuracy()) +
                  " within " + fmt(bound) + " at n=" + std::to_string(r.total) + "; " + real);
}

// ---- 6 --------------------------------------------------------------------

std::string tokens(std::size_t k) {
    std::string s;
    for (std::size_t i = 0; i < k; ++i) s += (i ? " " : "") + std::string("tok");
    return s;
}

Outcome review_metrics() {
    Notes n;
    std::mt19937_64 rng(2023);
    std::size_t exact = 0;
    for (int c = 0; c < 200; ++c) {
        const auto rc = synth::review_case(rng, 5 + uniform_below(rng, 30));
        const auto m = review::compute_metrics(rc.predictions, review::index_metas(rc.metas));
        const auto o = oracle::review_counts(rc.predictions, rc.metas);
        const bool same = m.recommendation == review::Ratio{o.k, o.m} && m.aspects.recall == review::Ratio{o.l, o.n} &&
                          m.aspects.accuracy == review::Ratio{o.hit, o.pred};
        if (same)
            ++exact;
        else
            n.fail("case " + std::to_string(c) + " differs");
    }
    std::vector<review::ReviewRecord> rs;
    for (std::size_t k : {99u, 100u, 2000u, 2001u}) {
        review::ReviewRecord r;
        r.paper_id = "p";
        r.review_id = std::to_string(k);
        r.recommendation = review::Decision::accept;
        r.confidence = 3;
        r.text = tokens(k);
        rs.push_back(r);
    }
    const auto out = review::clean_reviews(rs, {});
    std::set<std::string> kept;
    for (const auto& r : out.kept) kept.insert(r.review_id);
    n.check(kept == std::set<std::string>{"100", "2000"}, "boundary filtering kept " + std::to_string(kept.size()));
    return n.done(std::to_string(exact) + "/200 cases exact; 99/2001 removed, 100/2000 kept");
}

// ---- 7 --------------------------------------------------------------------

Outcome kg_equivalence() {
    Notes n;
    const auto recs = synth::papers(1000, 4242);
    const kg::KgIndex idx(recs);

    std::mt19937_64 rng(9);
    std::size_t date_ok = 0;
    const int date_trials = 100;
    for (int t = 0; t < date_trials; ++t) {
        const int y1 = 1990 + static_cast<int>(uniform_below(rng, 34));
        const int y2 = y1 + static_cast<int>(uniform_below(rng, 8));
        const int m1 = 1 + static_cast<int>(uniform_below(rng, 12)), m2 = 1 + static_cast<int>(uniform_below(rng, 12));
        kg::KgQuery q;
        q.result_parameters = {"title"};
        q.limit = 100000;
        q.date_range = kg::DateRange{kg::Date{y1, m1, 1}, kg::Date{y2, m2, 28}};
        std::set<std::string> got;
        for (const auto& h : idx.search(q)) got.insert(h.id);
        char a[16], b[16];
        std::snprintf(a, sizeof a, "%04d/%02d/01", y1, m1);
        std::snprintf(b, sizeof b, "%04d/%02d/28", y2, m2);
        if (got == oracle::in_range(recs, a, b))
            ++date_ok;
        else
            n.fail(std::string("date range ") + a + ".." + b + " differs");
    }

    std::size_t sim_ok = 0, sim_trials = 0;
    for (std::size_t i = 0; i < recs.size(); i += 10) {
        ++sim_trials;
        const auto got = idx.recommend_similar(recs[i].id, 10);
        const auto want = oracle::similar(recs, recs[i].id, 10);
        bool same = got.size() == want.size();
        for (std::size_t j = 0; same && j < got.size(); ++j)
            same = got[j].first == want[j].first && std::abs(got[j].second - want[j].second) < 1e-12;
        if (same)
            ++sim_ok;
        else
            n.fail("similar to " + recs[i].id + " differs");
    }

    std::size_t first = 0;
    for (const auto& r : recs) {
        kg::KgQuery q;
        q.clauses[kg::Field::title] = r.title;
        q.result_parameters = {"title"};
        q.limit = 1;
        const auto hits = idx.search(q);
        if (!hits.empty() && hits[0].id == r.id) ++first;
    }
    const double rate = static_cast<double>(first) / static_cast<double>(recs.size());
    n.check(rate >= 0.99, "exact title first rate " + fmt(rate));
    return n.done("date filter " + std::to_string(date_ok) + "/" + std::to_string(date_trials) + ", similar top-10 " +
                  std::to_string(sim_ok) + "/" + std::to_string(sim_trials) + ", exact title first " +
                  std::to_string(first) + "/1000");
}

// ---- 8 --------------------------------------------------------------------

Outcome curation_round_trip() {
    using namespace curator;
    Notes n;
    const std::vector<std::pair<std::string, std::string>> open = {
        {"Computer Science", "Academic Article"},   {"Natural Sciences", "Monograph"},
        {"Social Sciences", "Whitepaper"},          {"Engineering and Technology", "Technical Blog"},
        {"Medical and Health", "Forum Discussion"}, {"Arts and Literature", "News Report"},
        {"Other", "Other"},                         {"Humanities", "Popular Science Article"},
        {"Economics and Management", "Lecture Notes"}, {"Space Sciences", "Academic Report"}};
    std::size_t combos = 0, same = 0;
    for (auto q : kAllQualities)
        for (auto d : kAllDepths)
            for (auto s : kAllSuitabilities)
                for (const auto& [dom, cat] : open) {
                    const Verdict v{q, dom, d, cat, s};
                    ++combos;
                    try {
                        if (parse_verdict(render(v).dump()) == v)
                            ++same;
                        else
                            n.fail("verdict " + render(v).dump() + " changed");
                    } catch (const std::exception& e) {
                        n.fail(e.what());
                    }
                }
    n.check(combos == 360, "only " + std::to_string(combos) + " combinations");

    std::mt19937_64 rng(77);
    const std::vector<std::string> awkward = {"", ": part two", "; a study", " (v2)", "\nsecond line", " Title: again"};
    std::size_t recovered = 0;
    for (int i = 0; i < 1000; ++i) {
        GenerationRecord r;
        r.introduction = synth::words(rng, 10 + uniform_below(rng, 60));
        if (uniform_below(rng, 2)) r.experiments = synth::words(rng, 20);
        if (uniform_below(rng, 2)) r.results = synth::words(rng, 20);
        r.title = synth::words(rng, 2 + uniform_below(rng, 10)) + awkward[uniform_below(rng, awkward.size())];
        r.abstract = synth::words(rng, 30 + uniform_below(rng, 100)) + awkward[uniform_below(rng, awkward.size())];
        const Sections sec{r.experiments.has_value() && uniform_below(rng, 2) == 1,
                           r.results.has_value() && uniform_below(rng, 2) == 1};
        try {
            if (parse_title_abstract(format_title_abstract_record(r, sec)) == std::make_pair(r.title, r.abstract))
                ++recovered;
            else
                n.fail("record " + std::to_string(i) + " not recovered");
        } catch (const std::exception& e) {
            n.fail("record " + std::to_string(i) + ": " + e.what());
        }
    }
    return n.done(std::to_string(same) + "/" + std::to_string(combos) + " verdicts, " + std::to_string(recovered) +
                  "/1000 title/abstract records");
}

// ---- 9 --------------------------------------------------------------------

struct Server {
    service::SessionManager& m;
    service::HttpService http;
    int port;
    std::thread th;
    explicit Server(service::SessionManager& mgr) : m(mgr), http(mgr), port(http.bind("127.0.0.1", 0)) {
        if (port <= 0) throw Error("cannot bind a local port");
        th = std::thread([this] { http.listen(); });
        for (int i = 0; i < 400 && !http.running(); ++i) std::this_thread::sleep_for(std::chrono::milliseconds(5));
    }
    ~Server() {
        http.stop();
        th.join();
    }
    httplib::Client client() const {
        httplib::Client c("127.0.0.1", port);
        c.set_read_timeout(60, 0);
        return c;
    }
};

std::string last_user_line(const std::string& prompt) {
    const auto at = prompt.rfind("User: ");
    const auto end = prompt.find('\n', at);
    return prompt.substr(at + 6, end - at - 6);
}

// One tool call, then an answer echoing the question.
std::string two_step(const llm::CompletionRequest& r) {
    const auto q = last_user_line(r.prompt);
    std::this_thread::sleep_for(std::chrono::milliseconds(2 + std::hash<std::string>{}(r.prompt) % 8));
    if (r.prompt.find("Observation:", r.prompt.rfind("User: ")) == std::string::npos)
        return "Thought: search for " + q + "\nAction:\n```\n{\"action\": \"WebSearchEngine\", \"action_input\": {\"query\": \"" +
               q + "\"}}\n```\n";
    return "Thought: I now know the final answer\nFinal Answer: answer for " + q;
}

service::SessionOptions options(llm::CallbackBackend::Fn fn) {
    service::SessionOptions o;
    o.backend_factory = [fn] { return std::make_unique<llm::CallbackBackend>("scripted", fn); };
    o.tools = synth::fixture_toolbox();
    return o;
}

std::string new_session(httplib::Client& c) {
    auto r = c.Post("/v1/sessions", "", "application/json");
    if (!r || r->status != 201) throw Error("session create failed");
    return json::parse(r->body)["id"].get<std::string>();
}

Outcome service_contract() {
    Notes n;
    std::size_t trials_ok = 0;
    const int trials = 5;
    {
        service::SessionManager m(options([](const llm::CompletionRequest& r) {
            std::this_thread::sleep_for(std::chrono::milliseconds(300));
            return "Final Answer: ok " + last_user_line(r.prompt);
        }));
        Server srv(m);
        for (int t = 0; t < trials; ++t) {
            auto c = srv.client();
            const auto id = new_session(c);
            std::promise<void> go;
            auto start = go.get_future().share();
            auto post = [&, start](const std::string& text) {
                auto cl = srv.client();
                start.wait();
                auto r = cl.Post("/v1/sessions/" + id + "/messages", json{{"text", text}}.dump(), "application/json");
                return r ? r->status : -1;
            };
            auto a = std::async(std::launch::async, post, "first");
            auto b = std::async(std::launch::async, post, "second");
            go.set_value();
            std::multiset<int> codes{a.get(), b.get()};
            if (codes == std::multiset<int>{200, 409})
                ++trials_ok;
            else
                n.fail("trial " + std::to_string(t) + " statuses " + std::to_string(*codes.begin()) + "," +
                       std::to_string(*codes.rbegin()));
            auto s = c.Get("/v1/sessions/" + id);
            n.check(s && json::parse(s->body)["turns"] == 2, "trial " + std::to_string(t) + " did not record one turn");
        }
    }

    const int sessions = 10, rounds = 3;
    std::size_t leaks = 0, clean = 0, malformed = 0;
    {
        service::SessionManager m(options(two_step));
        Server srv(m);
        std::vector<std::string> ids;
        {
            auto c = srv.client();
            for (int i = 0; i < sessions; ++i) ids.push_back(new_session(c));
        }
        std::vector<std::future<std::vector<std::string>>> runs;
        for (int i = 0; i < sessions; ++i)
            runs.push_back(std::async(std::launch::async, [&, i] {
                std::vector<std::string> bodies;
                auto c = srv.client();
                for (int k = 0; k < rounds; ++k) {
                    const auto text = "marker-s" + std::to_string(i) + "-r" + std::to_string(k);
                    auto r = c.Post("/v1/sessions/" + ids[static_cast<std::size_t>(i)] + "/messages",
                                    json{{"text", text}}.dump(), "application/json");
                    bodies.push_back(r && r->status == 200 ? r->body : std::string());
                }
                return bodies;
            }));
        for (int i = 0; i < sessions; ++i) {
            const auto bodies = runs[static_cast<std::size_t>(i)].get();
            const auto own = "marker-s" + std::to_string(i) + "-";
            bool session_clean = true;
            for (int k = 0; k < rounds; ++k) {
                const auto events = service::parse_sse(bodies[static_cast<std::size_t>(k)]);
                const auto text = own + "r" + std::to_string(k);
                bool well_formed = !events.empty() && events.back().kind == "final" &&
                                   events.back().payload["payload"] == "answer for " + text;
                for (std::size_t e = 0; e < events.size(); ++e) well_formed = well_formed && events[e].seq == e;
                if (!well_formed) ++malformed;
                for (const auto& e : events) {
                    const auto dumped = e.to_json().dump();
                    for (std::size_t at = dumped.find("marker-s"); at != std::string::npos;
                         at = dumped.find("marker-s", at + 1))
                        if (dumped.compare(at, text.size(), text) != 0) {
                            ++leaks;
                            session_clean = false;
                        }
                }
            }
            // stored dialogue holds only this session's questions
            auto c = srv.client();
            auto s = c.Get("/v1/sessions/" + ids[static_cast<std::size_t>(i)]);
            const auto state = s ? json::parse(s->body)["state"].dump() : std::string();
            for (std::size_t at = state.find("marker-s"); at != std::string::npos; at = state.find("marker-s", at + 1))
                if (state.compare(at, own.size(), own) != 0) {
                    ++leaks;
                    session_clean = false;
                }
            if (s && json::parse(s->body)["turns"] != 2 * rounds) ++malformed;
            clean += session_clean;
        }
    }
    n.check(leaks == 0, std::to_string(leaks) + " foreign events");
    n.check(malformed == 0, std::to_string(malformed) + " incomplete streams or sessions");
    return n.done(std::to_string(trials_ok) + "/" + std::to_string(trials) + " same-session races gave 200+409; " +
                  std::to_string(clean) + "/" + std::to_string(sessions) + " parallel sessions clean, " +
                  std::to_string(leaks) + " leaked events");
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"react-golden-episode", golden_episode},
        {"action-blob-grammar", blob_grammar},
        {"bench-leakage-freedom", leakage},
        {"bench-determinism", bench_determinism},
        {"eval-harness-calibration", calibration},
        {"review-metrics", review_metrics},
        {"kg-oracle-equivalence", kg_equivalence},
        {"curation-round-trip", curation_round_trip},
        {"service-contract", service_contract},
    };
    int failed = 0;
    for (const auto& [name, fn] : criteria) {
        Outcome o;
        try {
            o = fn();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failed += !o.pass;
        std::cout << (o.pass ? "PASS " : "FAIL ") << name << ": " << o.detail << std::endl;
    }
    return failed ? 1 : 0;
}
