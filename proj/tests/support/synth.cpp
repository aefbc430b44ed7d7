#include "support/synth.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <memory>
#include <set>
#include <sstream>

#include "scholar/react.hpp"
#include "scholar/text.hpp"

namespace synth {

namespace {

const std::vector<std::string> kVocab = {
    "learning",   "neural",     "network",    "graph",      "attention",  "sparse",     "robust",
    "adaptive",   "efficient",  "scalable",   "bayesian",   "inference",  "protein",    "structure",
    "language",   "model",      "vision",     "retrieval",  "dynamic",    "optimal",    "transport",
    "stochastic", "gradient",   "descent",    "quantum",    "circuit",    "molecular",  "design",
    "federated",  "privacy",    "causal",     "discovery",  "temporal",   "reasoning",  "knowledge",
    "embedding",  "contrastive", "self",      "supervised", "policy",     "reinforcement", "reward",
    "kernel",     "manifold",   "spectral",   "clustering", "generative", "diffusion",  "adversarial",
    "training",   "compression", "pruning",   "quantized",  "hardware",   "accelerator", "compiler",
    "semantic",   "segmentation", "detection", "tracking",  "video",      "audio",      "speech",
    "translation", "summarization", "dialogue", "question", "answering",  "benchmark",  "dataset",
    "evaluation", "theory",     "bounds",     "convergence", "analysis",  "approximation", "sampling",
    "monte",      "carlo",      "markov",     "chain",      "hierarchical", "mixture",  "experts",
    "routing",    "memory",     "recurrent",  "convolutional", "transformer", "residual", "normalization",
    "batch",      "layer",      "weight",     "decay",      "regularization", "uncertainty", "calibration",
    "ensemble",   "distillation", "teacher",  "student",    "curriculum", "meta",       "few",
    "shot",       "zero",       "transfer",   "domain",     "adaptation", "shift",      "fairness",
    "bias",       "interpretability", "explanation", "attribution", "saliency", "token", "sequence",
    "alignment",  "preference", "feedback",   "human",      "robotics",   "control",    "planning",
    "search",     "tree",       "game",       "equilibrium", "mechanism", "auction",    "market",
    "climate",    "weather",    "forecasting", "medical",   "imaging",    "clinical",   "genomics",
    "single",     "cell",       "chemistry",  "materials",  "physics",    "simulation", "solver",
    "differential", "equations", "operator",  "fourier",    "wavelet",    "signal",     "processing",
    "point",      "cloud",      "mesh",       "rendering",  "radiance",   "field",      "scene",
    "text",       "image",      "multimodal", "cross",      "lingual",    "code",       "program",
    "synthesis",  "verification", "formal",   "logic",      "symbolic",   "hybrid",     "architecture"};

const std::vector<std::string> kSyllables = {"zor", "vex", "tal", "mir", "quen", "dra", "lus", "pex", "nor",
                                             "vin", "kal", "sor", "bry", "thu", "gal", "rix", "mon", "fel",
                                             "dex", "ora", "cyn", "wul", "jat", "hep"};

const std::vector<std::string> kFields = {"Computer Science", "Biology", "Physics", "Medicine", "Mathematics"};
const std::vector<std::string> kVenues = {"NeurIPS", "ICML", "ICLR", "ACL", "CVPR", "Nature", "Science", "AAAI"};

std::size_t pick(std::mt19937_64& rng, std::size_t n) { return static_cast<std::size_t>(scholar::uniform_below(rng, n)); }

const std::string& pick(std::mt19937_64& rng, const std::vector<std::string>& v) { return v[pick(rng, v.size())]; }

std::string capitalize(std::string s) {
    if (!s.empty()) s[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
    return s;
}

std::string upper(std::string s) {
    for (auto& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    return s;
}

std::vector<std::string> sample_distinct(std::mt19937_64& rng, const std::vector<std::string>& pool, std::size_t k) {
    std::set<std::string> seen;
    std::vector<std::string> out;
    while (out.size() < k && seen.size() < pool.size()) {
        const auto& w = pick(rng, pool);
        if (seen.insert(w).second) out.push_back(w);
    }
    return out;
}

// Unique pseudo-word per index.
std::string coined(std::size_t i) {
    std::string s;
    std::size_t x = i;
    do {
        s += kSyllables[x % kSyllables.size()];
        x /= kSyllables.size();
    } while (x > 0);
    return s + kSyllables[(i * 7 + 3) % kSyllables.size()];
}

// A mention of `name` in varied surface forms; never glued to a word.
std::string mention(std::mt19937_64& rng, const std::string& name) {
    switch (pick(rng, 7)) {
        case 0: return name;
        case 1: return upper(name);
        case 2: return scholar::text::to_lower(name);
        case 3: return "(" + name + ")";
        case 4: return name + "'s";
        case 5: return name + "-based";
        default: return "\"" + name + "\",";
    }
}

template <typename Record>
std::string describe(std::mt19937_64& rng, const Record& r, std::size_t index) {
    std::string d = capitalize(words(rng, 4 + pick(rng, 6)));
    if (!r.full_name.empty() && pick(rng, 2) == 0) d += " " + mention(rng, r.full_name);
    d += " " + mention(rng, r.name) + " " + words(rng, 3 + pick(rng, 8));
    if (pick(rng, 3) == 0) d += " " + mention(rng, r.name) + " " + words(rng, 2 + pick(rng, 4));
    if (pick(rng, 4) == 0) d += " See https://example.org/" + scholar::text::to_lower(r.name) + "/" + std::to_string(index);
    if (pick(rng, 6) == 0) d += " (code: http://github.com/lab/" + std::to_string(index) + ")";
    // occasionally glue the name into a longer token
    if (pick(rng, 40) == 0) d += " " + scholar::text::to_lower(r.name) + "ized variants";
    return d + ".";
}

}  // namespace

std::string fixture_path(const std::string& rel) { return std::string(SCHOLAR_FIXTURES) + "/" + rel; }

std::string read_fixture(const std::string& rel) { return scholar::read_file(fixture_path(rel)); }

std::function<std::chrono::system_clock::time_point()> fixed_clock() {
    auto tick = std::make_shared<std::int64_t>(0);
    return [tick] {
        return std::chrono::system_clock::time_point(std::chrono::milliseconds(1704067200000LL + 1000 * (*tick)++));
    };
}

TempDir::TempDir() {
    static std::mt19937_64 rng{std::random_device{}()};
    path = std::filesystem::temp_directory_path() / ("scholar-test-" + std::to_string(rng()));
    std::filesystem::create_directories(path);
}

TempDir::~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
}

std::string words(std::mt19937_64& rng, std::size_t n) {
    std::string out;
    for (std::size_t i = 0; i < n; ++i) {
        if (i) out += ' ';
        out += pick(rng, kVocab);
    }
    return out;
}

std::vector<scholar::kg::PaperRecord> papers(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<std::string> refs_pool, kw_pool;
    for (int i = 0; i < 120; ++i) refs_pool.push_back("ref-" + std::to_string(i));
    for (int i = 0; i < 30; ++i) kw_pool.push_back(kVocab[static_cast<std::size_t>(i) * 3]);
    std::vector<scholar::kg::PaperRecord> out;
    std::set<std::string> titles;
    while (out.size() < n) {
        scholar::kg::PaperRecord r;
        r.id = "W" + std::to_string(100000 + out.size() * 7);
        std::string title;
        do {
            title = capitalize(words(rng, 3 + pick(rng, 6)));
        } while (!titles.insert(scholar::text::to_lower(title)).second);
        r.title = title;
        r.abstract = capitalize(words(rng, 20 + pick(rng, 30))) + ".";
        for (std::size_t a = 0, na = 1 + pick(rng, 4); a < na; ++a)
            r.authors.push_back(capitalize(kSyllables[pick(rng, kSyllables.size())]) + " " +
                                capitalize(coined(pick(rng, 300))));
        r.field_of_study = pick(rng, kFields);
        const int year = 1990 + static_cast<int>(pick(rng, 35));
        const int month = 1 + static_cast<int>(pick(rng, 12));
        const int dim[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
        int days = dim[month - 1];
        if (month == 2 && (year % 4 == 0 && (year % 100 != 0 || year % 400 == 0))) days = 29;
        r.publish_date = {year, month, 1 + static_cast<int>(pick(rng, static_cast<std::size_t>(days)))};
        r.venue = pick(rng, kVenues);
        r.citation_count = static_cast<long long>(pick(rng, 5000));
        r.references = sample_distinct(rng, refs_pool, pick(rng, 9));
        r.keywords = sample_distinct(rng, kw_pool, 1 + pick(rng, 4));
        out.push_back(std::move(r));
    }
    return out;
}

std::string papers_jsonl(const std::vector<scholar::kg::PaperRecord>& recs) {
    std::string s;
    for (const auto& r : recs) s += r.to_json().dump() + "\n";
    return s;
}

std::vector<scholar::bench::MethodRecord> methods(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<scholar::bench::MethodRecord> out;
    for (std::size_t i = 0; i < n; ++i) {
        scholar::bench::MethodRecord m;
        const auto word = capitalize(coined(i));
        switch (pick(rng, 3)) {
            case 0:
                m.name = word;
                m.full_name = word + " " + capitalize(pick(rng, kVocab)) + " Network";
                break;
            case 1:
                m.name = upper(coined(i).substr(0, 3)) + std::to_string(i);
                m.full_name = capitalize(pick(rng, kVocab)) + " " + word + " Attention";
                break;
            default: m.name = word; break;
        }
        const std::size_t area = i % 4;
        m.area = "area" + std::to_string(area);
        m.collection_path = m.area + "/cat" + std::to_string(i % 3) + "/coll" + std::to_string(i % 37);
        m.description = describe(rng, m, i);
        if (pick(rng, 25) != 0)
            m.introducing_paper_title = capitalize(words(rng, 4 + pick(rng, 5))) + " with " + m.name;
        out.push_back(std::move(m));
    }
    return out;
}

std::vector<scholar::bench::DatasetRecord> datasets(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed ^ 0x5eedULL);
    const std::vector<std::string> modalities = {"Images", "Texts", "Audio", "Graphs", "Videos", "Tabular"};
    std::vector<scholar::bench::DatasetRecord> out;
    for (std::size_t i = 0; i < n; ++i) {
        scholar::bench::DatasetRecord d;
        const auto word = capitalize(coined(i + 5000));
        d.name = pick(rng, 2) ? word + "-" + std::to_string(10 + i) : upper(word);
        if (pick(rng, 2)) d.full_name = word + " " + capitalize(pick(rng, kVocab)) + " Corpus";
        d.modality = modalities[i % modalities.size()];
        d.description = describe(rng, d, i);
        if (pick(rng, 25) != 0) d.introducing_paper_title = "The " + d.name + " Dataset: " + words(rng, 3);
        out.push_back(std::move(d));
    }
    return out;
}

std::string methods_jsonl(const std::vector<scholar::bench::MethodRecord>& v) {
    std::string s;
    for (const auto& m : v)
        s += scholar::ordered_json{{"name", m.name},
                                   {"full_name", m.full_name},
                                   {"description", m.description},
                                   {"introducing_paper_title", m.introducing_paper_title},
                                   {"collection_path", m.collection_path},
                                   {"area", m.area}}
                 .dump() +
             "\n";
    return s;
}

std::string datasets_jsonl(const std::vector<scholar::bench::DatasetRecord>& v) {
    std::string s;
    for (const auto& d : v)
        s += scholar::ordered_json{{"name", d.name},
                                   {"full_name", d.full_name},
                                   {"description", d.description},
                                   {"introducing_paper_title", d.introducing_paper_title},
                                   {"modality", d.modality}}
                 .dump() +
             "\n";
    return s;
}

ReviewCase review_case(std::mt19937_64& rng, std::size_t n) {
    using namespace scholar::review;
    ReviewCase c;
    const auto random_aspects = [&] {
        AspectSet s;
        for (auto a : kAllAspects)
            if (pick(rng, 3) == 0) s.insert(a);
        return s;
    };
    for (std::size_t i = 0; i < n; ++i) {
        const auto id = "paper-" + std::to_string(i);
        c.metas.push_back({id, pick(rng, 2) ? Decision::accept : Decision::reject, random_aspects()});
        // some papers get no prediction, some two
        const auto copies = pick(rng, 5) == 0 ? 2 : (pick(rng, 8) == 0 ? 0 : 1);
        for (std::size_t k = 0; k < copies; ++k)
            c.predictions.push_back({id, pick(rng, 2) ? Decision::accept : Decision::reject, random_aspects()});
    }
    std::shuffle(c.metas.begin(), c.metas.end(), rng);
    return c;
}

std::shared_ptr<scholar::tools::ToolRegistry> fixture_toolbox() {
    scholar::AppConfig cfg;
    cfg.web_search.url = fixture_path("web/stub.json");
    return scholar::build_toolbox(cfg, scholar::load_index(fixture_path("kg/papers.jsonl")));
}

std::string run_golden_episode() {
    const auto tools = fixture_toolbox();
    scholar::llm::ScriptedBackend backend(
        scholar::llm::script_from_json(scholar::json::parse(read_fixture("react/golden_script.json"))));
    scholar::agent::AgentConfig cfg;
    cfg.tools = tools.get();
    cfg.backend = &backend;
    cfg.clock = fixed_clock();
    scholar::agent::DialogueState state;
    return scholar::agent::trace_to_jsonl(scholar::agent::run_episode(kGoldenQuestion, state, cfg).trace);
}

std::unique_ptr<scholar::llm::Backend> gold_backend(const scholar::eval::EvalTask& task) {
    auto answers = std::make_shared<std::map<std::string, std::string>>();
    for (const auto& it : task.test_items) (*answers)[scholar::eval::build_fewshot_prompt(task, it)] = it.gold;
    return std::make_unique<scholar::llm::CallbackBackend>("gold", [answers](const scholar::llm::CompletionRequest& r) {
        const auto it = answers->find(r.prompt);
        return it == answers->end() ? std::string("?") : " " + it->second;
    });
}

std::unique_ptr<scholar::llm::Backend> random_backend(std::vector<std::string> labels, std::uint64_t seed) {
    return std::make_unique<scholar::llm::CallbackBackend>(
        "random", [labels = std::move(labels), seed](const scholar::llm::CompletionRequest& r) {
            std::mt19937_64 rng(scholar::mix_seed(seed ^ std::hash<std::string>{}(r.prompt)));
            return " " + labels[scholar::uniform_below(rng, labels.size())] + ". something";
        });
}

scholar::eval::EvalTask synthetic_task(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    scholar::eval::EvalTask task;
    task.name = "synthetic";
    task.n_shots = 5;
    task.choice_labels = {"A", "B", "C", "D"};
    const std::vector<std::string> subjects = {"anatomy", "virology", "college_physics", "econometrics"};
    const auto make = [&](const std::string& subject, const std::string& id) {
        scholar::eval::QAItem it;
        it.id = id;
        it.subject = subject;
        it.question = capitalize(words(rng, 8)) + "?";
        for (int k = 0; k < 4; ++k) it.options.push_back(words(rng, 3));
        it.gold = task.choice_labels[pick(rng, 4)];
        return it;
    };
    for (const auto& s : subjects)
        for (int k = 0; k < 5; ++k) task.dev_pool[s].push_back(make(s, s + "/dev/" + std::to_string(k)));
    for (std::size_t i = 0; i < n; ++i) {
        const auto& s = subjects[i % subjects.size()];
        task.test_items.push_back(make(s, s + "/test/" + std::to_string(i)));
    }
    task.subjects = subjects;
    std::sort(task.subjects.begin(), task.subjects.end());
    return task;
}

}  // namespace synth
