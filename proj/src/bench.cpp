#include "scholar/bench.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

namespace scholar::bench {

namespace {

bool is_closing(char c) { return c == ')' || c == ']' || c == '}' || c == '>'; }

bool url_at(std::string_view s, std::size_t i) {
    const auto rest = s.substr(i);
    return text::starts_with_icase(rest, "http://") || text::starts_with_icase(rest, "https://");
}

using Span = std::pair<std::size_t, std::size_t>;

// Non-overlapping, word-bounded, case-insensitive matches of `needle`.
std::vector<Span> bounded_matches(const std::string& hay_lower, const std::string& needle_lower) {
    std::vector<Span> out;
    if (needle_lower.empty()) return out;
    const bool check_left = text::is_word_byte(static_cast<unsigned char>(needle_lower.front()));
    const bool check_right = text::is_word_byte(static_cast<unsigned char>(needle_lower.back()));
    std::size_t pos = 0;
    while ((pos = hay_lower.find(needle_lower, pos)) != std::string::npos) {
        const auto end = pos + needle_lower.size();
        const bool left_ok = !check_left || pos == 0 || !text::is_word_byte(static_cast<unsigned char>(hay_lower[pos - 1]));
        const bool right_ok =
            !check_right || end == hay_lower.size() || !text::is_word_byte(static_cast<unsigned char>(hay_lower[end]));
        if (left_ok && right_ok) {
            out.emplace_back(pos, end);
            pos = end;
        } else {
            ++pos;
        }
    }
    return out;
}

std::string string_field(const json& j, const char* key) {
    if (!j.contains(key) || j[key].is_null()) return {};
    if (!j[key].is_string()) throw Error(std::string("field \"") + key + "\" must be a string");
    return j[key].get<std::string>();
}

std::string required_string(const json& j, const char* key) {
    if (!j.contains(key)) throw Error(std::string("missing field \"") + key + "\"");
    return string_field(j, key);
}

template <typename Record, typename Fill>
std::vector<Record> parse_dump(std::istream& in, Fill fill) {
    std::vector<Record> out;
    try {
        jsonl::for_each(in, [&](std::size_t line, const json& row) {
            try {
                if (!row.is_object()) throw Error("record must be a JSON object");
                Record r;
                r.name = required_string(row, "name");
                if (r.name.empty()) throw Error("name must be non-empty");
                r.full_name = string_field(row, "full_name");
                r.description = required_string(row, "description");
                r.introducing_paper_title = string_field(row, "introducing_paper_title");
                if (r.introducing_paper_title.empty() && row.contains("paper") && row["paper"].is_object())
                    r.introducing_paper_title = string_field(row["paper"], "title");
                fill(r, row);
                out.push_back(std::move(r));
            } catch (const DumpParseError&) {
                throw;
            } catch (const std::exception& e) {
                throw DumpParseError(line, e.what());
            }
        });
    } catch (const jsonl::ParseError& e) {
        throw DumpParseError(e.line(), e.what());
    }
    return out;
}

}  // namespace

std::string strip_links(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    bool changed = false;
    std::size_t i = 0;
    while (i < s.size()) {
        if (url_at(s, i)) {
            changed = true;
            std::size_t j = i;
            while (j < s.size() && !std::isspace(static_cast<unsigned char>(s[j])) && !is_closing(s[j])) ++j;
            if (out.empty() || out.back() == ' ' || out.back() == '\t')
                while (j < s.size() && (s[j] == ' ' || s[j] == '\t')) ++j;
            i = j;
            continue;
        }
        out += s[i++];
    }
    if (!changed) return std::string(s);
    while (!out.empty() && (out.back() == ' ' || out.back() == '\t')) out.pop_back();
    return out;
}

std::string mask_description(std::string_view description, std::string_view name, std::string_view full_name) {
    const std::string text(description);
    const auto lower = text::to_lower(text);
    auto spans = bounded_matches(lower, text::to_lower(full_name));
    const auto covered = [&](const Span& s) {
        return std::any_of(spans.begin(), spans.end(),
                           [&](const Span& f) { return s.first < f.second && f.first < s.second; });
    };
    std::vector<Span> name_spans;
    for (const auto& s : bounded_matches(lower, text::to_lower(name)))
        if (!covered(s)) name_spans.push_back(s);
    spans.insert(spans.end(), name_spans.begin(), name_spans.end());
    std::sort(spans.begin(), spans.end());

    std::string out;
    std::size_t pos = 0;
    for (const auto& [b, e] : spans) {
        out.append(text, pos, b - pos);
        out += kMaskToken;
        pos = e;
    }
    out.append(text, pos, std::string::npos);
    return out;
}

std::string_view to_string(QType q) {
    switch (q) {
        case QType::method_intro: return "method-intro";
        case QType::method_refer: return "method-refer";
        case QType::dataset_intro: return "dataset-intro";
        case QType::dataset_refer: return "dataset-refer";
    }
    return "method-intro";
}

bool is_intro(QType q) { return q == QType::method_intro || q == QType::dataset_intro; }

ordered_json BenchmarkItem::to_json() const {
    ordered_json j;
    j["id"] = id;
    j["qtype"] = std::string(to_string(qtype));
    j["question"] = question;
    j["options"] = options;
    j["answer_index"] = answer_index;
    j["provenance"] = {{"source", provenance.source},
                       {"distractors", provenance.distractors},
                       {"seed", provenance.seed}};
    return j;
}

BenchmarkItem BenchmarkItem::from_json(const json& j) {
    BenchmarkItem it;
    it.id = j.at("id").get<std::string>();
    const auto q = j.at("qtype").get<std::string>();
    bool known = false;
    for (auto t : {QType::method_intro, QType::method_refer, QType::dataset_intro, QType::dataset_refer}) {
        if (to_string(t) == q) {
            it.qtype = t;
            known = true;
        }
    }
    if (!known) throw Error("unknown qtype: " + q);
    it.question = j.at("question").get<std::string>();
    const auto& opts = j.at("options");
    if (!opts.is_array() || opts.size() != 4) throw Error("options must be a list of 4 strings");
    for (std::size_t i = 0; i < 4; ++i) it.options[i] = opts[i].get<std::string>();
    it.answer_index = j.at("answer_index").get<int>();
    if (it.answer_index < 0 || it.answer_index > 3) throw Error("answer_index out of range");
    if (j.contains("provenance")) {
        const auto& p = j["provenance"];
        it.provenance.source = p.value("source", std::string{});
        it.provenance.distractors = p.value("distractors", std::vector<std::string>{});
        it.provenance.seed = p.value("seed", std::uint64_t{0});
    }
    return it;
}

Candidate to_candidate(const MethodRecord& m) {
    return {m.name, m.full_name, m.description, m.introducing_paper_title, m.collection_path, m.area};
}

Candidate to_candidate(const DatasetRecord& d) {
    return {d.name, d.full_name, d.description, d.introducing_paper_title, d.modality, {}};
}

std::string processed_description(const Candidate& c) {
    return text::trim(mask_description(strip_links(c.description), c.name, c.full_name));
}

std::string question_for(QType q, const Candidate& c) {
    switch (q) {
        case QType::method_intro:
        case QType::dataset_intro:
            return "Which of the following options is a description of \"" + c.display_name() + "\"?";
        case QType::method_refer: return "which of the following paper proposed the method " + c.display_name() + "?";
        case QType::dataset_refer:
            return "which of the following paper introduced the dataset " + c.display_name() + "?";
    }
    return {};
}

BenchmarkItem make_item(QType qtype, const Candidate& record, const std::vector<const Candidate*>& pool,
                        std::uint64_t seed) {
    const bool intro = is_intro(qtype);
    const auto option_text = [&](const Candidate& c) {
        return intro ? processed_description(c) : text::trim(strip_links(c.paper_title));
    };

    const auto gold = option_text(record);
    if (gold.empty()) throw SkipRecord(intro ? "empty-description" : "no-introducing-paper");
    if (intro) {
        const auto lower = text::to_lower(gold);
        if (lower.find(text::to_lower(record.name)) != std::string::npos ||
            (!record.full_name.empty() && lower.find(text::to_lower(record.full_name)) != std::string::npos))
            throw SkipRecord("name-survives-masking");
    }

    // Fallback tiers: same group, then same area, then anywhere.
    std::array<std::vector<const Candidate*>, 3> tiers;
    for (const auto* c : pool) {
        if (c == &record) continue;
        if (!record.group.empty() && c->group == record.group)
            tiers[0].push_back(c);
        else if (!record.area.empty() && c->area == record.area)
            tiers[1].push_back(c);
        else
            tiers[2].push_back(c);
    }

    std::mt19937_64 rng(seed);
    std::vector<std::string> chosen_text;
    std::vector<std::string> chosen_name;
    for (auto& tier : tiers) {
        for (std::size_t k = 0; k < tier.size() && chosen_text.size() < 3; ++k) {
            const auto j = k + static_cast<std::size_t>(uniform_below(rng, tier.size() - k));
            std::swap(tier[k], tier[j]);
            auto t = option_text(*tier[k]);
            if (t.empty() || t == gold || std::find(chosen_text.begin(), chosen_text.end(), t) != chosen_text.end())
                continue;
            chosen_text.push_back(std::move(t));
            chosen_name.push_back(tier[k]->name);
        }
    }
    if (chosen_text.size() < 3) throw SkipRecord("distractor-pool-exhausted");

    std::vector<int> order = {0, 1, 2, 3};
    stable_shuffle(order, rng);
    BenchmarkItem item;
    item.qtype = qtype;
    item.id = std::string(to_string(qtype)) + ":" + record.name;
    item.question = question_for(qtype, record);
    for (std::size_t slot = 0; slot < 4; ++slot) {
        const int src = order[slot];
        item.options[slot] = src == 0 ? gold : chosen_text[static_cast<std::size_t>(src - 1)];
        if (src == 0) item.answer_index = static_cast<int>(slot);
    }
    item.provenance = {record.name, chosen_name, seed};
    return item;
}

std::vector<MethodRecord> parse_methods(std::istream& in) {
    return parse_dump<MethodRecord>(in, [](MethodRecord& r, const json& row) {
        r.collection_path = string_field(row, "collection_path");
        r.area = string_field(row, "area");
        if (r.collection_path.empty() && row.contains("collections") && row["collections"].is_array() &&
            !row["collections"].empty() && row["collections"][0].is_object()) {
            const auto& c = row["collections"][0];
            r.collection_path = string_field(c, "collection");
            if (r.area.empty()) r.area = string_field(c, "area");
        }
    });
}

std::vector<DatasetRecord> parse_datasets(std::istream& in) {
    return parse_dump<DatasetRecord>(in, [](DatasetRecord& r, const json& row) {
        r.modality = string_field(row, "modality");
        if (r.modality.empty() && row.contains("modalities") && row["modalities"].is_array() &&
            !row["modalities"].empty() && row["modalities"][0].is_string())
            r.modality = row["modalities"][0].get<std::string>();
    });
}

ordered_json BuildStats::to_json() const {
    ordered_json j;
    j["by_qtype"] = ordered_json::object();
    for (const auto& [k, v] : by_qtype) j["by_qtype"][k] = v;
    j["skipped"] = ordered_json::array();
    for (const auto& s : skipped)
        j["skipped"].push_back({{"record", s.record}, {"qtype", std::string(to_string(s.qtype))}, {"reason", s.reason}});
    return j;
}

std::uint64_t item_seed(std::uint64_t base, std::size_t record_index, QType q) {
    return mix_seed(base ^ mix_seed(static_cast<std::uint64_t>(record_index) * 4 + static_cast<std::uint64_t>(q)));
}

BuildResult build_dataset(const std::vector<MethodRecord>& methods, const std::vector<DatasetRecord>& datasets,
                          const BuildOptions& options) {
    BuildResult result;
    const auto run = [&](const std::vector<Candidate>& cands, QType intro, QType refer) {
        std::vector<const Candidate*> pool;
        pool.reserve(cands.size());
        for (const auto& c : cands) pool.push_back(&c);
        for (std::size_t i = 0; i < cands.size(); ++i) {
            std::vector<QType> types;
            if (options.one_per_record)
                types.push_back(i % 2 == 0 ? intro : refer);
            else
                types = {intro, refer};
            for (auto q : types) {
                try {
                    auto item = make_item(q, cands[i], pool, item_seed(options.seed, i, q));
                    item.id = std::string(to_string(q)) + "-" + std::to_string(i);
                    ++result.stats.by_qtype[std::string(to_string(q))];
                    result.items.push_back(std::move(item));
                } catch (const SkipRecord& e) {
                    result.stats.skipped.push_back({cands[i].name, q, e.what()});
                }
            }
        }
    };
    std::vector<Candidate> mc;
    for (const auto& m : methods) mc.push_back(to_candidate(m));
    run(mc, QType::method_intro, QType::method_refer);
    std::vector<Candidate> dc;
    for (const auto& d : datasets) dc.push_back(to_candidate(d));
    run(dc, QType::dataset_intro, QType::dataset_refer);
    return result;
}

std::string serialize_items(const std::vector<BenchmarkItem>& items) {
    std::string out;
    for (const auto& it : items) out += it.to_json().dump() + "\n";
    return out;
}

}  // namespace scholar::bench
