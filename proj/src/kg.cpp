#include "scholar/kg.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <unordered_set>

namespace scholar::kg {

namespace {

constexpr std::array<std::string_view, kFieldCount> kFieldNames = {"abstracts", "authors", "fieldOfStudy", "title",
                                                                   "venue"};

constexpr int kIndexFormatVersion = 1;

std::vector<std::string> string_list(const json& j, const char* key, std::string& reason) {
    std::vector<std::string> out;
    if (!j.contains(key) || j[key].is_null()) return out;
    if (!j[key].is_array()) {
        reason = std::string("bad-type: ") + key;
        return out;
    }
    for (const auto& v : j[key]) {
        if (!v.is_string()) {
            reason = std::string("bad-type: ") + key;
            return {};
        }
        out.push_back(v.get<std::string>());
    }
    return out;
}

std::string optional_string(const json& j, const char* key, std::string& reason) {
    if (!j.contains(key) || j[key].is_null()) return {};
    if (!j[key].is_string()) {
        reason = std::string("bad-type: ") + key;
        return {};
    }
    return j[key].get<std::string>();
}

std::vector<std::string> unique_sorted(std::vector<std::string> v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
}

std::vector<std::string> unique_terms(std::vector<std::string> terms) {
    std::vector<std::string> out;
    std::unordered_set<std::string> seen;
    for (auto& t : terms)
        if (seen.insert(t).second) out.push_back(std::move(t));
    return out;
}

std::string clause_text(const json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_array()) {
        std::vector<std::string> parts;
        for (const auto& e : v) {
            if (!e.is_string()) throw QueryError("clause list items must be strings");
            parts.push_back(e.get<std::string>());
        }
        return text::join(parts, " ");
    }
    throw QueryError("clause values must be strings or lists of strings");
}

Date date_or_throw(const json& v, const char* what) {
    if (!v.is_string()) throw QueryError(std::string(what) + " must be a yyyy/MM/dd string");
    auto d = Date::parse(v.get<std::string>());
    if (!d) throw QueryError(std::string(what) + " is not a valid yyyy/MM/dd date: " + v.get<std::string>());
    return *d;
}

}  // namespace

std::optional<Date> Date::parse(std::string_view s) {
    if (s.size() != 10 || s[4] != '/' || s[7] != '/') return std::nullopt;
    for (std::size_t i : {0, 1, 2, 3, 5, 6, 8, 9})
        if (!std::isdigit(static_cast<unsigned char>(s[i]))) return std::nullopt;
    Date d;
    d.year = std::stoi(std::string(s.substr(0, 4)));
    d.month = std::stoi(std::string(s.substr(5, 2)));
    d.day = std::stoi(std::string(s.substr(8, 2)));
    const std::chrono::year_month_day ymd{std::chrono::year{d.year}, std::chrono::month{static_cast<unsigned>(d.month)},
                                          std::chrono::day{static_cast<unsigned>(d.day)}};
    if (!ymd.ok()) return std::nullopt;
    return d;
}

std::string Date::str() const {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d/%02d/%02d", year, month, day);
    return buf;
}

json PaperRecord::to_json() const {
    return {{"id", id},
            {"title", title},
            {"abstract", abstract},
            {"authors", authors},
            {"fieldOfStudy", field_of_study},
            {"publishDate", publish_date.str()},
            {"venue", venue},
            {"citationCount", citation_count},
            {"references", references},
            {"keywords", keywords}};
}

std::optional<Field> field_from_name(std::string_view name) {
    for (std::size_t i = 0; i < kFieldCount; ++i)
        if (kFieldNames[i] == name) return static_cast<Field>(i);
    return std::nullopt;
}

std::string_view field_name(Field f) { return kFieldNames[static_cast<std::size_t>(f)]; }

bool is_result_parameter(std::string_view name) {
    return field_from_name(name).has_value() || name == "publishDate" || name == "citationCount";
}

std::string field_text(const PaperRecord& r, Field f) {
    switch (f) {
        case Field::abstracts: return r.abstract;
        case Field::authors: return text::join(r.authors, "; ");
        case Field::fieldOfStudy: return r.field_of_study;
        case Field::title: return r.title;
        case Field::venue: return r.venue;
    }
    return {};
}

json field_value(const PaperRecord& r, std::string_view p) {
    if (p == "abstracts") return r.abstract;
    if (p == "authors") return r.authors;
    if (p == "fieldOfStudy") return r.field_of_study;
    if (p == "publishDate") return r.publish_date.str();
    if (p == "title") return r.title;
    if (p == "venue") return r.venue;
    if (p == "citationCount") return r.citation_count;
    throw QueryError("unknown result parameter: " + std::string(p));
}

std::optional<PaperRecord> record_from_json(const json& j, std::string& reason) {
    if (!j.is_object()) {
        reason = "not-an-object";
        return std::nullopt;
    }
    for (const char* key : {"id", "title", "publishDate"}) {
        if (!j.contains(key) || j[key].is_null()) {
            reason = std::string("missing-field: ") + key;
            return std::nullopt;
        }
        if (!j[key].is_string()) {
            reason = std::string("bad-type: ") + key;
            return std::nullopt;
        }
    }
    PaperRecord r;
    r.id = j["id"].get<std::string>();
    if (r.id.empty()) {
        reason = "empty-id";
        return std::nullopt;
    }
    r.title = j["title"].get<std::string>();
    auto date = Date::parse(j["publishDate"].get<std::string>());
    if (!date) {
        reason = "bad-date: " + j["publishDate"].get<std::string>();
        return std::nullopt;
    }
    r.publish_date = *date;
    std::string err;
    // "abstracts" is accepted as an alias because the tool schema uses it.
    r.abstract = optional_string(j, j.contains("abstract") ? "abstract" : "abstracts", err);
    r.field_of_study = optional_string(j, "fieldOfStudy", err);
    r.venue = optional_string(j, "venue", err);
    r.authors = string_list(j, "authors", err);
    r.references = string_list(j, "references", err);
    r.keywords = string_list(j, "keywords", err);
    if (j.contains("citationCount") && !j["citationCount"].is_null()) {
        if (!j["citationCount"].is_number_integer()) {
            err = "bad-type: citationCount";
        } else {
            r.citation_count = j["citationCount"].get<long long>();
            if (r.citation_count < 0) err = "negative-citation-count";
        }
    }
    if (err.empty() && std::find(r.references.begin(), r.references.end(), r.id) != r.references.end())
        err = "self-reference";
    if (!err.empty()) {
        reason = err;
        return std::nullopt;
    }
    return r;
}

void KgQuery::validate() const {
    if (result_parameters.empty()) throw QueryError("resultParameters must be a non-empty list");
    for (const auto& p : result_parameters)
        if (!is_result_parameter(p)) throw QueryError("unknown result parameter: " + p);
    if (sort_by && !is_result_parameter(sort_by->field)) throw QueryError("cannot sort by: " + sort_by->field);
    if (limit == 0) throw QueryError("limit must be positive");
}

KgQuery KgQuery::from_json(const json& j) {
    if (!j.is_object()) throw QueryError("query must be a JSON object");
    KgQuery q;
    for (const auto& [key, value] : j.items()) {
        if (key == "resultParameters") {
            if (!value.is_array()) throw QueryError("resultParameters must be a list");
            for (const auto& p : value) {
                if (!p.is_string()) throw QueryError("resultParameters items must be strings");
                q.result_parameters.push_back(p.get<std::string>());
            }
        } else if (key == "publishDate") {
            if (!value.is_object()) throw QueryError("publishDate must be an object with gte/lte");
            DateRange r;
            for (const auto& [bound, v] : value.items()) {
                if (bound == "gte")
                    r.gte = date_or_throw(v, "publishDate.gte");
                else if (bound == "lte")
                    r.lte = date_or_throw(v, "publishDate.lte");
                else
                    throw QueryError("publishDate keys must be gte or lte, got " + bound);
            }
            q.date_range = r;
        } else if (key == "sort_by") {
            if (!value.is_object() || value.size() != 1) throw QueryError("sort_by must be {field: 'asc'|'desc'}");
            const auto& [field, dir] = *value.items().begin();
            if (!dir.is_string()) throw QueryError("sort_by direction must be 'asc' or 'desc'");
            const auto d = text::to_lower(dir.get<std::string>());
            if (d != "asc" && d != "desc") throw QueryError("sort_by direction must be 'asc' or 'desc'");
            q.sort_by = SortSpec{field, d == "desc"};
        } else if (key == "limit") {
            if (!value.is_number_integer() || value.get<long long>() < 1)
                throw QueryError("limit must be a positive integer");
            q.limit = value.get<std::size_t>();
        } else if (auto f = field_from_name(key)) {
            q.clauses[*f] = clause_text(value);
        } else {
            throw QueryError("unknown query field: " + key);
        }
    }
    q.validate();
    return q;
}

double jaccard(const std::vector<std::string>& a, const std::vector<std::string>& b) {
    const auto sa = unique_sorted(a);
    const auto sb = unique_sorted(b);
    std::vector<std::string> inter;
    std::set_intersection(sa.begin(), sa.end(), sb.begin(), sb.end(), std::back_inserter(inter));
    const auto uni = sa.size() + sb.size() - inter.size();
    if (uni == 0) return 0.0;
    return static_cast<double>(inter.size()) / static_cast<double>(uni);
}

KgIndex::KgIndex(std::vector<PaperRecord> records, Bm25Params params)
    : records_(std::move(records)), params_(params) {
    for (std::size_t i = 0; i < records_.size(); ++i) {
        if (!by_id_.emplace(records_[i].id, i).second) throw Error("duplicate record id: " + records_[i].id);
    }
    for (std::size_t f = 0; f < kFieldCount; ++f) {
        auto& fi = fields_[f];
        auto& terms = doc_terms_[f];
        fi.doc_len.resize(records_.size());
        terms.resize(records_.size());
        double total = 0;
        for (std::size_t d = 0; d < records_.size(); ++d) {
            const auto toks = text::tokenize(field_text(records_[d], static_cast<Field>(f)));
            fi.doc_len[d] = static_cast<std::uint32_t>(toks.size());
            total += static_cast<double>(toks.size());
            for (const auto& t : toks) ++terms[d][t];
            for (const auto& [t, tf] : terms[d])
                fi.postings[t].push_back({static_cast<std::uint32_t>(d), tf});
        }
        fi.avg_len = records_.empty() ? 0.0 : total / static_cast<double>(records_.size());
    }
}

const PaperRecord* KgIndex::find(const std::string& id) const {
    const auto it = by_id_.find(id);
    return it == by_id_.end() ? nullptr : &records_[it->second];
}

double KgIndex::field_score(Field f, std::size_t doc, const std::vector<std::string>& query_terms) const {
    const auto fi_idx = static_cast<std::size_t>(f);
    const auto& fi = fields_[fi_idx];
    const auto& terms = doc_terms_[fi_idx][doc];
    const double n_docs = static_cast<double>(records_.size());
    const double len_norm =
        fi.avg_len > 0 ? static_cast<double>(fi.doc_len[doc]) / fi.avg_len : 0.0;
    double score = 0.0;
    for (const auto& term : query_terms) {
        const auto tf_it = terms.find(term);
        if (tf_it == terms.end()) continue;
        const double df = static_cast<double>(fi.postings.at(term).size());
        const double idf = std::log(1.0 + (n_docs - df + 0.5) / (df + 0.5));
        const double tf = tf_it->second;
        score += idf * tf * (params_.k1 + 1.0) / (tf + params_.k1 * (1.0 - params_.b + params_.b * len_norm));
    }
    return score;
}

double KgIndex::clause_score(Field f, std::size_t doc, const std::string& clause) const {
    if (f != Field::title) return field_score(f, doc, unique_terms(text::tokenize(clause)));
    double best = 0.0;
    for (const auto& sub : text::split(clause, ';'))
        best = std::max(best, field_score(f, doc, unique_terms(text::tokenize(sub))));
    return best;
}

std::vector<KgHit> KgIndex::search(const KgQuery& query) const {
    query.validate();

    std::vector<std::pair<std::size_t, double>> scored;
    if (query.clauses.empty()) {
        for (std::size_t d = 0; d < records_.size(); ++d) scored.emplace_back(d, 0.0);
    } else {
        // Every clause must match at least one term in its field.
        std::vector<std::size_t> candidates;
        bool first = true;
        for (const auto& [field, clause] : query.clauses) {
            std::vector<std::size_t> docs;
            const auto& postings = fields_[static_cast<std::size_t>(field)].postings;
            for (const auto& term : text::tokenize(clause)) {
                const auto it = postings.find(term);
                if (it == postings.end()) continue;
                for (const auto& p : it->second) docs.push_back(p.doc);
            }
            std::sort(docs.begin(), docs.end());
            docs.erase(std::unique(docs.begin(), docs.end()), docs.end());
            if (first) {
                candidates = std::move(docs);
                first = false;
            } else {
                std::vector<std::size_t> both;
                std::set_intersection(candidates.begin(), candidates.end(), docs.begin(), docs.end(),
                                      std::back_inserter(both));
                candidates = std::move(both);
            }
        }
        for (auto d : candidates) {
            double total = 0.0;
            for (const auto& [field, clause] : query.clauses) total += clause_score(field, d, clause);
            if (total > 0.0) scored.emplace_back(d, total);
        }
    }

    if (query.date_range) {
        std::erase_if(scored, [&](const auto& s) { return !query.date_range->contains(records_[s.first].publish_date); });
    }

    const auto by_id = [&](std::size_t a, std::size_t b) { return records_[a].id < records_[b].id; };
    if (query.sort_by) {
        const auto& key = query.sort_by->field;
        const bool desc = query.sort_by->descending;
        const auto cmp = [&](const PaperRecord& a, const PaperRecord& b) -> int {
            if (key == "publishDate") return a.publish_date < b.publish_date ? -1 : (b.publish_date < a.publish_date);
            if (key == "citationCount")
                return a.citation_count < b.citation_count ? -1 : (b.citation_count < a.citation_count);
            const auto fa = field_text(a, *field_from_name(key));
            const auto fb = field_text(b, *field_from_name(key));
            return fa < fb ? -1 : (fb < fa);
        };
        std::sort(scored.begin(), scored.end(), [&](const auto& x, const auto& y) {
            const int c = cmp(records_[x.first], records_[y.first]);
            if (c != 0) return desc ? c > 0 : c < 0;
            return by_id(x.first, y.first);
        });
    } else {
        std::sort(scored.begin(), scored.end(), [&](const auto& x, const auto& y) {
            if (x.second != y.second) return x.second > y.second;
            return by_id(x.first, y.first);
        });
    }

    std::vector<KgHit> hits;
    for (std::size_t i = 0; i < scored.size() && hits.size() < query.limit; ++i) {
        const auto& rec = records_[scored[i].first];
        KgHit h;
        h.id = rec.id;
        h.score = scored[i].second;
        h.fields = ordered_json::object();
        for (const auto& p : query.result_parameters) h.fields[p] = field_value(rec, p);
        hits.push_back(std::move(h));
    }
    return hits;
}

std::vector<std::pair<std::string, double>> KgIndex::recommend_similar(const std::string& paper_id, std::size_t k,
                                                                       SimilarityWeights w) const {
    const auto* target = find(paper_id);
    if (!target) throw NotFound("unknown paper id: " + paper_id);
    if (k == 0) throw QueryError("k must be >= 1");
    std::vector<std::pair<std::string, double>> out;
    out.reserve(records_.size());
    for (const auto& r : records_) {
        if (r.id == paper_id) continue;
        out.emplace_back(r.id, w.references * jaccard(target->references, r.references) +
                                   w.keywords * jaccard(target->keywords, r.keywords));
    }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    if (out.size() > k) out.resize(k);
    return out;
}

json KgIndex::to_json() const {
    json recs = json::array();
    for (const auto& r : records_) recs.push_back(r.to_json());
    return {{"format", "scholar-kg"},
            {"version", kIndexFormatVersion},
            {"bm25", {{"k1", params_.k1}, {"b", params_.b}}},
            {"records", recs}};
}

KgIndex KgIndex::from_json(const json& j) {
    if (j.value("format", "") != "scholar-kg") throw Error("not a scholar-kg index file");
    if (j.value("version", 0) != kIndexFormatVersion)
        throw Error("unsupported index version " + std::to_string(j.value("version", 0)));
    Bm25Params params;
    if (j.contains("bm25")) {
        params.k1 = j["bm25"].value("k1", params.k1);
        params.b = j["bm25"].value("b", params.b);
    }
    std::vector<PaperRecord> records;
    for (const auto& rj : j.at("records")) {
        std::string reason;
        auto r = record_from_json(rj, reason);
        if (!r) throw Error("corrupt index record: " + reason);
        records.push_back(std::move(*r));
    }
    return KgIndex(std::move(records), params);
}

void KgIndex::save(const std::string& path) const { write_file(path, to_json().dump()); }

KgIndex KgIndex::load(const std::string& path) { return from_json(json::parse(read_file(path))); }

std::pair<std::shared_ptr<const KgIndex>, IndexStats> ingest(std::istream& in, Bm25Params params) {
    IndexStats stats;
    std::vector<PaperRecord> records;
    std::unordered_set<std::string> ids;
    const auto reject = [&](std::size_t line, std::string reason) {
        ++stats.rejected;
        stats.reasons.push_back({line, std::move(reason)});
    };
    jsonl::for_each(
        in,
        [&](std::size_t line, const json& row) {
            std::string reason;
            auto rec = record_from_json(row, reason);
            if (!rec) return reject(line, reason);
            if (!ids.insert(rec->id).second) return reject(line, "duplicate-id: " + rec->id);
            ++stats.accepted;
            records.push_back(std::move(*rec));
        },
        [&](std::size_t line, const std::string& what) { reject(line, what); });
    return {std::make_shared<const KgIndex>(std::move(records), params), stats};
}

}  // namespace scholar::kg
