#include <doctest.h>

#include <algorithm>
#include <random>
#include <sstream>

#include "scholar/review.hpp"
#include "support/oracles.hpp"
#include "support/synth.hpp"

using namespace scholar;
using namespace scholar::review;

namespace {

std::string tokens(std::size_t n) {
    std::string s;
    for (std::size_t i = 0; i < n; ++i) s += (i ? (i % 12 == 0 ? "\n" : " ") : "") + std::string("word");
    return s;
}

ReviewRecord rev(std::string paper, std::string id, Decision d, int conf, std::size_t n_tokens = 150) {
    ReviewRecord r;
    r.paper_id = std::move(paper);
    r.review_id = std::move(id);
    r.recommendation = d;
    r.confidence = conf;
    r.text = tokens(n_tokens);
    return r;
}

std::map<std::string, MetaReview> metas_of(std::vector<MetaReview> v) { return index_metas(v); }

std::set<std::string> ids(const std::vector<ReviewRecord>& v) {
    std::set<std::string> out;
    for (const auto& r : v) out.insert(r.review_id);
    return out;
}

}  // namespace

TEST_SUITE("review") {
    TEST_CASE("parsing") {
        CHECK(decision_from_string("Accept (Poster)") == Decision::accept);
        CHECK(decision_from_string(" reject ") == Decision::reject);
        CHECK_FALSE(decision_from_string("Withdrawn").has_value());
        CHECK(aspect_from_string("Meaningful Comparison") == Aspect::meaningful_comparison);
        CHECK_FALSE(aspect_from_string("novelty").has_value());

        auto r = ReviewRecord::from_json(json::parse(R"({"paper_id":"p","text":"t","rating":6,"confidence":3})"));
        CHECK(r.recommendation == Decision::accept);
        r = ReviewRecord::from_json(json::parse(R"({"paper_id":"p","text":"t","rating":5,"rating_scale":[1,10],"confidence":3})"));
        CHECK(r.recommendation == Decision::reject);
        r = ReviewRecord::from_json(json::parse(R"({"paper_id":"p","text":"t","rating":3,"rating_scale":[1,4],"confidence":3})"));
        CHECK(r.recommendation == Decision::accept);
        CHECK_THROWS_AS(ReviewRecord::from_json(json::parse(R"({"paper_id":"p","text":"t","rating":6,"confidence":9})")),
                        InputError);
        CHECK_THROWS_AS(
            ReviewRecord::from_json(json::parse(R"({"paper_id":"p","text":"t","recommendation":"accept","confidence":2,"aspects":["vibes"]})")),
            InputError);
        const auto back = ReviewRecord::from_json(json(r.to_json()));
        CHECK(back.recommendation == r.recommendation);
        CHECK(back.confidence == r.confidence);

        std::istringstream in("{\"paper_id\":\"a\",\"decision\":\"Accept\"}\n{\"paper_id\":\"a\",\"decision\":\"Reject\"}\n");
        CHECK_THROWS_AS(index_metas(read_metas(in)), InputError);
        std::istringstream bad("{\"paper_id\":\"a\",\"decision\":\"Accept\"}\n{\"paper_id\":\"b\",\"decision\":\"Maybe\"}\n");
        try {
            read_metas(bad);
            FAIL("expected InputError");
        } catch (const InputError& e) {
            CHECK(std::string(e.what()).rfind("line 2", 0) == 0);
        }
    }

    TEST_CASE("length boundaries") {
        std::vector<ReviewRecord> rs;
        for (std::size_t n : {99u, 100u, 2000u, 2001u}) rs.push_back(rev("p", std::to_string(n), Decision::accept, 3, n));
        const auto out = clean_reviews(rs, {});
        CHECK(ids(out.kept) == std::set<std::string>{"100", "2000"});
        REQUIRE(out.removed.size() == 2);
        CHECK(out.removed[0].reasons == std::vector<std::string>{"too-short"});
        CHECK(out.removed[1].reasons == std::vector<std::string>{"too-long"});
    }

    TEST_CASE("line break rule") {
        CHECK_FALSE(excessive_line_breaks(tokens(200)));
        std::string many;
        for (int i = 0; i < 150; ++i) many += "w\n";
        CHECK(excessive_line_breaks(many));
        CHECK(excessive_line_breaks(tokens(100) + "\n\n\n\n\n\n" + tokens(100)));
        CHECK_FALSE(excessive_line_breaks(tokens(100) + "\n\n\n\n\n" + tokens(100)));
    }

    TEST_CASE("consistency rule over every confidence ordering of three reviews") {
        const auto metas = metas_of({{"p", Decision::accept, {}}});
        // review 0 contradicts the decision; the others agree
        for (int c0 = 1; c0 <= 3; ++c0)
            for (int c1 = 1; c1 <= 3; ++c1)
                for (int c2 = 1; c2 <= 3; ++c2) {
                    std::vector<ReviewRecord> rs = {rev("p", "bad", Decision::reject, c0), rev("p", "ok1", Decision::accept, c1),
                                                    rev("p", "ok2", Decision::accept, c2)};
                    const auto out = clean_reviews(rs, metas);
                    const bool unique_min = c0 < c1 && c0 < c2;
                    CAPTURE(c0);
                    CAPTURE(c1);
                    CAPTURE(c2);
                    CHECK(out.removed.size() == (unique_min ? 1u : 0u));
                    if (unique_min) {
                        CHECK(out.removed[0].record.review_id == "bad");
                        CHECK(out.removed[0].reasons == std::vector<std::string>{"inconsistent-low-confidence"});
                    }
                }
    }

    TEST_CASE("papers without a meta and lone reviews are untouched by the consistency rule") {
        const auto metas = metas_of({{"p", Decision::accept, {}}});
        const auto out = clean_reviews({rev("q", "a", Decision::reject, 1), rev("q", "b", Decision::accept, 5),
                                        rev("p", "c", Decision::reject, 1)},
                                       metas);
        CHECK(out.removed.empty());
    }

    TEST_CASE("cleaning is idempotent and partitions its input") {
        std::mt19937_64 rng(12);
        for (int trial = 0; trial < 40; ++trial) {
            std::vector<MetaReview> mv;
            std::vector<ReviewRecord> rs;
            for (int p = 0; p < 8; ++p) {
                const auto pid = "p" + std::to_string(p);
                if (uniform_below(rng, 5)) mv.push_back({pid, uniform_below(rng, 2) ? Decision::accept : Decision::reject, {}});
                for (std::uint64_t k = 0, n = uniform_below(rng, 5); k < n; ++k)
                    rs.push_back(rev(pid, pid + "-" + std::to_string(k), uniform_below(rng, 2) ? Decision::accept : Decision::reject,
                                     1 + static_cast<int>(uniform_below(rng, 5)), 90 + uniform_below(rng, 30)));
            }
            const auto metas = metas_of(mv);
            const auto once = clean_reviews(rs, metas);
            const auto twice = clean_reviews(once.kept, metas);
            CHECK(twice.removed.empty());
            CHECK(once.kept.size() + once.removed.size() == rs.size());
            for (const auto& r : once.removed) CHECK_FALSE(r.reasons.empty());
            auto k = ids(once.kept);
            for (const auto& r : once.removed) CHECK(k.count(r.record.review_id) == 0);
        }
    }

    TEST_CASE("alternate rule drops tied lowest contradicting reviews in one pass") {
        const auto metas = metas_of({{"p", Decision::accept, {}}});
        CleanOptions o;
        o.rule = ConsistencyRule::lowest_contradicting;
        const auto out = clean_reviews({rev("p", "a", Decision::reject, 2), rev("p", "b", Decision::reject, 2),
                                        rev("p", "c", Decision::reject, 4), rev("p", "d", Decision::accept, 1)},
                                       metas, o);
        std::set<std::string> removed;
        for (const auto& r : out.removed) removed.insert(r.record.review_id);
        CHECK(removed == std::set<std::string>{"a", "b"});
    }

    TEST_CASE("boilerplate stripping") {
        CHECK(strip_boilerplate("Under review as a conference paper at ICLR 2023\nBody") == "\nBody");
        CHECK(strip_boilerplate("Under  review as a\nconference paper at ICLR 2024 x") == " x");
        CHECK(strip_boilerplate("plain text") == "plain text");
        std::mt19937_64 rng(4);
        const std::string banner = "Under review as a conference paper at ICLR 2023";
        std::string body = synth::words(rng, 400);
        for (int i = 0; i < 50; ++i) {
            const auto at = static_cast<std::size_t>(uniform_below(rng, body.size() + 1));
            body.insert(at, banner);
        }
        CHECK(strip_boilerplate(body).find("Under review") == std::string::npos);
        // a banner split by another banner reappears after the first pass
        CHECK(strip_boilerplate("Under review as a conference " + banner + "paper at ICLR 2022") == "");
    }

    TEST_CASE("sft golden pair") {
        std::istringstream in(synth::read_fixture("review/sft_input.jsonl"));
        std::string out;
        jsonl::for_each(in, [&](std::size_t, const json& row) {
            out += format_sft_record(strip_boilerplate(row["paper"].get<std::string>()), row["review"].get<std::string>())
                       .to_json()
                       .dump() +
                   "\n";
        });
        CHECK(out == synth::read_fixture("review/sft_expected.jsonl"));
        const auto r = format_sft_record("P", "R");
        CHECK(r.prompt.ends_with("This is the paper for your review: P"));
        CHECK(r.output == "R");
        CHECK_THROWS_AS(format_sft_record("P", ""), InputError);
    }

    TEST_CASE("metrics fixture") {
        std::istringstream pin(synth::read_fixture("review/predictions.jsonl"));
        std::istringstream min(synth::read_fixture("review/metas.jsonl"));
        const auto m = compute_metrics(read_predictions(pin), index_metas(read_metas(min)));
        CHECK(m.recommendation == Ratio{3, 4});
        CHECK(m.aspects.recall == Ratio{5, 6});
        CHECK(m.aspects.accuracy == Ratio{5, 7});
        CHECK(m.table() ==
              "| Final Recommendation Accuracy | Aspect Recall | Aspect Accuracy |\n|---|---|---|\n"
              "| 0.7500 (3/4) | 0.8333 (5/6) | 0.7143 (5/7) |\n");
        // (1/1 + 1/2 + 0/1 + 3/3) / 4
        CHECK(m.aspects.macro_accuracy == doctest::Approx(0.625));
    }

    TEST_CASE("two-element and superset cases") {
        const auto metas = metas_of({{"p", Decision::accept, {Aspect::clarity, Aspect::soundness}}});
        auto a = aspect_metrics({{"p", Decision::accept, {Aspect::clarity}}}, metas);
        CHECK(a.recall == Ratio{1, 2});
        CHECK(a.accuracy == Ratio{1, 1});
        a = aspect_metrics({{"p", Decision::accept, {Aspect::clarity, Aspect::soundness, Aspect::motivation}}}, metas);
        CHECK(a.recall.value() == 1.0);
        CHECK(a.accuracy.value() < 1.0);
        a = aspect_metrics({{"p", Decision::accept, {Aspect::clarity, Aspect::soundness}}}, metas);
        CHECK(a.recall.value() == 1.0);
        CHECK(a.accuracy.value() == 1.0);
    }

    TEST_CASE("missing metas are listed") {
        const auto metas = metas_of({{"p", Decision::accept, {}}});
        try {
            recommendation_accuracy({{"x", Decision::accept, {}}, {"p", Decision::accept, {}}, {"y", Decision::reject, {}}}, metas);
            FAIL("expected InputError");
        } catch (const InputError& e) {
            CHECK(std::string(e.what()) == "no meta-review for: x, y");
        }
    }

    TEST_CASE("randomized metrics equal the brute-force recount") {
        std::mt19937_64 rng(77);
        for (int trial = 0; trial < 50; ++trial) {
            const auto c = synth::review_case(rng, 40);
            const auto m = compute_metrics(c.predictions, index_metas(c.metas));
            const auto o = oracle::review_counts(c.predictions, c.metas);
            CHECK(m.recommendation == Ratio{o.k, o.m});
            CHECK(m.aspects.recall == Ratio{o.l, o.n});
            CHECK(m.aspects.accuracy == Ratio{o.hit, o.pred});
        }
    }
}
