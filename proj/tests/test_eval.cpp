#include <doctest.h>

#include <random>
#include <sstream>

#include "oracles.hpp"
#include "skillforge/errors.hpp"
#include "skillforge/eval.hpp"
#include "skillforge/taxonomy.hpp"

using namespace skillforge;
using corpus::SkillSpan;

namespace {

SkillSpan span(std::size_t s, std::size_t e) {
    SkillSpan out;
    out.token_start = s;
    out.token_end = e;
    return out;
}

eval::AnnotationTable random_table(std::mt19937& rng) {
    std::uniform_int_distribution<int> n_units(2, 12), n_annotators(2, 4), n_labels(1, 5);
    eval::AnnotationTable table;
    int units = n_units(rng);
    int annotators = n_annotators(rng);
    int labels = n_labels(rng);
    for (int u = 0; u < units; ++u) {
        for (int a = 0; a < annotators; ++a) {
            if (rng() % 5 == 0) continue;  // missing annotation
            table["u" + std::to_string(u)]["a" + std::to_string(a)] =
                "L" + std::to_string(rng() % labels);
        }
    }
    return table;
}

}  // namespace

TEST_CASE("conll_f1 basics") {
    std::vector<std::vector<SkillSpan>> gold{{span(0, 2)}};
    CHECK(eval::conll_f1(gold, gold).f1 == 1.0);

    std::vector<std::vector<SkillSpan>> empty{{}};
    auto r = eval::conll_f1(gold, empty);
    CHECK(r.recall == 0.0);
    CHECK(r.f1 == 0.0);

    std::vector<std::vector<SkillSpan>> off{{span(0, 3)}};
    CHECK(eval::conll_f1(gold, off).f1 == 0.0);  // exact-match only

    CHECK_THROWS_AS(eval::conll_f1(gold, {}), ParseError);
}

TEST_CASE("muc_partial counts and scores") {
    std::vector<std::vector<SkillSpan>> gold{{span(0, 3)}};
    std::vector<std::vector<SkillSpan>> pred{{span(0, 2)}};
    auto r = eval::muc_partial(gold, pred);
    CHECK(r.counts.PAR == 1);
    CHECK(r.counts.COR == 0);
    CHECK(r.scores.precision == doctest::Approx(0.5));
    CHECK(r.scores.recall == doctest::Approx(0.5));
    CHECK(r.scores.f1 == doctest::Approx(0.5));

    auto exact = eval::muc_partial(gold, gold);
    CHECK(exact.counts.COR == 1);
    CHECK(exact.scores.f1 == 1.0);

    std::vector<std::vector<SkillSpan>> disjoint{{span(5, 7)}};
    auto miss = eval::muc_partial(gold, disjoint);
    CHECK(miss.counts.MIS == 1);
    CHECK(miss.counts.SPU == 1);
    CHECK(miss.scores.f1 == 0.0);
}

TEST_CASE("span metrics match brute-force references on random instances") {
    std::mt19937 rng(2024);
    for (int it = 0; it < 300; ++it) {
        auto gold = oracles::random_span_sets(rng);
        auto pred = oracles::random_span_sets(rng);
        pred.resize(gold.size());
        auto c = eval::conll_f1(gold, pred);
        auto rc = oracles::ref_conll(gold, pred);
        CHECK(c.precision == doctest::Approx(rc.precision).epsilon(1e-12));
        CHECK(c.recall == doctest::Approx(rc.recall).epsilon(1e-12));
        CHECK(c.f1 == doctest::Approx(rc.f1).epsilon(1e-12));

        auto m = eval::muc_partial(gold, pred);
        auto [rm, counts] = oracles::ref_muc(gold, pred);
        CHECK(m.counts.COR == counts.COR);
        CHECK(m.counts.PAR == counts.PAR);
        CHECK(m.counts.MIS == counts.MIS);
        CHECK(m.counts.SPU == counts.SPU);
        CHECK(m.scores.f1 == doctest::Approx(rm.f1).epsilon(1e-12));

        // partial credit can only help
        CHECK(m.scores.f1 >= c.f1 - 1e-12);
    }
}

TEST_CASE("hitrate basics") {
    std::vector<eval::RankedItem> always_first{{"g", {"g", "x"}}, {"g2", {"g2"}}};
    CHECK(eval::hitrate_at_k(always_first, 1) == 1.0);

    std::vector<eval::RankedItem> third{{"g", {"a", "b", "g"}}, {"h", {"x", "y", "h"}}};
    CHECK(eval::hitrate_at_k(third, 1) == 0.0);
    CHECK(eval::hitrate_at_k(third, 3) == 1.0);

    std::vector<eval::RankedItem> mixed{
        {"a", {"a"}}, {"b", {"b"}}, {"c", {"c"}}, {"d", {"x", "y"}}};
    CHECK(eval::hitrate_at_k(mixed, 2) == doctest::Approx(0.75));

    CHECK_THROWS_AS(eval::hitrate_at_k({}, 1), ParseError);
    CHECK_THROWS_AS(eval::hitrate_at_k(always_first, 0), ParseError);
}

TEST_CASE("hitrate is non-decreasing in k and matches the reference") {
    std::mt19937 rng(77);
    for (int it = 0; it < 100; ++it) {
        std::vector<eval::RankedItem> items;
        int n = 1 + static_cast<int>(rng() % 12);
        for (int i = 0; i < n; ++i) {
            eval::RankedItem item;
            item.gold_id = "g" + std::to_string(rng() % 12);
            int m = static_cast<int>(rng() % 12);
            for (int r = 0; r < m; ++r) item.ranked_ids.push_back("g" + std::to_string(rng() % 12));
            items.push_back(std::move(item));
        }
        double prev = 0.0;
        for (std::size_t k : {1, 3, 5, 10}) {
            double h = eval::hitrate_at_k(items, k);
            CHECK(h == doctest::Approx(oracles::ref_hitrate(items, k)).epsilon(1e-12));
            CHECK(h >= prev - 1e-12);
            CHECK(h >= 0.0);
            CHECK(h <= 1.0);
            prev = h;
        }
    }
}

TEST_CASE("end_to_end_score follows the per-job containment rule") {
    std::map<std::string, std::vector<std::string>> gold{{"j1", {"a", "b"}}, {"j2", {"c"}}};
    std::map<std::string, std::vector<std::string>> pred{{"j1", {"a"}}, {"j2", {"c", "d"}}};
    CHECK(eval::end_to_end_score(gold, pred) == doctest::Approx(2.0 / 3.0));

    std::map<std::string, std::vector<std::string>> superset{{"j1", {"b", "a", "z"}},
                                                             {"j2", {"c"}}};
    CHECK(eval::end_to_end_score(gold, superset) == 1.0);
    CHECK(eval::end_to_end_score(gold, {}) == 0.0);

    // gold duplicates each count; prediction duplicates collapse
    std::map<std::string, std::vector<std::string>> dup_gold{{"j", {"a", "a", "b"}}};
    std::map<std::string, std::vector<std::string>> dup_pred{{"j", {"a", "a"}}};
    CHECK(eval::end_to_end_score(dup_gold, dup_pred) == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("end_to_end_score is monotone as predictions grow") {
    std::mt19937 rng(31);
    for (int it = 0; it < 100; ++it) {
        std::map<std::string, std::vector<std::string>> gold, pred;
        for (int j = 0; j < 3; ++j) {
            std::string job = "j" + std::to_string(j);
            int n = 1 + static_cast<int>(rng() % 4);
            for (int i = 0; i < n; ++i) gold[job].push_back("s" + std::to_string(rng() % 8));
            int m = static_cast<int>(rng() % 4);
            for (int i = 0; i < m; ++i) pred[job].push_back("s" + std::to_string(rng() % 8));
        }
        double before = eval::end_to_end_score(gold, pred);
        pred["j" + std::to_string(rng() % 3)].push_back("s" + std::to_string(rng() % 8));
        CHECK(eval::end_to_end_score(gold, pred) >= before - 1e-12);
        CHECK(eval::end_to_end_score(gold, pred) ==
              doctest::Approx(oracles::ref_e2e(gold, pred)).epsilon(1e-12));
    }
}

TEST_CASE("alpha: perfect agreement on two labels") {
    eval::AnnotationTable table;
    table["u1"]["a1"] = "x";
    table["u1"]["a2"] = "x";
    table["u2"]["a1"] = "y";
    table["u2"]["a2"] = "y";
    CHECK(eval::krippendorff_alpha(table) == doctest::Approx(1.0));
}

TEST_CASE("alpha: systematic disagreement is worse than chance") {
    eval::AnnotationTable table;
    for (int u = 0; u < 6; ++u) {
        table["u" + std::to_string(u)]["a1"] = "x";
        table["u" + std::to_string(u)]["a2"] = "y";
    }
    CHECK(eval::krippendorff_alpha(table) < 0.0);
}

TEST_CASE("alpha: textbook four-unit table matches the direct-formula oracle") {
    // classic small reliability layout with a missing cell
    eval::AnnotationTable table;
    table["u1"]["a1"] = "a";
    table["u1"]["a2"] = "a";
    table["u2"]["a1"] = "b";
    table["u2"]["a2"] = "b";
    table["u3"]["a1"] = "b";
    table["u3"]["a2"] = "b";
    table["u4"]["a1"] = "b";
    table["u4"]["a2"] = "a";
    double got = eval::krippendorff_alpha(table);
    CHECK(got == doctest::Approx(oracles::ref_alpha(table)).epsilon(1e-9));
    // hand value: n=8, coincidences o_ab=o_ba=1, D_o-based alpha
    CHECK(got == doctest::Approx(1.0 - 7.0 * 2.0 / (2.0 * 3.0 * 5.0)).epsilon(1e-9));
}

TEST_CASE("alpha: single-annotation units are excluded, degenerate case is 1.0") {
    eval::AnnotationTable table;
    table["u1"]["a1"] = "x";
    table["u1"]["a2"] = "x";
    table["u2"]["a1"] = "x";
    table["u2"]["a2"] = "x";
    table["solo"]["a1"] = "y";  // ignored, only one annotation
    bool degenerate = false;
    CHECK(eval::krippendorff_alpha(table, &degenerate) == 1.0);
    CHECK(degenerate);
}

TEST_CASE("alpha matches the oracle on random tables and survives relabeling") {
    std::mt19937 rng(55);
    int done = 0;
    while (done < 200) {
        auto table = random_table(rng);
        std::size_t scored = 0;
        for (const auto& [u, ann] : table)
            if (ann.size() >= 2) ++scored;
        if (scored < 2) continue;
        ++done;
        double got = eval::krippendorff_alpha(table);
        CHECK(got == doctest::Approx(oracles::ref_alpha(table)).epsilon(1e-9));

        eval::AnnotationTable renamed;
        for (const auto& [u, ann] : table)
            for (const auto& [a, label] : ann) renamed[u][a] = "renamed/" + label;
        CHECK(eval::krippendorff_alpha(renamed) == doctest::Approx(got).epsilon(1e-9));
    }
}

TEST_CASE("error categorization follows the case split") {
    std::istringstream skills(
        "conceptUri,preferredLabel,altLabels,description\n"
        "s:root,kök,,r\n"
        "s:mid1,orta bir,,m\n"
        "s:mid2,orta iki,,m\n"
        "s:leaf1,yaprak bir,,l\n"
        "s:leaf2,yaprak iki,,l\n"
        "s:other,başka,,o\n");
    std::istringstream rels(
        "conceptUri,broaderUri\n"
        "s:mid1,s:root\ns:mid2,s:root\ns:leaf1,s:mid1\ns:leaf2,s:mid1\n");
    auto taxonomy = taxonomy::parse_taxonomy(skills, rels);

    using eval::ErrorCategory;
    CHECK(eval::categorize_error(std::nullopt, "s:leaf1", {"s:leaf1"}, taxonomy) ==
          ErrorCategory::not_labeled);
    // siblings under one parent
    CHECK(eval::categorize_error(std::string("s:leaf2"), "s:leaf1", {}, taxonomy) ==
          ErrorCategory::ontologically_related);
    CHECK(eval::categorize_error(std::string("s:mid1"), "s:leaf1", {}, taxonomy) ==
          ErrorCategory::ontologically_related);  // gold is an ancestor of pred
    // unrelated prediction, gold was retrieved
    CHECK(eval::categorize_error(std::string("s:leaf1"), "s:other",
                                 {"s:leaf1", "s:other"}, taxonomy) ==
          ErrorCategory::not_related);
    // unrelated prediction, gold never retrieved
    CHECK(eval::categorize_error(std::string("s:leaf1"), "s:other", {"s:other"}, taxonomy) ==
          ErrorCategory::not_related_or_retrieved);
}
