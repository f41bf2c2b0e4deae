#include <doctest.h>

#include <random>
#include <set>
#include <sstream>

#include "oracles.hpp"
#include "skillforge/corpus.hpp"
#include "skillforge/errors.hpp"

using namespace skillforge;
using corpus::Iob;

namespace {

std::vector<corpus::JobPosting> parse(const std::string& text) {
    std::istringstream in(text);
    return corpus::parse_corpus(in);
}

}  // namespace

TEST_CASE("single sentence with one single-token span") {
    auto postings = parse(
        "# job_id = j1\n"
        "# area = Bilgi Teknolojileri\n"
        "Python\tB\n"
        "bilen\tO\n");
    REQUIRE(postings.size() == 1);
    REQUIRE(postings[0].sentences.size() == 1);
    auto spans = corpus::spans_of_posting(postings[0]);
    REQUIRE(spans.size() == 1);
    CHECK(spans[0].surface == "Python");
    CHECK(spans[0].token_start == 0);
    CHECK(spans[0].token_end == 1);
    CHECK(postings[0].sentences[0].raw_text == "Python bilen");
}

TEST_CASE("I without preceding B is rejected with the offending line") {
    try {
        parse(
            "# job_id = j1\n"
            "# area = A\n"
            "Python\tI\n"
            "bilen\tO\n");
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find("I without preceding B") != std::string::npos);
        CHECK(e.line() == 3);
    }
}

TEST_CASE("duplicate job ids are rejected") {
    CHECK_THROWS_AS(parse("# job_id = j1\n# area = A\nx\tO\n\n# job_id = j1\n# area = A\ny\tO\n"),
                    ParseError);
}

TEST_CASE("span attributes carry multi flag and gold link") {
    auto postings = parse(
        "# job_id = j1\n"
        "# area = Satış\n"
        "etkili\tB\tmulti|link=skill:004\n"
        "ve\tI\n"
        "iletişim\tI\n");
    auto spans = corpus::spans_of_posting(postings[0]);
    REQUIRE(spans.size() == 1);
    CHECK(spans[0].is_multi);
    REQUIRE(spans[0].gold_link.has_value());
    CHECK(*spans[0].gold_link == "skill:004");
}

TEST_CASE("attributes on non-B tokens are rejected") {
    CHECK_THROWS_AS(parse("# job_id = j1\n# area = A\nx\tO\tmulti\n"), ParseError);
}

TEST_CASE("format/parse round trip is lossless") {
    auto postings = parse(
        "# job_id = j1\n"
        "# area = Satış\n"
        "İngilizce\tB\tlink=skill:007\n"
        "bilen\tO\n"
        "\n"
        "takım\tB\tmulti\n"
        "çalışması\tI\n"
        "\n"
        "# job_id = j2\n"
        "# area = Finans\n"
        "rapor\tB\n"
        "yazmak\tI\n");
    auto text = corpus::format_corpus(postings);
    auto reparsed = parse(text);
    CHECK(postings == reparsed);
    CHECK(corpus::format_corpus(reparsed) == text);
}

TEST_CASE("codepoint offsets handle multi-byte characters") {
    auto sentence = corpus::make_sentence({"İngilizceyi", "iyi", "konuşma"},
                                          {Iob::B, Iob::I, Iob::I});
    CHECK(sentence.tokens[0].char_start == 0);
    CHECK(sentence.tokens[0].char_end == 11);   // codepoints, not bytes
    CHECK(sentence.tokens[1].char_start == 12);
    CHECK(sentence.tokens[2].char_end == 23);
}

TEST_CASE("spans_from_iob basics") {
    auto s = corpus::make_sentence({"a", "b", "c", "d"}, {Iob::B, Iob::I, Iob::O, Iob::B});
    auto spans = corpus::spans_from_iob(s, "j", 0);
    REQUIRE(spans.size() == 2);
    CHECK(spans[0].token_start == 0);
    CHECK(spans[0].token_end == 2);
    CHECK(spans[1].token_start == 3);
    CHECK(spans[1].token_end == 4);
    CHECK(spans[0].surface == "a b");

    auto all_o = corpus::make_sentence({"a", "b"}, {Iob::O, Iob::O});
    CHECK(corpus::spans_from_iob(all_o).empty());

    auto adjacent = corpus::make_sentence({"a", "b"}, {Iob::B, Iob::B});
    auto two = corpus::spans_from_iob(adjacent);
    REQUIRE(two.size() == 2);
    CHECK(two[0].token_end == 1);
    CHECK(two[1].token_start == 1);
}

TEST_CASE("iob round trip over random disjoint spans") {
    std::mt19937 rng(41);
    for (int it = 0; it < 200; ++it) {
        std::size_t n_tokens = 1 + rng() % 18;
        auto spans = oracles::random_disjoint_spans(rng, n_tokens);
        auto labels = corpus::iob_from_spans(spans, n_tokens);
        CHECK(corpus::valid_iob(labels));
        std::vector<std::string> tokens(n_tokens, "tok");
        auto sentence = corpus::make_sentence(tokens, labels);
        auto back = corpus::spans_from_iob(sentence);
        REQUIRE(back.size() == spans.size());
        for (std::size_t i = 0; i < spans.size(); ++i) {
            CHECK(back[i].token_start == spans[i].token_start);
            CHECK(back[i].token_end == spans[i].token_end);
        }
        CHECK(corpus::iob_from_spans(back, n_tokens) == labels);
    }
}

namespace {

std::vector<corpus::JobPosting> synthetic_postings(const std::map<std::string, int>& area_counts) {
    std::vector<corpus::JobPosting> postings;
    int next = 0;
    for (const auto& [area, count] : area_counts) {
        for (int i = 0; i < count; ++i) {
            corpus::JobPosting p;
            p.job_id = "j" + std::to_string(next++);
            p.area = area;
            p.sentences.push_back(corpus::make_sentence({"x"}, {Iob::O}));
            postings.push_back(std::move(p));
        }
    }
    return postings;
}

}  // namespace

TEST_CASE("split: singleton categories go entirely to train") {
    auto postings = synthetic_postings({{"Nadir", 1}, {"Büyük", 10}});
    auto split = corpus::split_corpus(postings, 7);
    std::string singleton;
    for (const auto& p : postings)
        if (p.area == "Nadir") singleton = p.job_id;
    for (const auto& id : split.test) CHECK(id != singleton);
    for (const auto& id : split.validation) CHECK(id != singleton);
}

TEST_CASE("split: a 10-posting category yields 2 test, 2 validation, 6 train") {
    auto postings = synthetic_postings({{"Alan", 10}});
    auto split = corpus::split_corpus(postings, 3);
    CHECK(split.test.size() == 2);
    CHECK(split.validation.size() == 2);
    CHECK(split.train.size() == 6);
}

TEST_CASE("split: small-category band") {
    CHECK(corpus::split_corpus(synthetic_postings({{"A", 2}}), 1).test.empty());
    CHECK(corpus::split_corpus(synthetic_postings({{"A", 2}}), 1).train.size() == 2);
    auto three = corpus::split_corpus(synthetic_postings({{"A", 3}}), 1);
    CHECK(three.test.size() == 1);
    CHECK(three.validation.size() == 1);
    CHECK(three.train.size() == 1);
    auto six = corpus::split_corpus(synthetic_postings({{"A", 6}}), 1);
    CHECK(six.test.size() == 1);
    CHECK(six.validation.size() == 1);
    CHECK(six.train.size() == 4);
}

TEST_CASE("split: deterministic and a proper partition") {
    auto postings = synthetic_postings({{"A", 9}, {"B", 4}, {"C", 1}, {"D", 23}});
    auto first = corpus::split_corpus(postings, 99);
    auto second = corpus::split_corpus(postings, 99);
    CHECK(first.train == second.train);
    CHECK(first.validation == second.validation);
    CHECK(first.test == second.test);

    std::set<std::string> seen;
    std::size_t total = 0;
    for (const auto* part : {&first.train, &first.validation, &first.test}) {
        for (const auto& id : *part) {
            CHECK(seen.insert(id).second);
            ++total;
        }
    }
    CHECK(total == postings.size());

    auto other = corpus::split_corpus(postings, 100);
    bool differs = other.train != first.train || other.test != first.test;
    CHECK(differs);  // overwhelmingly likely across 37 postings
}

TEST_CASE("split: >6 categories respect the 20% bound with rounding slack") {
    std::mt19937 rng(5);
    for (int it = 0; it < 20; ++it) {
        int n = 7 + static_cast<int>(rng() % 40);
        auto postings = synthetic_postings({{"A", n}});
        auto split = corpus::split_corpus(postings, rng());
        double ratio = static_cast<double>(split.test.size()) / n;
        CHECK(ratio >= 0.2 - 1.0 / n - 1e-12);
        CHECK(ratio <= 0.2 + 1.0 / n + 1e-12);
    }
}

TEST_CASE("split: empty corpus is an error") {
    CHECK_THROWS_AS(corpus::split_corpus({}, 1), ParseError);
}

TEST_CASE("split spec JSON round trip") {
    corpus::SplitSpec split;
    split.train = {"a", "b"};
    split.validation = {"c"};
    split.test = {"d"};
    split.seed = 42;
    auto parsed = corpus::split_from_json(corpus::split_to_json(split));
    CHECK(parsed.train == split.train);
    CHECK(parsed.validation == split.validation);
    CHECK(parsed.test == split.test);
    CHECK(parsed.seed == split.seed);
}
