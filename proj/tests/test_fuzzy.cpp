#include <doctest.h>

#include <algorithm>
#include <random>

#include "oracles.hpp"
#include "skillforge/fuzzy.hpp"
#include "skillforge/textnorm.hpp"

using namespace skillforge;

namespace {

// oracle-side normalization, kept separate from the production path
std::string ref_token_sort(const std::string& text) {
    auto tokens = textnorm::split_whitespace(textnorm::to_lower_turkish(text));
    std::sort(tokens.begin(), tokens.end());
    std::string out;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (i) out += ' ';
        out += tokens[i];
    }
    return out;
}

double ref_ratio(const std::string& a, const std::string& b) {
    auto na = textnorm::decode_utf8(ref_token_sort(a));
    auto nb = textnorm::decode_utf8(ref_token_sort(b));
    if (na.empty() && nb.empty()) return 100.0;
    double dist = static_cast<double>(oracles::ref_indel(na, nb));
    return 100.0 * (1.0 - dist / static_cast<double>(na.size() + nb.size()));
}

}  // namespace

TEST_CASE("identical strings score 100") {
    CHECK(fuzzy::token_sort_ratio("araç sürmek", "araç sürmek") == 100.0);
}

TEST_CASE("token order does not matter") {
    CHECK(fuzzy::token_sort_ratio("b a", "a b") == 100.0);
    CHECK(fuzzy::token_sort_ratio("iyi çok İngilizce", "İngilizce çok iyi") == 100.0);
}

TEST_CASE("Turkish casing folds") {
    CHECK(fuzzy::token_sort_ratio("İŞ", "iş") == 100.0);
    CHECK(fuzzy::token_sort_ratio("ILIK", "ılık") == 100.0);
    CHECK(fuzzy::token_sort_ratio("PYTHON", "python") == 100.0);
}

TEST_CASE("empty inputs") {
    CHECK(fuzzy::token_sort_ratio("", "") == 100.0);
    CHECK(fuzzy::token_sort_ratio("", "abc") == 0.0);
    CHECK(fuzzy::token_sort_ratio("   ", "abc") == 0.0);
}

TEST_CASE("indel distance on known pairs") {
    CHECK(fuzzy::indel_distance("abc", "abc") == 0);
    CHECK(fuzzy::indel_distance("abc", "abd") == 2);  // no substitutions
    CHECK(fuzzy::indel_distance("", "abc") == 3);
    CHECK(fuzzy::indel_distance("kitap", "kitaplar") == 3);
}

TEST_CASE("ratio matches the DP oracle on random pairs") {
    std::mt19937 rng(1234);
    for (int i = 0; i < 1000; ++i) {
        std::string a = oracles::random_phrase(rng);
        std::string b = oracles::random_phrase(rng);
        CHECK(fuzzy::token_sort_ratio(a, b) == ref_ratio(a, b));
    }
}

TEST_CASE("permutation invariance on shuffled token lists") {
    std::mt19937 rng(99);
    for (int i = 0; i < 1000; ++i) {
        std::string a = oracles::random_phrase(rng, 5);
        std::string b = oracles::random_phrase(rng, 5);
        auto tokens = textnorm::split_whitespace(a);
        std::shuffle(tokens.begin(), tokens.end(), rng);
        std::string shuffled;
        for (std::size_t t = 0; t < tokens.size(); ++t) {
            if (t) shuffled += ' ';
            shuffled += tokens[t];
        }
        CHECK(fuzzy::token_sort_ratio(a, b) == fuzzy::token_sort_ratio(shuffled, b));
    }
}

TEST_CASE("range and the 100-iff-equal rule") {
    std::mt19937 rng(7);
    for (int i = 0; i < 500; ++i) {
        std::string a = oracles::random_phrase(rng);
        std::string b = oracles::random_phrase(rng);
        double score = fuzzy::token_sort_ratio(a, b);
        CHECK(score >= 0.0);
        CHECK(score <= 100.0);
        bool equal_normalized =
            fuzzy::token_sort_normalize(a) == fuzzy::token_sort_normalize(b);
        CHECK((score == 100.0) == equal_normalized);
    }
}

TEST_CASE("whitespace runs collapse before scoring") {
    CHECK(fuzzy::token_sort_ratio("a   b", "a b") == 100.0);
    CHECK(fuzzy::token_sort_ratio("  a b  ", "b   a") == 100.0);
}
