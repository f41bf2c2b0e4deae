#include <doctest.h>

#include <sstream>

#include "skillforge/errors.hpp"
#include "skillforge/taxonomy.hpp"

using namespace skillforge;
using taxonomy::Relatedness;

namespace {

taxonomy::Taxonomy parse(const std::string& skills, const std::string& relations) {
    std::istringstream s(skills);
    std::istringstream r(relations);
    return taxonomy::parse_taxonomy(s, r);
}

const char* kHeader = "conceptUri,preferredLabel,altLabels,description\n";
const char* kRelHeader = "conceptUri,broaderUri\n";

// five-node fixture: root <- (mid1, mid2), mid1 <- (leaf1, leaf2)
taxonomy::Taxonomy five_node() {
    std::string skills = std::string(kHeader) +
                         "s:root,kök,,Root.\n"
                         "s:mid1,orta bir,,Mid one.\n"
                         "s:mid2,orta iki,,Mid two.\n"
                         "s:leaf1,yaprak bir,,Leaf one.\n"
                         "s:leaf2,yaprak iki,,Leaf two.\n";
    std::string rels = std::string(kRelHeader) +
                       "s:mid1,s:root\n"
                       "s:mid2,s:root\n"
                       "s:leaf1,s:mid1\n"
                       "s:leaf2,s:mid1\n";
    return parse(skills, rels);
}

}  // namespace

TEST_CASE("two skills and one relation load") {
    auto t = parse(std::string(kHeader) + "s:a,sürmek,,Desc a.\ns:b,kullanmak,,Desc b.\n",
                   std::string(kRelHeader) + "s:a,s:b\n");
    CHECK(t.size() == 2);
    CHECK(t.entry("s:a").broader_ids == std::vector<std::string>{"s:b"});
    CHECK(t.entry("s:b").broader_ids.empty());
}

TEST_CASE("dangling relation names the row") {
    try {
        parse(std::string(kHeader) + "s:a,sürmek,,x\n", std::string(kRelHeader) + "s:a,s:gone\n");
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        std::string msg = e.what();
        CHECK(msg.find("row 2") != std::string::npos);
        CHECK(msg.find("s:gone") != std::string::npos);
    }
}

TEST_CASE("missing column is an error") {
    std::istringstream s("conceptUri,preferredLabel,description\nx,y,z\n");
    std::istringstream r(kRelHeader);
    CHECK_THROWS_AS(taxonomy::parse_taxonomy(s, r), ParseError);
}

TEST_CASE("duplicate ids and empty labels are rejected") {
    CHECK_THROWS_AS(parse(std::string(kHeader) + "s:a,x,,\ns:a,y,,\n", kRelHeader), ParseError);
    CHECK_THROWS_AS(parse(std::string(kHeader) + "s:a,,,\n", kRelHeader), ParseError);
}

TEST_CASE("quoted cells: embedded newlines split alt labels, commas survive") {
    auto t = parse(std::string(kHeader) +
                       "s:a,araç sürmek,\"araba kullanmak\nsürüş\",\"Aracı, güvenle sürmek.\"\n",
                   kRelHeader);
    const auto& e = t.entry("s:a");
    CHECK(e.alt_labels == std::vector<std::string>{"araba kullanmak", "sürüş"});
    CHECK(e.description == "Aracı, güvenle sürmek.");
}

TEST_CASE("cycles in broader edges are rejected") {
    CHECK_THROWS_AS(parse(std::string(kHeader) + "s:a,x,,\ns:b,y,,\n",
                          std::string(kRelHeader) + "s:a,s:b\ns:b,s:a\n"),
                    ParseError);
}

TEST_CASE("relatedness cases on the five-node fixture") {
    auto t = five_node();
    CHECK(t.relatedness("s:leaf1", "s:leaf1") == Relatedness::identical);
    // an ancestor two levels up still counts
    CHECK(t.relatedness("s:leaf1", "s:root") == Relatedness::ancestor);
    CHECK(t.relatedness("s:root", "s:leaf1") == Relatedness::descendant);
    CHECK(t.relatedness("s:leaf1", "s:mid1") == Relatedness::ancestor);
    CHECK(t.relatedness("s:leaf1", "s:leaf2") == Relatedness::sibling);
    CHECK(t.relatedness("s:mid1", "s:mid2") == Relatedness::sibling);
    // shares only a grandparent: not a sibling
    CHECK(t.relatedness("s:leaf1", "s:mid2") == Relatedness::unrelated);
    CHECK_THROWS_AS(t.relatedness("s:leaf1", "s:nope"), ParseError);
}

TEST_CASE("relatedness is symmetric up to orientation") {
    auto t = five_node();
    std::vector<std::string> ids{"s:root", "s:mid1", "s:mid2", "s:leaf1", "s:leaf2"};
    for (const auto& a : ids) {
        for (const auto& b : ids) {
            auto ab = t.relatedness(a, b);
            auto ba = t.relatedness(b, a);
            switch (ab) {
                case Relatedness::identical: CHECK(ba == Relatedness::identical); break;
                case Relatedness::ancestor: CHECK(ba == Relatedness::descendant); break;
                case Relatedness::descendant: CHECK(ba == Relatedness::ancestor); break;
                case Relatedness::sibling: CHECK(ba == Relatedness::sibling); break;
                case Relatedness::unrelated: CHECK(ba == Relatedness::unrelated); break;
            }
        }
    }
}

TEST_CASE("render_passage modes") {
    taxonomy::TaxonomyEntry e;
    e.id = "s:a";
    e.preferred_label = "araç sürmek";
    e.description = "Motorlu araçları kullanmak.";
    CHECK(taxonomy::render_passage(e, taxonomy::PassageMode::label) == "araç sürmek");
    CHECK(taxonomy::render_passage(e, taxonomy::PassageMode::label_description) ==
          "araç sürmek — Motorlu araçları kullanmak.");
    e.description.clear();
    CHECK(taxonomy::render_passage(e, taxonomy::PassageMode::label_description) == "araç sürmek");
}

TEST_CASE("csv save/load round trip") {
    auto t = five_node();
    std::string skills_path = "/tmp/sf_tax_skills.csv";
    std::string rels_path = "/tmp/sf_tax_rels.csv";
    taxonomy::save_taxonomy_csv(t, skills_path, rels_path);
    auto back = taxonomy::load_taxonomy(skills_path, rels_path);
    REQUIRE(back.size() == t.size());
    for (const auto& e : t.entries()) {
        const auto& other = back.entry(e.id);
        CHECK(other.preferred_label == e.preferred_label);
        CHECK(other.alt_labels == e.alt_labels);
        CHECK(other.description == e.description);
        CHECK(other.broader_ids == e.broader_ids);
    }
}

TEST_CASE("jsonl dump has one record per entry") {
    auto text = taxonomy::taxonomy_to_jsonl(five_node());
    std::size_t lines = 0;
    for (char c : text)
        if (c == '\n') ++lines;
    CHECK(lines == 5);
    CHECK(text.find("\"preferred_label\":\"kök\"") != std::string::npos);
}
