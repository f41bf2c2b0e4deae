#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace skillforge::corpus {

enum class Iob { B, I, O };

std::string iob_to_string(Iob label);
Iob iob_from_string(const std::string& text);

struct Token {
    std::string text;        // no internal whitespace
    std::size_t char_start;  // codepoint offset into the sentence
    std::size_t char_end;    // half-open
};

struct TaggedSentence {
    std::vector<Token> tokens;
    std::vector<Iob> labels;  // one per token, valid IOB
    std::string raw_text;

    bool operator==(const TaggedSentence& other) const;
};

struct JobPosting {
    std::string job_id;
    std::string area;  // occupation area
    std::vector<TaggedSentence> sentences;
    // Span attributes carried by the corpus file, keyed by (sentence, b-token).
    struct SpanAttr {
        std::size_t sentence_index;
        std::size_t token_start;
        bool is_multi = false;
        std::optional<std::string> gold_link;
        bool operator==(const SpanAttr&) const = default;
    };
    std::vector<SpanAttr> span_attrs;

    bool operator==(const JobPosting& other) const;
};

struct SkillSpan {
    std::string job_id;
    std::size_t sentence_index = 0;
    std::size_t token_start = 0;  // half-open token range
    std::size_t token_end = 0;
    std::string surface;  // joined covered tokens
    bool is_multi = false;
    std::optional<std::string> gold_link;

    bool operator==(const SkillSpan&) const = default;
};

struct SplitSpec {
    std::vector<std::string> train;
    std::vector<std::string> validation;
    std::vector<std::string> test;
    std::uint64_t seed = 0;
};

// Builds a sentence from bare tokens: raw_text is the tokens joined with
// single spaces, offsets in codepoints.
TaggedSentence make_sentence(const std::vector<std::string>& tokens,
                             const std::vector<Iob>& labels);

// Throws ParseError (with the offending line) on malformed IOB, bad labels,
// duplicate job ids or missing headers.
std::vector<JobPosting> load_corpus(const std::string& path);
std::vector<JobPosting> parse_corpus(std::istream& in);

void save_corpus(const std::vector<JobPosting>& postings, const std::string& path);
std::string format_corpus(const std::vector<JobPosting>& postings);

// One span per maximal B I* run, in textual order. job_id/sentence_index are
// stamped onto the results.
std::vector<SkillSpan> spans_from_iob(const TaggedSentence& sentence,
                                      const std::string& job_id = {},
                                      std::size_t sentence_index = 0);

// All spans of a posting, with the corpus file's multi/link attributes applied.
std::vector<SkillSpan> spans_of_posting(const JobPosting& posting);

// Inverse of spans_from_iob; adjacent spans emit B at each span start.
std::vector<Iob> iob_from_spans(const std::vector<SkillSpan>& spans, std::size_t token_count);

bool valid_iob(const std::vector<Iob>& labels);

// Category-aware split: singleton categories go to train; categories of 2
// postings go to train; 3..6 postings give 1 test + 1 validation; larger
// categories give floor(20%) test, floor(20%) validation, remainder train.
// Deterministic for a given seed.
SplitSpec split_corpus(const std::vector<JobPosting>& postings, std::uint64_t seed);

std::string split_to_json(const SplitSpec& split);
SplitSpec split_from_json(const std::string& text);

}  // namespace skillforge::corpus
