#include "skillforge/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "skillforge/errors.hpp"
#include "skillforge/textnorm.hpp"

namespace skillforge::corpus {

std::string iob_to_string(Iob label) {
    switch (label) {
        case Iob::B: return "B";
        case Iob::I: return "I";
        case Iob::O: return "O";
    }
    return "O";
}

Iob iob_from_string(const std::string& text) {
    if (text == "B") return Iob::B;
    if (text == "I") return Iob::I;
    if (text == "O") return Iob::O;
    throw ParseError("unknown IOB label '" + text + "'");
}

bool TaggedSentence::operator==(const TaggedSentence& other) const {
    if (labels != other.labels || raw_text != other.raw_text) return false;
    if (tokens.size() != other.tokens.size()) return false;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (tokens[i].text != other.tokens[i].text ||
            tokens[i].char_start != other.tokens[i].char_start ||
            tokens[i].char_end != other.tokens[i].char_end)
            return false;
    }
    return true;
}

bool JobPosting::operator==(const JobPosting& other) const {
    return job_id == other.job_id && area == other.area && sentences == other.sentences &&
           span_attrs == other.span_attrs;
}

TaggedSentence make_sentence(const std::vector<std::string>& tokens,
                             const std::vector<Iob>& labels) {
    if (tokens.size() != labels.size())
        throw ParseError("token/label count mismatch: " + std::to_string(tokens.size()) + " vs " +
                         std::to_string(labels.size()));
    TaggedSentence s;
    s.labels = labels;
    std::size_t offset = 0;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (i > 0) {
            s.raw_text += ' ';
            ++offset;
        }
        std::size_t len = textnorm::codepoint_count(tokens[i]);
        s.tokens.push_back({tokens[i], offset, offset + len});
        s.raw_text += tokens[i];
        offset += len;
    }
    return s;
}

bool valid_iob(const std::vector<Iob>& labels) {
    Iob prev = Iob::O;
    for (Iob l : labels) {
        if (l == Iob::I && prev == Iob::O) return false;
        prev = l;
    }
    return true;
}

namespace {

struct PendingSentence {
    std::vector<std::string> tokens;
    std::vector<Iob> labels;
    // attribute string per token, empty when absent
    std::vector<std::string> attrs;
    int first_line = 0;
};

void apply_attr(JobPosting& posting, std::size_t sentence_index, std::size_t token_index,
                const std::string& attr, int line) {
    JobPosting::SpanAttr sa;
    sa.sentence_index = sentence_index;
    sa.token_start = token_index;
    std::stringstream ss(attr);
    std::string part;
    while (std::getline(ss, part, '|')) {
        if (part == "multi") {
            sa.is_multi = true;
        } else if (part.rfind("link=", 0) == 0) {
            sa.gold_link = part.substr(5);
        } else if (!part.empty()) {
            throw ParseError("unknown span attribute '" + part + "'", line);
        }
    }
    posting.span_attrs.push_back(sa);
}

void flush_sentence(JobPosting& posting, PendingSentence& pending) {
    if (pending.tokens.empty()) return;
    Iob prev = Iob::O;
    for (std::size_t i = 0; i < pending.labels.size(); ++i) {
        if (pending.labels[i] == Iob::I && prev == Iob::O)
            throw ParseError("I without preceding B", pending.first_line + static_cast<int>(i));
        prev = pending.labels[i];
    }
    std::size_t sentence_index = posting.sentences.size();
    posting.sentences.push_back(make_sentence(pending.tokens, pending.labels));
    for (std::size_t i = 0; i < pending.attrs.size(); ++i) {
        if (pending.attrs[i].empty()) continue;
        if (pending.labels[i] != Iob::B)
            throw ParseError("span attributes are only allowed on B tokens",
                             pending.first_line + static_cast<int>(i));
        apply_attr(posting, sentence_index, i, pending.attrs[i],
                   pending.first_line + static_cast<int>(i));
    }
    pending = PendingSentence{};
}

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

}  // namespace

std::vector<JobPosting> parse_corpus(std::istream& in) {
    std::vector<JobPosting> postings;
    std::set<std::string> seen_ids;
    JobPosting current;
    bool have_posting = false;
    PendingSentence pending;
    std::string line;
    int line_no = 0;

    auto finish_posting = [&]() {
        flush_sentence(current, pending);
        if (have_posting) {
            if (current.area.empty())
                throw ParseError("posting '" + current.job_id + "' has no area header", line_no);
            postings.push_back(std::move(current));
            current = JobPosting{};
        }
        have_posting = false;
    };

    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::string stripped = trim(line);
        if (stripped.empty()) {
            flush_sentence(current, pending);
            continue;
        }
        if (stripped[0] == '#') {
            std::string body = trim(stripped.substr(1));
            auto eq = body.find('=');
            if (eq == std::string::npos) continue;  // plain comment
            std::string key = trim(body.substr(0, eq));
            std::string value = trim(body.substr(eq + 1));
            if (key == "job_id") {
                finish_posting();
                if (value.empty()) throw ParseError("empty job_id", line_no);
                if (!seen_ids.insert(value).second)
                    throw ParseError("duplicate job_id '" + value + "'", line_no);
                current.job_id = value;
                have_posting = true;
            } else if (key == "area") {
                if (!have_posting) throw ParseError("area header before job_id", line_no);
                current.area = value;
            }
            continue;
        }
        if (!have_posting) throw ParseError("token line before job_id header", line_no);
        auto fields = textnorm::split_whitespace(stripped);
        if (fields.size() < 2 || fields.size() > 3)
            throw ParseError("expected 'token label [attrs]', got " +
                                 std::to_string(fields.size()) + " fields",
                             line_no);
        if (pending.tokens.empty()) pending.first_line = line_no;
        pending.tokens.push_back(fields[0]);
        pending.labels.push_back(iob_from_string(fields[1]));
        pending.attrs.push_back(fields.size() == 3 ? fields[2] : "");
    }
    finish_posting();
    return postings;
}

std::vector<JobPosting> load_corpus(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open corpus file: " + path);
    return parse_corpus(in);
}

std::string format_corpus(const std::vector<JobPosting>& postings) {
    std::string out;
    for (std::size_t p = 0; p < postings.size(); ++p) {
        const JobPosting& posting = postings[p];
        if (p > 0) out += '\n';
        out += "# job_id = " + posting.job_id + '\n';
        out += "# area = " + posting.area + '\n';
        for (std::size_t s = 0; s < posting.sentences.size(); ++s) {
            const TaggedSentence& sent = posting.sentences[s];
            for (std::size_t t = 0; t < sent.tokens.size(); ++t) {
                out += sent.tokens[t].text;
                out += '\t';
                out += iob_to_string(sent.labels[t]);
                for (const auto& sa : posting.span_attrs) {
                    if (sa.sentence_index != s || sa.token_start != t) continue;
                    std::string attr;
                    if (sa.is_multi) attr = "multi";
                    if (sa.gold_link) {
                        if (!attr.empty()) attr += '|';
                        attr += "link=" + *sa.gold_link;
                    }
                    if (!attr.empty()) out += '\t' + attr;
                }
                out += '\n';
            }
            if (s + 1 < posting.sentences.size()) out += '\n';
        }
    }
    return out;
}

void save_corpus(const std::vector<JobPosting>& postings, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ParseError("cannot write corpus file: " + path);
    out << format_corpus(postings);
}

std::vector<SkillSpan> spans_from_iob(const TaggedSentence& sentence, const std::string& job_id,
                                      std::size_t sentence_index) {
    std::vector<SkillSpan> spans;
    const auto& labels = sentence.labels;
    std::size_t i = 0;
    while (i < labels.size()) {
        if (labels[i] != Iob::B) {
            ++i;
            continue;
        }
        std::size_t start = i;
        ++i;
        while (i < labels.size() && labels[i] == Iob::I) ++i;
        SkillSpan span;
        span.job_id = job_id;
        span.sentence_index = sentence_index;
        span.token_start = start;
        span.token_end = i;
        for (std::size_t t = start; t < i; ++t) {
            if (t > start) span.surface += ' ';
            span.surface += sentence.tokens[t].text;
        }
        spans.push_back(std::move(span));
    }
    return spans;
}

std::vector<SkillSpan> spans_of_posting(const JobPosting& posting) {
    std::vector<SkillSpan> all;
    for (std::size_t s = 0; s < posting.sentences.size(); ++s) {
        auto spans = spans_from_iob(posting.sentences[s], posting.job_id, s);
        for (auto& span : spans) {
            for (const auto& sa : posting.span_attrs) {
                if (sa.sentence_index == s && sa.token_start == span.token_start) {
                    span.is_multi = sa.is_multi;
                    span.gold_link = sa.gold_link;
                }
            }
            all.push_back(std::move(span));
        }
    }
    return all;
}

std::vector<Iob> iob_from_spans(const std::vector<SkillSpan>& spans, std::size_t token_count) {
    std::vector<Iob> labels(token_count, Iob::O);
    for (const auto& span : spans) {
        if (span.token_start >= span.token_end || span.token_end > token_count)
            throw ParseError("span [" + std::to_string(span.token_start) + "," +
                             std::to_string(span.token_end) + ") out of range for " +
                             std::to_string(token_count) + " tokens");
        labels[span.token_start] = Iob::B;
        for (std::size_t t = span.token_start + 1; t < span.token_end; ++t) labels[t] = Iob::I;
    }
    return labels;
}

SplitSpec split_corpus(const std::vector<JobPosting>& postings, std::uint64_t seed) {
    if (postings.empty()) throw ParseError("cannot split an empty corpus");
    std::map<std::string, std::vector<std::string>> by_area;
    for (const auto& p : postings) by_area[p.area].push_back(p.job_id);

    SplitSpec split;
    split.seed = seed;
    std::mt19937_64 rng(seed);
    for (auto& [area, ids] : by_area) {
        std::sort(ids.begin(), ids.end());
        std::shuffle(ids.begin(), ids.end(), rng);
        std::size_t n = ids.size();
        std::size_t n_test = 0, n_val = 0;
        if (n > 6) {
            n_test = n / 5;  // floor(20%)
            n_val = n / 5;
        } else if (n >= 3) {
            n_test = 1;
            n_val = 1;
        }
        for (std::size_t i = 0; i < n; ++i) {
            if (i < n_test)
                split.test.push_back(ids[i]);
            else if (i < n_test + n_val)
                split.validation.push_back(ids[i]);
            else
                split.train.push_back(ids[i]);
        }
    }
    std::sort(split.train.begin(), split.train.end());
    std::sort(split.validation.begin(), split.validation.end());
    std::sort(split.test.begin(), split.test.end());
    return split;
}

std::string split_to_json(const SplitSpec& split) {
    nlohmann::json j;
    j["train"] = split.train;
    j["validation"] = split.validation;
    j["test"] = split.test;
    j["seed"] = split.seed;
    return j.dump(2) + "\n";
}

SplitSpec split_from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    SplitSpec split;
    split.train = j.at("train").get<std::vector<std::string>>();
    split.validation = j.at("validation").get<std::vector<std::string>>();
    split.test = j.at("test").get<std::vector<std::string>>();
    split.seed = j.at("seed").get<std::uint64_t>();
    return split;
}

}  // namespace skillforge::corpus
