#include "skillforge/identify.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "skillforge/assets.hpp"
#include "skillforge/errors.hpp"
#include "skillforge/parallel.hpp"
#include "skillforge/textnorm.hpp"

namespace skillforge::identify {

using corpus::Iob;
using corpus::TaggedSentence;

StrategyKind strategy_kind_from_string(const std::string& s) {
    if (s == "zero" || s == "zero_shot") return StrategyKind::zero_shot;
    if (s == "static" || s == "static_few_shot") return StrategyKind::static_few_shot;
    if (s == "dynamic" || s == "dynamic_few_shot") return StrategyKind::dynamic_few_shot;
    throw ConfigError("unknown identification strategy '" + s + "'");
}

std::string strategy_kind_to_string(StrategyKind kind) {
    switch (kind) {
        case StrategyKind::zero_shot: return "zero_shot";
        case StrategyKind::static_few_shot: return "static_few_shot";
        case StrategyKind::dynamic_few_shot: return "dynamic_few_shot";
    }
    return "zero_shot";
}

ExamplePool build_example_pool(const std::vector<corpus::JobPosting>& postings,
                               const std::vector<std::string>& job_ids) {
    ExamplePool pool;
    std::map<std::string, const corpus::JobPosting*> by_id;
    for (const auto& p : postings) by_id[p.job_id] = &p;
    for (const auto& id : job_ids) {
        auto it = by_id.find(id);
        if (it == by_id.end()) throw ConfigError("pool job id '" + id + "' not in corpus");
        for (const auto& s : it->second->sentences) pool.sentences.push_back(s);
    }
    return pool;
}

namespace {

void l2_normalize(std::vector<float>& v) {
    double norm = 0.0;
    for (float x : v) norm += static_cast<double>(x) * x;
    norm = std::sqrt(norm);
    if (norm > 0)
        for (float& x : v) x = static_cast<float>(x / norm);
}

double dot(const std::vector<float>& a, const std::vector<float>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += static_cast<double>(a[i]) * b[i];
    return s;
}

bool has_skill(const TaggedSentence& s) {
    return std::any_of(s.labels.begin(), s.labels.end(), [](Iob l) { return l == Iob::B; });
}

}  // namespace

void embed_example_pool(ExamplePool& pool, providers::Client& client,
                        const std::string& embedding_model) {
    std::vector<std::string> texts;
    texts.reserve(pool.sentences.size());
    for (const auto& s : pool.sentences)
        texts.push_back(providers::embedding_input(embedding_model, providers::EmbedKind::query,
                                                   s.raw_text));
    auto vectors = client.embed(texts, embedding_model);
    pool.embeddings.clear();
    pool.embeddings.reserve(vectors.size());
    for (auto& v : vectors) {
        l2_normalize(v.values);
        pool.embeddings.push_back(std::move(v.values));
    }
}

std::string render_tagged(const TaggedSentence& sentence) {
    auto spans = corpus::spans_from_iob(sentence);
    auto cps = textnorm::decode_utf8(sentence.raw_text);
    std::string out;
    std::size_t pos = 0;
    for (const auto& span : spans) {
        std::size_t cs = sentence.tokens[span.token_start].char_start;
        std::size_t ce = sentence.tokens[span.token_end - 1].char_end;
        for (; pos < cs; ++pos) out += textnorm::encode_utf8(cps[pos]);
        out += kSkillStart;
        for (; pos < ce; ++pos) out += textnorm::encode_utf8(cps[pos]);
        out += kSkillEnd;
    }
    for (; pos < cps.size(); ++pos) out += textnorm::encode_utf8(cps[pos]);
    return out;
}

std::vector<std::size_t> select_dynamic_examples(const ExamplePool& pool,
                                                 const std::vector<float>& query_embedding,
                                                 std::size_t shots) {
    if (pool.sentences.empty()) throw ConfigError("dynamic prompting needs a non-empty pool");
    if (!pool.has_embeddings()) throw ConfigError("example pool has no embeddings");
    if (shots > pool.sentences.size())
        throw ConfigError("requested " + std::to_string(shots) + " shots from a pool of " +
                          std::to_string(pool.sentences.size()));
    std::vector<float> query = query_embedding;
    l2_normalize(query);
    std::vector<std::size_t> order(pool.sentences.size());
    std::iota(order.begin(), order.end(), 0);
    std::vector<double> scores(pool.sentences.size());
    for (std::size_t i = 0; i < pool.embeddings.size(); ++i)
        scores[i] = dot(query, pool.embeddings[i]);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (scores[a] != scores[b]) return scores[a] > scores[b];
        return a < b;
    });
    order.resize(shots);
    return order;
}

std::vector<std::size_t> select_static_examples(const ExamplePool& pool, std::size_t shots) {
    std::vector<std::size_t> with, without;
    for (std::size_t i = 0; i < pool.sentences.size(); ++i)
        (has_skill(pool.sentences[i]) ? with : without).push_back(i);
    std::size_t n_with = (shots + 1) / 2;
    std::size_t n_without = shots / 2;
    if (with.size() < n_with || without.size() < n_without)
        throw ConfigError("pool cannot supply " + std::to_string(n_with) + " with-skill and " +
                          std::to_string(n_without) + " without-skill examples");
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < std::max(n_with, n_without); ++i) {
        if (i < n_with) out.push_back(with[i]);
        if (i < n_without) out.push_back(without[i]);
    }
    return out;
}

providers::ChatRequest build_prompt(const TaggedSentence& sentence,
                                    const PromptStrategy& strategy, const ExamplePool& pool,
                                    const std::vector<float>& query_embedding,
                                    const std::string& model, const std::string& instruction) {
    std::vector<std::size_t> examples;
    switch (strategy.kind) {
        case StrategyKind::zero_shot: break;
        case StrategyKind::static_few_shot:
            examples = select_static_examples(pool, strategy.shots);
            break;
        case StrategyKind::dynamic_few_shot:
            examples = select_dynamic_examples(pool, query_embedding, strategy.shots);
            break;
    }
    std::string body = instruction;
    while (!body.empty() && (body.back() == '\n' || body.back() == '\r')) body.pop_back();
    body += "\n";
    for (std::size_t idx : examples) {
        body += "\nGirdi: " + pool.sentences[idx].raw_text;
        body += "\nÇıktı: " + render_tagged(pool.sentences[idx]) + "\n";
    }
    body += "\nGirdi: " + sentence.raw_text + "\nÇıktı:";

    providers::ChatRequest request;
    request.model = model;
    request.temperature = 0.0;
    request.messages.push_back({"user", body});
    return request;
}

namespace {

struct MarkerEvent {
    bool is_start;
    std::size_t position;  // codepoint offset in the stripped text
};

struct StrippedText {
    std::vector<char32_t> codepoints;
    std::vector<std::pair<std::size_t, std::size_t>> spans;  // codepoint ranges
    std::vector<std::string> warnings;
};

StrippedText strip_markers(const std::string& llm_text) {
    StrippedText out;
    std::vector<MarkerEvent> events;
    const std::string start_tag = kSkillStart, end_tag = kSkillEnd;
    std::size_t i = 0;
    std::string segment;
    auto flush_segment = [&]() {
        if (segment.empty()) return;
        auto cps = textnorm::decode_utf8(segment);
        out.codepoints.insert(out.codepoints.end(), cps.begin(), cps.end());
        segment.clear();
    };
    while (i < llm_text.size()) {
        if (llm_text.compare(i, start_tag.size(), start_tag) == 0) {
            flush_segment();
            events.push_back({true, out.codepoints.size()});
            i += start_tag.size();
        } else if (llm_text.compare(i, end_tag.size(), end_tag) == 0) {
            flush_segment();
            events.push_back({false, out.codepoints.size()});
            i += end_tag.size();
        } else {
            segment += llm_text[i];
            ++i;
        }
    }
    flush_segment();

    bool open = false;
    std::size_t open_pos = 0;
    for (const auto& ev : events) {
        if (ev.is_start) {
            if (open) {
                out.warnings.push_back("dropped redundant <skill_start> marker");
                continue;  // keep the earlier open marker
            }
            open = true;
            open_pos = ev.position;
        } else {
            if (!open) {
                out.warnings.push_back("dropped unmatched <skill_end> marker");
                continue;
            }
            open = false;
            if (ev.position > open_pos)
                out.spans.emplace_back(open_pos, ev.position);
            else
                out.warnings.push_back("dropped empty marker span");
        }
    }
    if (open) out.warnings.push_back("dropped unmatched <skill_start> marker");
    return out;
}

// Boundary in the whitespace-normalized view for a source-codepoint boundary.
std::size_t normalized_boundary(const textnorm::NormalizedText& norm, std::size_t source_pos) {
    std::size_t count = 0;
    for (std::size_t idx : norm.source_index) {
        if (idx < source_pos) ++count;
    }
    return count;
}

// One optimal unit-cost edit path between a and b; first[i]/last[i] give the
// smallest and largest b-boundary the path visits while a-progress equals i.
void edit_align_boundaries(const std::vector<char32_t>& a, const std::vector<char32_t>& b,
                           std::vector<std::size_t>& first, std::vector<std::size_t>& last) {
    std::size_t n = a.size(), m = b.size();
    std::vector<std::vector<unsigned>> cost(n + 1, std::vector<unsigned>(m + 1, 0));
    for (std::size_t i = 0; i <= n; ++i) cost[i][0] = static_cast<unsigned>(i);
    for (std::size_t j = 0; j <= m; ++j) cost[0][j] = static_cast<unsigned>(j);
    for (std::size_t i = 1; i <= n; ++i) {
        for (std::size_t j = 1; j <= m; ++j) {
            unsigned best = cost[i - 1][j - 1] + (a[i - 1] == b[j - 1] ? 0u : 1u);
            best = std::min(best, cost[i - 1][j] + 1);
            best = std::min(best, cost[i][j - 1] + 1);
            cost[i][j] = best;
        }
    }
    first.assign(n + 1, m + 1);
    last.assign(n + 1, 0);
    std::size_t i = n, j = m;
    auto visit = [&](std::size_t ai, std::size_t bj) {
        first[ai] = std::min(first[ai], bj);
        last[ai] = std::max(last[ai], bj);
    };
    visit(i, j);
    while (i > 0 || j > 0) {
        if (i > 0 && j > 0 && cost[i][j] == cost[i - 1][j - 1] + (a[i - 1] == b[j - 1] ? 0u : 1u)) {
            --i;
            --j;
        } else if (i > 0 && cost[i][j] == cost[i - 1][j] + 1) {
            --i;
        } else {
            --j;
        }
        visit(i, j);
    }
}

}  // namespace

TaggerOutput align_markers(const TaggedSentence& original, const std::string& llm_text) {
    TaggerOutput out;
    out.labels.assign(original.tokens.size(), Iob::O);
    out.raw_llm_text = llm_text;
    if (llm_text.empty()) throw ConfigError("align_markers requires non-empty model output");

    StrippedText stripped = strip_markers(llm_text);
    out.warnings = stripped.warnings;
    if (stripped.spans.empty()) return out;

    auto raw_cps = textnorm::decode_utf8(original.raw_text);
    auto norm_stripped = textnorm::normalize_whitespace_mapped(stripped.codepoints);
    auto norm_raw = textnorm::normalize_whitespace_mapped(raw_cps);

    bool identical = norm_stripped.codepoints == norm_raw.codepoints;
    std::vector<std::size_t> first, last;
    if (!identical)
        edit_align_boundaries(norm_stripped.codepoints, norm_raw.codepoints, first, last);

    std::vector<std::pair<std::size_t, std::size_t>> token_ranges;
    for (const auto& [span_start, span_end] : stripped.spans) {
        std::size_t ns = normalized_boundary(norm_stripped, span_start);
        std::size_t ne = normalized_boundary(norm_stripped, span_end);
        std::size_t qs, qe;
        if (identical) {
            qs = ns;
            qe = ne;
        } else {
            qs = last[ns];   // skip raw-only characters before the span
            qe = first[ne];  // and after it
        }
        if (qe <= qs) {
            out.warnings.push_back("span projects to an empty range, dropped");
            continue;
        }
        std::size_t rs = qs < norm_raw.source_index.size() ? norm_raw.source_index[qs]
                                                           : raw_cps.size();
        std::size_t re = qe == 0 ? 0 : norm_raw.source_index[qe - 1] + 1;

        // snap outward to token boundaries
        std::size_t t_start = original.tokens.size(), t_end = 0;
        for (std::size_t t = 0; t < original.tokens.size(); ++t) {
            const auto& tok = original.tokens[t];
            if (tok.char_end > rs && tok.char_start < re) {
                t_start = std::min(t_start, t);
                t_end = std::max(t_end, t + 1);
            }
        }
        if (t_start >= t_end) {
            out.warnings.push_back("span projects outside all tokens, dropped");
            continue;
        }
        token_ranges.emplace_back(t_start, t_end);
    }

    std::sort(token_ranges.begin(), token_ranges.end());
    std::vector<corpus::SkillSpan> spans;
    for (const auto& [s, e] : token_ranges) {
        if (!spans.empty() && s < spans.back().token_end) {
            spans.back().token_end = std::max(spans.back().token_end, e);
        } else {
            corpus::SkillSpan span;
            span.token_start = s;
            span.token_end = e;
            spans.push_back(span);
        }
    }
    out.labels = corpus::iob_from_spans(spans, original.tokens.size());
    return out;
}

std::vector<TaggerOutput> run_identify(const std::vector<corpus::JobPosting>& postings,
                                       const IdentifyOptions& options, providers::Client& client,
                                       const ExamplePool& pool) {
    struct Target {
        const corpus::JobPosting* posting;
        std::size_t sentence_index;
    };
    std::vector<Target> targets;
    for (const auto& p : postings)
        for (std::size_t s = 0; s < p.sentences.size(); ++s) targets.push_back({&p, s});

    std::string instruction = assets::load_asset(assets::kIdentifyPrompt);

    // dynamic prompting embeds every target up front; the cache makes this
    // cheap on reruns
    std::vector<std::vector<float>> query_embeddings(targets.size());
    if (options.strategy.kind == StrategyKind::dynamic_few_shot) {
        std::vector<std::string> texts;
        texts.reserve(targets.size());
        for (const auto& t : targets)
            texts.push_back(providers::embedding_input(
                options.embedding_model, providers::EmbedKind::query,
                t.posting->sentences[t.sentence_index].raw_text));
        auto vectors = client.embed(texts, options.embedding_model);
        for (std::size_t i = 0; i < vectors.size(); ++i)
            query_embeddings[i] = std::move(vectors[i].values);
    }

    std::vector<TaggerOutput> outputs(targets.size());
    parallel_for_ordered(targets.size(), client.jobs(), [&](std::size_t i) {
        const auto& target = targets[i];
        const auto& sentence = target.posting->sentences[target.sentence_index];
        TaggerOutput result;
        try {
            auto request = build_prompt(sentence, options.strategy, pool, query_embeddings[i],
                                        options.model, instruction);
            auto reply = client.chat(request, providers::Stage::identify);
            result = align_markers(sentence, reply.content);
        } catch (const ProviderError& e) {
            if (options.fail_fast) throw;
            result.labels.assign(sentence.tokens.size(), Iob::O);
            result.warnings.push_back(std::string("provider failure, sentence left untagged: ") +
                                      e.what());
        }
        result.job_id = target.posting->job_id;
        result.sentence_index = target.sentence_index;
        outputs[i] = std::move(result);
    });
    return outputs;
}

std::vector<TaggerOutput> load_external_tags(const std::string& path,
                                             const std::vector<corpus::JobPosting>& reference) {
    auto tagged = corpus::load_corpus(path);
    std::map<std::string, const corpus::JobPosting*> by_id;
    for (const auto& p : tagged) by_id[p.job_id] = &p;

    std::vector<TaggerOutput> outputs;
    for (const auto& ref : reference) {
        auto it = by_id.find(ref.job_id);
        if (it == by_id.end())
            throw ParseError("external tags are missing job '" + ref.job_id + "'");
        const auto& got = *it->second;
        if (got.sentences.size() != ref.sentences.size())
            throw ParseError("job '" + ref.job_id + "': expected " +
                             std::to_string(ref.sentences.size()) + " sentences, file has " +
                             std::to_string(got.sentences.size()));
        for (std::size_t s = 0; s < ref.sentences.size(); ++s) {
            const auto& rs = ref.sentences[s];
            const auto& gs = got.sentences[s];
            if (gs.tokens.size() != rs.tokens.size())
                throw ParseError("job '" + ref.job_id + "' sentence " + std::to_string(s) +
                                 ": token count mismatch");
            for (std::size_t t = 0; t < rs.tokens.size(); ++t)
                if (gs.tokens[t].text != rs.tokens[t].text)
                    throw ParseError("job '" + ref.job_id + "' sentence " + std::to_string(s) +
                                     ": token " + std::to_string(t) + " differs ('" +
                                     gs.tokens[t].text + "' vs '" + rs.tokens[t].text + "')");
            TaggerOutput out;
            out.job_id = ref.job_id;
            out.sentence_index = s;
            out.labels = gs.labels;
            outputs.push_back(std::move(out));
        }
    }
    return outputs;
}

}  // namespace skillforge::identify
