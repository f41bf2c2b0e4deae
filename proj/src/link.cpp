#include "skillforge/link.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "skillforge/assets.hpp"
#include "skillforge/errors.hpp"
#include "skillforge/fuzzy.hpp"
#include "skillforge/parallel.hpp"
#include "skillforge/textnorm.hpp"

using nlohmann::json;

namespace skillforge::link {

namespace {

std::string join(const std::vector<std::string>& tokens, std::size_t begin, std::size_t end) {
    std::string out;
    for (std::size_t i = begin; i < end; ++i) {
        if (i > begin) out += ' ';
        out += tokens[i];
    }
    return out;
}

std::string join_parts(std::initializer_list<std::string> parts) {
    std::string out;
    for (const auto& p : parts) {
        if (p.empty()) continue;
        if (!out.empty()) out += ' ';
        out += p;
    }
    return out;
}

// Position and token length of the first delimiter occurrence, preferring
// longer delimiters at the same position.
std::optional<std::pair<std::size_t, std::size_t>> find_delimiter(
    const std::vector<std::string>& tokens, const std::vector<std::string>& delimiters) {
    std::vector<std::vector<std::string>> delim_tokens;
    for (const auto& d : delimiters)
        delim_tokens.push_back(textnorm::split_whitespace(textnorm::to_lower_turkish(d)));
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        std::size_t best_len = 0;
        for (const auto& dt : delim_tokens) {
            if (dt.empty() || i + dt.size() > tokens.size()) continue;
            bool match = true;
            for (std::size_t j = 0; j < dt.size(); ++j) {
                if (textnorm::to_lower_turkish(tokens[i + j]) != dt[j]) {
                    match = false;
                    break;
                }
            }
            if (match) best_len = std::max(best_len, dt.size());
        }
        if (best_len > 0) return std::make_pair(i, best_len);
    }
    return std::nullopt;
}

void split_once(const std::vector<std::string>& tokens, std::size_t delim_pos,
                std::size_t delim_len, std::vector<std::string>& out,
                std::vector<std::string>& warnings) {
    std::vector<std::string> left(tokens.begin(), tokens.begin() + delim_pos);
    std::vector<std::string> right(tokens.begin() + delim_pos + delim_len, tokens.end());

    if (left.empty() && right.empty()) {
        warnings.push_back("span consists only of a delimiter");
        return;
    }
    if (left.empty() || right.empty()) {
        warnings.push_back("delimiter at span edge; kept the other side unchanged");
        const auto& side = left.empty() ? right : left;
        out.push_back(join(side, 0, side.size()));
        return;
    }

    if (left.size() != right.size()) {
        // the longer side's tokens beyond its delimiter-adjacent one are
        // shared by both conjuncts
        if (right.size() > left.size()) {
            std::string suffix = join(right, 1, right.size());
            out.push_back(join_parts({join(left, 0, left.size()), suffix}));
            out.push_back(join_parts({right.front(), suffix}));
        } else {
            std::string prefix = join(left, 0, left.size() - 1);
            out.push_back(join_parts({prefix, left.back()}));
            out.push_back(join_parts({prefix, join(right, 0, right.size())}));
        }
        return;
    }

    // equal sides: conjuncts are the delimiter-adjacent tokens, the rest
    // becomes an optional shared prefix/suffix combination set
    std::string prefix = join(left, 0, left.size() - 1);
    std::string suffix = join(right, 1, right.size());
    std::vector<std::string> conjuncts{left.back(), right.front()};
    for (const auto& c : conjuncts) out.push_back(join_parts({prefix, c, suffix}));
    if (!prefix.empty())
        for (const auto& c : conjuncts) out.push_back(join_parts({prefix, c}));
    if (!suffix.empty())
        for (const auto& c : conjuncts) out.push_back(join_parts({c, suffix}));
}

}  // namespace

SplitResult split_multiskill(const std::string& surface,
                             const std::vector<std::string>& delimiters) {
    SplitResult result;
    std::vector<std::string> queue{surface};
    std::set<std::string> seen;
    int depth_guard = 0;
    while (!queue.empty()) {
        if (++depth_guard > 1000) {
            result.warnings.push_back("splitting aborted after too many rounds");
            break;
        }
        std::string current = queue.front();
        queue.erase(queue.begin());
        auto tokens = textnorm::split_whitespace(current);
        auto hit = find_delimiter(tokens, delimiters);
        if (!hit) {
            if (!current.empty() && seen.insert(current).second)
                result.parts.push_back(current);
            continue;
        }
        std::vector<std::string> pieces;
        split_once(tokens, hit->first, hit->second, pieces, result.warnings);
        // keep emission order: finished pieces land before later expansions
        std::size_t insert_at = 0;
        for (auto& piece : pieces) queue.insert(queue.begin() + insert_at++, std::move(piece));
    }
    return result;
}

RetrievalMethod retrieval_method_from_string(const std::string& s) {
    if (s == "fuzzy") return RetrievalMethod::fuzzy;
    if (s == "embedding") return RetrievalMethod::embedding;
    throw ConfigError("unknown retrieval method '" + s + "'");
}

std::string retrieval_method_to_string(RetrievalMethod m) {
    return m == RetrievalMethod::fuzzy ? "fuzzy" : "embedding";
}

namespace {

RankedList take_top_k(std::vector<Candidate> scored, const std::string& query,
                      RetrievalMethod method, std::size_t k) {
    std::stable_sort(scored.begin(), scored.end(), [](const Candidate& a, const Candidate& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.taxonomy_id < b.taxonomy_id;
    });
    if (scored.size() > k) scored.resize(k);
    for (std::size_t i = 0; i < scored.size(); ++i) scored[i].rank = static_cast<int>(i) + 1;
    RankedList out;
    out.query = query;
    out.method = method;
    out.candidates = std::move(scored);
    return out;
}

}  // namespace

RankedList retrieve_fuzzy(const std::string& query, const taxonomy::Taxonomy& taxonomy,
                          std::size_t k) {
    if (textnorm::normalize_whitespace(query).empty())
        throw ConfigError("empty retrieval query");
    std::vector<Candidate> scored;
    scored.reserve(taxonomy.size());
    for (const auto& entry : taxonomy.entries()) {
        Candidate c;
        c.taxonomy_id = entry.id;
        c.label = entry.preferred_label;
        c.score = fuzzy::token_sort_ratio(query, entry.preferred_label);
        scored.push_back(std::move(c));
    }
    return take_top_k(std::move(scored), query, RetrievalMethod::fuzzy, k);
}

namespace {

void l2_normalize(std::vector<float>& v) {
    double norm = 0.0;
    for (float x : v) norm += static_cast<double>(x) * x;
    norm = std::sqrt(norm);
    if (norm > 0)
        for (float& x : v) x = static_cast<float>(x / norm);
}

}  // namespace

EmbeddingIndex build_embedding_index(const taxonomy::Taxonomy& taxonomy,
                                     providers::Client& client, const std::string& model,
                                     taxonomy::PassageMode mode) {
    EmbeddingIndex index;
    index.model = model;
    std::vector<std::string> texts;
    for (const auto& entry : taxonomy.entries()) {
        index.ids.push_back(entry.id);
        texts.push_back(providers::embedding_input(model, providers::EmbedKind::passage,
                                                   taxonomy::render_passage(entry, mode)));
    }
    auto vectors = client.embed(texts, model);
    index.dim = vectors.empty() ? 0 : vectors.front().values.size();
    index.matrix.reserve(index.ids.size() * index.dim);
    for (auto& v : vectors) {
        l2_normalize(v.values);
        index.matrix.insert(index.matrix.end(), v.values.begin(), v.values.end());
    }
    return index;
}

namespace {

constexpr char kIndexMagic[8] = {'S', 'F', 'I', 'D', 'X', '0', '0', '1'};

void write_u32(std::ostream& out, std::uint32_t v) {
    unsigned char bytes[4] = {static_cast<unsigned char>(v & 0xFF),
                              static_cast<unsigned char>((v >> 8) & 0xFF),
                              static_cast<unsigned char>((v >> 16) & 0xFF),
                              static_cast<unsigned char>((v >> 24) & 0xFF)};
    out.write(reinterpret_cast<const char*>(bytes), 4);
}

std::uint32_t read_u32(std::istream& in) {
    unsigned char bytes[4];
    in.read(reinterpret_cast<char*>(bytes), 4);
    return static_cast<std::uint32_t>(bytes[0]) | (static_cast<std::uint32_t>(bytes[1]) << 8) |
           (static_cast<std::uint32_t>(bytes[2]) << 16) |
           (static_cast<std::uint32_t>(bytes[3]) << 24);
}

}  // namespace

void save_index(const EmbeddingIndex& index, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write index file: " + path);
    out.write(kIndexMagic, sizeof(kIndexMagic));
    write_u32(out, static_cast<std::uint32_t>(index.model.size()));
    out.write(index.model.data(), static_cast<std::streamsize>(index.model.size()));
    write_u32(out, static_cast<std::uint32_t>(index.dim));
    write_u32(out, static_cast<std::uint32_t>(index.size()));
    for (float x : index.matrix) {
        std::uint32_t bits;
        std::memcpy(&bits, &x, 4);
        write_u32(out, bits);
    }
    json manifest;
    manifest["model"] = index.model;
    manifest["dim"] = index.dim;
    manifest["count"] = index.size();
    manifest["ids"] = index.ids;
    std::ofstream mout(path + ".manifest.json", std::ios::binary);
    if (!mout) throw ConfigError("cannot write index manifest: " + path + ".manifest.json");
    mout << manifest.dump(2) << "\n";
}

EmbeddingIndex load_index(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open index file: " + path);
    char magic[8];
    in.read(magic, 8);
    if (std::memcmp(magic, kIndexMagic, 8) != 0)
        throw ParseError("bad index magic in " + path);
    EmbeddingIndex index;
    std::uint32_t model_len = read_u32(in);
    index.model.resize(model_len);
    in.read(index.model.data(), model_len);
    index.dim = read_u32(in);
    std::uint32_t count = read_u32(in);
    index.matrix.resize(static_cast<std::size_t>(count) * index.dim);
    for (auto& x : index.matrix) {
        std::uint32_t bits = read_u32(in);
        std::memcpy(&x, &bits, 4);
    }
    if (!in) throw ParseError("truncated index file " + path);

    std::ifstream min(path + ".manifest.json", std::ios::binary);
    if (!min) throw ConfigError("cannot open index manifest: " + path + ".manifest.json");
    json manifest = json::parse(min);
    index.ids = manifest.at("ids").get<std::vector<std::string>>();
    if (index.ids.size() != count)
        throw ParseError("index manifest lists " + std::to_string(index.ids.size()) +
                         " ids for " + std::to_string(count) + " rows");
    return index;
}

RankedList retrieve_embedding_vector(const std::string& query,
                                     const std::vector<float>& query_vector,
                                     const EmbeddingIndex& index,
                                     const taxonomy::Taxonomy& taxonomy, std::size_t k) {
    if (textnorm::normalize_whitespace(query).empty())
        throw ConfigError("empty retrieval query");
    if (query_vector.size() != index.dim)
        throw ConfigError("query dimension " + std::to_string(query_vector.size()) +
                          " does not match index dimension " + std::to_string(index.dim));
    std::vector<float> q = query_vector;
    l2_normalize(q);
    std::vector<Candidate> scored;
    scored.reserve(index.size());
    for (std::size_t row = 0; row < index.size(); ++row) {
        double dot = 0.0;
        const float* base = index.matrix.data() + row * index.dim;
        for (std::size_t d = 0; d < index.dim; ++d)
            dot += static_cast<double>(q[d]) * base[d];
        Candidate c;
        c.taxonomy_id = index.ids[row];
        c.label = taxonomy.entry(index.ids[row]).preferred_label;
        c.score = dot;
        scored.push_back(std::move(c));
    }
    return take_top_k(std::move(scored), query, RetrievalMethod::embedding, k);
}

RankedList retrieve_embedding(const std::string& query, const EmbeddingIndex& index,
                              const taxonomy::Taxonomy& taxonomy, providers::Client& client,
                              std::size_t k) {
    auto vectors = client.embed(
        {providers::embedding_input(index.model, providers::EmbedKind::query, query)},
        index.model);
    return retrieve_embedding_vector(query, vectors.front().values, index, taxonomy, k);
}

RerankStrategy rerank_strategy_from_string(const std::string& s) {
    RerankStrategy strategy;
    std::string rest = s;
    if (rest.rfind("reason+", 0) == 0) {
        strategy.reasoning = RerankReasoning::plain;
        rest = rest.substr(7);
    } else if (rest.rfind("causal+", 0) == 0) {
        strategy.reasoning = RerankReasoning::causal;
        rest = rest.substr(7);
    }
    if (rest == "none") {
        strategy.base = RerankBase::none;
        if (strategy.reasoning != RerankReasoning::none)
            throw ConfigError("reasoning requires a rerank base (got '" + s + "')");
    } else if (rest == "key") {
        strategy.base = RerankBase::key;
    } else if (rest == "context") {
        strategy.base = RerankBase::context;
    } else if (rest == "context_desc" || rest == "context_description") {
        strategy.base = RerankBase::context_description;
    } else {
        throw ConfigError("unknown rerank strategy '" + s + "'");
    }
    return strategy;
}

std::string rerank_strategy_to_string(const RerankStrategy& strategy) {
    std::string base;
    switch (strategy.base) {
        case RerankBase::none: return "none";
        case RerankBase::key: base = "key"; break;
        case RerankBase::context: base = "context"; break;
        case RerankBase::context_description: base = "context_desc"; break;
    }
    switch (strategy.reasoning) {
        case RerankReasoning::none: return base;
        case RerankReasoning::plain: return "reason+" + base;
        case RerankReasoning::causal: return "causal+" + base;
    }
    return base;
}

providers::ChatRequest build_rerank_prompt(const std::string& span_surface,
                                           const std::string& sentence_context,
                                           const RankedList& retrieved,
                                           const RerankStrategy& strategy,
                                           const taxonomy::Taxonomy& taxonomy,
                                           const std::string& model) {
    if (strategy.base == RerankBase::none)
        throw ConfigError("cannot build a rerank prompt for strategy 'none'");
    if (retrieved.candidates.empty()) throw ConfigError("rerank needs at least one candidate");

    const char* asset = assets::kRerankPrompt;
    if (strategy.reasoning == RerankReasoning::plain) asset = assets::kRerankReasonPrompt;
    if (strategy.reasoning == RerankReasoning::causal) asset = assets::kRerankCausalPrompt;
    std::string body = assets::load_asset(asset);
    while (!body.empty() && (body.back() == '\n' || body.back() == '\r')) body.pop_back();

    body += "\n\nYetenek: " + span_surface;
    if (strategy.base == RerankBase::context ||
        strategy.base == RerankBase::context_description) {
        body += "\nCümle: " + sentence_context;
    }
    body += "\n\nESCO yetenekleri:";
    for (std::size_t i = 0; i < retrieved.candidates.size(); ++i) {
        const auto& c = retrieved.candidates[i];
        body += "\n" + std::to_string(i + 1) + ". " + c.label;
        if (strategy.base == RerankBase::context_description) {
            const auto& desc = taxonomy.entry(c.taxonomy_id).description;
            if (!desc.empty()) body += " — " + desc;
        }
    }

    providers::ChatRequest request;
    request.model = model;
    request.temperature = 0.0;
    request.messages.push_back({"user", body});
    return request;
}

namespace {

std::string strip_list_decoration(const std::string& line) {
    std::size_t i = 0;
    while (i < line.size() && (std::isspace(static_cast<unsigned char>(line[i])) ||
                               std::isdigit(static_cast<unsigned char>(line[i])) ||
                               line[i] == '.' || line[i] == ')' || line[i] == '-' ||
                               line[i] == '*' || line[i] == ':'))
        ++i;
    std::size_t end = line.size();
    while (end > i && std::isspace(static_cast<unsigned char>(line[end - 1]))) --end;
    return line.substr(i, end - i);
}

}  // namespace

ParsedOrdering parse_rerank_response(const std::string& text,
                                     const std::vector<Candidate>& candidates) {
    if (candidates.empty()) throw ConfigError("cannot parse a rerank reply with no candidates");
    ParsedOrdering out;

    // reasoning replies carry the final list under the last ranking heading
    std::size_t heading_end = 0;
    for (const char* heading : {"Sıralama:", "Ranking:"}) {
        auto pos = text.rfind(heading);
        if (pos != std::string::npos)
            heading_end = std::max(heading_end, pos + std::strlen(heading));
    }
    std::string tail = text.substr(heading_end);

    std::vector<bool> used(candidates.size(), false);
    std::vector<std::size_t> matched;
    std::istringstream lines(tail);
    std::string line;
    while (std::getline(lines, line)) {
        std::string content = strip_list_decoration(line);
        if (content.empty()) continue;
        std::ptrdiff_t best = -1;
        std::size_t best_len = 0;
        for (std::size_t c = 0; c < candidates.size(); ++c) {
            if (used[c]) continue;
            const std::string& label = candidates[c].label;
            if (line.find(label) != std::string::npos && label.size() > best_len) {
                best = static_cast<std::ptrdiff_t>(c);
                best_len = label.size();
            }
        }
        if (best < 0) {
            double best_score = 0.0;
            for (std::size_t c = 0; c < candidates.size(); ++c) {
                if (used[c]) continue;
                double score = fuzzy::token_sort_ratio(content, candidates[c].label);
                if (score >= 85.0 && score > best_score) {
                    best = static_cast<std::ptrdiff_t>(c);
                    best_score = score;
                }
            }
        }
        if (best >= 0) {
            used[static_cast<std::size_t>(best)] = true;
            matched.push_back(static_cast<std::size_t>(best));
        }
    }
    if (matched.empty())
        out.warnings.push_back("rerank parse degraded: no candidate recognized in the reply");
    else if (matched.size() < candidates.size())
        out.warnings.push_back("rerank reply listed " + std::to_string(matched.size()) + " of " +
                               std::to_string(candidates.size()) + " candidates");

    for (std::size_t c : matched) out.ordering.push_back(candidates[c].taxonomy_id);
    for (std::size_t c = 0; c < candidates.size(); ++c)
        if (!used[c]) out.ordering.push_back(candidates[c].taxonomy_id);
    return out;
}

std::vector<LinkedSkill> run_link(const std::vector<corpus::SkillSpan>& spans,
                                  const std::vector<corpus::JobPosting>& postings,
                                  const taxonomy::Taxonomy& taxonomy,
                                  const EmbeddingIndex* index, const MultiSkillModel* multiskill,
                                  providers::Client& client, const LinkOptions& options) {
    if (options.retrieval == RetrievalMethod::embedding && !index)
        throw ConfigError("embedding retrieval needs a prebuilt index");

    std::map<std::pair<std::string, std::size_t>, const corpus::TaggedSentence*> sentences;
    for (const auto& p : postings)
        for (std::size_t s = 0; s < p.sentences.size(); ++s)
            sentences[{p.job_id, s}] = &p.sentences[s];

    // expand spans into sub-queries
    struct Work {
        const corpus::SkillSpan* span;
        std::string query;
        std::vector<std::string> warnings;
    };
    std::vector<Work> work;
    for (const auto& span : spans) {
        std::vector<std::string> queries{span.surface};
        std::vector<std::string> warnings;
        if (multiskill && classify_multiskill(span.surface, *multiskill)) {
            auto split = split_multiskill(span.surface, options.delimiters);
            warnings = split.warnings;
            if (split.parts.empty())
                warnings.push_back("multi-skill span produced no split parts; kept whole");
            else
                queries = split.parts;
        }
        for (auto& q : queries) work.push_back({&span, std::move(q), warnings});
    }

    // batch-embed unique queries so the provider sees one request
    std::map<std::string, std::vector<float>> query_vectors;
    if (options.retrieval == RetrievalMethod::embedding) {
        std::vector<std::string> unique;
        for (const auto& w : work)
            if (query_vectors.emplace(w.query, std::vector<float>{}).second)
                unique.push_back(w.query);
        std::vector<std::string> inputs;
        inputs.reserve(unique.size());
        for (const auto& q : unique)
            inputs.push_back(
                providers::embedding_input(index->model, providers::EmbedKind::query, q));
        auto vectors = client.embed(inputs, index->model);
        for (std::size_t i = 0; i < unique.size(); ++i)
            query_vectors[unique[i]] = std::move(vectors[i].values);
    }

    std::vector<LinkedSkill> results(work.size());
    parallel_for_ordered(work.size(), client.jobs(), [&](std::size_t i) {
        const Work& w = work[i];
        LinkedSkill out;
        out.span = *w.span;
        out.query = w.query;
        out.warnings = w.warnings;

        if (options.retrieval == RetrievalMethod::fuzzy)
            out.retrieved = retrieve_fuzzy(w.query, taxonomy, options.k);
        else
            out.retrieved = retrieve_embedding_vector(w.query, query_vectors.at(w.query), *index,
                                                      taxonomy, options.k);

        for (const auto& c : out.retrieved.candidates) out.ordering.push_back(c.taxonomy_id);
        if (options.rerank.base != RerankBase::none && !out.retrieved.candidates.empty()) {
            std::string context;
            auto sent = sentences.find({w.span->job_id, w.span->sentence_index});
            if (sent != sentences.end()) context = sent->second->raw_text;
            try {
                auto request = build_rerank_prompt(w.query, context, out.retrieved,
                                                   options.rerank, taxonomy,
                                                   options.rerank_model);
                auto reply = client.chat(request, providers::Stage::rerank);
                auto parsed = parse_rerank_response(reply.content, out.retrieved.candidates);
                out.ordering = parsed.ordering;
                out.rationale_text = reply.content;
                out.warnings.insert(out.warnings.end(), parsed.warnings.begin(),
                                    parsed.warnings.end());
            } catch (const ProviderError& e) {
                if (options.fail_fast) throw;
                out.warnings.push_back(std::string("rerank failed, kept retrieval order: ") +
                                       e.what());
            }
        }
        if (!out.ordering.empty()) out.chosen = out.ordering.front();
        results[i] = std::move(out);
    });
    return results;
}

}  // namespace skillforge::link
