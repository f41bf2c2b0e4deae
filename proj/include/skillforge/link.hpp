#pragma once

#include <optional>
#include <string>
#include <vector>

#include "skillforge/corpus.hpp"
#include "skillforge/providers.hpp"
#include "skillforge/svm.hpp"
#include "skillforge/taxonomy.hpp"

namespace skillforge::link {

inline const std::vector<std::string> kDefaultDelimiters = {"ve", "veya", "ya da",
                                                            ",",  "/",    "-"};

struct SplitResult {
    std::vector<std::string> parts;
    std::vector<std::string> warnings;
};

// Rule-based conjunction splitting. Unequal sides share the longer side's
// outer tokens with every conjunct; equal sides produce the prefix/suffix
// combination set. Several delimiters are handled left to right.
SplitResult split_multiskill(const std::string& surface,
                             const std::vector<std::string>& delimiters = kDefaultDelimiters);

enum class RetrievalMethod { fuzzy, embedding };
RetrievalMethod retrieval_method_from_string(const std::string& s);
std::string retrieval_method_to_string(RetrievalMethod m);

struct Candidate {
    std::string taxonomy_id;
    std::string label;
    double score = 0.0;
    int rank = 0;  // 1-based, scores non-increasing by rank
};

struct RankedList {
    std::string query;
    RetrievalMethod method = RetrievalMethod::fuzzy;
    std::vector<Candidate> candidates;
};

// Top-k by token-sort ratio against preferred labels, ties by taxonomy id.
RankedList retrieve_fuzzy(const std::string& query, const taxonomy::Taxonomy& taxonomy,
                          std::size_t k = 10);

// One L2-normalized vector per taxonomy entry over its rendered passage.
class EmbeddingIndex {
public:
    std::string model;
    std::size_t dim = 0;
    std::vector<std::string> ids;
    std::vector<float> matrix;  // row-major, ids.size() x dim

    std::size_t size() const { return ids.size(); }
};

EmbeddingIndex build_embedding_index(const taxonomy::Taxonomy& taxonomy,
                                     providers::Client& client, const std::string& model,
                                     taxonomy::PassageMode mode = taxonomy::PassageMode::label);

// Binary sidecar: magic, model id, dim, count header then little-endian
// float32 rows; <path>.manifest.json carries the row ids.
void save_index(const EmbeddingIndex& index, const std::string& path);
EmbeddingIndex load_index(const std::string& path);

// Pure ranking against an already-embedded query; ties by taxonomy id.
RankedList retrieve_embedding_vector(const std::string& query,
                                     const std::vector<float>& query_vector,
                                     const EmbeddingIndex& index,
                                     const taxonomy::Taxonomy& taxonomy, std::size_t k = 10);

// Embeds the query through the client, then ranks.
RankedList retrieve_embedding(const std::string& query, const EmbeddingIndex& index,
                              const taxonomy::Taxonomy& taxonomy, providers::Client& client,
                              std::size_t k = 10);

enum class RerankBase { none, key, context, context_description };
enum class RerankReasoning { none, plain, causal };

struct RerankStrategy {
    RerankBase base = RerankBase::none;
    RerankReasoning reasoning = RerankReasoning::none;
};

// "none", "key", "context", "context_desc", optionally prefixed with
// "reason+" or "causal+".
RerankStrategy rerank_strategy_from_string(const std::string& s);
std::string rerank_strategy_to_string(const RerankStrategy& strategy);

providers::ChatRequest build_rerank_prompt(const std::string& span_surface,
                                           const std::string& sentence_context,
                                           const RankedList& retrieved,
                                           const RerankStrategy& strategy,
                                           const taxonomy::Taxonomy& taxonomy,
                                           const std::string& model);

struct ParsedOrdering {
    std::vector<std::string> ordering;  // full permutation of candidate ids
    std::vector<std::string> warnings;
};

// Reads the reply (after the last "Sıralama:"/"Ranking:" heading when one
// exists) line by line, matching candidates by label containment with a
// token-sort-ratio fallback; unmatched candidates keep retrieval order.
ParsedOrdering parse_rerank_response(const std::string& text,
                                     const std::vector<Candidate>& candidates);

struct LinkedSkill {
    corpus::SkillSpan span;  // the identified span this link came from
    std::string query;       // sub-query after multi-skill splitting
    RankedList retrieved;
    std::vector<std::string> ordering;  // post-rerank permutation of candidate ids
    std::string chosen;                 // == ordering.front()
    std::optional<std::string> rationale_text;
    std::vector<std::string> warnings;
};

struct LinkOptions {
    RetrievalMethod retrieval = RetrievalMethod::embedding;
    RerankStrategy rerank;
    std::size_t k = 10;
    std::string rerank_model;
    std::string embedding_model;
    std::vector<std::string> delimiters = kDefaultDelimiters;
    bool fail_fast = false;
};

// Full linking pass: multi-skill classify -> split -> retrieve -> rerank.
// `multiskill` may be null to skip splitting; `index` is required for
// embedding retrieval. `sentence_context` entries are looked up by
// (job_id, sentence_index) for the context prompt variants.
std::vector<LinkedSkill> run_link(const std::vector<corpus::SkillSpan>& spans,
                                  const std::vector<corpus::JobPosting>& postings,
                                  const taxonomy::Taxonomy& taxonomy,
                                  const EmbeddingIndex* index, const MultiSkillModel* multiskill,
                                  providers::Client& client, const LinkOptions& options);

}  // namespace skillforge::link
