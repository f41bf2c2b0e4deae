#pragma once

#include <optional>
#include <string>
#include <vector>

#include "skillforge/corpus.hpp"
#include "skillforge/providers.hpp"

namespace skillforge::identify {

inline constexpr const char* kSkillStart = "<skill_start>";
inline constexpr const char* kSkillEnd = "<skill_end>";

enum class StrategyKind { zero_shot, static_few_shot, dynamic_few_shot };
StrategyKind strategy_kind_from_string(const std::string& s);
std::string strategy_kind_to_string(StrategyKind kind);

struct PromptStrategy {
    StrategyKind kind = StrategyKind::zero_shot;
    std::size_t shots = 0;  // 0 for zero_shot; typically 2, 6 or 10
};

// Labeled sentences (train + validation) with precomputed embeddings for
// dynamic example retrieval. Embeddings are L2-normalized on construction.
struct ExamplePool {
    std::vector<corpus::TaggedSentence> sentences;
    std::vector<std::vector<float>> embeddings;  // empty when only static/zero used

    bool has_embeddings() const { return !embeddings.empty(); }
};

ExamplePool build_example_pool(const std::vector<corpus::JobPosting>& postings,
                               const std::vector<std::string>& job_ids);

// Fills pool.embeddings through the client (cached per sentence text).
void embed_example_pool(ExamplePool& pool, providers::Client& client,
                        const std::string& embedding_model);

struct TaggerOutput {
    std::string job_id;
    std::size_t sentence_index = 0;
    std::vector<corpus::Iob> labels;
    std::optional<std::string> raw_llm_text;
    std::vector<std::string> warnings;
};

// Sentence text with markers wrapped around its labeled spans.
std::string render_tagged(const corpus::TaggedSentence& sentence);

// Indices into the pool: the top-`shots` sentences by cosine similarity to
// `query_embedding`, nearest first, ties broken by pool index.
std::vector<std::size_t> select_dynamic_examples(const ExamplePool& pool,
                                                 const std::vector<float>& query_embedding,
                                                 std::size_t shots);

// Balanced fixed examples: alternating with-skill / without-skill sentences
// in pool order, the same list for every target.
std::vector<std::size_t> select_static_examples(const ExamplePool& pool, std::size_t shots);

providers::ChatRequest build_prompt(const corpus::TaggedSentence& sentence,
                                    const PromptStrategy& strategy, const ExamplePool& pool,
                                    const std::vector<float>& query_embedding,
                                    const std::string& model,
                                    const std::string& instruction);

// Projects marker-tagged LLM output back onto the original tokens. Unbalanced
// markers are dropped with a warning; when the stripped text drifts from the
// original, positions travel through a character-level minimum-edit alignment
// and snap outward to token boundaries.
TaggerOutput align_markers(const corpus::TaggedSentence& original, const std::string& llm_text);

struct IdentifyOptions {
    std::string model;
    std::string embedding_model;  // for dynamic example retrieval
    PromptStrategy strategy;
    bool fail_fast = false;  // otherwise failed sentences come back all-O with a warning
};

std::vector<TaggerOutput> run_identify(const std::vector<corpus::JobPosting>& postings,
                                       const IdentifyOptions& options, providers::Client& client,
                                       const ExamplePool& pool);

// Reads a corpus-format file of predicted labels and checks each token
// against the reference postings. raw_llm_text stays absent.
std::vector<TaggerOutput> load_external_tags(const std::string& path,
                                             const std::vector<corpus::JobPosting>& reference);

}  // namespace skillforge::identify
