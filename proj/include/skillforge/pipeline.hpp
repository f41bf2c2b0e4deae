#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "skillforge/identify.hpp"
#include "skillforge/link.hpp"
#include "skillforge/providers.hpp"

namespace skillforge::pipeline {

struct RunConfig {
    std::string corpus_path;
    std::string skills_path;
    std::string relations_path;
    std::string split_path;          // optional: load instead of deriving from seed
    std::string external_tags_path;  // optional: pre-tagged file instead of LLM tagging
    std::string index_path;          // optional: prebuilt embedding index
    std::string multiskill_path;     // optional: trained multi-skill model
    std::string out_dir = "run_out";
    std::string cache_dir = "cache";
    std::string ledger_path;  // optional JSONL sink
    providers::Mode mode = providers::Mode::live;

    identify::PromptStrategy strategy{identify::StrategyKind::dynamic_few_shot, 10};
    link::RetrievalMethod retrieval = link::RetrievalMethod::embedding;
    link::RerankStrategy rerank{};
    std::string chat_model;
    std::string rerank_model;
    std::string embedding_model;
    std::size_t k = 10;
    std::uint64_t seed = 13;
    std::vector<std::string> delimiters = link::kDefaultDelimiters;

    providers::ClientConfig client;
    providers::PriceTable prices;
};

struct RunManifest {
    nlohmann::json config;
    nlohmann::json input_hashes;  // path-ish name -> sha256
    nlohmann::json metrics;
    long prompt_tokens = 0;
    long completion_tokens = 0;
    std::optional<double> cost_usd;
    std::vector<std::string> warnings;
    std::string predictions_path;
};

std::string manifest_to_json(const RunManifest& manifest);

// identify -> link -> evaluate over the test split; writes predictions.jsonl
// and manifest.json under config.out_dir. Deterministic in replay mode.
RunManifest run(const RunConfig& config);

}  // namespace skillforge::pipeline
