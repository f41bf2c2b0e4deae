#pragma once

#include <string>
#include <vector>

#include "skillforge/link.hpp"
#include "skillforge/providers.hpp"

namespace skillforge::config {

// Everything a subcommand can inherit from the TOML config file. Flags
// override these; credentials come from the environment.
struct ToolConfig {
    providers::ClientConfig client;
    providers::PriceTable prices;

    std::string chat_model = "claude-3-7-sonnet";
    std::string rerank_model = "gpt-4o";
    std::string embedding_model = "multilingual-e5-large";
    std::string strategy = "dynamic";
    std::size_t shots = 10;
    std::string retrieval = "embedding";
    std::string rerank = "none";
    std::size_t k = 10;
    std::uint64_t seed = 13;
    std::vector<std::string> delimiters = link::kDefaultDelimiters;
    std::string cache_dir = "cache";
    std::string ledger_path;
    std::string mode = "live";

    // run-subcommand inputs and outputs
    std::string corpus_path;
    std::string skills_path;
    std::string relations_path;
    std::string split_path;
    std::string external_tags_path;
    std::string index_path;
    std::string multiskill_path;
    std::string out_dir = "run_out";
};

// Parses the file when it exists; `required` turns a missing file into an
// error. See the README for the schema.
ToolConfig load_tool_config(const std::string& path, bool required);

}  // namespace skillforge::config
