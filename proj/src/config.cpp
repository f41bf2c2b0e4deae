#include "skillforge/config.hpp"

#include <filesystem>
#include <map>

#include <CLI11.hpp>

#include "skillforge/errors.hpp"

namespace skillforge::config {

namespace {

template <typename T>
T parse_scalar(const CLI::ConfigItem& item, const std::string& what) {
    if (item.inputs.size() != 1)
        throw ConfigError("config key '" + what + "' expects a single value");
    std::istringstream ss(item.inputs[0]);
    T value{};
    if (!(ss >> value)) throw ConfigError("config key '" + what + "' has a bad value");
    return value;
}

std::string single_string(const CLI::ConfigItem& item, const std::string& what) {
    if (item.inputs.size() != 1)
        throw ConfigError("config key '" + what + "' expects a single value");
    return item.inputs[0];
}

}  // namespace

ToolConfig load_tool_config(const std::string& path, bool required) {
    ToolConfig cfg;
    if (!std::filesystem::exists(path)) {
        if (required) throw ConfigError("config file not found: " + path);
        return cfg;
    }
    std::vector<CLI::ConfigItem> items;
    try {
        items = CLI::ConfigTOML().from_file(path);
    } catch (const CLI::Error& e) {
        throw ConfigError("cannot parse config file " + path + ": " + e.what());
    }

    struct PriceRow {
        std::string model;
        providers::ModelPrice price;
    };
    std::map<std::string, PriceRow> price_rows;

    for (const auto& item : items) {
        if (item.name == "++" || item.name == "--") continue;  // section markers
        std::string full = item.fullname();
        if (item.parents.empty()) {
            if (item.name == "chat_model") cfg.chat_model = single_string(item, full);
            else if (item.name == "rerank_model") cfg.rerank_model = single_string(item, full);
            else if (item.name == "embedding_model")
                cfg.embedding_model = single_string(item, full);
            else if (item.name == "strategy") cfg.strategy = single_string(item, full);
            else if (item.name == "shots") cfg.shots = parse_scalar<std::size_t>(item, full);
            else if (item.name == "retrieval") cfg.retrieval = single_string(item, full);
            else if (item.name == "rerank") cfg.rerank = single_string(item, full);
            else if (item.name == "k") cfg.k = parse_scalar<std::size_t>(item, full);
            else if (item.name == "seed") cfg.seed = parse_scalar<std::uint64_t>(item, full);
            else if (item.name == "delimiters") cfg.delimiters = item.inputs;
            else if (item.name == "cache_dir") cfg.cache_dir = single_string(item, full);
            else if (item.name == "ledger") cfg.ledger_path = single_string(item, full);
            else if (item.name == "mode") cfg.mode = single_string(item, full);
            else if (item.name == "jobs")
                cfg.client.jobs = parse_scalar<std::size_t>(item, full);
            else if (item.name == "max_attempts")
                cfg.client.max_attempts = parse_scalar<int>(item, full);
            else if (item.name == "backoff_seconds")
                cfg.client.backoff_base_seconds = parse_scalar<double>(item, full);
            else if (item.name == "corpus") cfg.corpus_path = single_string(item, full);
            else if (item.name == "skills") cfg.skills_path = single_string(item, full);
            else if (item.name == "relations") cfg.relations_path = single_string(item, full);
            else if (item.name == "split") cfg.split_path = single_string(item, full);
            else if (item.name == "external_tags")
                cfg.external_tags_path = single_string(item, full);
            else if (item.name == "index") cfg.index_path = single_string(item, full);
            else if (item.name == "multiskill_model")
                cfg.multiskill_path = single_string(item, full);
            else if (item.name == "out_dir") cfg.out_dir = single_string(item, full);
            else
                throw ConfigError("unknown config key '" + full + "'");
            continue;
        }
        if (item.parents.size() == 2 && item.parents[0] == "providers") {
            auto& endpoint = cfg.client.endpoints[item.parents[1]];
            endpoint.name = item.parents[1];
            if (item.name == "base_url") endpoint.base_url = single_string(item, full);
            else if (item.name == "api_key_env") endpoint.api_key_env = single_string(item, full);
            else if (item.name == "models") {
                for (const auto& model : item.inputs)
                    cfg.client.model_to_provider[model] = item.parents[1];
            } else
                throw ConfigError("unknown provider key '" + full + "'");
            continue;
        }
        if (item.parents.size() == 2 && item.parents[0] == "price") {
            auto& row = price_rows[item.parents[1]];
            if (item.name == "model") row.model = single_string(item, full);
            else if (item.name == "input")
                row.price.input_usd_per_mtok = parse_scalar<double>(item, full);
            else if (item.name == "output")
                row.price.output_usd_per_mtok = parse_scalar<double>(item, full);
            else
                throw ConfigError("unknown price key '" + full + "'");
            continue;
        }
        throw ConfigError("unknown config section '" + full + "'");
    }

    for (const auto& [label, row] : price_rows) {
        if (row.model.empty())
            throw ConfigError("price entry '" + label + "' is missing its model id");
        if (row.price.input_usd_per_mtok < 0 || row.price.output_usd_per_mtok < 0)
            throw ConfigError("price entry '" + label + "' has a negative price");
        cfg.prices[row.model] = row.price;
    }
    return cfg;
}

}  // namespace skillforge::config
