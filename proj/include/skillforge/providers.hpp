#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace skillforge::providers {

struct Message {
    std::string role;  // system | user | assistant
    std::string content;
    bool operator==(const Message&) const = default;
};

struct ChatRequest {
    std::string model;
    std::vector<Message> messages;
    double temperature = 0.0;  // every pipeline path runs deterministic
    bool operator==(const ChatRequest&) const = default;
};

struct EmbeddingVector {
    std::vector<float> values;
    std::string model;
};

enum class Stage { identify, rerank };
std::string stage_to_string(Stage s);
Stage stage_from_string(const std::string& s);

struct UsageRecord {
    std::string model;
    long prompt_tokens = 0;
    long completion_tokens = 0;
    Stage stage = Stage::identify;
    std::string timestamp;  // ISO-8601 UTC, empty in synthetic records
};

struct ModelPrice {
    double input_usd_per_mtok = 0.0;
    double output_usd_per_mtok = 0.0;
};

using PriceTable = std::map<std::string, ModelPrice>;

// Sum of prompt/1e6*in + completion/1e6*out across records. Throws
// ConfigError when a record's model has no price entry.
double ledger_cost(const std::vector<UsageRecord>& records, const PriceTable& prices);

// Append-only usage sink; safe for concurrent record() calls. When a path is
// set, every record is also appended to that JSONL file.
class UsageLedger {
public:
    UsageLedger() = default;
    explicit UsageLedger(std::string path) : path_(std::move(path)) {}

    void record(const UsageRecord& record);
    std::vector<UsageRecord> records() const;
    long total_prompt_tokens() const;
    long total_completion_tokens() const;

private:
    mutable std::mutex mutex_;
    std::vector<UsageRecord> records_;
    std::string path_;
};

std::vector<UsageRecord> load_ledger(const std::string& path);

// Canonical JSON for a request; the SHA-256 of these bytes is the cache key.
std::string canonical_chat_json(const ChatRequest& request);
std::string canonical_embedding_json(const std::string& model, const std::string& text);
std::string sha256_hex(const std::string& bytes);

// Content-addressed response store: cache_dir/<sha256>.json, written via a
// temp file + rename so concurrent writers never expose partial entries.
class ResponseCache {
public:
    explicit ResponseCache(std::string dir);
    std::optional<std::string> get(const std::string& key) const;  // value JSON text
    void put(const std::string& key, const std::string& value_json) const;
    const std::string& dir() const { return dir_; }

private:
    std::string dir_;
};

struct ProviderEndpoint {
    std::string name;
    std::string base_url;     // e.g. https://api.openai.com/v1
    std::string api_key_env;  // falls back to SKILLFORGE_API_KEY
};

struct ClientConfig {
    std::map<std::string, ProviderEndpoint> endpoints;       // by provider name
    std::map<std::string, std::string> model_to_provider;    // model id -> provider name
    int max_attempts = 3;
    double backoff_base_seconds = 1.0;  // 1s, 4s, 16s
    std::size_t jobs = 4;               // bound on concurrent in-flight requests
};

enum class Mode { live, replay };
Mode mode_from_string(const std::string& s);

// e5-family models expect task prefixes on their inputs; other models get
// the text unchanged.
enum class EmbedKind { query, passage };
std::string embedding_input(const std::string& model, EmbedKind kind, const std::string& text);

struct ChatResult {
    std::string content;
    UsageRecord usage;
    bool from_cache = false;
};

// Chat + embedding access over an OpenAI-compatible wire shape. In replay
// mode every request must hit the cache; in live mode responses are cached
// after the first round trip and usage is recorded for live calls only.
class Client {
public:
    Client(ClientConfig config, Mode mode, std::shared_ptr<ResponseCache> cache,
           std::shared_ptr<UsageLedger> ledger);

    ChatResult chat(const ChatRequest& request, Stage stage);
    std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts,
                                       const std::string& model);

    // Throws ConfigError when live mode lacks endpoint or credentials for
    // the model; no-op in replay mode.
    void require_access(const std::string& model) const;

    Mode mode() const { return mode_; }
    const ClientConfig& config() const { return config_; }
    std::size_t jobs() const { return config_.jobs; }

private:
    const ProviderEndpoint& endpoint_for(const std::string& model) const;
    std::string api_key_for(const ProviderEndpoint& endpoint) const;
    std::string post_json(const ProviderEndpoint& endpoint, const std::string& path,
                          const std::string& body) const;

    ClientConfig config_;
    Mode mode_;
    std::shared_ptr<ResponseCache> cache_;
    std::shared_ptr<UsageLedger> ledger_;
};

}  // namespace skillforge::providers
