#include "skillforge/providers.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>
#include <unistd.h>

#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include <httplib.h>

#include "skillforge/errors.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace skillforge::providers {

std::string stage_to_string(Stage s) {
    return s == Stage::identify ? "identify" : "rerank";
}

Stage stage_from_string(const std::string& s) {
    if (s == "identify") return Stage::identify;
    if (s == "rerank") return Stage::rerank;
    throw ConfigError("unknown stage '" + s + "'");
}

Mode mode_from_string(const std::string& s) {
    if (s == "live") return Mode::live;
    if (s == "replay") return Mode::replay;
    throw ConfigError("unknown mode '" + s + "' (expected live or replay)");
}

std::string embedding_input(const std::string& model, EmbedKind kind, const std::string& text) {
    if (model.find("e5") == std::string::npos) return text;
    return (kind == EmbedKind::query ? "query: " : "passage: ") + text;
}

double ledger_cost(const std::vector<UsageRecord>& records, const PriceTable& prices) {
    double total = 0.0;
    for (const auto& r : records) {
        auto it = prices.find(r.model);
        if (it == prices.end()) throw ConfigError("no price entry for model '" + r.model + "'");
        total += r.prompt_tokens / 1e6 * it->second.input_usd_per_mtok +
                 r.completion_tokens / 1e6 * it->second.output_usd_per_mtok;
    }
    return total;
}

namespace {

json usage_to_json(const UsageRecord& r) {
    json j;
    j["model"] = r.model;
    j["prompt_tokens"] = r.prompt_tokens;
    j["completion_tokens"] = r.completion_tokens;
    j["stage"] = stage_to_string(r.stage);
    j["timestamp"] = r.timestamp;
    return j;
}

UsageRecord usage_from_json(const json& j) {
    UsageRecord r;
    r.model = j.at("model").get<std::string>();
    r.prompt_tokens = j.at("prompt_tokens").get<long>();
    r.completion_tokens = j.at("completion_tokens").get<long>();
    r.stage = stage_from_string(j.at("stage").get<std::string>());
    r.timestamp = j.value("timestamp", "");
    return r;
}

std::string now_utc_iso8601() {
    auto now = std::chrono::system_clock::now();
    std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

}  // namespace

void UsageLedger::record(const UsageRecord& record) {
    std::lock_guard<std::mutex> lock(mutex_);
    records_.push_back(record);
    if (!path_.empty()) {
        std::ofstream out(path_, std::ios::app | std::ios::binary);
        out << usage_to_json(record).dump() << '\n';
    }
}

std::vector<UsageRecord> UsageLedger::records() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return records_;
}

long UsageLedger::total_prompt_tokens() const {
    std::lock_guard<std::mutex> lock(mutex_);
    long total = 0;
    for (const auto& r : records_) total += r.prompt_tokens;
    return total;
}

long UsageLedger::total_completion_tokens() const {
    std::lock_guard<std::mutex> lock(mutex_);
    long total = 0;
    for (const auto& r : records_) total += r.completion_tokens;
    return total;
}

std::vector<UsageRecord> load_ledger(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open ledger file: " + path);
    std::vector<UsageRecord> records;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            records.push_back(usage_from_json(json::parse(line)));
        } catch (const json::exception& e) {
            throw ParseError(std::string("bad ledger record: ") + e.what(), line_no);
        }
    }
    return records;
}

std::string canonical_chat_json(const ChatRequest& request) {
    json j;
    j["kind"] = "chat";
    j["model"] = request.model;
    j["temperature"] = request.temperature;
    json msgs = json::array();
    for (const auto& m : request.messages) msgs.push_back({{"content", m.content}, {"role", m.role}});
    j["messages"] = msgs;
    return j.dump();
}

std::string canonical_embedding_json(const std::string& model, const std::string& text) {
    json j;
    j["kind"] = "embedding";
    j["model"] = model;
    j["input"] = text;
    return j.dump();
}

std::string sha256_hex(const std::string& bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr);
    static const char* hex = "0123456789abcdef";
    std::string out;
    out.reserve(len * 2);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 0xF]);
    }
    return out;
}

ResponseCache::ResponseCache(std::string dir) : dir_(std::move(dir)) {
    fs::create_directories(dir_);
}

std::optional<std::string> ResponseCache::get(const std::string& key) const {
    fs::path path = fs::path(dir_) / (key + ".json");
    std::ifstream in(path, std::ios::binary);
    if (!in) return std::nullopt;
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void ResponseCache::put(const std::string& key, const std::string& value_json) const {
    static std::atomic<unsigned long> counter{0};
    fs::path final_path = fs::path(dir_) / (key + ".json");
    fs::path tmp_path = fs::path(dir_) / (key + ".tmp." + std::to_string(::getpid()) + "." +
                                          std::to_string(counter.fetch_add(1)));
    {
        std::ofstream out(tmp_path, std::ios::binary);
        if (!out) throw ProviderError("cannot write cache entry: " + tmp_path.string());
        out << value_json;
    }
    fs::rename(tmp_path, final_path);
}

Client::Client(ClientConfig config, Mode mode, std::shared_ptr<ResponseCache> cache,
               std::shared_ptr<UsageLedger> ledger)
    : config_(std::move(config)), mode_(mode), cache_(std::move(cache)), ledger_(std::move(ledger)) {
    if (!cache_) throw ConfigError("provider client requires a response cache");
}

const ProviderEndpoint& Client::endpoint_for(const std::string& model) const {
    auto it = config_.model_to_provider.find(model);
    if (it == config_.model_to_provider.end())
        throw ConfigError("no provider configured for model '" + model + "'");
    auto ep = config_.endpoints.find(it->second);
    if (ep == config_.endpoints.end())
        throw ConfigError("model '" + model + "' routes to unknown provider '" + it->second + "'");
    return ep->second;
}

std::string Client::api_key_for(const ProviderEndpoint& endpoint) const {
    if (!endpoint.api_key_env.empty()) {
        if (const char* v = std::getenv(endpoint.api_key_env.c_str())) return v;
    }
    if (const char* v = std::getenv("SKILLFORGE_API_KEY")) return v;
    return "";
}

void Client::require_access(const std::string& model) const {
    if (mode_ == Mode::replay) return;
    const auto& ep = endpoint_for(model);
    if (ep.base_url.empty())
        throw ConfigError("provider '" + ep.name + "' has no base_url configured");
    if (api_key_for(ep).empty())
        throw ConfigError("no credentials for provider '" + ep.name + "' (set " +
                          (ep.api_key_env.empty() ? std::string("SKILLFORGE_API_KEY")
                                                  : ep.api_key_env) +
                          ")");
}

std::string Client::post_json(const ProviderEndpoint& endpoint, const std::string& path,
                              const std::string& body) const {
    // split base_url into origin + path prefix
    std::string url = endpoint.base_url;
    std::string origin = url, prefix;
    auto scheme_end = url.find("://");
    if (scheme_end != std::string::npos) {
        auto slash = url.find('/', scheme_end + 3);
        if (slash != std::string::npos) {
            origin = url.substr(0, slash);
            prefix = url.substr(slash);
        }
    }
    if (!prefix.empty() && prefix.back() == '/') prefix.pop_back();

    std::string key = api_key_for(endpoint);
    std::string last_error;
    for (int attempt = 0; attempt < std::max(1, config_.max_attempts); ++attempt) {
        if (attempt > 0 && config_.backoff_base_seconds > 0) {
            double delay = config_.backoff_base_seconds * std::pow(4.0, attempt - 1);
            std::this_thread::sleep_for(std::chrono::duration<double>(delay));
        }
        httplib::Client cli(origin);
        cli.set_connection_timeout(15);
        cli.set_read_timeout(180);
        cli.set_write_timeout(60);
        httplib::Headers headers;
        if (!key.empty()) headers.emplace("Authorization", "Bearer " + key);
        auto res = cli.Post(prefix + path, headers, body, "application/json");
        if (!res) {
            last_error = "transport error: " + httplib::to_string(res.error());
            continue;
        }
        if (res->status >= 200 && res->status < 300) return res->body;
        last_error = "HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 400);
        // client errors other than rate limiting will not improve on retry
        if (res->status >= 400 && res->status < 500 && res->status != 429) break;
    }
    throw ProviderError("request to " + endpoint.name + path + " failed after retries: " +
                        last_error);
}

ChatResult Client::chat(const ChatRequest& request, Stage stage) {
    std::string canonical = canonical_chat_json(request);
    std::string key = sha256_hex(canonical);
    if (auto hit = cache_->get(key)) {
        json value = json::parse(*hit);
        ChatResult out;
        out.content = value.at("response").at("content").get<std::string>();
        if (value["response"].contains("usage"))
            out.usage = usage_from_json(value["response"]["usage"]);
        out.from_cache = true;
        return out;
    }
    if (mode_ == Mode::replay)
        throw ProviderError("cache miss in replay mode: " + key);

    const auto& ep = endpoint_for(request.model);
    json body;
    body["model"] = request.model;
    body["temperature"] = request.temperature;
    body["messages"] = json::array();
    for (const auto& m : request.messages)
        body["messages"].push_back({{"role", m.role}, {"content", m.content}});

    std::string response_text = post_json(ep, "/chat/completions", body.dump());
    json response = json::parse(response_text);
    ChatResult out;
    try {
        out.content = response.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const json::exception& e) {
        throw ProviderError(std::string("unexpected chat response shape: ") + e.what());
    }
    out.usage.model = request.model;
    out.usage.stage = stage;
    out.usage.timestamp = now_utc_iso8601();
    if (response.contains("usage")) {
        out.usage.prompt_tokens = response["usage"].value("prompt_tokens", 0L);
        out.usage.completion_tokens = response["usage"].value("completion_tokens", 0L);
    }
    if (ledger_) ledger_->record(out.usage);

    json cache_value;
    cache_value["request"] = json::parse(canonical);
    cache_value["response"]["content"] = out.content;
    cache_value["response"]["usage"] = usage_to_json(out.usage);
    cache_->put(key, cache_value.dump(2));
    return out;
}

std::vector<EmbeddingVector> Client::embed(const std::vector<std::string>& texts,
                                           const std::string& model) {
    std::vector<EmbeddingVector> out(texts.size());
    std::vector<std::size_t> missing;
    for (std::size_t i = 0; i < texts.size(); ++i) {
        std::string key = sha256_hex(canonical_embedding_json(model, texts[i]));
        if (auto hit = cache_->get(key)) {
            json value = json::parse(*hit);
            out[i].values = value.at("response").at("embedding").get<std::vector<float>>();
            out[i].model = model;
        } else {
            missing.push_back(i);
        }
    }
    if (!missing.empty()) {
        if (mode_ == Mode::replay) {
            std::string key =
                sha256_hex(canonical_embedding_json(model, texts[missing.front()]));
            throw ProviderError("cache miss in replay mode: " + key);
        }
        const auto& ep = endpoint_for(model);
        json body;
        body["model"] = model;
        body["input"] = json::array();
        for (std::size_t i : missing) body["input"].push_back(texts[i]);
        json response = json::parse(post_json(ep, "/embeddings", body.dump()));
        const auto& data = response.at("data");
        if (data.size() != missing.size())
            throw ProviderError("embedding response count mismatch: expected " +
                                std::to_string(missing.size()) + ", got " +
                                std::to_string(data.size()));
        for (std::size_t k = 0; k < missing.size(); ++k) {
            std::size_t i = missing[k];
            out[i].values = data.at(k).at("embedding").get<std::vector<float>>();
            out[i].model = model;
            json cache_value;
            cache_value["request"] = json::parse(canonical_embedding_json(model, texts[i]));
            cache_value["response"]["embedding"] = out[i].values;
            cache_->put(sha256_hex(canonical_embedding_json(model, texts[i])), cache_value.dump());
        }
        if (ledger_ && response.contains("usage")) {
            UsageRecord usage;
            usage.model = model;
            usage.stage = Stage::identify;
            usage.prompt_tokens = response["usage"].value("prompt_tokens", 0L);
            usage.completion_tokens = 0;
            usage.timestamp = now_utc_iso8601();
            ledger_->record(usage);
        }
    }
    std::size_t dim = 0;
    for (const auto& v : out) {
        if (v.values.empty()) throw ProviderError("embedding backend returned an empty vector");
        if (dim == 0) dim = v.values.size();
        if (v.values.size() != dim)
            throw ProviderError("embedding dimension mismatch within one batch");
        double norm = 0.0;
        for (float x : v.values) norm += static_cast<double>(x) * x;
        if (norm <= 0.0) throw ProviderError("embedding backend returned a zero vector");
    }
    return out;
}

}  // namespace skillforge::providers
