#include "skillforge/pipeline.hpp"

#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "skillforge/assets.hpp"
#include "skillforge/errors.hpp"
#include "skillforge/eval.hpp"
#include "skillforge/taxonomy.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace skillforge::pipeline {

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write file: " + path);
    out << content;
}

json config_snapshot(const RunConfig& config) {
    json j;
    j["corpus"] = config.corpus_path;
    j["skills"] = config.skills_path;
    j["relations"] = config.relations_path;
    j["split"] = config.split_path;
    j["external_tags"] = config.external_tags_path;
    j["index"] = config.index_path;
    j["multiskill_model"] = config.multiskill_path;
    j["mode"] = config.mode == providers::Mode::replay ? "replay" : "live";
    j["strategy"] = identify::strategy_kind_to_string(config.strategy.kind);
    j["shots"] = config.strategy.shots;
    j["retrieval"] = link::retrieval_method_to_string(config.retrieval);
    j["rerank"] = link::rerank_strategy_to_string(config.rerank);
    j["chat_model"] = config.chat_model;
    j["rerank_model"] = config.rerank_model;
    j["embedding_model"] = config.embedding_model;
    j["k"] = config.k;
    j["seed"] = config.seed;
    j["delimiters"] = config.delimiters;
    return j;
}

std::vector<corpus::JobPosting> select_jobs(const std::vector<corpus::JobPosting>& postings,
                                            const std::vector<std::string>& ids) {
    std::map<std::string, const corpus::JobPosting*> by_id;
    for (const auto& p : postings) by_id[p.job_id] = &p;
    std::vector<corpus::JobPosting> out;
    for (const auto& id : ids) {
        auto it = by_id.find(id);
        if (it == by_id.end()) throw ConfigError("split references unknown job '" + id + "'");
        out.push_back(*it->second);
    }
    return out;
}

json prf_to_json(const eval::PrecisionRecallF1& prf) {
    return json{{"precision", prf.precision}, {"recall", prf.recall}, {"f1", prf.f1}};
}

}  // namespace

std::string manifest_to_json(const RunManifest& manifest) {
    json j;
    j["config"] = manifest.config;
    j["input_hashes"] = manifest.input_hashes;
    j["metrics"] = manifest.metrics;
    j["ledger"] = {{"prompt_tokens", manifest.prompt_tokens},
                   {"completion_tokens", manifest.completion_tokens}};
    if (manifest.cost_usd)
        j["ledger"]["cost_usd"] = *manifest.cost_usd;
    else
        j["ledger"]["cost_usd"] = nullptr;
    j["warnings"] = manifest.warnings;
    j["predictions"] = manifest.predictions_path;
    return j.dump(2) + "\n";
}

RunManifest run(const RunConfig& config) {
    if (config.mode == providers::Mode::replay && !fs::exists(config.cache_dir))
        throw ConfigError("replay mode requires an existing cache at " + config.cache_dir);

    auto cache = std::make_shared<providers::ResponseCache>(config.cache_dir);
    auto ledger = std::make_shared<providers::UsageLedger>(config.ledger_path);
    providers::Client client(config.client, config.mode, cache, ledger);

    bool llm_identify = config.external_tags_path.empty();
    bool needs_embeddings = config.retrieval == link::RetrievalMethod::embedding ||
                            config.strategy.kind == identify::StrategyKind::dynamic_few_shot;
    // fail before any work when live credentials are missing
    if (llm_identify) client.require_access(config.chat_model);
    if (config.rerank.base != link::RerankBase::none) client.require_access(config.rerank_model);
    if (needs_embeddings && config.index_path.empty()) client.require_access(config.embedding_model);

    RunManifest manifest;
    manifest.config = config_snapshot(config);

    auto postings = corpus::load_corpus(config.corpus_path);
    auto taxonomy = taxonomy::load_taxonomy(config.skills_path, config.relations_path);

    manifest.input_hashes["corpus"] = providers::sha256_hex(read_file(config.corpus_path));
    manifest.input_hashes["skills"] = providers::sha256_hex(read_file(config.skills_path));
    manifest.input_hashes["relations"] =
        providers::sha256_hex(read_file(config.relations_path));
    if (llm_identify)
        manifest.input_hashes["prompt_identify"] = providers::sha256_hex(
            read_file(assets::asset_path(assets::kIdentifyPrompt)));
    if (config.rerank.base != link::RerankBase::none) {
        const char* asset = assets::kRerankPrompt;
        if (config.rerank.reasoning == link::RerankReasoning::plain)
            asset = assets::kRerankReasonPrompt;
        if (config.rerank.reasoning == link::RerankReasoning::causal)
            asset = assets::kRerankCausalPrompt;
        manifest.input_hashes["prompt_rerank"] =
            providers::sha256_hex(read_file(assets::asset_path(asset)));
    }

    corpus::SplitSpec split;
    if (!config.split_path.empty())
        split = corpus::split_from_json(read_file(config.split_path));
    else
        split = corpus::split_corpus(postings, config.seed);
    auto test_jobs = select_jobs(postings, split.test);
    if (test_jobs.empty()) throw ConfigError("test split is empty");

    // ---- identification ----
    std::vector<identify::TaggerOutput> tags;
    if (llm_identify) {
        std::vector<std::string> pool_ids = split.train;
        pool_ids.insert(pool_ids.end(), split.validation.begin(), split.validation.end());
        auto pool = identify::build_example_pool(postings, pool_ids);
        if (config.strategy.kind == identify::StrategyKind::dynamic_few_shot)
            identify::embed_example_pool(pool, client, config.embedding_model);
        identify::IdentifyOptions options;
        options.model = config.chat_model;
        options.embedding_model = config.embedding_model;
        options.strategy = config.strategy;
        tags = identify::run_identify(test_jobs, options, client, pool);
    } else {
        tags = identify::load_external_tags(config.external_tags_path, test_jobs);
    }

    // gold and predicted spans per sentence, in test order
    std::vector<std::vector<corpus::SkillSpan>> gold_spans, pred_spans;
    std::vector<corpus::SkillSpan> flat_pred;
    {
        std::map<std::pair<std::string, std::size_t>, const identify::TaggerOutput*> by_key;
        for (const auto& t : tags) by_key[{t.job_id, t.sentence_index}] = &t;
        for (const auto& job : test_jobs) {
            for (std::size_t s = 0; s < job.sentences.size(); ++s) {
                gold_spans.push_back(corpus::spans_from_iob(job.sentences[s], job.job_id, s));
                auto it = by_key.find({job.job_id, s});
                if (it == by_key.end())
                    throw ConfigError("missing tagger output for job '" + job.job_id +
                                      "' sentence " + std::to_string(s));
                corpus::TaggedSentence tagged = job.sentences[s];
                tagged.labels = it->second->labels;
                pred_spans.push_back(corpus::spans_from_iob(tagged, job.job_id, s));
                for (const auto& span : pred_spans.back()) flat_pred.push_back(span);
                for (const auto& w : it->second->warnings)
                    manifest.warnings.push_back("identify " + job.job_id + "#" +
                                                std::to_string(s) + ": " + w);
            }
        }
    }

    auto conll = eval::conll_f1(gold_spans, pred_spans);
    auto muc = eval::muc_partial(gold_spans, pred_spans);

    // ---- linking ----
    link::EmbeddingIndex index;
    bool have_index = false;
    if (config.retrieval == link::RetrievalMethod::embedding) {
        if (!config.index_path.empty())
            index = link::load_index(config.index_path);
        else
            index = link::build_embedding_index(taxonomy, client, config.embedding_model);
        have_index = true;
    }
    link::MultiSkillModel multiskill;
    bool have_multiskill = false;
    if (!config.multiskill_path.empty()) {
        multiskill = link::load_multiskill(config.multiskill_path);
        have_multiskill = true;
    }

    link::LinkOptions link_options;
    link_options.retrieval = config.retrieval;
    link_options.rerank = config.rerank;
    link_options.k = config.k;
    link_options.rerank_model = config.rerank_model;
    link_options.embedding_model = config.embedding_model;
    link_options.delimiters = config.delimiters;
    auto linked = link::run_link(flat_pred, test_jobs, taxonomy, have_index ? &index : nullptr,
                                 have_multiskill ? &multiskill : nullptr, client, link_options);

    for (const auto& l : linked)
        for (const auto& w : l.warnings)
            manifest.warnings.push_back("link " + l.span.job_id + "#" +
                                        std::to_string(l.span.sentence_index) + " '" + l.query +
                                        "': " + w);

    // ---- evaluation ----
    std::map<std::string, std::vector<std::string>> gold_links, pred_links;
    for (const auto& job : test_jobs)
        for (const auto& span : corpus::spans_of_posting(job))
            if (span.gold_link) gold_links[job.job_id].push_back(*span.gold_link);
    for (const auto& l : linked)
        if (!l.chosen.empty()) pred_links[l.span.job_id].push_back(l.chosen);

    manifest.metrics["identification"] = {{"conll_f1", prf_to_json(conll)},
                                          {"muc_partial", prf_to_json(muc.scores)}};
    manifest.metrics["identification"]["muc_counts"] = {{"COR", muc.counts.COR},
                                                        {"INC", muc.counts.INC},
                                                        {"PAR", muc.counts.PAR},
                                                        {"MIS", muc.counts.MIS},
                                                        {"SPU", muc.counts.SPU}};
    if (!gold_links.empty()) {
        manifest.metrics["end_to_end"] = eval::end_to_end_score(gold_links, pred_links);
    } else {
        manifest.metrics["end_to_end"] = nullptr;
        manifest.warnings.push_back("no gold links in the test split; end-to-end score skipped");
    }
    manifest.metrics["counts"] = {
        {"test_jobs", test_jobs.size()},
        {"gold_spans",
         std::accumulate(gold_spans.begin(), gold_spans.end(), std::size_t{0},
                         [](std::size_t acc, const auto& v) { return acc + v.size(); })},
        {"predicted_spans", flat_pred.size()},
        {"linked", linked.size()}};

    // ---- outputs ----
    fs::create_directories(config.out_dir);
    std::string predictions;
    for (const auto& l : linked) {
        json rec;
        rec["job_id"] = l.span.job_id;
        rec["sentence_index"] = l.span.sentence_index;
        rec["span"] = {l.span.token_start, l.span.token_end};
        rec["surface"] = l.span.surface;
        rec["query"] = l.query;
        json cands = json::array();
        for (const auto& c : l.retrieved.candidates)
            cands.push_back({{"id", c.taxonomy_id}, {"score", c.score}});
        rec["candidates"] = cands;
        rec["chosen"] = l.chosen;
        rec["strategy"] = link::rerank_strategy_to_string(config.rerank);
        predictions += rec.dump() + "\n";
    }
    std::string predictions_path = (fs::path(config.out_dir) / "predictions.jsonl").string();
    write_file(predictions_path, predictions);
    manifest.predictions_path = predictions_path;

    manifest.prompt_tokens = ledger->total_prompt_tokens();
    manifest.completion_tokens = ledger->total_completion_tokens();
    auto records = ledger->records();
    if (records.empty()) {
        manifest.cost_usd = 0.0;
    } else {
        try {
            manifest.cost_usd = providers::ledger_cost(records, config.prices);
        } catch (const ConfigError&) {
            manifest.cost_usd.reset();
            manifest.warnings.push_back("cost not computed: price table incomplete");
        }
    }

    write_file((fs::path(config.out_dir) / "manifest.json").string(),
               manifest_to_json(manifest));
    return manifest;
}

}  // namespace skillforge::pipeline
