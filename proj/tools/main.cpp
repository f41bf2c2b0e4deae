#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "skillforge/config.hpp"
#include "skillforge/corpus.hpp"
#include "skillforge/errors.hpp"
#include "skillforge/eval.hpp"
#include "skillforge/fuzzy.hpp"
#include "skillforge/identify.hpp"
#include "skillforge/link.hpp"
#include "skillforge/pipeline.hpp"
#include "skillforge/providers.hpp"
#include "skillforge/svm.hpp"
#include "skillforge/taxonomy.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace skillforge;

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// data goes to --out when given, stdout otherwise
void emit(const std::string& out_path, const std::string& content) {
    if (out_path.empty()) {
        std::cout << content;
        return;
    }
    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw ConfigError("cannot write output file: " + out_path);
    out << content;
}

providers::Client make_client(const config::ToolConfig& cfg, const std::string& mode,
                              const std::string& cache_dir, std::size_t jobs) {
    providers::ClientConfig client_config = cfg.client;
    if (jobs > 0) client_config.jobs = jobs;
    auto cache = std::make_shared<providers::ResponseCache>(cache_dir);
    auto ledger = cfg.ledger_path.empty()
                      ? std::make_shared<providers::UsageLedger>()
                      : std::make_shared<providers::UsageLedger>(cfg.ledger_path);
    return providers::Client(client_config, providers::mode_from_string(mode), cache, ledger);
}

std::vector<corpus::JobPosting> filter_area(std::vector<corpus::JobPosting> postings,
                                            const std::string& area) {
    if (area.empty()) return postings;
    std::vector<corpus::JobPosting> out;
    for (auto& p : postings)
        if (p.area == area) out.push_back(std::move(p));
    if (out.empty()) throw ConfigError("no postings with area '" + area + "'");
    return out;
}

// aligned per-sentence span lists for the span metrics
void aligned_spans(const std::vector<corpus::JobPosting>& gold,
                   const std::vector<corpus::JobPosting>& pred,
                   std::vector<std::vector<corpus::SkillSpan>>& gold_out,
                   std::vector<std::vector<corpus::SkillSpan>>& pred_out) {
    std::map<std::string, const corpus::JobPosting*> pred_by_id;
    for (const auto& p : pred) pred_by_id[p.job_id] = &p;
    for (const auto& g : gold) {
        auto it = pred_by_id.find(g.job_id);
        if (it == pred_by_id.end())
            throw ConfigError("prediction file is missing job '" + g.job_id + "'");
        if (it->second->sentences.size() != g.sentences.size())
            throw ConfigError("job '" + g.job_id + "': sentence count differs between files");
        for (std::size_t s = 0; s < g.sentences.size(); ++s) {
            gold_out.push_back(corpus::spans_from_iob(g.sentences[s], g.job_id, s));
            pred_out.push_back(corpus::spans_from_iob(it->second->sentences[s], g.job_id, s));
        }
    }
}

std::map<std::string, std::vector<std::string>> load_job_skills_jsonl(const std::string& path,
                                                                      const std::string& area) {
    std::map<std::string, std::vector<std::string>> out;
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open file: " + path);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json j = json::parse(line, nullptr, true);
        if (!area.empty() && j.value("area", "") != area) continue;
        auto& skills = out[j.at("job_id").get<std::string>()];
        for (const auto& s : j.at("skills")) skills.push_back(s.get<std::string>());
    }
    return out;
}

std::string format_scalar(double value) {
    std::ostringstream ss;
    ss.precision(6);
    ss << value;
    return ss.str() + "\n";
}

int dispatch(CLI::App& app, const config::ToolConfig& cfg);

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"skillforge: skill extraction, taxonomy linking and evaluation"};
    app.require_subcommand(1);

    std::string config_path = "skillforge.toml";
    auto* config_opt = app.add_option("--config", config_path, "TOML config file")
                           ->envname("SKILLFORGE_CONFIG");

    // ---- split ----
    auto* split_cmd = app.add_subcommand("split", "derive a train/validation/test split");
    static std::string split_in, split_out;
    static std::uint64_t split_seed = 0;
    static bool split_seed_given = false;
    split_cmd->add_option("--in", split_in, "corpus file")->required();
    split_cmd->add_option("--seed", split_seed)->each([](const std::string&) {
        split_seed_given = true;
    });
    split_cmd->add_option("--out", split_out, "output path (stdout when omitted)");

    // ---- identify ----
    auto* id_cmd = app.add_subcommand("identify", "tag skill spans with an LLM");
    static std::string id_in, id_out, id_pool, id_strategy, id_model, id_embedding_model,
        id_mode, id_cache;
    static std::size_t id_shots = 0, id_jobs = 0;
    static bool id_shots_given = false, id_fail_fast = false;
    id_cmd->add_option("--in", id_in, "corpus file to tag")->required();
    id_cmd->add_option("--pool", id_pool, "labeled corpus used as the example pool");
    id_cmd->add_option("--strategy", id_strategy, "zero | static | dynamic");
    id_cmd->add_option("--shots", id_shots)->each([](const std::string&) {
        id_shots_given = true;
    });
    id_cmd->add_option("--model", id_model, "chat model id");
    id_cmd->add_option("--embedding-model", id_embedding_model);
    id_cmd->add_option("--mode", id_mode, "live | replay");
    id_cmd->add_option("--cache", id_cache, "cache directory");
    id_cmd->add_option("--jobs", id_jobs, "max in-flight requests");
    id_cmd->add_flag("--fail-fast", id_fail_fast, "abort on the first provider error");
    id_cmd->add_option("--out", id_out, "tagged corpus output");

    // ---- train-multiskill ----
    auto* train_cmd = app.add_subcommand("train-multiskill", "train the multi-skill classifier");
    static std::string train_in, train_out;
    static double train_C = 1.0, train_gamma = 0.0;
    train_cmd->add_option("--in", train_in, "labeled spans (surface<TAB>multi|single)")
        ->required();
    train_cmd->add_option("--C", train_C, "soft-margin C");
    train_cmd->add_option("--gamma", train_gamma, "RBF gamma (0 = scale heuristic)");
    train_cmd->add_option("--out", train_out, "model JSON output");

    // ---- index ----
    auto* index_cmd = app.add_subcommand("index", "build the taxonomy embedding index");
    static std::string index_skills, index_relations, index_model, index_out, index_jsonl,
        index_mode, index_cache, index_passage = "label";
    index_cmd->add_option("--skills", index_skills)->required();
    index_cmd->add_option("--relations", index_relations)->required();
    index_cmd->add_option("--model", index_model, "embedding model id");
    index_cmd->add_option("--passage", index_passage, "label | label_desc");
    index_cmd->add_option("--mode", index_mode, "live | replay");
    index_cmd->add_option("--cache", index_cache, "cache directory");
    index_cmd->add_option("--out", index_out, "index output path");
    index_cmd->add_option("--jsonl", index_jsonl, "also dump the taxonomy as JSONL here");

    // ---- link ----
    auto* link_cmd = app.add_subcommand("link", "link tagged spans to the taxonomy");
    static std::string link_in, link_skills, link_relations, link_retrieval, link_rerank,
        link_index, link_multiskill, link_model, link_embedding_model, link_mode, link_cache,
        link_out;
    static std::size_t link_k = 0, link_jobs = 0;
    static bool link_fail_fast = false;
    link_cmd->add_option("--in", link_in, "tagged corpus file")->required();
    link_cmd->add_option("--skills", link_skills)->required();
    link_cmd->add_option("--relations", link_relations)->required();
    link_cmd->add_option("--retrieval", link_retrieval, "fuzzy | embedding");
    link_cmd->add_option("--rerank", link_rerank, "none | [reason+|causal+]key|context|context_desc");
    link_cmd->add_option("--k", link_k, "candidates per query");
    link_cmd->add_option("--index", link_index, "prebuilt embedding index");
    link_cmd->add_option("--multiskill", link_multiskill, "multi-skill model JSON");
    link_cmd->add_option("--model", link_model, "rerank model id");
    link_cmd->add_option("--embedding-model", link_embedding_model);
    link_cmd->add_option("--mode", link_mode, "live | replay");
    link_cmd->add_option("--cache", link_cache, "cache directory");
    link_cmd->add_option("--jobs", link_jobs, "max in-flight requests");
    link_cmd->add_flag("--fail-fast", link_fail_fast);
    link_cmd->add_option("--out", link_out, "predictions JSONL output");

    // ---- eval ----
    auto* eval_cmd = app.add_subcommand("eval", "compute a metric");
    static std::string eval_metric, eval_gold, eval_pred, eval_table, eval_area;
    static std::size_t eval_k = 10;
    eval_cmd->add_option("--metric", eval_metric, "conll | muc | hitrate | e2e | alpha")
        ->required();
    eval_cmd->add_option("--gold", eval_gold);
    eval_cmd->add_option("--pred", eval_pred);
    eval_cmd->add_option("--items", eval_table, "items file for hitrate/alpha");
    eval_cmd->add_option("--k", eval_k);
    eval_cmd->add_option("--filter-area", eval_area, "restrict to one occupation area");

    // ---- run ----
    auto* run_cmd = app.add_subcommand("run", "full identify -> link -> evaluate pipeline");
    static std::string run_mode, run_out_dir;
    run_cmd->add_option("--mode", run_mode, "live | replay");
    run_cmd->add_option("--out-dir", run_out_dir, "output directory");

    // ---- cost ----
    auto* cost_cmd = app.add_subcommand("cost", "price a usage ledger");
    static std::string cost_ledger;
    cost_cmd->add_option("--ledger", cost_ledger, "ledger JSONL")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        config::ToolConfig cfg = config::load_tool_config(config_path, config_opt->count() > 0);

        if (split_cmd->parsed()) {
            auto postings = corpus::load_corpus(split_in);
            auto split =
                corpus::split_corpus(postings, split_seed_given ? split_seed : cfg.seed);
            emit(split_out, corpus::split_to_json(split));
            return 0;
        }

        if (id_cmd->parsed()) {
            if (id_strategy.empty()) id_strategy = cfg.strategy;
            if (!id_shots_given) id_shots = cfg.shots;
            if (id_model.empty()) id_model = cfg.chat_model;
            if (id_embedding_model.empty()) id_embedding_model = cfg.embedding_model;
            if (id_mode.empty()) id_mode = cfg.mode;
            if (id_cache.empty()) id_cache = cfg.cache_dir;

            identify::IdentifyOptions options;
            options.model = id_model;
            options.embedding_model = id_embedding_model;
            options.strategy.kind = identify::strategy_kind_from_string(id_strategy);
            options.strategy.shots =
                options.strategy.kind == identify::StrategyKind::zero_shot ? 0 : id_shots;
            options.fail_fast = id_fail_fast;

            auto postings = corpus::load_corpus(id_in);
            identify::ExamplePool pool;
            if (options.strategy.kind != identify::StrategyKind::zero_shot) {
                if (id_pool.empty())
                    throw ConfigError("--pool is required for few-shot strategies");
                auto pool_postings = corpus::load_corpus(id_pool);
                std::vector<std::string> ids;
                for (const auto& p : pool_postings) ids.push_back(p.job_id);
                pool = identify::build_example_pool(pool_postings, ids);
            }
            auto client = make_client(cfg, id_mode, id_cache, id_jobs);
            client.require_access(options.model);
            if (options.strategy.kind == identify::StrategyKind::dynamic_few_shot) {
                client.require_access(options.embedding_model);
                identify::embed_example_pool(pool, client, options.embedding_model);
            }
            auto tags = identify::run_identify(postings, options, client, pool);

            std::map<std::string, std::map<std::size_t, const identify::TaggerOutput*>> by_job;
            for (const auto& t : tags) by_job[t.job_id][t.sentence_index] = &t;
            std::vector<corpus::JobPosting> out_postings = postings;
            for (auto& p : out_postings) {
                p.span_attrs.clear();
                for (std::size_t s = 0; s < p.sentences.size(); ++s) {
                    const auto* t = by_job.at(p.job_id).at(s);
                    p.sentences[s].labels = t->labels;
                    for (const auto& w : t->warnings)
                        std::cerr << p.job_id << "#" << s << ": " << w << "\n";
                }
            }
            emit(id_out, corpus::format_corpus(out_postings));
            return 0;
        }

        if (train_cmd->parsed()) {
            auto spans = link::load_labeled_spans(train_in);
            auto model = link::train_multiskill(spans, train_C, train_gamma);
            std::cerr << "trained on " << spans.size() << " spans, "
                      << model.support_vectors.size() << " support vectors, training accuracy "
                      << model.training_accuracy << "\n";
            emit(train_out, link::multiskill_to_json(model));
            return 0;
        }

        if (index_cmd->parsed()) {
            if (index_model.empty()) index_model = cfg.embedding_model;
            if (index_mode.empty()) index_mode = cfg.mode;
            if (index_cache.empty()) index_cache = cfg.cache_dir;
            auto taxonomy = taxonomy::load_taxonomy(index_skills, index_relations);
            std::cerr << "loaded " << taxonomy.size() << " taxonomy entries\n";
            if (!index_jsonl.empty()) emit(index_jsonl, taxonomy::taxonomy_to_jsonl(taxonomy));
            if (!index_out.empty()) {
                auto client = make_client(cfg, index_mode, index_cache, 0);
                client.require_access(index_model);
                auto mode = index_passage == "label_desc"
                                ? taxonomy::PassageMode::label_description
                                : taxonomy::PassageMode::label;
                auto index = link::build_embedding_index(taxonomy, client, index_model, mode);
                link::save_index(index, index_out);
                std::cerr << "wrote " << index.size() << " x " << index.dim << " index to "
                          << index_out << "\n";
            } else if (index_jsonl.empty()) {
                throw ConfigError("nothing to do: pass --out and/or --jsonl");
            }
            return 0;
        }

        if (link_cmd->parsed()) {
            if (link_retrieval.empty()) link_retrieval = cfg.retrieval;
            if (link_rerank.empty()) link_rerank = cfg.rerank;
            if (link_k == 0) link_k = cfg.k;
            if (link_model.empty()) link_model = cfg.rerank_model;
            if (link_embedding_model.empty()) link_embedding_model = cfg.embedding_model;
            if (link_mode.empty()) link_mode = cfg.mode;
            if (link_cache.empty()) link_cache = cfg.cache_dir;

            auto postings = corpus::load_corpus(link_in);
            auto taxonomy = taxonomy::load_taxonomy(link_skills, link_relations);
            auto client = make_client(cfg, link_mode, link_cache, link_jobs);

            link::LinkOptions options;
            options.retrieval = link::retrieval_method_from_string(link_retrieval);
            options.rerank = link::rerank_strategy_from_string(link_rerank);
            options.k = link_k;
            options.rerank_model = link_model;
            options.embedding_model = link_embedding_model;
            options.delimiters = cfg.delimiters;
            options.fail_fast = link_fail_fast;
            if (options.rerank.base != link::RerankBase::none)
                client.require_access(options.rerank_model);

            link::EmbeddingIndex index;
            bool have_index = false;
            if (options.retrieval == link::RetrievalMethod::embedding) {
                if (!link_index.empty()) {
                    index = link::load_index(link_index);
                } else {
                    client.require_access(options.embedding_model);
                    index = link::build_embedding_index(taxonomy, client,
                                                        options.embedding_model);
                }
                have_index = true;
            }
            link::MultiSkillModel multiskill;
            bool have_multiskill = false;
            if (!link_multiskill.empty()) {
                multiskill = link::load_multiskill(link_multiskill);
                have_multiskill = true;
            }

            std::vector<corpus::SkillSpan> spans;
            for (const auto& p : postings)
                for (const auto& span : corpus::spans_of_posting(p)) spans.push_back(span);
            auto linked =
                link::run_link(spans, postings, taxonomy, have_index ? &index : nullptr,
                               have_multiskill ? &multiskill : nullptr, client, options);

            std::string out_text;
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
                rec["strategy"] = link::rerank_strategy_to_string(options.rerank);
                out_text += rec.dump() + "\n";
                for (const auto& w : l.warnings)
                    std::cerr << l.span.job_id << " '" << l.query << "': " << w << "\n";
            }
            emit(link_out, out_text);
            return 0;
        }

        if (eval_cmd->parsed()) {
            if (eval_metric == "conll" || eval_metric == "muc") {
                if (eval_gold.empty() || eval_pred.empty())
                    throw ConfigError("--gold and --pred corpus files are required");
                auto gold = filter_area(corpus::load_corpus(eval_gold), eval_area);
                auto pred = corpus::load_corpus(eval_pred);
                std::vector<std::vector<corpus::SkillSpan>> gold_spans, pred_spans;
                aligned_spans(gold, pred, gold_spans, pred_spans);
                if (eval_metric == "conll") {
                    auto r = eval::conll_f1(gold_spans, pred_spans);
                    emit("", json{{"precision", r.precision},
                                  {"recall", r.recall},
                                  {"f1", r.f1}}
                                 .dump(2) +
                                 "\n");
                } else {
                    auto r = eval::muc_partial(gold_spans, pred_spans);
                    emit("", json{{"precision", r.scores.precision},
                                  {"recall", r.scores.recall},
                                  {"f1", r.scores.f1},
                                  {"COR", r.counts.COR},
                                  {"INC", r.counts.INC},
                                  {"PAR", r.counts.PAR},
                                  {"MIS", r.counts.MIS},
                                  {"SPU", r.counts.SPU}}
                                 .dump(2) +
                                 "\n");
                }
                return 0;
            }
            if (eval_metric == "hitrate") {
                std::string path = eval_table.empty() ? eval_pred : eval_table;
                if (path.empty()) throw ConfigError("--items (or --pred) JSONL is required");
                std::vector<eval::RankedItem> items;
                std::ifstream in(path, std::ios::binary);
                if (!in) throw ConfigError("cannot open file: " + path);
                std::string line;
                while (std::getline(in, line)) {
                    if (line.empty()) continue;
                    json j = json::parse(line);
                    if (!eval_area.empty() && j.value("area", "") != eval_area) continue;
                    eval::RankedItem item;
                    item.gold_id = j.at("gold_id").get<std::string>();
                    for (const auto& r : j.at("ranked_ids"))
                        item.ranked_ids.push_back(r.get<std::string>());
                    items.push_back(std::move(item));
                }
                emit("", format_scalar(eval::hitrate_at_k(items, eval_k)));
                return 0;
            }
            if (eval_metric == "e2e") {
                if (eval_gold.empty() || eval_pred.empty())
                    throw ConfigError("--gold and --pred JSONL files are required");
                auto gold = load_job_skills_jsonl(eval_gold, eval_area);
                auto pred = load_job_skills_jsonl(eval_pred, "");
                emit("", format_scalar(eval::end_to_end_score(gold, pred)));
                return 0;
            }
            if (eval_metric == "alpha") {
                std::string path = eval_table.empty() ? eval_pred : eval_table;
                if (path.empty()) throw ConfigError("--items (or --pred) JSONL is required");
                eval::AnnotationTable table;
                std::ifstream in(path, std::ios::binary);
                if (!in) throw ConfigError("cannot open file: " + path);
                std::string line;
                while (std::getline(in, line)) {
                    if (line.empty()) continue;
                    json j = json::parse(line);
                    table[j.at("unit").get<std::string>()][j.at("annotator").get<std::string>()] =
                        j.at("label").get<std::string>();
                }
                bool degenerate = false;
                double alpha = eval::krippendorff_alpha(table, &degenerate);
                if (degenerate)
                    std::cerr << "note: no expected disagreement; alpha defined as 1.0\n";
                emit("", format_scalar(alpha));
                return 0;
            }
            throw ConfigError("unknown metric '" + eval_metric + "'");
        }

        if (run_cmd->parsed()) {
            pipeline::RunConfig rc;
            rc.corpus_path = cfg.corpus_path;
            rc.skills_path = cfg.skills_path;
            rc.relations_path = cfg.relations_path;
            rc.split_path = cfg.split_path;
            rc.external_tags_path = cfg.external_tags_path;
            rc.index_path = cfg.index_path;
            rc.multiskill_path = cfg.multiskill_path;
            rc.out_dir = run_out_dir.empty() ? cfg.out_dir : run_out_dir;
            rc.cache_dir = cfg.cache_dir;
            rc.ledger_path = cfg.ledger_path;
            rc.mode = providers::mode_from_string(run_mode.empty() ? cfg.mode : run_mode);
            rc.strategy.kind = identify::strategy_kind_from_string(cfg.strategy);
            rc.strategy.shots =
                rc.strategy.kind == identify::StrategyKind::zero_shot ? 0 : cfg.shots;
            rc.retrieval = link::retrieval_method_from_string(cfg.retrieval);
            rc.rerank = link::rerank_strategy_from_string(cfg.rerank);
            rc.chat_model = cfg.chat_model;
            rc.rerank_model = cfg.rerank_model;
            rc.embedding_model = cfg.embedding_model;
            rc.k = cfg.k;
            rc.seed = cfg.seed;
            rc.delimiters = cfg.delimiters;
            rc.client = cfg.client;
            rc.prices = cfg.prices;
            if (rc.corpus_path.empty() || rc.skills_path.empty() || rc.relations_path.empty())
                throw ConfigError("run needs corpus, skills and relations set in the config");

            auto manifest = pipeline::run(rc);
            std::cerr << "metrics: " << manifest.metrics.dump() << "\n";
            std::cerr << "wrote " << manifest.predictions_path << "\n";
            return 0;
        }

        if (cost_cmd->parsed()) {
            auto records = providers::load_ledger(cost_ledger);
            double total = providers::ledger_cost(records, cfg.prices);
            char buf[64];
            std::snprintf(buf, sizeof(buf), "%.6f\n", total);
            emit("", buf);
            return 0;
        }

        throw ConfigError("no subcommand selected");
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
