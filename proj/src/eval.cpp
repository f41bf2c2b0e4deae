#include "skillforge/eval.hpp"

#include <algorithm>
#include <set>

#include "skillforge/errors.hpp"

namespace skillforge::eval {

namespace {

PrecisionRecallF1 prf(double correct_p, double total_p, double correct_r, double total_r) {
    PrecisionRecallF1 out;
    out.precision = total_p > 0 ? correct_p / total_p : 0.0;
    out.recall = total_r > 0 ? correct_r / total_r : 0.0;
    out.f1 = (out.precision + out.recall) > 0
                 ? 2.0 * out.precision * out.recall / (out.precision + out.recall)
                 : 0.0;
    return out;
}

}  // namespace

PrecisionRecallF1 conll_f1(const std::vector<std::vector<corpus::SkillSpan>>& gold,
                           const std::vector<std::vector<corpus::SkillSpan>>& pred) {
    if (gold.size() != pred.size())
        throw ParseError("gold and prediction sentence counts differ: " +
                         std::to_string(gold.size()) + " vs " + std::to_string(pred.size()));
    long correct = 0, n_gold = 0, n_pred = 0;
    for (std::size_t s = 0; s < gold.size(); ++s) {
        n_gold += static_cast<long>(gold[s].size());
        n_pred += static_cast<long>(pred[s].size());
        for (const auto& p : pred[s]) {
            for (const auto& g : gold[s]) {
                if (g.token_start == p.token_start && g.token_end == p.token_end) {
                    ++correct;
                    break;
                }
            }
        }
    }
    return prf(correct, n_pred, correct, n_gold);
}

MucResult muc_partial(const std::vector<std::vector<corpus::SkillSpan>>& gold,
                      const std::vector<std::vector<corpus::SkillSpan>>& pred) {
    if (gold.size() != pred.size())
        throw ParseError("gold and prediction sentence counts differ: " +
                         std::to_string(gold.size()) + " vs " + std::to_string(pred.size()));
    MucResult out;
    for (std::size_t s = 0; s < gold.size(); ++s) {
        std::vector<bool> pred_used(pred[s].size(), false);
        for (const auto& g : gold[s]) {
            bool matched = false;
            for (std::size_t j = 0; j < pred[s].size(); ++j) {
                if (pred_used[j]) continue;
                const auto& p = pred[s][j];
                bool overlap = g.token_start < p.token_end && p.token_start < g.token_end;
                if (!overlap) continue;
                pred_used[j] = true;
                matched = true;
                if (g.token_start == p.token_start && g.token_end == p.token_end)
                    ++out.counts.COR;
                else
                    ++out.counts.PAR;
                break;
            }
            if (!matched) ++out.counts.MIS;
        }
        for (bool used : pred_used)
            if (!used) ++out.counts.SPU;
    }
    double weighted = out.counts.COR + 0.5 * out.counts.PAR;
    double possible = out.counts.COR + out.counts.PAR + out.counts.MIS;
    double actual = out.counts.COR + out.counts.PAR + out.counts.SPU;
    out.scores = prf(weighted, actual, weighted, possible);
    return out;
}

double hitrate_at_k(const std::vector<RankedItem>& items, std::size_t k) {
    if (items.empty()) throw ParseError("hitrate over an empty item list");
    if (k == 0) throw ParseError("hitrate requires k >= 1");
    long hits = 0;
    for (const auto& item : items) {
        std::size_t limit = std::min(k, item.ranked_ids.size());
        for (std::size_t i = 0; i < limit; ++i) {
            if (item.ranked_ids[i] == item.gold_id) {
                ++hits;
                break;
            }
        }
    }
    return static_cast<double>(hits) / static_cast<double>(items.size());
}

double end_to_end_score(const std::map<std::string, std::vector<std::string>>& gold,
                        const std::map<std::string, std::vector<std::string>>& pred) {
    long correct = 0, total = 0;
    for (const auto& [job_id, gold_skills] : gold) {
        std::set<std::string> pred_set;
        auto it = pred.find(job_id);
        if (it != pred.end()) pred_set.insert(it->second.begin(), it->second.end());
        for (const auto& skill : gold_skills) {
            ++total;
            if (pred_set.count(skill)) ++correct;
        }
    }
    if (total == 0) throw ParseError("end-to-end score over empty gold");
    return static_cast<double>(correct) / static_cast<double>(total);
}

double krippendorff_alpha(const AnnotationTable& table, bool* degenerate) {
    if (degenerate) *degenerate = false;
    // coincidence matrix over label pairs within units
    std::map<std::string, std::map<std::string, double>> coincidence;
    std::map<std::string, double> marginal;
    double n_total = 0.0;
    std::size_t scored_units = 0;
    for (const auto& [unit, annotations] : table) {
        std::vector<std::string> values;
        values.reserve(annotations.size());
        for (const auto& [annotator, label] : annotations) values.push_back(label);
        std::size_t m = values.size();
        if (m < 2) continue;
        ++scored_units;
        double weight = 1.0 / static_cast<double>(m - 1);
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t j = 0; j < m; ++j) {
                if (i == j) continue;
                coincidence[values[i]][values[j]] += weight;
            }
        }
    }
    if (scored_units < 2) throw ParseError("alpha needs at least two units with two annotations");
    for (const auto& [c, row] : coincidence)
        for (const auto& [k, v] : row) {
            marginal[c] += v;
            n_total += v;
        }

    double observed = 0.0;  // sum of off-diagonal coincidences
    for (const auto& [c, row] : coincidence)
        for (const auto& [k, v] : row)
            if (c != k) observed += v;

    double expected = 0.0;  // sum over c != k of n_c * n_k
    for (const auto& [c, nc] : marginal)
        for (const auto& [k, nk] : marginal)
            if (c != k) expected += nc * nk;

    if (expected == 0.0) {
        if (degenerate) *degenerate = true;
        return 1.0;
    }
    return 1.0 - (n_total - 1.0) * observed / expected;
}

std::string error_category_to_string(ErrorCategory c) {
    switch (c) {
        case ErrorCategory::not_labeled: return "not_labeled";
        case ErrorCategory::ontologically_related: return "ontologically_related";
        case ErrorCategory::not_related_or_retrieved: return "not_related_or_retrieved";
        case ErrorCategory::not_related: return "not_related";
    }
    return "not_related";
}

ErrorCategory categorize_error(const std::optional<std::string>& gold_link,
                               const std::string& predicted_id,
                               const std::vector<std::string>& retrieved_ids,
                               const taxonomy::Taxonomy& taxonomy) {
    if (!gold_link) return ErrorCategory::not_labeled;
    auto rel = taxonomy.relatedness(predicted_id, *gold_link);
    if (rel == taxonomy::Relatedness::ancestor || rel == taxonomy::Relatedness::descendant ||
        rel == taxonomy::Relatedness::sibling)
        return ErrorCategory::ontologically_related;
    if (std::find(retrieved_ids.begin(), retrieved_ids.end(), *gold_link) == retrieved_ids.end())
        return ErrorCategory::not_related_or_retrieved;
    return ErrorCategory::not_related;
}

}  // namespace skillforge::eval
