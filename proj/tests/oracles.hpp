#pragma once

// Brute-force reference implementations used to check the production
// metrics. These stay deliberately independent of the library code paths:
// they recompute everything from definitions.

#include <algorithm>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "skillforge/corpus.hpp"
#include "skillforge/eval.hpp"

namespace oracles {

using skillforge::corpus::SkillSpan;
using Sentences = std::vector<std::vector<SkillSpan>>;

struct Prf {
    double precision = 0, recall = 0, f1 = 0;
};

inline Prf make_prf(double tp_p, double np, double tp_r, double ng) {
    Prf r;
    r.precision = np > 0 ? tp_p / np : 0;
    r.recall = ng > 0 ? tp_r / ng : 0;
    r.f1 = (r.precision + r.recall) > 0
               ? 2 * r.precision * r.recall / (r.precision + r.recall)
               : 0;
    return r;
}

inline Prf ref_conll(const Sentences& gold, const Sentences& pred) {
    double correct = 0, n_gold = 0, n_pred = 0;
    for (std::size_t s = 0; s < gold.size(); ++s) {
        n_gold += gold[s].size();
        n_pred += pred[s].size();
        std::multiset<std::pair<std::size_t, std::size_t>> gold_set;
        for (const auto& g : gold[s]) gold_set.insert({g.token_start, g.token_end});
        for (const auto& p : pred[s])
            if (gold_set.count({p.token_start, p.token_end})) correct += 1;
    }
    return make_prf(correct, n_pred, correct, n_gold);
}

struct MucCounts {
    long COR = 0, PAR = 0, MIS = 0, SPU = 0;
};

inline std::pair<Prf, MucCounts> ref_muc(const Sentences& gold, const Sentences& pred) {
    MucCounts c;
    for (std::size_t s = 0; s < gold.size(); ++s) {
        std::vector<int> taken(pred[s].size(), 0);
        for (const auto& g : gold[s]) {
            int hit = -1;
            for (std::size_t j = 0; j < pred[s].size(); ++j) {
                if (taken[j]) continue;
                const auto& p = pred[s][j];
                std::size_t lo = std::max(g.token_start, p.token_start);
                std::size_t hi = std::min(g.token_end, p.token_end);
                if (lo < hi) {
                    hit = static_cast<int>(j);
                    break;
                }
            }
            if (hit < 0) {
                ++c.MIS;
            } else {
                taken[hit] = 1;
                const auto& p = pred[s][hit];
                if (p.token_start == g.token_start && p.token_end == g.token_end)
                    ++c.COR;
                else
                    ++c.PAR;
            }
        }
        for (std::size_t j = 0; j < pred[s].size(); ++j)
            if (!taken[j]) ++c.SPU;
    }
    double w = c.COR + 0.5 * c.PAR;
    return {make_prf(w, c.COR + c.PAR + c.SPU, w, c.COR + c.PAR + c.MIS), c};
}

inline double ref_hitrate(const std::vector<skillforge::eval::RankedItem>& items, std::size_t k) {
    double hits = 0;
    for (const auto& item : items) {
        for (std::size_t i = 0; i < item.ranked_ids.size() && i < k; ++i) {
            if (item.ranked_ids[i] == item.gold_id) {
                hits += 1;
                break;
            }
        }
    }
    return hits / static_cast<double>(items.size());
}

inline double ref_e2e(const std::map<std::string, std::vector<std::string>>& gold,
                      const std::map<std::string, std::vector<std::string>>& pred) {
    double correct = 0, total = 0;
    for (const auto& [job, skills] : gold) {
        for (const auto& s : skills) {
            total += 1;
            auto it = pred.find(job);
            if (it == pred.end()) continue;
            if (std::find(it->second.begin(), it->second.end(), s) != it->second.end())
                correct += 1;
        }
    }
    return correct / total;
}

// Direct-formula alpha: observed disagreement from within-unit pairs,
// expected disagreement from pooled label marginals.
inline double ref_alpha(const skillforge::eval::AnnotationTable& table) {
    std::vector<std::vector<std::string>> units;
    for (const auto& [unit, ann] : table) {
        std::vector<std::string> values;
        for (const auto& [a, label] : ann) values.push_back(label);
        if (values.size() >= 2) units.push_back(values);
    }
    double n = 0;
    std::map<std::string, double> pooled;
    for (const auto& u : units)
        for (const auto& v : u) {
            n += 1;
            pooled[v] += 1;
        }
    double d_obs = 0;
    for (const auto& u : units) {
        double m = static_cast<double>(u.size());
        double disagree = 0;
        for (std::size_t i = 0; i < u.size(); ++i)
            for (std::size_t j = 0; j < u.size(); ++j)
                if (i != j && u[i] != u[j]) disagree += 1;
        d_obs += disagree / (m - 1);
    }
    d_obs /= n;
    double d_exp = 0;
    for (const auto& [c, nc] : pooled)
        for (const auto& [k, nk] : pooled)
            if (c != k) d_exp += nc * nk;
    d_exp /= n * (n - 1);
    if (d_exp == 0) return 1.0;
    return 1.0 - d_obs / d_exp;
}

// Classic insert/delete-only edit distance over codepoints, full DP table.
inline std::size_t ref_indel(const std::vector<char32_t>& a, const std::vector<char32_t>& b) {
    std::vector<std::vector<std::size_t>> d(a.size() + 1,
                                            std::vector<std::size_t>(b.size() + 1, 0));
    for (std::size_t i = 0; i <= a.size(); ++i) d[i][0] = i;
    for (std::size_t j = 0; j <= b.size(); ++j) d[0][j] = j;
    for (std::size_t i = 1; i <= a.size(); ++i) {
        for (std::size_t j = 1; j <= b.size(); ++j) {
            if (a[i - 1] == b[j - 1])
                d[i][j] = d[i - 1][j - 1];
            else
                d[i][j] = 1 + std::min(d[i - 1][j], d[i][j - 1]);
        }
    }
    return d[a.size()][b.size()];
}

// Exhaustive top-k cosine scan with the spec's tie rule (score desc, id asc).
inline std::vector<std::string> ref_top_k_cosine(const std::vector<float>& query,
                                                 const std::vector<std::vector<float>>& rows,
                                                 const std::vector<std::string>& ids,
                                                 std::size_t k) {
    auto norm = [](const std::vector<float>& v) {
        double s = 0;
        for (float x : v) s += static_cast<double>(x) * x;
        return std::sqrt(s);
    };
    double qn = norm(query);
    std::vector<std::pair<double, std::string>> scored;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        double dot = 0;
        for (std::size_t d = 0; d < query.size(); ++d)
            dot += static_cast<double>(query[d]) * rows[i][d];
        double rn = norm(rows[i]);
        scored.push_back({dot / (qn * rn), ids[i]});
    }
    std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
    });
    std::vector<std::string> out;
    for (std::size_t i = 0; i < scored.size() && i < k; ++i) out.push_back(scored[i].second);
    return out;
}

// ---- random instance generators ----

inline std::vector<SkillSpan> random_disjoint_spans(std::mt19937& rng, std::size_t n_tokens);

// Disjoint spans per sentence, matching what IOB sequences can express.
inline Sentences random_span_sets(std::mt19937& rng, std::size_t max_sentences = 10,
                                  std::size_t max_tokens = 20) {
    std::uniform_int_distribution<std::size_t> n_sent(1, max_sentences);
    std::uniform_int_distribution<std::size_t> n_tok(1, max_tokens);
    Sentences out(n_sent(rng));
    for (auto& sentence : out) sentence = random_disjoint_spans(rng, n_tok(rng));
    return out;
}

// Valid IOB span layout: non-overlapping spans for round-trip properties.
inline std::vector<SkillSpan> random_disjoint_spans(std::mt19937& rng, std::size_t n_tokens) {
    std::vector<SkillSpan> spans;
    std::size_t pos = 0;
    std::uniform_int_distribution<int> gap(0, 3), len(1, 3), coin(0, 1);
    while (pos < n_tokens) {
        pos += static_cast<std::size_t>(gap(rng));
        if (pos >= n_tokens) break;
        std::size_t l = std::min<std::size_t>(static_cast<std::size_t>(len(rng)),
                                              n_tokens - pos);
        if (coin(rng)) {
            SkillSpan span;
            span.token_start = pos;
            span.token_end = pos + l;
            spans.push_back(span);
        }
        pos += l;
    }
    return spans;
}

inline std::string random_token(std::mt19937& rng, std::size_t max_len = 8) {
    static const std::string alphabet = "abcdefgh";
    std::uniform_int_distribution<std::size_t> len(1, max_len);
    std::uniform_int_distribution<std::size_t> pick(0, alphabet.size() - 1);
    std::string out;
    std::size_t n = len(rng);
    for (std::size_t i = 0; i < n; ++i) out += alphabet[pick(rng)];
    return out;
}

inline std::string random_phrase(std::mt19937& rng, std::size_t max_tokens = 4) {
    std::uniform_int_distribution<std::size_t> n(1, max_tokens);
    std::string out;
    std::size_t count = n(rng);
    for (std::size_t i = 0; i < count; ++i) {
        if (i) out += ' ';
        out += random_token(rng);
    }
    return out;
}

}  // namespace oracles
