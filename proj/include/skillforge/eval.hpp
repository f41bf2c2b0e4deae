#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "skillforge/corpus.hpp"
#include "skillforge/taxonomy.hpp"

namespace skillforge::eval {

struct PrecisionRecallF1 {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

// correct / incorrect-type / partial-boundary / missing / spurious. With a
// single entity type INC stays zero; kept for format fidelity.
struct SpanMatchCounts {
    long COR = 0;
    long INC = 0;
    long PAR = 0;
    long MIS = 0;
    long SPU = 0;
};

struct MucResult {
    PrecisionRecallF1 scores;
    SpanMatchCounts counts;
};

// Exact-boundary span F1. gold/pred are parallel per-sentence span lists.
PrecisionRecallF1 conll_f1(const std::vector<std::vector<corpus::SkillSpan>>& gold,
                           const std::vector<std::vector<corpus::SkillSpan>>& pred);

// Partial-credit matching: per sentence, each gold span greedily takes the
// first unconsumed overlapping prediction; exact boundaries count COR, other
// overlaps PAR (half credit), leftovers MIS/SPU. Micro-averaged.
MucResult muc_partial(const std::vector<std::vector<corpus::SkillSpan>>& gold,
                      const std::vector<std::vector<corpus::SkillSpan>>& pred);

struct RankedItem {
    std::string gold_id;
    std::vector<std::string> ranked_ids;
};

// Fraction of items whose gold id appears within the first k ranked ids.
double hitrate_at_k(const std::vector<RankedItem>& items, std::size_t k);

// Per-job containment score: every gold skill occurrence scores 1 when the
// job's prediction set contains it; result is correct / total gold count.
// Predictions act as a set, gold duplicates are each tested.
double end_to_end_score(const std::map<std::string, std::vector<std::string>>& gold,
                        const std::map<std::string, std::vector<std::string>>& pred);

// unit id -> annotator id -> chosen label ("none" is a label like any other).
using AnnotationTable = std::map<std::string, std::map<std::string, std::string>>;

// Coincidence-matrix alpha with nominal distance. Units with fewer than two
// annotations are excluded. When expected disagreement is zero the value is
// defined as 1.0 (flag reported through `degenerate`).
double krippendorff_alpha(const AnnotationTable& table, bool* degenerate = nullptr);

enum class ErrorCategory { not_labeled, ontologically_related, not_related_or_retrieved, not_related };

std::string error_category_to_string(ErrorCategory c);

// Classify a wrong (or gold-less) link prediction.
ErrorCategory categorize_error(const std::optional<std::string>& gold_link,
                               const std::string& predicted_id,
                               const std::vector<std::string>& retrieved_ids,
                               const taxonomy::Taxonomy& taxonomy);

}  // namespace skillforge::eval
