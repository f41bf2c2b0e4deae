#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

namespace skillforge::link {

// Bag-of-words RBF-kernel SVM deciding whether a span bundles several skills.
// Feature vectors are whitespace-token counts over the training vocabulary.
struct MultiSkillModel {
    std::map<std::string, std::size_t> vocabulary;  // token -> feature index
    // sparse count vectors, parallel to dual_coefs
    std::vector<std::vector<std::pair<std::size_t, double>>> support_vectors;
    std::vector<double> dual_coefs;  // alpha_i * y_i
    double bias = 0.0;
    double gamma = 0.0;
    double C = 1.0;
    double training_accuracy = 0.0;
};

struct LabeledSpanText {
    std::string surface;
    bool is_multi = false;
};

// Token count vector of a span over the model vocabulary; unknown tokens
// are ignored.
std::vector<std::pair<std::size_t, double>> vectorize(const MultiSkillModel& model,
                                                      const std::string& surface);

double decision_value(const MultiSkillModel& model, const std::string& surface);

// decision > 0 means multi-skill. Throws on an empty span.
bool classify_multiskill(const std::string& surface, const MultiSkillModel& model);

// Soft-margin kernel SVM trained with an SMO-style max-violating-pair solver
// (KKT tolerance 1e-3). gamma <= 0 selects 1 / (n_features * count variance).
// Deterministic: identical inputs give identical models.
MultiSkillModel train_multiskill(const std::vector<LabeledSpanText>& spans, double C = 1.0,
                                 double gamma = 0.0);

std::string multiskill_to_json(const MultiSkillModel& model);
MultiSkillModel multiskill_from_json(const std::string& text);
void save_multiskill(const MultiSkillModel& model, const std::string& path);
MultiSkillModel load_multiskill(const std::string& path);

// `surface<TAB>multi|single` rows, one span per line, '#' comments allowed.
std::vector<LabeledSpanText> load_labeled_spans(const std::string& path);

}  // namespace skillforge::link
