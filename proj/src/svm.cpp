#include "skillforge/svm.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <nlohmann/json.hpp>

#include "skillforge/errors.hpp"
#include "skillforge/textnorm.hpp"

using nlohmann::json;

namespace skillforge::link {

namespace {

using SparseVec = std::vector<std::pair<std::size_t, double>>;

SparseVec count_tokens(const std::map<std::string, std::size_t>& vocabulary,
                       const std::string& surface) {
    std::map<std::size_t, double> counts;
    for (const auto& token : textnorm::split_whitespace(textnorm::to_lower_turkish(surface))) {
        auto it = vocabulary.find(token);
        if (it != vocabulary.end()) counts[it->second] += 1.0;
    }
    return SparseVec(counts.begin(), counts.end());
}

double squared_norm(const SparseVec& v) {
    double s = 0.0;
    for (const auto& [i, x] : v) s += x * x;
    return s;
}

double sparse_dot(const SparseVec& a, const SparseVec& b) {
    double s = 0.0;
    std::size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        if (a[i].first == b[j].first) {
            s += a[i].second * b[j].second;
            ++i;
            ++j;
        } else if (a[i].first < b[j].first) {
            ++i;
        } else {
            ++j;
        }
    }
    return s;
}

double rbf(const SparseVec& a, const SparseVec& b, double a_norm, double b_norm, double gamma) {
    double d2 = a_norm + b_norm - 2.0 * sparse_dot(a, b);
    if (d2 < 0) d2 = 0;
    return std::exp(-gamma * d2);
}

}  // namespace

std::vector<std::pair<std::size_t, double>> vectorize(const MultiSkillModel& model,
                                                      const std::string& surface) {
    return count_tokens(model.vocabulary, surface);
}

double decision_value(const MultiSkillModel& model, const std::string& surface) {
    SparseVec x = vectorize(model, surface);
    double x_norm = squared_norm(x);
    double value = model.bias;
    for (std::size_t i = 0; i < model.support_vectors.size(); ++i) {
        value += model.dual_coefs[i] *
                 rbf(x, model.support_vectors[i], x_norm, squared_norm(model.support_vectors[i]),
                     model.gamma);
    }
    return value;
}

bool classify_multiskill(const std::string& surface, const MultiSkillModel& model) {
    if (textnorm::split_whitespace(surface).empty())
        throw ConfigError("cannot classify an empty span");
    return decision_value(model, surface) > 0.0;
}

MultiSkillModel train_multiskill(const std::vector<LabeledSpanText>& spans, double C,
                                 double gamma) {
    std::size_t n = spans.size();
    if (n < 2) throw ConfigError("multi-skill training needs at least two spans");
    bool any_multi = false, any_single = false;
    for (const auto& s : spans) (s.is_multi ? any_multi : any_single) = true;
    if (!any_multi || !any_single)
        throw ConfigError("multi-skill training needs both classes present");

    MultiSkillModel model;
    model.C = C;
    for (const auto& s : spans)
        for (const auto& token : textnorm::split_whitespace(textnorm::to_lower_turkish(s.surface)))
            model.vocabulary.emplace(token, 0);
    std::size_t next = 0;
    for (auto& [token, index] : model.vocabulary) index = next++;
    std::size_t n_features = model.vocabulary.size();

    std::vector<SparseVec> x(n);
    std::vector<double> y(n), x_norm(n);
    for (std::size_t i = 0; i < n; ++i) {
        x[i] = count_tokens(model.vocabulary, spans[i].surface);
        y[i] = spans[i].is_multi ? 1.0 : -1.0;
        x_norm[i] = squared_norm(x[i]);
    }

    if (gamma <= 0.0) {
        // 1 / (n_features * variance of the dense count matrix)
        double total = static_cast<double>(n) * static_cast<double>(n_features);
        double sum = 0.0, sum_sq = 0.0;
        for (const auto& row : x)
            for (const auto& [idx, v] : row) {
                sum += v;
                sum_sq += v * v;
            }
        double mean = sum / total;
        double variance = sum_sq / total - mean * mean;
        gamma = variance > 0 ? 1.0 / (static_cast<double>(n_features) * variance) : 1.0;
    }
    model.gamma = gamma;

    // kernel rows computed lazily; training sets are small enough to retain
    std::vector<std::vector<double>> kernel_rows(n);
    auto kernel_row = [&](std::size_t i) -> const std::vector<double>& {
        if (kernel_rows[i].empty()) {
            kernel_rows[i].resize(n);
            for (std::size_t j = 0; j < n; ++j)
                kernel_rows[i][j] = rbf(x[i], x[j], x_norm[i], x_norm[j], gamma);
        }
        return kernel_rows[i];
    };

    // SMO on the dual: min 0.5 a^T Q a - e^T a, Q_ij = y_i y_j K_ij
    const double eps = 1e-3;
    const long max_iterations = 200000;
    std::vector<double> alpha(n, 0.0), gradient(n, -1.0);
    for (long iter = 0; iter < max_iterations; ++iter) {
        // max-violating pair
        double up_best = -std::numeric_limits<double>::infinity();
        double low_best = std::numeric_limits<double>::infinity();
        std::ptrdiff_t i = -1, j = -1;
        for (std::size_t t = 0; t < n; ++t) {
            bool in_up = (y[t] > 0 && alpha[t] < C) || (y[t] < 0 && alpha[t] > 0);
            bool in_low = (y[t] > 0 && alpha[t] > 0) || (y[t] < 0 && alpha[t] < C);
            double value = -y[t] * gradient[t];
            if (in_up && value > up_best) {
                up_best = value;
                i = static_cast<std::ptrdiff_t>(t);
            }
            if (in_low && value < low_best) {
                low_best = value;
                j = static_cast<std::ptrdiff_t>(t);
            }
        }
        if (i < 0 || j < 0 || up_best - low_best < eps) break;

        const auto& Ki = kernel_row(static_cast<std::size_t>(i));
        const auto& Kj = kernel_row(static_cast<std::size_t>(j));
        double quad = Ki[i] + Kj[j] - 2.0 * Ki[j];
        if (quad <= 0) quad = 1e-12;
        double delta = (up_best - low_best) / quad;

        // clip so both alphas stay inside [0, C]
        double ai_max = y[i] > 0 ? C - alpha[i] : alpha[i];
        double aj_max = y[j] > 0 ? alpha[j] : C - alpha[j];
        delta = std::min(delta, std::min(ai_max, aj_max));
        if (delta <= 0) break;
        alpha[i] += y[i] * delta;
        alpha[j] -= y[j] * delta;

        for (std::size_t t = 0; t < n; ++t)
            gradient[t] += y[t] * delta * (Ki[t] - Kj[t]);
    }

    // bias from the midpoint of the violating interval
    double up_best = -std::numeric_limits<double>::infinity();
    double low_best = std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < n; ++t) {
        bool in_up = (y[t] > 0 && alpha[t] < C) || (y[t] < 0 && alpha[t] > 0);
        bool in_low = (y[t] > 0 && alpha[t] > 0) || (y[t] < 0 && alpha[t] < C);
        double value = -y[t] * gradient[t];
        if (in_up) up_best = std::max(up_best, value);
        if (in_low) low_best = std::min(low_best, value);
    }
    model.bias = (up_best + low_best) / 2.0;

    for (std::size_t t = 0; t < n; ++t) {
        if (alpha[t] > 1e-12) {
            model.support_vectors.push_back(x[t]);
            model.dual_coefs.push_back(alpha[t] * y[t]);
        }
    }

    std::size_t correct = 0;
    for (std::size_t t = 0; t < n; ++t) {
        bool predicted = decision_value(model, spans[t].surface) > 0.0;
        if (predicted == spans[t].is_multi) ++correct;
    }
    model.training_accuracy = static_cast<double>(correct) / static_cast<double>(n);
    return model;
}

std::string multiskill_to_json(const MultiSkillModel& model) {
    json j;
    j["vocabulary"] = model.vocabulary;
    json svs = json::array();
    for (const auto& sv : model.support_vectors) {
        json row = json::array();
        for (const auto& [idx, v] : sv) row.push_back({idx, v});
        svs.push_back(row);
    }
    j["support_vectors"] = svs;
    j["dual_coefs"] = model.dual_coefs;
    j["bias"] = model.bias;
    j["gamma"] = model.gamma;
    j["C"] = model.C;
    j["training_accuracy"] = model.training_accuracy;
    return j.dump(2) + "\n";
}

MultiSkillModel multiskill_from_json(const std::string& text) {
    json j = json::parse(text);
    MultiSkillModel model;
    model.vocabulary = j.at("vocabulary").get<std::map<std::string, std::size_t>>();
    for (const auto& row : j.at("support_vectors")) {
        std::vector<std::pair<std::size_t, double>> sv;
        for (const auto& cell : row)
            sv.emplace_back(cell.at(0).get<std::size_t>(), cell.at(1).get<double>());
        model.support_vectors.push_back(std::move(sv));
    }
    model.dual_coefs = j.at("dual_coefs").get<std::vector<double>>();
    model.bias = j.at("bias").get<double>();
    model.gamma = j.at("gamma").get<double>();
    model.C = j.at("C").get<double>();
    model.training_accuracy = j.value("training_accuracy", 0.0);
    if (model.support_vectors.size() != model.dual_coefs.size())
        throw ParseError("model has " + std::to_string(model.support_vectors.size()) +
                         " support vectors but " + std::to_string(model.dual_coefs.size()) +
                         " dual coefficients");
    if (model.gamma <= 0) throw ParseError("model gamma must be positive");
    return model;
}

void save_multiskill(const MultiSkillModel& model, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write model file: " + path);
    out << multiskill_to_json(model);
}

MultiSkillModel load_multiskill(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open model file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return multiskill_from_json(ss.str());
}

std::vector<LabeledSpanText> load_labeled_spans(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open span file: " + path);
    std::vector<LabeledSpanText> spans;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        auto tab = line.rfind('\t');
        if (tab == std::string::npos)
            throw ParseError("expected 'surface<TAB>multi|single'", line_no);
        LabeledSpanText span;
        span.surface = line.substr(0, tab);
        std::string label = line.substr(tab + 1);
        if (label == "multi")
            span.is_multi = true;
        else if (label == "single")
            span.is_multi = false;
        else
            throw ParseError("unknown span label '" + label + "'", line_no);
        if (span.surface.empty()) throw ParseError("empty span surface", line_no);
        spans.push_back(std::move(span));
    }
    return spans;
}

}  // namespace skillforge::link
