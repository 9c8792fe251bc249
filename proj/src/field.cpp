#include "seglab/field.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace seglab {

namespace {

void check_shape(std::size_t height, std::size_t width, std::size_t num_classes,
                 std::size_t flat, std::size_t per_pixel) {
    if (height == 0 || width == 0)
        throw invalid_input("field: empty grid");
    if (num_classes < 2)
        throw invalid_input("field: need at least 2 classes");
    if (flat != height * width * per_pixel)
        throw invalid_input("field: data size does not match H*W grid");
}

} // namespace

LabelField::LabelField(std::size_t height, std::size_t width,
                       std::size_t num_classes, std::vector<int> labels)
    : height_(height), width_(width), num_classes_(num_classes),
      labels_(std::move(labels)), region_sizes_(num_classes, 0) {
    check_shape(height, width, num_classes, labels_.size(), 1);
    for (int v : labels_) {
        if (v < 1 || static_cast<std::size_t>(v) > num_classes_)
            throw invalid_input("label " + std::to_string(v) +
                                " outside 1.." + std::to_string(num_classes_));
        ++region_sizes_[static_cast<std::size_t>(v) - 1];
    }
}

LogitField::LogitField(std::size_t height, std::size_t width,
                       std::size_t num_classes, std::vector<double> logits)
    : height_(height), width_(width), num_classes_(num_classes),
      logits_(std::move(logits)) {
    check_shape(height, width, num_classes, logits_.size(), num_classes);
    for (double v : logits_)
        if (!std::isfinite(v)) throw invalid_input("non-finite logit");
}

ProbField::ProbField(std::size_t height, std::size_t width,
                     std::size_t num_classes, std::vector<double> probs)
    : height_(height), width_(width), num_classes_(num_classes),
      probs_(std::move(probs)) {
    check_shape(height, width, num_classes, probs_.size(), num_classes);
    const std::size_t n = pixels();
    for (std::size_t i = 0; i < n; ++i) {
        double sum = 0.0;
        for (std::size_t k = 0; k < num_classes_; ++k) {
            double v = probs_[i * num_classes_ + k];
            if (!(v >= 0.0 && v <= 1.0))
                throw invalid_input("probability outside [0,1]");
            sum += v;
        }
        if (std::abs(sum - 1.0) > 1e-9)
            throw invalid_input("probability row off the simplex");
    }
}

Marginal::Marginal(std::vector<double> values) : values_(std::move(values)) {
    if (values_.size() < 2) throw invalid_input("marginal: need K >= 2");
    double sum = 0.0;
    for (double v : values_) {
        if (!(v >= 0.0 && v <= 1.0))
            throw invalid_input("marginal entry outside [0,1]");
        sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-9)
        throw invalid_input("marginal off the simplex");
}

ProbField temperature_softmax(const LogitField& logits, double tau) {
    if (!(tau > 0.0)) throw invalid_parameter("temperature_softmax: tau must be > 0");
    const std::size_t n = logits.pixels();
    const std::size_t K = logits.num_classes();
    std::vector<double> out(n * K);
    for (std::size_t i = 0; i < n; ++i) {
        double m = logits.at(i, 0);
        for (std::size_t k = 1; k < K; ++k) m = std::max(m, logits.at(i, k));
        m *= tau;
        double sum = 0.0;
        for (std::size_t k = 0; k < K; ++k) {
            double e = std::exp(tau * logits.at(i, k) - m);
            out[i * K + k] = e;
            sum += e;
        }
        for (std::size_t k = 0; k < K; ++k) out[i * K + k] /= sum;
    }
    return ProbField(logits.height(), logits.width(), K, std::move(out));
}

Marginal predicted_marginal(const ProbField& probs) {
    const std::size_t n = probs.pixels();
    const std::size_t K = probs.num_classes();
    std::vector<double> m(K, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < K; ++k) m[k] += probs.at(i, k);
    for (auto& v : m) v /= static_cast<double>(n);
    return Marginal(std::move(m));
}

Marginal gt_marginal(const LabelField& labels) {
    const double n = static_cast<double>(labels.size());
    std::vector<double> m(labels.num_classes());
    for (std::size_t k = 0; k < m.size(); ++k)
        m[k] = static_cast<double>(labels.region_sizes()[k]) / n;
    return Marginal(std::move(m));
}

ProbField one_hot(const LabelField& labels) {
    const std::size_t n = labels.size();
    const std::size_t K = labels.num_classes();
    std::vector<double> out(n * K, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        out[i * K + static_cast<std::size_t>(labels.at(i)) - 1] = 1.0;
    return ProbField(labels.height(), labels.width(), K, std::move(out));
}

} // namespace seglab
