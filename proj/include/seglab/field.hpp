#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "seglab/errors.hpp"

namespace seglab {

/// Default temperature for the softened softmax; region-proportion
/// estimates use it everywhere unless overridden.
inline constexpr double kDefaultTau = 10.0;

/// Per-pixel hard labels over K classes. Classes are 1-based (1..K), the
/// same convention the PGM masks use; class 1 is the foreground in the
/// binary setting. The grid is H x W but stored flat, row-major: none of
/// the math uses 2-D adjacency, only membership in the regions Omega_k.
class LabelField {
  public:
    LabelField(std::size_t height, std::size_t width, std::size_t num_classes,
               std::vector<int> labels);

    std::size_t height() const { return height_; }
    std::size_t width() const { return width_; }
    std::size_t num_classes() const { return num_classes_; }
    std::size_t size() const { return labels_.size(); }

    int at(std::size_t i) const { return labels_[i]; }
    const std::vector<int>& labels() const { return labels_; }

    /// |Omega_k| for 1-based class k.
    std::size_t region_size(std::size_t k) const { return region_sizes_[k - 1]; }
    const std::vector<std::size_t>& region_sizes() const { return region_sizes_; }

  private:
    std::size_t height_, width_, num_classes_;
    std::vector<int> labels_;
    std::vector<std::size_t> region_sizes_;
};

/// Per-pixel real logit rows (unbounded, finite).
class LogitField {
  public:
    LogitField(std::size_t height, std::size_t width, std::size_t num_classes,
               std::vector<double> logits);

    std::size_t height() const { return height_; }
    std::size_t width() const { return width_; }
    std::size_t num_classes() const { return num_classes_; }
    std::size_t pixels() const { return logits_.size() / num_classes_; }

    double at(std::size_t i, std::size_t k) const {
        return logits_[i * num_classes_ + k];
    }
    const std::vector<double>& data() const { return logits_; }

  private:
    std::size_t height_, width_, num_classes_;
    std::vector<double> logits_;
};

/// Per-pixel softmax rows: entries in [0,1], each row on the simplex
/// within 1e-9.
class ProbField {
  public:
    ProbField(std::size_t height, std::size_t width, std::size_t num_classes,
              std::vector<double> probs);

    std::size_t height() const { return height_; }
    std::size_t width() const { return width_; }
    std::size_t num_classes() const { return num_classes_; }
    std::size_t pixels() const { return probs_.size() / num_classes_; }

    double at(std::size_t i, std::size_t k) const {
        return probs_[i * num_classes_ + k];
    }
    const std::vector<double>& data() const { return probs_; }

  private:
    std::size_t height_, width_, num_classes_;
    std::vector<double> probs_;
};

/// A K-vector of class proportions on the simplex.
class Marginal {
  public:
    explicit Marginal(std::vector<double> values);

    std::size_t size() const { return values_.size(); }
    double operator[](std::size_t k) const { return values_[k]; }
    const std::vector<double>& values() const { return values_; }

  private:
    std::vector<double> values_;
};

/// Max-shifted temperature softmax: s_ik = exp(tau*z_ik - m_i) / sum_j,
/// m_i = tau * max_j z_ij. Value-identical to the unshifted form,
/// overflow-safe.
ProbField temperature_softmax(const LogitField& logits, double tau = kDefaultTau);

/// p-hat_k = mean over pixels of p_ik.
Marginal predicted_marginal(const ProbField& probs);

/// y-hat_k = |Omega_k| / |Omega|.
Marginal gt_marginal(const LabelField& labels);

/// One-hot rows matching the labels (exact 0/1 entries).
ProbField one_hot(const LabelField& labels);

} // namespace seglab
