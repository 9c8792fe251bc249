#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "seglab/field.hpp"
#include "seglab/losses.hpp"

namespace seglab {

/// Loss value and its exact gradient w.r.t. the logits, flat i*K+k like
/// LogitField. Rows of any loss routed through the softmax sum to zero.
struct GradResult {
    double value = 0.0;
    std::vector<double> grad;
};

/// Closed-form chain rule through the temperature softmax:
///   dL/dz_ij = tau * p_ij * (q_ij - sum_k p_ik q_ik),  q = dL/dp.
GradResult loss_gradient(const LossSpec& spec, const LogitField& z,
                         const LabelField& g, double tau = kDefaultTau,
                         double eps = kDefaultEps);

/// dL/dp only (no softmax Jacobian); exposes the probability-space
/// behaviour of the marginal penalties near the simplex boundary.
std::vector<double> loss_prob_gradient(const LossSpec& spec, const ProbField& p,
                                       const LabelField& g,
                                       double eps = kDefaultEps);

/// Central differences (L(z+h e) - L(z-h e)) / 2h, coordinate by coordinate.
std::vector<double> finite_diff_gradient(const LossSpec& spec,
                                         const LogitField& z,
                                         const LabelField& g,
                                         double tau = kDefaultTau,
                                         double h = 1e-5,
                                         double eps = kDefaultEps);

struct GradCheckRow {
    std::string spec_id;
    std::uint64_t instance_seed = 0;
    double max_rel_err = 0.0;
    bool pass = false;
};

/// Analytic-vs-central-difference certification of every loss kind (the
/// Dice kinds in both all-class and foreground-only form) plus the named
/// composites at their published weights. Relative error
/// ||a-f||_inf / max(1e-8, ||a||_inf, ||f||_inf) must stay <= 1e-4;
/// L1-marginal instances are nudged off the kink first.
std::vector<GradCheckRow> gradcheck(std::uint64_t seed,
                                    std::size_t instances_per_spec = 10);

} // namespace seglab
