#pragma once

#include <utility>

#include "seglab/field.hpp"
#include "seglab/losses.hpp"

namespace seglab {

/// An exact split of a loss into a ground-truth matching term, a
/// label-marginal bias term and the additive constant that the usual
/// "equality up to constant" hides. Always satisfies
/// total_reconstructed = matching_term + bias_term + additive_constant.
struct Decomposition {
    double matching_term = 0.0;
    double bias_term = 0.0;
    double additive_constant = 0.0;
    double total_reconstructed = 0.0;
    // binary case only: the bias expressed through the marginal,
    // log(p-hat_1 + y-hat_1) = bias_term - log|Omega|
    double bias_marginal_form = 0.0;
};

/// Multi-class log-Dice split:
///   -sum_k log Dice_k = DF + DB + sum_k log(1/(2 y-hat_k))
/// with DF = -sum_k log(mean_{Omega_k} p_ik), DB = sum_k log(p-hat_k + y-hat_k).
/// Requires every region non-empty.
Decomposition decompose_log_dice(const ProbField& p, const LabelField& g);

/// Binary foreground Dice split:
///   -log Dice_1 = DF_1 + DB_1 - log 2 - log|Omega_1|
/// with DF_1 = -log(mean_{Omega_1} p_i1), DB_1 = log(sum_Omega p_i1 + |Omega_1|).
/// bias_marginal_form carries log(p-hat_1 + y-hat_1).
Decomposition decompose_binary_dice(const ProbField& p, const LabelField& g);

/// Binary CE split into foreground and background matching:
///   CE_1 = -(1/|Omega_1|) sum_{Omega_1} log p_i1
///   CE_2 = -(1/|Omega_2|) sum_{Omega_2} log(1 - p_i1)
/// CE_1 + CE_2 equals the region-weighted CE.
std::pair<double, double> split_binary_ce(const ProbField& p,
                                          const LabelField& g,
                                          double eps = kDefaultEps);

/// Monte-Carlo conditional entropy of features given labels, after the
/// Bayes substitution P(f_i|k) = p_ik / p-hat_k (proportionality constant
/// fixed to 1):
///   H-hat(F|K) = -(1/|Omega|) sum_k sum_{Omega_k} log(p_ik / p-hat_k)
/// Requires every region non-empty and every p-hat_k > 0.
double mc_conditional_entropy(const ProbField& p, const LabelField& g);

/// Shannon entropy -sum_k y_k log y_k of a strictly positive marginal;
/// the additive constant in the CE identity
///   ce_pixel_avg = H-hat(F|K) + KL(y||p) + entropy(y).
double marginal_entropy(const Marginal& y);

} // namespace seglab
