#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "seglab/field.hpp"

namespace seglab {

/// Smoothing added inside every log and every Dice denominator.
inline constexpr double kDefaultEps = 1e-12;

enum class LossKind {
    ce_region_weighted, // -sum_k (1/|Omega_k|) sum_{Omega_k} log p_ik
    ce_pixel_avg,       // -(1/|Omega|) sum log p of the true class
    focal,              // (1-p)^gamma weighted pixel-average CE
    linear_dice,        // sum_k (1 - Dice_k)
    log_dice,           // -sum_k log Dice_k
    gdice,              // generalized Dice, class weights 1/|Omega_k|^2
    kl_marginal,        // KL(y || p-hat)
    l1_marginal,        // sum_k |y_k - p-hat_k|
    dice_bias,          // sum_k log(p-hat_k + y_k), the Dice marginal penalty
    composite,          // weighted sum of terms
};

const char* loss_kind_name(LossKind kind);
LossKind loss_kind_from_name(const std::string& name);

/// Declarative loss description; evaluated against (ProbField, LabelField).
struct LossSpec {
    LossKind kind = LossKind::ce_pixel_avg;
    double gamma = 2.0; // focal only
    // Dice kinds (and dice_bias): restrict to the foreground class k=1.
    // Unset means automatic: foreground-only on binary inputs, all classes
    // otherwise.
    std::optional<bool> foreground_only;
    std::vector<std::pair<LossSpec, double>> terms; // composite: (spec, weight)

    std::string to_json() const;
    static LossSpec from_json(const std::string& text);

    /// CLI names: plain kinds plus the named composites
    /// dicece / logdicece / dicebiasce / ours-l1 / ours-kl (CE + lambda*term).
    static LossSpec from_name(const std::string& name, double lambda = 1.0);

    /// Canonical short id used in report tables.
    std::string id() const;
};

struct LossTerm {
    std::string id;
    double weight = 1.0;
    double value = 0.0;
};

struct LossReport {
    double total = 0.0;
    std::vector<LossTerm> terms;
    bool skipped_empty_region = false;
};

struct EvalDiag {
    bool skipped_empty_region = false;
};

/// Weighted cross-entropy over ground-truth regions. Empty regions are
/// skipped and flagged in diag.
double ce_region_weighted(const ProbField& p, const LabelField& g,
                          double eps = kDefaultEps, EvalDiag* diag = nullptr);

double ce_pixel_avg(const ProbField& p, const LabelField& g,
                    double eps = kDefaultEps);

/// Soft Dice coefficient for 1-based class k; throws undefined_region if
/// Omega_k is empty.
double dice_coeff(const ProbField& p, const LabelField& g, std::size_t k,
                  double eps = kDefaultEps);

double linear_dice_loss(const ProbField& p, const LabelField& g,
                        bool foreground_only, double eps = kDefaultEps,
                        EvalDiag* diag = nullptr);

double log_dice_loss(const ProbField& p, const LabelField& g,
                     bool foreground_only, double eps = kDefaultEps,
                     EvalDiag* diag = nullptr);

double kl_marginal(const Marginal& y, const Marginal& p,
                   double eps = kDefaultEps);

double l1_marginal(const Marginal& y, const Marginal& p);

double focal_loss(const ProbField& p, const LabelField& g, double gamma,
                  double eps = kDefaultEps);

double gdice_loss(const ProbField& p, const LabelField& g,
                  double eps = kDefaultEps, EvalDiag* diag = nullptr);

/// Dice marginal penalty as a standalone objective:
/// sum_k log(p-hat_k + y-hat_k), or log(p-hat_1 + y-hat_1) foreground-only.
double dice_bias_penalty(const ProbField& p, const LabelField& g,
                         bool foreground_only, double eps = kDefaultEps);

/// Evaluate any spec. Zero-weight composite terms are skipped entirely so
/// a lambda=0 composite is bit-identical to its first term.
double eval_loss(const LossSpec& spec, const ProbField& p, const LabelField& g,
                 double eps = kDefaultEps, EvalDiag* diag = nullptr);

/// As eval_loss but the report lists every weighted term separately.
LossReport eval_loss_report(const LossSpec& spec, const ProbField& p,
                            const LabelField& g, double eps = kDefaultEps);

/// Whether a Dice-family spec acts on the foreground only for a given K.
bool dice_foreground_only(const LossSpec& spec, std::size_t num_classes);

} // namespace seglab
