#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "seglab/field.hpp"
#include "seglab/rng.hpp"

namespace seglab {

/// Random (probs, labels) instance with every class region non-empty;
/// probabilities come from a unit-temperature softmax of N(0,1) logits.
/// Shared by the certification checks, the gradient checks and the tests.
struct RandomInstance {
    ProbField probs;
    LabelField labels;
};

LabelField random_labels(SplitMix64& rng, std::size_t pixels, std::size_t K);
LogitField random_logits(SplitMix64& rng, std::size_t pixels, std::size_t K,
                         double scale = 1.0);
RandomInstance random_instance(SplitMix64& rng, std::size_t K,
                               std::size_t max_pixels);

/// Dice marginal penalty g(p) = sum_k log(p_k + y_k) over the simplex.
double dice_bias_g(const std::vector<double>& p, const Marginal& y);

/// Lattice certificate for the vertex-minimum property of g.
struct Prop1Report {
    Marginal y;
    Marginal vertex_t;               // one-hot at argmax y (first on ties)
    std::vector<std::size_t> tied_classes; // 1-based; >1 entry iff max is tied
    double grid_step = 0.0;
    Marginal argmin_on_grid;
    double min_value = 0.0;
    double g_at_t = 0.0;
    std::size_t violations = 0;       // grid points with g(p) < g(t) - 1e-12
    bool argmin_at_vertex = false;    // argmin within grid_step (L-inf) of a
                                      // tied vertex
    bool pass = false;
};

/// Enumerates every lattice point of the simplex with the given spacing
/// (grid_step must divide 1) and verifies g(p) >= g(t). K <= 4 only; the
/// lattice blows up beyond that -- use check_prop1_sampled instead.
Prop1Report check_prop1(const Marginal& y, double grid_step);

/// Weaker certificate for any K: uniform random simplex draws.
Prop1Report check_prop1_sampled(const Marginal& y, std::size_t num_samples,
                                std::uint64_t seed);

struct ConcavityReport {
    std::size_t samples = 0;
    std::size_t violations = 0;
    double max_violation = 0.0;      // max of a*g(p)+(1-a)*g(q) - g(mix)
    bool vertex_ordering_ok = false; // g(e_k) >= g(t) for all k, closed form
    bool pass = false;
};

/// Jensen-interpolation concavity certificate for g, plus the closed-form
/// vertex ordering g(e_k) - g(t) = log(1 + 1/y_k) - log(1 + 1/y_j) >= 0.
ConcavityReport check_db_concavity(const Marginal& y, std::size_t num_samples,
                                   std::uint64_t seed);

struct BoundsReport {
    std::size_t instances = 0;
    std::size_t df_le_ce_violations = 0;      // DF <= region-weighted CE
    std::size_t df1_le_ce1_violations = 0;    // binary DF_1 <= CE_1
    std::size_t log_ge_linear_violations = 0; // -sum log Dice >= sum (1-Dice)
    double max_violation = 0.0;
    double jensen_equality_gap = 0.0; // |DF - CE| on a constant-per-region field
    bool pass = false;
};

BoundsReport check_bounds(std::size_t num_instances, std::uint64_t seed);

struct Prop2Report {
    std::size_t instances = 0;
    double max_residual = 0.0;
    double stress_residual = 0.0; // designed near-zero-marginal instance
    bool pass = false;
};

/// Residual of ce_pixel_avg = H-hat(F|K) + KL(y||p) + entropy(y)
/// over random instances, plus one sub-eps-marginal stress instance
/// (tolerances 1e-9 and 1e-7).
Prop2Report check_prop2(std::size_t num_instances, std::uint64_t seed);

struct CurveTable {
    double y1 = 0.0;
    std::vector<double> p1;  // strictly increasing in (0,1)
    std::vector<double> db1; // log(p1 + y1)
    std::vector<double> kl;
    std::vector<double> l1;
};

/// Binary marginal-penalty curves at foreground proportion y1, sampled at
/// p1 = i/(num_points+1), i = 1..num_points.
CurveTable bias_curves(double y1, std::size_t num_points);

/// One row of the verify report.
struct CheckRow {
    std::string check_id;
    std::string params;
    double max_violation = 0.0;
    bool pass = false;
};

struct VerifySuiteOptions {
    std::uint64_t seed = 1;
    // test hook: added to the reconstruction constant of the Eq-style
    // decomposition identities; any nonzero value must turn the suite red
    double perturb_constant = 0.0;
};

/// The full certification suite (decomposition identities, propositions,
/// bounds, concavity), deterministic given the options.
std::vector<CheckRow> run_verify_suite(const VerifySuiteOptions& options);

} // namespace seglab
