#include "seglab/verify.hpp"

#include <algorithm>
#include <cmath>
#include <cstdarg>
#include <cstdio>

#include "seglab/decomp.hpp"
#include "seglab/losses.hpp"

namespace seglab {

namespace {

constexpr double kSlack = 1e-12;

std::string format_params(const char* fmt, ...)
#if defined(__GNUC__)
    __attribute__((format(printf, 1, 2)))
#endif
    ;

std::string format_params(const char* fmt, ...) {
    char buf[256];
    va_list args;
    va_start(args, fmt);
    std::vsnprintf(buf, sizeof buf, fmt, args);
    va_end(args);
    return buf;
}

} // namespace

LabelField random_labels(SplitMix64& rng, std::size_t pixels, std::size_t K) {
    if (pixels < 2 * K)
        throw invalid_parameter("random_labels: too few pixels for K classes");
    std::vector<int> labels(pixels);
    // two guaranteed pixels per class, the rest uniform
    for (std::size_t i = 0; i < 2 * K; ++i)
        labels[i] = static_cast<int>(i % K) + 1;
    for (std::size_t i = 2 * K; i < pixels; ++i)
        labels[i] = static_cast<int>(rng.below(K)) + 1;
    return LabelField(1, pixels, K, std::move(labels));
}

LogitField random_logits(SplitMix64& rng, std::size_t pixels, std::size_t K,
                         double scale) {
    std::vector<double> z(pixels * K);
    for (auto& v : z) v = scale * rng.normal();
    return LogitField(1, pixels, K, std::move(z));
}

RandomInstance random_instance(SplitMix64& rng, std::size_t K,
                               std::size_t max_pixels) {
    const std::size_t lo = 4 * K;
    const std::size_t n = lo + rng.below(max_pixels - lo + 1);
    LabelField labels = random_labels(rng, n, K);
    ProbField probs = temperature_softmax(random_logits(rng, n, K), 1.0);
    return RandomInstance{std::move(probs), std::move(labels)};
}

double dice_bias_g(const std::vector<double>& p, const Marginal& y) {
    double g = 0.0;
    for (std::size_t k = 0; k < y.size(); ++k) g += std::log(p[k] + y[k]);
    return g;
}

namespace {

std::vector<std::size_t> tied_argmax(const Marginal& y) {
    double best = y[0];
    for (std::size_t k = 1; k < y.size(); ++k) best = std::max(best, y[k]);
    std::vector<std::size_t> tied;
    for (std::size_t k = 0; k < y.size(); ++k)
        if (y[k] >= best - 1e-15) tied.push_back(k + 1);
    return tied;
}

Marginal vertex(std::size_t K, std::size_t k_one_based) {
    std::vector<double> v(K, 0.0);
    v[k_one_based - 1] = 1.0;
    return Marginal(std::move(v));
}

Prop1Report prop1_skeleton(const Marginal& y) {
    Prop1Report r{y, vertex(y.size(), 1), {}, 0.0, vertex(y.size(), 1),
                  0.0,  0.0,              0,  false, false};
    r.tied_classes = tied_argmax(y);
    r.vertex_t = vertex(y.size(), r.tied_classes.front());
    std::vector<double> t(r.vertex_t.values());
    r.g_at_t = dice_bias_g(t, y);
    return r;
}

void prop1_finish(Prop1Report& r, const std::vector<double>& argmin,
                  double min_value, double step_linf) {
    r.argmin_on_grid = Marginal(argmin);
    r.min_value = min_value;
    for (std::size_t k : r.tied_classes) {
        const Marginal tied_vertex = vertex(r.y.size(), k);
        double d = 0.0;
        for (std::size_t j = 0; j < tied_vertex.size(); ++j)
            d = std::max(d, std::abs(argmin[j] - tied_vertex[j]));
        if (d <= step_linf + 1e-12) r.argmin_at_vertex = true;
    }
    r.pass = r.violations == 0 && r.argmin_at_vertex;
}

// enumerate lattice points (a_1..a_K)/n with sum a = n
template <typename Visit>
void visit_lattice(std::size_t K, std::size_t n, std::vector<double>& point,
                   std::size_t depth, std::size_t remaining, Visit&& visit) {
    if (depth == K - 1) {
        point[depth] = static_cast<double>(remaining) / static_cast<double>(n);
        visit(point);
        return;
    }
    for (std::size_t a = 0; a <= remaining; ++a) {
        point[depth] = static_cast<double>(a) / static_cast<double>(n);
        visit_lattice(K, n, point, depth + 1, remaining - a,
                      std::forward<Visit>(visit));
    }
}

} // namespace

Prop1Report check_prop1(const Marginal& y, double grid_step) {
    const std::size_t K = y.size();
    if (K > 4)
        throw invalid_parameter(
            "check_prop1: lattice enumeration limited to K <= 4; "
            "use check_prop1_sampled");
    if (!(grid_step > 0.0) || grid_step > 0.5)
        throw invalid_parameter("check_prop1: grid_step must be in (0, 0.5]");
    const double n_real = 1.0 / grid_step;
    const std::size_t n = static_cast<std::size_t>(std::llround(n_real));
    if (std::abs(n_real - static_cast<double>(n)) > 1e-9)
        throw invalid_parameter("check_prop1: grid_step must divide 1");

    Prop1Report r = prop1_skeleton(y);
    r.grid_step = grid_step;
    double min_value = r.g_at_t;
    std::vector<double> argmin(r.vertex_t.values());
    std::vector<double> point(K, 0.0);
    visit_lattice(K, n, point, 0, n, [&](const std::vector<double>& p) {
        const double g = dice_bias_g(p, y);
        if (g < r.g_at_t - kSlack) ++r.violations;
        if (g < min_value) {
            min_value = g;
            argmin = p;
        }
    });
    prop1_finish(r, argmin, min_value, grid_step);
    return r;
}

Prop1Report check_prop1_sampled(const Marginal& y, std::size_t num_samples,
                                std::uint64_t seed) {
    Prop1Report r = prop1_skeleton(y);
    r.grid_step = 0.0;
    SplitMix64 rng(derive_stream(seed, "prop1-sampled"));
    double min_value = r.g_at_t;
    std::vector<double> argmin(r.vertex_t.values());
    for (std::size_t s = 0; s < num_samples; ++s) {
        const std::vector<double> p = rng.simplex(y.size());
        const double g = dice_bias_g(p, y);
        if (g < r.g_at_t - kSlack) ++r.violations;
        if (g < min_value) {
            min_value = g;
            argmin = p;
        }
    }
    // sampled interior points should never undercut the vertex; argmin
    // proximity is only meaningful for the lattice variant
    prop1_finish(r, argmin, min_value, 1.0);
    return r;
}

ConcavityReport check_db_concavity(const Marginal& y, std::size_t num_samples,
                                   std::uint64_t seed) {
    ConcavityReport r;
    r.samples = num_samples;
    SplitMix64 rng(derive_stream(seed, "db-concavity"));
    const std::size_t K = y.size();
    std::vector<double> mix(K);
    for (std::size_t s = 0; s < num_samples; ++s) {
        const std::vector<double> p = rng.simplex(K);
        const std::vector<double> q = rng.simplex(K);
        const double a = rng.uniform(1e-6, 1.0 - 1e-6);
        for (std::size_t k = 0; k < K; ++k) mix[k] = a * p[k] + (1.0 - a) * q[k];
        const double lhs = dice_bias_g(mix, y);
        const double rhs = a * dice_bias_g(p, y) + (1.0 - a) * dice_bias_g(q, y);
        if (lhs < rhs - kSlack) ++r.violations;
        r.max_violation = std::max(r.max_violation, rhs - lhs);
    }

    // closed-form ordering among vertices: g(e_k) - g(t) =
    // log(1 + 1/y_k) - log(1 + 1/y_j), j = argmax y
    const std::vector<std::size_t> tied = tied_argmax(y);
    const std::size_t j = tied.front() - 1;
    r.vertex_ordering_ok = true;
    for (std::size_t k = 0; k < K; ++k) {
        if (y[k] <= 0.0) continue;
        const double gap =
            std::log(1.0 + 1.0 / y[k]) - std::log(1.0 + 1.0 / y[j]);
        if (gap < -kSlack) r.vertex_ordering_ok = false;
    }
    r.pass = r.violations == 0 && r.vertex_ordering_ok;
    return r;
}

BoundsReport check_bounds(std::size_t num_instances, std::uint64_t seed) {
    BoundsReport r;
    r.instances = num_instances;
    SplitMix64 rng(derive_stream(seed, "bounds"));
    for (std::size_t s = 0; s < num_instances; ++s) {
        const std::size_t K = 2 + rng.below(4);
        const RandomInstance inst = random_instance(rng, K, 256);
        const Decomposition d = decompose_log_dice(inst.probs, inst.labels);
        const double ce = ce_region_weighted(inst.probs, inst.labels);
        if (d.matching_term > ce + kSlack) ++r.df_le_ce_violations;
        r.max_violation = std::max(r.max_violation, d.matching_term - ce);

        const double log_d = log_dice_loss(inst.probs, inst.labels, false);
        const double lin_d = linear_dice_loss(inst.probs, inst.labels, false);
        if (log_d < lin_d - kSlack) ++r.log_ge_linear_violations;
        r.max_violation = std::max(r.max_violation, lin_d - log_d);

        if (K == 2) {
            const Decomposition b = decompose_binary_dice(inst.probs, inst.labels);
            const auto [ce1, ce2] = split_binary_ce(inst.probs, inst.labels);
            (void)ce2;
            if (b.matching_term > ce1 + kSlack) ++r.df1_le_ce1_violations;
            r.max_violation = std::max(r.max_violation, b.matching_term - ce1);
        }
    }

    // Jensen equality: constant prediction rows within each region
    {
        SplitMix64 rng2(derive_stream(seed, "bounds-equality"));
        const std::size_t K = 3, n = 96;
        LabelField labels = random_labels(rng2, n, K);
        std::vector<std::vector<double>> rows(K);
        for (auto& row : rows) {
            LogitField z = random_logits(rng2, 1, K);
            ProbField pr = temperature_softmax(z, 1.0);
            row = pr.data();
        }
        std::vector<double> probs(n * K);
        for (std::size_t i = 0; i < n; ++i) {
            const auto& row = rows[static_cast<std::size_t>(labels.at(i)) - 1];
            std::copy(row.begin(), row.end(), probs.begin() + i * K);
        }
        ProbField p(1, n, K, std::move(probs));
        const Decomposition d = decompose_log_dice(p, labels);
        r.jensen_equality_gap =
            std::abs(d.matching_term - ce_region_weighted(p, labels));
    }

    r.pass = r.df_le_ce_violations == 0 && r.df1_le_ce1_violations == 0 &&
             r.log_ge_linear_violations == 0 && r.jensen_equality_gap <= 1e-12;
    return r;
}

Prop2Report check_prop2(std::size_t num_instances, std::uint64_t seed) {
    Prop2Report r;
    r.instances = num_instances;
    SplitMix64 rng(derive_stream(seed, "prop2"));
    for (std::size_t s = 0; s < num_instances; ++s) {
        const std::size_t K = 2 + rng.below(4);
        const RandomInstance inst = random_instance(rng, K, 256);
        const double ce = ce_pixel_avg(inst.probs, inst.labels);
        const double ent = mc_conditional_entropy(inst.probs, inst.labels);
        const Marginal y = gt_marginal(inst.labels);
        const double kl = kl_marginal(y, predicted_marginal(inst.probs));
        const double residual = std::abs(ce - (ent + kl + marginal_entropy(y)));
        r.max_residual = std::max(r.max_residual, residual);
    }

    // stress: one channel pushed far below eps (constant rows so the eps
    // clamps inside CE and KL cancel each other)
    {
        const std::size_t K = 3, n = 60;
        std::vector<int> labels(n);
        for (std::size_t i = 0; i < n; ++i)
            labels[i] = i < n / 2 ? 1 : (i < 5 * n / 6 ? 2 : 3);
        LabelField g(1, n, K, std::move(labels));
        std::vector<double> z(n * K);
        for (std::size_t i = 0; i < n; ++i) {
            z[i * K + 0] = 1.2;
            z[i * K + 1] = 0.7;
            z[i * K + 2] = -2.5; // tau*gap = -37: p_3 ~ 8e-17, below eps
        }
        ProbField p = temperature_softmax(LogitField(1, n, K, std::move(z)),
                                          kDefaultTau);
        const double ce = ce_pixel_avg(p, g);
        const double ent = mc_conditional_entropy(p, g);
        const Marginal y = gt_marginal(g);
        const double kl = kl_marginal(y, predicted_marginal(p));
        r.stress_residual = std::abs(ce - (ent + kl + marginal_entropy(y)));
    }

    r.pass = r.max_residual <= 1e-9 && r.stress_residual <= 1e-7;
    return r;
}

CurveTable bias_curves(double y1, std::size_t num_points) {
    if (!(y1 > 0.0) || !(y1 < 1.0))
        throw invalid_parameter("bias_curves: y1 must be inside (0,1)");
    if (num_points == 0)
        throw invalid_parameter("bias_curves: need at least one point");
    CurveTable t;
    t.y1 = y1;
    t.p1.reserve(num_points);
    for (std::size_t i = 1; i <= num_points; ++i) {
        const double p1 =
            static_cast<double>(i) / static_cast<double>(num_points + 1);
        t.p1.push_back(p1);
        t.db1.push_back(std::log(p1 + y1));
        t.kl.push_back(y1 * std::log(y1 / p1) +
                       (1.0 - y1) * std::log((1.0 - y1) / (1.0 - p1)));
        t.l1.push_back(2.0 * std::abs(p1 - y1));
    }
    return t;
}

namespace {

// decomposition identity residuals over random instances
double eq1_residual(std::uint64_t seed, std::size_t instances, double perturb) {
    SplitMix64 rng(derive_stream(seed, "eq1"));
    double worst = 0.0;
    for (std::size_t s = 0; s < instances; ++s) {
        const std::size_t K = 2 + rng.below(4);
        const RandomInstance inst = random_instance(rng, K, 256);
        const Decomposition d = decompose_log_dice(inst.probs, inst.labels);
        const double direct = log_dice_loss(inst.probs, inst.labels, false);
        const double recon = d.matching_term + d.bias_term +
                             d.additive_constant + perturb;
        worst = std::max(worst, std::abs(direct - recon));
    }
    return worst;
}

double eq7_residual(std::uint64_t seed, std::size_t instances, double perturb) {
    SplitMix64 rng(derive_stream(seed, "eq7"));
    double worst = 0.0;
    for (std::size_t s = 0; s < instances; ++s) {
        const RandomInstance inst = random_instance(rng, 2, 256);
        const Decomposition d = decompose_binary_dice(inst.probs, inst.labels);
        const double direct = log_dice_loss(inst.probs, inst.labels, true);
        const double recon = d.matching_term + d.bias_term +
                             d.additive_constant + perturb;
        worst = std::max(worst, std::abs(direct - recon));
    }
    return worst;
}

double eq10_residual(std::uint64_t seed, std::size_t instances) {
    SplitMix64 rng(derive_stream(seed, "eq10"));
    double worst = 0.0;
    for (std::size_t s = 0; s < instances; ++s) {
        const RandomInstance inst = random_instance(rng, 2, 256);
        const Decomposition d = decompose_binary_dice(inst.probs, inst.labels);
        const double p1 = predicted_marginal(inst.probs)[0];
        const double y1 = gt_marginal(inst.labels)[0];
        worst = std::max(worst,
                         std::abs(d.bias_marginal_form - std::log(p1 + y1)));
    }
    return worst;
}

double ce_split_residual(std::uint64_t seed, std::size_t instances) {
    SplitMix64 rng(derive_stream(seed, "ce-split"));
    double worst = 0.0;
    for (std::size_t s = 0; s < instances; ++s) {
        const RandomInstance inst = random_instance(rng, 2, 256);
        const auto [ce1, ce2] = split_binary_ce(inst.probs, inst.labels);
        const double ce = ce_region_weighted(inst.probs, inst.labels);
        worst = std::max(worst, std::abs(ce1 + ce2 - ce));
    }
    return worst;
}

} // namespace

std::vector<CheckRow> run_verify_suite(const VerifySuiteOptions& options) {
    std::vector<CheckRow> rows;
    const std::uint64_t seed = options.seed;

    {
        const double v = eq1_residual(seed, 100, options.perturb_constant);
        rows.push_back({"eq1_log_dice_decomposition",
                        "K=2..5 instances=100 tol=1e-9", v, v <= 1e-9});
    }
    {
        const double v = eq7_residual(seed, 100, options.perturb_constant);
        rows.push_back({"eq7_binary_reconstruction",
                        "instances=100 tol=1e-9", v, v <= 1e-9});
    }
    {
        const double v = eq10_residual(seed, 100);
        rows.push_back({"eq10_marginal_form", "instances=100 tol=1e-12", v,
                        v <= 1e-12});
    }
    {
        const double v = ce_split_residual(seed, 100);
        rows.push_back({"binary_ce_split", "instances=100 tol=1e-12", v,
                        v <= 1e-12});
    }
    {
        const Prop2Report r = check_prop2(100, seed);
        rows.push_back({"prop2_identity", "instances=100 tol=1e-9",
                        r.max_residual, r.max_residual <= 1e-9});
        rows.push_back({"prop2_eps_stress", "sub-eps marginal tol=1e-7",
                        r.stress_residual, r.stress_residual <= 1e-7});
    }

    // Proposition 1 lattice certificates
    for (std::size_t K : {2, 3, 4}) {
        SplitMix64 rng(
            derive_stream(seed, format_params("prop1-lattice-K%zu", K)));
        const std::size_t count = K == 3 ? 20 : 5;
        std::size_t violations = 0;
        bool ok = true;
        for (std::size_t c = 0; c < count; ++c) {
            std::vector<double> y;
            do {
                y = rng.simplex(K);
                std::vector<std::size_t> tied = tied_argmax(Marginal(y));
                if (tied.size() == 1) break;
            } while (true);
            const Prop1Report r = check_prop1(Marginal(y), 1.0 / 200.0);
            violations += r.violations;
            ok = ok && r.pass;
        }
        rows.push_back({format_params("prop1_lattice_K%zu", K),
                        format_params("ys=%zu step=1/200", count),
                        static_cast<double>(violations), ok && violations == 0});
    }
    {
        SplitMix64 rng(derive_stream(seed, "prop1-k5"));
        std::vector<double> y = rng.simplex(5);
        const Prop1Report r = check_prop1_sampled(Marginal(y), 1000000, seed);
        rows.push_back({"prop1_sampled_K5", "draws=1e6 (weaker certificate)",
                        static_cast<double>(r.violations), r.violations == 0});
    }
    {
        const Prop1Report r = check_prop1(Marginal({0.5, 0.5}), 1.0 / 200.0);
        const bool both_tied = r.tied_classes.size() == 2;
        rows.push_back({"prop1_tie_case", "y=(0.5,0.5) step=1/200",
                        static_cast<double>(r.violations),
                        r.pass && both_tied});
    }

    {
        const ConcavityReport r =
            check_db_concavity(Marginal({0.7, 0.2, 0.1}), 1000, seed);
        rows.push_back({"db_concavity_jensen", "triples=1000 K=3 tol=1e-12",
                        r.max_violation, r.violations == 0});
        SplitMix64 rng(derive_stream(seed, "vertex-ys"));
        bool ordering = r.vertex_ordering_ok;
        for (std::size_t c = 0; c < 20; ++c) {
            const ConcavityReport rc =
                check_db_concavity(Marginal(rng.simplex(3)), 1, seed + c);
            ordering = ordering && rc.vertex_ordering_ok;
        }
        rows.push_back({"db_vertex_ordering", "ys=20 closed form", 0.0,
                        ordering});
    }

    {
        const BoundsReport r = check_bounds(1000, seed);
        rows.push_back({"bounds_df_le_ce", "instances=1000",
                        static_cast<double>(r.df_le_ce_violations),
                        r.df_le_ce_violations == 0});
        rows.push_back({"bounds_df1_le_ce1", "binary instances",
                        static_cast<double>(r.df1_le_ce1_violations),
                        r.df1_le_ce1_violations == 0});
        rows.push_back({"bounds_logdice_ge_lineardice", "instances=1000",
                        static_cast<double>(r.log_ge_linear_violations),
                        r.log_ge_linear_violations == 0});
        rows.push_back({"jensen_equality_constant_field", "tol=1e-12",
                        r.jensen_equality_gap, r.jensen_equality_gap <= 1e-12});
    }

    return rows;
}

} // namespace seglab
