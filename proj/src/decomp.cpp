#include "seglab/decomp.hpp"

#include <cmath>

namespace seglab {

namespace {

void require_binary(const LabelField& g, const char* what) {
    if (g.num_classes() != 2)
        throw invalid_input(std::string(what) + ": binary labels required");
}

void require_all_regions(const LabelField& g, const char* what) {
    for (std::size_t k = 1; k <= g.num_classes(); ++k)
        if (g.region_size(k) == 0)
            throw undefined_region(std::string(what) + ": empty region");
}

} // namespace

Decomposition decompose_log_dice(const ProbField& p, const LabelField& g) {
    if (p.pixels() != g.size() || p.num_classes() != g.num_classes())
        throw invalid_input("decompose_log_dice: shape mismatch");
    require_all_regions(g, "decompose_log_dice");
    const std::size_t n = p.pixels();
    const std::size_t K = p.num_classes();

    std::vector<double> region(K, 0.0), column(K, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t gi = static_cast<std::size_t>(g.at(i)) - 1;
        for (std::size_t k = 0; k < K; ++k) column[k] += p.at(i, k);
        region[gi] += p.at(i, gi);
    }

    Decomposition d;
    for (std::size_t k = 0; k < K; ++k) {
        const double nk = static_cast<double>(g.region_sizes()[k]);
        const double yk = nk / static_cast<double>(n);
        const double pk = column[k] / static_cast<double>(n);
        // the matching term carries the loss smoothing so the Jensen
        // relation DF <= CE holds exactly against the eps'd CE
        d.matching_term -= std::log(region[k] / nk + kDefaultEps);
        d.bias_term += std::log(pk + yk);
        d.additive_constant += std::log(1.0 / (2.0 * yk));
    }
    d.total_reconstructed = d.matching_term + d.bias_term + d.additive_constant;
    return d;
}

Decomposition decompose_binary_dice(const ProbField& p, const LabelField& g) {
    require_binary(g, "decompose_binary_dice");
    if (p.pixels() != g.size() || p.num_classes() != 2)
        throw invalid_input("decompose_binary_dice: shape mismatch");
    if (g.region_size(1) == 0)
        throw undefined_region("decompose_binary_dice: empty foreground");
    const std::size_t n = p.pixels();
    double fg_sum = 0.0, col_sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        col_sum += p.at(i, 0);
        if (g.at(i) == 1) fg_sum += p.at(i, 0);
    }
    const double n1 = static_cast<double>(g.region_size(1));

    Decomposition d;
    d.matching_term = -std::log(fg_sum / n1 + kDefaultEps);
    d.bias_term = std::log(col_sum + n1);
    d.additive_constant = -std::log(2.0) - std::log(n1);
    d.total_reconstructed = d.matching_term + d.bias_term + d.additive_constant;
    d.bias_marginal_form = d.bias_term - std::log(static_cast<double>(n));
    return d;
}

std::pair<double, double> split_binary_ce(const ProbField& p,
                                          const LabelField& g, double eps) {
    require_binary(g, "split_binary_ce");
    if (p.pixels() != g.size() || p.num_classes() != 2)
        throw invalid_input("split_binary_ce: shape mismatch");
    require_all_regions(g, "split_binary_ce");
    const std::size_t n = p.pixels();
    double fg = 0.0, bg = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (g.at(i) == 1)
            fg += std::log(p.at(i, 0) + eps);
        else
            bg += std::log(1.0 - p.at(i, 0) + eps);
    }
    return {-fg / static_cast<double>(g.region_size(1)),
            -bg / static_cast<double>(g.region_size(2))};
}

double mc_conditional_entropy(const ProbField& p, const LabelField& g) {
    if (p.pixels() != g.size() || p.num_classes() != g.num_classes())
        throw invalid_input("mc_conditional_entropy: shape mismatch");
    require_all_regions(g, "mc_conditional_entropy");
    const Marginal ph = predicted_marginal(p);
    for (std::size_t k = 0; k < ph.size(); ++k)
        if (ph[k] <= 0.0)
            throw degenerate_marginal("mc_conditional_entropy: zero marginal");
    const std::size_t n = p.pixels();
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t gi = static_cast<std::size_t>(g.at(i)) - 1;
        acc += std::log(p.at(i, gi) / ph[gi]);
    }
    return -acc / static_cast<double>(n);
}

double marginal_entropy(const Marginal& y) {
    double h = 0.0;
    for (std::size_t k = 0; k < y.size(); ++k) {
        if (y[k] <= 0.0)
            throw degenerate_marginal("marginal_entropy: zero entry");
        h -= y[k] * std::log(y[k]);
    }
    return h;
}

} // namespace seglab
