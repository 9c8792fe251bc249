#include "seglab/grad.hpp"

#include <algorithm>
#include <cmath>

#include "seglab/rng.hpp"
#include "seglab/verify.hpp"

namespace seglab {

namespace {

// accumulate weight * dL/dp into q (flat i*K+k)
void accumulate_dldp(const LossSpec& spec, const ProbField& p,
                     const LabelField& g, double eps, double weight,
                     std::vector<double>& q) {
    const std::size_t n = p.pixels();
    const std::size_t K = p.num_classes();
    switch (spec.kind) {
        case LossKind::ce_region_weighted: {
            for (std::size_t i = 0; i < n; ++i) {
                const std::size_t gi = static_cast<std::size_t>(g.at(i)) - 1;
                const double nk = static_cast<double>(g.region_sizes()[gi]);
                q[i * K + gi] -= weight / (nk * (p.at(i, gi) + eps));
            }
            return;
        }
        case LossKind::ce_pixel_avg: {
            const double n_real = static_cast<double>(n);
            for (std::size_t i = 0; i < n; ++i) {
                const std::size_t gi = static_cast<std::size_t>(g.at(i)) - 1;
                q[i * K + gi] -= weight / (n_real * (p.at(i, gi) + eps));
            }
            return;
        }
        case LossKind::focal: {
            // per pixel: d/dp [-(1-p)^g log(p+eps)] =
            //   g (1-p)^(g-1) log(p+eps) - (1-p)^g / (p+eps)
            const double n_real = static_cast<double>(n);
            const double gamma = spec.gamma;
            for (std::size_t i = 0; i < n; ++i) {
                const std::size_t gi = static_cast<std::size_t>(g.at(i)) - 1;
                const double v = p.at(i, gi);
                const double pow_g =
                    gamma == 0.0 ? 1.0 : std::pow(1.0 - v, gamma);
                double d = -pow_g / (v + eps);
                if (gamma > 0.0)
                    d += gamma * std::pow(1.0 - v, gamma - 1.0) *
                         std::log(v + eps);
                q[i * K + gi] += weight * d / n_real;
            }
            return;
        }
        case LossKind::linear_dice:
        case LossKind::log_dice: {
            const bool fg = dice_foreground_only(spec, K);
            if (fg && g.region_size(1) == 0)
                throw undefined_region("dice loss: empty foreground region");
            std::vector<double> region(K, 0.0), column(K, 0.0);
            for (std::size_t i = 0; i < n; ++i) {
                const std::size_t gi = static_cast<std::size_t>(g.at(i)) - 1;
                for (std::size_t k = 0; k < K; ++k) column[k] += p.at(i, k);
                region[gi] += p.at(i, gi);
            }
            for (std::size_t k = 0; k < K; ++k) {
                if (fg && k != 0) continue;
                const std::size_t nk = g.region_sizes()[k];
                if (nk == 0) continue;
                const double b = column[k] + static_cast<double>(nk) + eps;
                const double dice = 2.0 * region[k] / b;
                // d(loss)/d(dice): -1 for linear, -1/(dice+eps) for log
                const double outer = spec.kind == LossKind::linear_dice
                                         ? -1.0
                                         : -1.0 / (dice + eps);
                const double member = 2.0 / b - 2.0 * region[k] / (b * b);
                const double outsider = -2.0 * region[k] / (b * b);
                for (std::size_t i = 0; i < n; ++i) {
                    const bool in_region =
                        static_cast<std::size_t>(g.at(i)) - 1 == k;
                    q[i * K + k] +=
                        weight * outer * (in_region ? member : outsider);
                }
            }
            return;
        }
        case LossKind::gdice: {
            std::vector<double> region(K, 0.0), column(K, 0.0);
            for (std::size_t i = 0; i < n; ++i) {
                const std::size_t gi = static_cast<std::size_t>(g.at(i)) - 1;
                for (std::size_t k = 0; k < K; ++k) column[k] += p.at(i, k);
                region[gi] += p.at(i, gi);
            }
            double num = 0.0, den = 0.0;
            std::vector<double> wk(K, 0.0);
            for (std::size_t k = 0; k < K; ++k) {
                const std::size_t nk = g.region_sizes()[k];
                if (nk == 0) continue;
                wk[k] = 1.0 / (static_cast<double>(nk) * static_cast<double>(nk));
                num += wk[k] * region[k];
                den += wk[k] * (column[k] + static_cast<double>(nk));
            }
            den += eps;
            for (std::size_t k = 0; k < K; ++k) {
                if (wk[k] == 0.0) continue;
                const double member =
                    -2.0 * wk[k] * (den - num) / (den * den);
                const double outsider = 2.0 * wk[k] * num / (den * den);
                for (std::size_t i = 0; i < n; ++i) {
                    const bool in_region =
                        static_cast<std::size_t>(g.at(i)) - 1 == k;
                    q[i * K + k] += weight * (in_region ? member : outsider);
                }
            }
            return;
        }
        case LossKind::kl_marginal: {
            const Marginal ph = predicted_marginal(p);
            const Marginal yh = gt_marginal(g);
            const double n_real = static_cast<double>(n);
            for (std::size_t k = 0; k < K; ++k) {
                const double d = -yh[k] / ((ph[k] + eps) * n_real);
                for (std::size_t i = 0; i < n; ++i)
                    q[i * K + k] += weight * d;
            }
            return;
        }
        case LossKind::l1_marginal: {
            const Marginal ph = predicted_marginal(p);
            const Marginal yh = gt_marginal(g);
            const double n_real = static_cast<double>(n);
            for (std::size_t k = 0; k < K; ++k) {
                // subgradient at the kink fixed to 0 (midpoint convention)
                const double s = ph[k] > yh[k] ? 1.0 : (ph[k] < yh[k] ? -1.0 : 0.0);
                if (s == 0.0) continue;
                const double d = s / n_real;
                for (std::size_t i = 0; i < n; ++i)
                    q[i * K + k] += weight * d;
            }
            return;
        }
        case LossKind::dice_bias: {
            const bool fg = dice_foreground_only(spec, K);
            const Marginal ph = predicted_marginal(p);
            const Marginal yh = gt_marginal(g);
            const double n_real = static_cast<double>(n);
            for (std::size_t k = 0; k < K; ++k) {
                if (fg && k != 0) continue;
                const double d = 1.0 / ((ph[k] + yh[k] + eps) * n_real);
                for (std::size_t i = 0; i < n; ++i)
                    q[i * K + k] += weight * d;
            }
            return;
        }
        case LossKind::composite: {
            if (spec.terms.empty())
                throw invalid_spec("composite loss with no terms");
            for (const auto& [term, term_weight] : spec.terms) {
                if (term_weight == 0.0) continue;
                accumulate_dldp(term, p, g, eps, weight * term_weight, q);
            }
            return;
        }
    }
    throw invalid_spec("unhandled loss kind in gradient");
}

} // namespace

GradResult loss_gradient(const LossSpec& spec, const LogitField& z,
                         const LabelField& g, double tau, double eps) {
    if (!(tau > 0.0)) throw invalid_parameter("loss_gradient: tau must be > 0");
    const ProbField p = temperature_softmax(z, tau);
    const std::size_t n = p.pixels();
    const std::size_t K = p.num_classes();

    GradResult out;
    out.value = eval_loss(spec, p, g, eps);
    std::vector<double> q(n * K, 0.0);
    accumulate_dldp(spec, p, g, eps, 1.0, q);

    out.grad.assign(n * K, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double dot = 0.0;
        for (std::size_t k = 0; k < K; ++k) dot += p.at(i, k) * q[i * K + k];
        for (std::size_t k = 0; k < K; ++k)
            out.grad[i * K + k] = tau * p.at(i, k) * (q[i * K + k] - dot);
    }
    return out;
}

std::vector<double> loss_prob_gradient(const LossSpec& spec, const ProbField& p,
                                       const LabelField& g, double eps) {
    std::vector<double> q(p.pixels() * p.num_classes(), 0.0);
    accumulate_dldp(spec, p, g, eps, 1.0, q);
    return q;
}

std::vector<double> finite_diff_gradient(const LossSpec& spec,
                                         const LogitField& z,
                                         const LabelField& g, double tau,
                                         double h, double eps) {
    if (!(h > 0.0)) throw invalid_parameter("finite_diff_gradient: h must be > 0");
    std::vector<double> coords = z.data();
    std::vector<double> grad(coords.size());
    auto eval_at = [&](const std::vector<double>& values) {
        LogitField zi(z.height(), z.width(), z.num_classes(), values);
        return eval_loss(spec, temperature_softmax(zi, tau), g, eps);
    };
    for (std::size_t c = 0; c < coords.size(); ++c) {
        const double saved = coords[c];
        coords[c] = saved + h;
        const double up = eval_at(coords);
        coords[c] = saved - h;
        const double down = eval_at(coords);
        coords[c] = saved;
        grad[c] = (up - down) / (2.0 * h);
    }
    return grad;
}

namespace {

double max_abs(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

bool spec_contains_l1(const LossSpec& spec) {
    if (spec.kind == LossKind::l1_marginal) return true;
    for (const auto& [term, weight] : spec.terms) {
        (void)weight;
        if (spec_contains_l1(term)) return true;
    }
    return false;
}

// shift channel-1 logits until every |p-hat_k - y-hat_k| clears the kink
LogitField nudge_off_kink(const LogitField& z, const LabelField& g, double tau) {
    std::vector<double> values = z.data();
    const std::size_t K = z.num_classes();
    const Marginal yh = gt_marginal(g);
    for (int attempt = 0; attempt < 64; ++attempt) {
        LogitField zi(z.height(), z.width(), K, values);
        const Marginal ph = predicted_marginal(temperature_softmax(zi, tau));
        double closest = 1.0;
        for (std::size_t k = 0; k < K; ++k)
            closest = std::min(closest, std::abs(ph[k] - yh[k]));
        if (closest >= 1e-3) return zi;
        for (std::size_t i = 0; i < zi.pixels(); ++i) values[i * K] += 0.05;
    }
    return LogitField(z.height(), z.width(), K, values);
}

} // namespace

std::vector<GradCheckRow> gradcheck(std::uint64_t seed,
                                    std::size_t instances_per_spec) {
    struct Entry {
        LossSpec spec;
        bool binary_only;
    };
    std::vector<Entry> entries;
    auto plain = [](LossKind kind) {
        LossSpec s;
        s.kind = kind;
        return s;
    };
    auto dice_mode = [&plain](LossKind kind, bool fg) {
        LossSpec s = plain(kind);
        s.foreground_only = fg;
        return s;
    };
    entries.push_back({plain(LossKind::ce_region_weighted), false});
    entries.push_back({plain(LossKind::ce_pixel_avg), false});
    entries.push_back({plain(LossKind::focal), false});
    entries.push_back({dice_mode(LossKind::linear_dice, false), false});
    entries.push_back({dice_mode(LossKind::linear_dice, true), true});
    entries.push_back({dice_mode(LossKind::log_dice, false), false});
    entries.push_back({dice_mode(LossKind::log_dice, true), true});
    entries.push_back({plain(LossKind::gdice), false});
    entries.push_back({plain(LossKind::kl_marginal), false});
    entries.push_back({plain(LossKind::l1_marginal), false});
    entries.push_back({dice_mode(LossKind::dice_bias, false), false});
    entries.push_back({LossSpec::from_name("ours-l1", 1.0), false});
    entries.push_back({LossSpec::from_name("ours-kl", 0.1), false});
    entries.push_back({LossSpec::from_name("dicece", 0.1), false});
    entries.push_back({LossSpec::from_name("logdicece", 0.1), false});

    std::vector<GradCheckRow> rows;
    rows.reserve(entries.size());
    const double tau = kDefaultTau;
    for (const Entry& entry : entries) {
        GradCheckRow row;
        row.spec_id = entry.spec.id();
        row.instance_seed = derive_stream(seed, row.spec_id);
        SplitMix64 rng(row.instance_seed);
        for (std::size_t t = 0; t < instances_per_spec; ++t) {
            const std::size_t K = entry.binary_only ? 2 : 2 + rng.below(2);
            const std::size_t n = 4 * K + rng.below(64 - 4 * K + 1);
            const LabelField labels = random_labels(rng, n, K);
            // gentle logits: tau=10 downstream, keep probabilities away
            // from full saturation
            LogitField z = random_logits(rng, n, K, 0.25);
            if (spec_contains_l1(entry.spec))
                z = nudge_off_kink(z, labels, tau);
            const GradResult a = loss_gradient(entry.spec, z, labels, tau);
            const std::vector<double> f =
                finite_diff_gradient(entry.spec, z, labels, tau);
            double diff = 0.0;
            for (std::size_t c = 0; c < f.size(); ++c)
                diff = std::max(diff, std::abs(a.grad[c] - f[c]));
            const double denom =
                std::max({1e-8, max_abs(a.grad), max_abs(f)});
            row.max_rel_err = std::max(row.max_rel_err, diff / denom);
        }
        row.pass = row.max_rel_err <= 1e-4;
        rows.push_back(std::move(row));
    }
    return rows;
}

} // namespace seglab
