#include "seglab/losses.hpp"

#include <cmath>
#include <cstdio>

#include <json.hpp>

namespace seglab {

namespace {

using nlohmann::json;

// per-class sums A_k = sum_{Omega_k} p_ik and column sums C_k = sum_Omega p_ik
struct RegionSums {
    std::vector<double> region;
    std::vector<double> column;
};

RegionSums region_sums(const ProbField& p, const LabelField& g) {
    const std::size_t n = p.pixels();
    const std::size_t K = p.num_classes();
    RegionSums s{std::vector<double>(K, 0.0), std::vector<double>(K, 0.0)};
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t gi = static_cast<std::size_t>(g.at(i)) - 1;
        for (std::size_t k = 0; k < K; ++k) s.column[k] += p.at(i, k);
        s.region[gi] += p.at(i, gi);
    }
    return s;
}

void check_pair(const ProbField& p, const LabelField& g) {
    if (p.pixels() != g.size() || p.num_classes() != g.num_classes())
        throw invalid_input("loss: prediction/label shape mismatch");
}

double dice_from_sums(double region_sum, double column_sum,
                      std::size_t region_size, double eps) {
    return 2.0 * region_sum /
           (column_sum + static_cast<double>(region_size) + eps);
}

} // namespace

const char* loss_kind_name(LossKind kind) {
    switch (kind) {
        case LossKind::ce_region_weighted: return "wce";
        case LossKind::ce_pixel_avg: return "ce";
        case LossKind::focal: return "focal";
        case LossKind::linear_dice: return "dice";
        case LossKind::log_dice: return "logdice";
        case LossKind::gdice: return "gdice";
        case LossKind::kl_marginal: return "kl";
        case LossKind::l1_marginal: return "l1";
        case LossKind::dice_bias: return "dicebias";
        case LossKind::composite: return "composite";
    }
    return "?";
}

LossKind loss_kind_from_name(const std::string& name) {
    for (LossKind k : {LossKind::ce_region_weighted, LossKind::ce_pixel_avg,
                       LossKind::focal, LossKind::linear_dice, LossKind::log_dice,
                       LossKind::gdice, LossKind::kl_marginal,
                       LossKind::l1_marginal, LossKind::dice_bias,
                       LossKind::composite})
        if (name == loss_kind_name(k)) return k;
    throw invalid_spec("unknown loss kind '" + name + "'");
}

double ce_region_weighted(const ProbField& p, const LabelField& g, double eps,
                          EvalDiag* diag) {
    check_pair(p, g);
    const std::size_t n = p.pixels();
    const std::size_t K = p.num_classes();
    std::vector<double> acc(K, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t gi = static_cast<std::size_t>(g.at(i)) - 1;
        acc[gi] += std::log(p.at(i, gi) + eps);
    }
    double loss = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
        const std::size_t nk = g.region_sizes()[k];
        if (nk == 0) {
            if (diag) diag->skipped_empty_region = true;
            continue;
        }
        loss -= acc[k] / static_cast<double>(nk);
    }
    return loss;
}

double ce_pixel_avg(const ProbField& p, const LabelField& g, double eps) {
    check_pair(p, g);
    const std::size_t n = p.pixels();
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t gi = static_cast<std::size_t>(g.at(i)) - 1;
        acc += std::log(p.at(i, gi) + eps);
    }
    return -acc / static_cast<double>(n);
}

double dice_coeff(const ProbField& p, const LabelField& g, std::size_t k,
                  double eps) {
    check_pair(p, g);
    if (k < 1 || k > p.num_classes())
        throw invalid_parameter("dice_coeff: class out of range");
    if (g.region_size(k) == 0)
        throw undefined_region("dice_coeff: empty ground-truth region");
    const std::size_t n = p.pixels();
    double region = 0.0, column = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double v = p.at(i, k - 1);
        column += v;
        if (static_cast<std::size_t>(g.at(i)) == k) region += v;
    }
    return dice_from_sums(region, column, g.region_size(k), eps);
}

namespace {

template <typename PerClass>
double dice_family_loss(const ProbField& p, const LabelField& g,
                        bool foreground_only, double eps, EvalDiag* diag,
                        PerClass per_class) {
    check_pair(p, g);
    const std::size_t K = p.num_classes();
    if (foreground_only && g.region_size(1) == 0)
        throw undefined_region("dice loss: empty foreground region");
    const RegionSums s = region_sums(p, g);
    double loss = 0.0;
    for (std::size_t k = 1; k <= K; ++k) {
        if (foreground_only && k != 1) continue;
        const std::size_t nk = g.region_size(k);
        if (nk == 0) {
            if (diag) diag->skipped_empty_region = true;
            continue;
        }
        loss += per_class(dice_from_sums(s.region[k - 1], s.column[k - 1], nk, eps));
    }
    return loss;
}

} // namespace

double linear_dice_loss(const ProbField& p, const LabelField& g,
                        bool foreground_only, double eps, EvalDiag* diag) {
    return dice_family_loss(p, g, foreground_only, eps, diag,
                            [](double d) { return 1.0 - d; });
}

double log_dice_loss(const ProbField& p, const LabelField& g,
                     bool foreground_only, double eps, EvalDiag* diag) {
    return dice_family_loss(p, g, foreground_only, eps, diag,
                            [eps](double d) { return -std::log(d + eps); });
}

double kl_marginal(const Marginal& y, const Marginal& p, double eps) {
    if (y.size() != p.size()) throw invalid_input("kl_marginal: size mismatch");
    double v = 0.0;
    for (std::size_t k = 0; k < y.size(); ++k)
        v += y[k] * std::log((y[k] + eps) / (p[k] + eps));
    return v;
}

double l1_marginal(const Marginal& y, const Marginal& p) {
    if (y.size() != p.size()) throw invalid_input("l1_marginal: size mismatch");
    double v = 0.0;
    for (std::size_t k = 0; k < y.size(); ++k) v += std::abs(y[k] - p[k]);
    return v;
}

double focal_loss(const ProbField& p, const LabelField& g, double gamma,
                  double eps) {
    check_pair(p, g);
    if (gamma < 0.0) throw invalid_parameter("focal_loss: gamma must be >= 0");
    const std::size_t n = p.pixels();
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t gi = static_cast<std::size_t>(g.at(i)) - 1;
        const double v = p.at(i, gi);
        const double w = gamma == 0.0 ? 1.0 : std::pow(1.0 - v, gamma);
        acc += w * std::log(v + eps);
    }
    return -acc / static_cast<double>(n);
}

double gdice_loss(const ProbField& p, const LabelField& g, double eps,
                  EvalDiag* diag) {
    check_pair(p, g);
    const std::size_t K = p.num_classes();
    const RegionSums s = region_sums(p, g);
    double num = 0.0, den = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
        const std::size_t nk = g.region_sizes()[k];
        if (nk == 0) {
            if (diag) diag->skipped_empty_region = true;
            continue;
        }
        const double w = 1.0 / (static_cast<double>(nk) * static_cast<double>(nk));
        num += w * s.region[k];
        den += w * (s.column[k] + static_cast<double>(nk));
    }
    return 1.0 - 2.0 * num / (den + eps);
}

double dice_bias_penalty(const ProbField& p, const LabelField& g,
                         bool foreground_only, double eps) {
    check_pair(p, g);
    const Marginal ph = predicted_marginal(p);
    const Marginal yh = gt_marginal(g);
    if (foreground_only) return std::log(ph[0] + yh[0] + eps);
    double v = 0.0;
    for (std::size_t k = 0; k < ph.size(); ++k)
        v += std::log(ph[k] + yh[k] + eps);
    return v;
}

bool dice_foreground_only(const LossSpec& spec, std::size_t num_classes) {
    if (spec.foreground_only.has_value()) return *spec.foreground_only;
    return num_classes == 2;
}

double eval_loss(const LossSpec& spec, const ProbField& p, const LabelField& g,
                 double eps, EvalDiag* diag) {
    switch (spec.kind) {
        case LossKind::ce_region_weighted:
            return ce_region_weighted(p, g, eps, diag);
        case LossKind::ce_pixel_avg:
            return ce_pixel_avg(p, g, eps);
        case LossKind::focal:
            return focal_loss(p, g, spec.gamma, eps);
        case LossKind::linear_dice:
            return linear_dice_loss(p, g, dice_foreground_only(spec, p.num_classes()),
                                    eps, diag);
        case LossKind::log_dice:
            return log_dice_loss(p, g, dice_foreground_only(spec, p.num_classes()),
                                 eps, diag);
        case LossKind::gdice:
            return gdice_loss(p, g, eps, diag);
        case LossKind::kl_marginal:
            return kl_marginal(gt_marginal(g), predicted_marginal(p), eps);
        case LossKind::l1_marginal:
            return l1_marginal(gt_marginal(g), predicted_marginal(p));
        case LossKind::dice_bias:
            return dice_bias_penalty(p, g,
                                     dice_foreground_only(spec, p.num_classes()),
                                     eps);
        case LossKind::composite: {
            if (spec.terms.empty())
                throw invalid_spec("composite loss with no terms");
            double total = 0.0;
            for (const auto& [term, weight] : spec.terms) {
                if (!(weight >= 0.0) || !std::isfinite(weight))
                    throw invalid_spec("composite weight must be finite and >= 0");
                if (weight == 0.0) continue;
                total += weight * eval_loss(term, p, g, eps, diag);
            }
            return total;
        }
    }
    throw invalid_spec("unhandled loss kind");
}

LossReport eval_loss_report(const LossSpec& spec, const ProbField& p,
                            const LabelField& g, double eps) {
    LossReport report;
    EvalDiag diag;
    if (spec.kind == LossKind::composite) {
        for (const auto& [term, weight] : spec.terms) {
            const double v = eval_loss(term, p, g, eps, &diag);
            report.terms.push_back({term.id(), weight, v});
            if (weight != 0.0) report.total += weight * v;
        }
    } else {
        const double v = eval_loss(spec, p, g, eps, &diag);
        report.terms.push_back({spec.id(), 1.0, v});
        report.total = v;
    }
    report.skipped_empty_region = diag.skipped_empty_region;
    return report;
}

namespace {

json spec_to_json_obj(const LossSpec& spec) {
    json j;
    j["kind"] = loss_kind_name(spec.kind);
    if (spec.kind == LossKind::focal) j["gamma"] = spec.gamma;
    if (spec.foreground_only.has_value())
        j["foreground_only"] = *spec.foreground_only;
    if (spec.kind == LossKind::composite) {
        json terms = json::array();
        for (const auto& [term, weight] : spec.terms)
            terms.push_back({{"weight", weight}, {"spec", spec_to_json_obj(term)}});
        j["terms"] = terms;
    }
    return j;
}

LossSpec spec_from_json_obj(const json& j) {
    if (!j.is_object() || !j.contains("kind"))
        throw invalid_spec("loss spec: expected an object with a 'kind'");
    LossSpec spec;
    spec.kind = loss_kind_from_name(j.at("kind").get<std::string>());
    for (const auto& [key, value] : j.items()) {
        if (key == "kind") continue;
        if (key == "gamma") {
            spec.gamma = value.get<double>();
            if (spec.gamma < 0.0) throw invalid_spec("loss spec: gamma < 0");
        } else if (key == "foreground_only") {
            spec.foreground_only = value.get<bool>();
        } else if (key == "terms") {
            for (const auto& t : value)
                spec.terms.emplace_back(spec_from_json_obj(t.at("spec")),
                                        t.at("weight").get<double>());
        } else {
            throw invalid_spec("loss spec: unknown key '" + key + "'");
        }
    }
    if (spec.kind == LossKind::composite && spec.terms.empty())
        throw invalid_spec("loss spec: composite needs a non-empty term list");
    return spec;
}

} // namespace

std::string LossSpec::to_json() const { return spec_to_json_obj(*this).dump(); }

LossSpec LossSpec::from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw invalid_spec(std::string("loss spec: bad JSON: ") + e.what());
    }
    try {
        return spec_from_json_obj(j);
    } catch (const json::exception& e) {
        throw invalid_spec(std::string("loss spec: ") + e.what());
    }
}

LossSpec LossSpec::from_name(const std::string& name, double lambda) {
    auto composite_with = [lambda](LossKind second) {
        LossSpec spec;
        spec.kind = LossKind::composite;
        LossSpec ce;
        ce.kind = LossKind::ce_pixel_avg;
        LossSpec term;
        term.kind = second;
        spec.terms.emplace_back(std::move(ce), 1.0);
        spec.terms.emplace_back(std::move(term), lambda);
        return spec;
    };
    if (name == "dicece") return composite_with(LossKind::linear_dice);
    if (name == "logdicece") return composite_with(LossKind::log_dice);
    if (name == "dicebiasce") return composite_with(LossKind::dice_bias);
    if (name == "ours-l1") return composite_with(LossKind::l1_marginal);
    if (name == "ours-kl") return composite_with(LossKind::kl_marginal);
    LossSpec spec;
    spec.kind = loss_kind_from_name(name);
    if (spec.kind == LossKind::composite)
        throw invalid_spec("composite losses need a JSON spec or a named form");
    return spec;
}

std::string LossSpec::id() const {
    if (kind == LossKind::composite) {
        std::string out = "composite(";
        for (std::size_t i = 0; i < terms.size(); ++i) {
            if (i) out += '+';
            char buf[32];
            std::snprintf(buf, sizeof buf, "%g*", terms[i].second);
            out += buf;
            out += terms[i].first.id();
        }
        return out + ")";
    }
    std::string out = loss_kind_name(kind);
    if (kind == LossKind::focal && gamma != 2.0) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "(g=%g)", gamma);
        out += buf;
    }
    if (foreground_only.has_value())
        out += *foreground_only ? "(fg)" : "(all)";
    return out;
}

} // namespace seglab
