#include "seglab/synthlab.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <thread>

#include <json.hpp>

#include "seglab/rng.hpp"

namespace seglab {

namespace {

using nlohmann::json;

std::vector<std::size_t> allocate_counts(const std::vector<double>& targets,
                                         std::size_t total) {
    // largest-remainder allocation; |n_k - t_k*total| < 1 per class
    const std::size_t K = targets.size();
    std::vector<std::size_t> counts(K);
    std::vector<std::pair<double, std::size_t>> remainders(K);
    std::size_t assigned = 0;
    for (std::size_t k = 0; k < K; ++k) {
        const double exact = targets[k] * static_cast<double>(total);
        counts[k] = static_cast<std::size_t>(std::floor(exact));
        remainders[k] = {exact - std::floor(exact), k};
        assigned += counts[k];
    }
    std::stable_sort(remainders.begin(), remainders.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    for (std::size_t r = 0; assigned < total; ++r, ++assigned)
        ++counts[remainders[r % K].second];
    return counts;
}

} // namespace

ScenarioSpec ScenarioSpec::preset(const std::string& name, std::uint64_t seed) {
    ScenarioSpec s;
    s.name = name;
    s.seed = seed;
    if (name == "binary_imbalanced") {
        s.height = s.width = 64;
        s.num_classes = 2;
        s.target_proportions = {0.01, 0.99};
        s.feature_dim = 2;
        // partially separable: a confident foreground core plus an
        // ambiguous fringe, the regime where the Dice marginal bias shows
        s.class_separation = 2.5;
        s.noise_sigma = 1.0;
    } else if (name == "multiclass_diverse") {
        s.height = s.width = 64;
        s.num_classes = 5;
        s.target_proportions = {0.50, 0.30, 0.15, 0.04, 0.01};
        s.feature_dim = 8;
        s.class_separation = 2.0;
        s.noise_sigma = 1.0;
    } else if (name == "marginal_only") {
        s.height = s.width = 32;
        s.num_classes = 3;
        s.target_proportions = {0.2, 0.3, 0.5};
        s.feature_dim = 4;
        s.class_separation = 0.0; // fully ambiguous features
        s.noise_sigma = 1.0;
    } else {
        throw invalid_spec("unknown scenario '" + name + "'");
    }
    return s;
}

std::string ScenarioSpec::to_json() const {
    json j;
    j["name"] = name;
    j["height"] = height;
    j["width"] = width;
    j["num_classes"] = num_classes;
    j["target_proportions"] = target_proportions;
    j["feature_dim"] = feature_dim;
    j["class_separation"] = class_separation;
    j["noise_sigma"] = noise_sigma;
    j["seed"] = seed;
    return j.dump();
}

ScenarioSpec ScenarioSpec::from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw invalid_spec(std::string("scenario: bad JSON: ") + e.what());
    }
    ScenarioSpec s = j.contains("name")
                         ? preset(j.at("name").get<std::string>(),
                                  j.value("seed", std::uint64_t{1}))
                         : ScenarioSpec{};
    for (const auto& [key, value] : j.items()) {
        if (key == "name") continue;
        else if (key == "height") s.height = value.get<std::size_t>();
        else if (key == "width") s.width = value.get<std::size_t>();
        else if (key == "num_classes") s.num_classes = value.get<std::size_t>();
        else if (key == "target_proportions")
            s.target_proportions = value.get<std::vector<double>>();
        else if (key == "feature_dim") s.feature_dim = value.get<std::size_t>();
        else if (key == "class_separation")
            s.class_separation = value.get<double>();
        else if (key == "noise_sigma") s.noise_sigma = value.get<double>();
        else if (key == "seed") s.seed = value.get<std::uint64_t>();
        else throw invalid_spec("scenario: unknown key '" + key + "'");
    }
    return s;
}

Dataset make_scenario(const ScenarioSpec& spec) {
    const std::size_t K = spec.num_classes;
    const std::size_t n = spec.height * spec.width;
    if (spec.target_proportions.size() != K)
        throw invalid_spec("make_scenario: proportions/num_classes mismatch");
    double sum = 0.0;
    for (double t : spec.target_proportions) {
        if (!(t > 0.0) || t >= 1.0)
            throw invalid_spec("make_scenario: proportions must be in (0,1)");
        sum += t;
    }
    if (std::abs(sum - 1.0) > 1e-9)
        throw invalid_spec("make_scenario: proportions must sum to 1");
    if (spec.class_separation < 0.0 || spec.noise_sigma < 0.0)
        throw invalid_spec("make_scenario: negative separation or sigma");
    if (spec.class_separation > 0.0 && spec.feature_dim < K)
        throw invalid_spec("make_scenario: feature_dim must be >= K for "
                           "separated class means");

    const std::vector<std::size_t> counts =
        allocate_counts(spec.target_proportions, n);
    for (std::size_t k = 0; k < K; ++k)
        if (counts[k] == 0)
            throw invalid_spec("make_scenario: class " + std::to_string(k + 1) +
                               " gets 0 pixels at this resolution");

    // nested blobs: pixels ranked by distance to the grid center, class 1
    // innermost; layout is purely geometric, no randomness
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    const double cy = (static_cast<double>(spec.height) - 1.0) / 2.0;
    const double cx = (static_cast<double>(spec.width) - 1.0) / 2.0;
    std::vector<double> dist(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double dy = static_cast<double>(i / spec.width) - cy;
        const double dx = static_cast<double>(i % spec.width) - cx;
        dist[i] = dy * dy + dx * dx;
    }
    std::stable_sort(order.begin(), order.end(),
                     [&dist](std::size_t a, std::size_t b) {
                         return dist[a] < dist[b];
                     });
    std::vector<int> labels(n);
    std::size_t cursor = 0;
    for (std::size_t k = 0; k < K; ++k)
        for (std::size_t c = 0; c < counts[k]; ++c)
            labels[order[cursor++]] = static_cast<int>(k + 1);
    LabelField field(spec.height, spec.width, K, std::move(labels));

    // class means: scaled one-hot corners, pairwise distance = separation
    const std::size_t D = spec.feature_dim;
    const double mean_scale = spec.class_separation / std::sqrt(2.0);
    SplitMix64 rng(derive_stream(spec.seed, "features"));
    std::vector<double> features(n * D);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t k = static_cast<std::size_t>(field.at(i)) - 1;
        for (std::size_t d = 0; d < D; ++d) {
            double mu = (spec.class_separation > 0.0 && d == k) ? mean_scale : 0.0;
            features[i * D + d] = mu + spec.noise_sigma * rng.normal();
        }
    }
    return Dataset{D, std::move(features), std::move(field)};
}

Model init_model(std::size_t num_classes, std::size_t feature_dim,
                 std::uint64_t seed) {
    Model m;
    m.num_classes = num_classes;
    m.feature_dim = feature_dim;
    m.weights.resize(num_classes * feature_dim);
    m.bias.assign(num_classes, 0.0);
    SplitMix64 rng(derive_stream(seed, "model-init"));
    for (auto& w : m.weights) w = 0.01 * rng.normal();
    return m;
}

LogitField model_logits(const Model& model, const Dataset& data) {
    const std::size_t n = data.labels.size();
    const std::size_t K = model.num_classes;
    const std::size_t D = model.feature_dim;
    if (data.feature_dim != D || data.labels.num_classes() != K)
        throw invalid_input("model_logits: model/data shape mismatch");
    std::vector<double> z(n * K);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = 0; k < K; ++k) {
            double acc = model.bias[k];
            for (std::size_t d = 0; d < D; ++d)
                acc += model.weights[k * D + d] * data.features[i * D + d];
            z[i * K + k] = acc;
        }
    }
    return LogitField(data.labels.height(), data.labels.width(), K, std::move(z));
}

Metrics evaluate(const ProbField& p, const LabelField& g) {
    if (p.pixels() != g.size() || p.num_classes() != g.num_classes())
        throw invalid_input("evaluate: shape mismatch");
    const std::size_t n = p.pixels();
    const std::size_t K = p.num_classes();

    std::vector<std::size_t> pred_count(K, 0), inter(K, 0);
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t best = 0;
        for (std::size_t k = 1; k < K; ++k)
            if (p.at(i, k) > p.at(i, best)) best = k;
        ++pred_count[best];
        if (static_cast<std::size_t>(g.at(i)) - 1 == best) ++inter[best];
    }

    Metrics m;
    m.dsc_per_class.assign(K, 0.0);
    m.iou_per_class.assign(K, 0.0);
    m.class_scored.assign(K, true);
    std::size_t scored = 0;
    for (std::size_t k = 0; k < K; ++k) {
        const std::size_t gt = g.region_sizes()[k];
        if (gt == 0 && pred_count[k] == 0) {
            m.class_scored[k] = false;
            m.any_class_excluded = true;
            continue;
        }
        const double denom_dsc = static_cast<double>(pred_count[k] + gt);
        const double uni = static_cast<double>(pred_count[k] + gt - inter[k]);
        m.dsc_per_class[k] = 2.0 * static_cast<double>(inter[k]) / denom_dsc;
        m.iou_per_class[k] = static_cast<double>(inter[k]) / uni;
        m.mean_dsc += m.dsc_per_class[k];
        m.mean_iou += m.iou_per_class[k];
        ++scored;
    }
    if (scored) {
        m.mean_dsc /= static_cast<double>(scored);
        m.mean_iou /= static_cast<double>(scored);
    }
    m.marginal_l1_error = l1_marginal(gt_marginal(g), predicted_marginal(p));
    return m;
}

TrainTrace train(const Model& model0, const LossSpec& spec, const Dataset& data,
                 double lr, std::size_t epochs, double tau) {
    if (!(lr > 0.0)) throw invalid_parameter("train: lr must be > 0");
    if (epochs < 1) throw invalid_parameter("train: epochs must be >= 1");
    const std::size_t n = data.labels.size();
    const std::size_t K = model0.num_classes;
    const std::size_t D = model0.feature_dim;

    TrainTrace trace;
    trace.final_model = model0;
    Model& model = trace.final_model;
    for (std::size_t it = 1; it <= epochs; ++it) {
        const GradResult gr =
            loss_gradient(spec, model_logits(model, data), data.labels, tau);
        bool finite = std::isfinite(gr.value);
        for (double v : gr.grad)
            if (!std::isfinite(v)) { finite = false; break; }
        if (!finite) {
            trace.status = TrainStatus::diverged;
            return trace;
        }

        for (std::size_t k = 0; k < K; ++k) {
            double gb = 0.0;
            for (std::size_t i = 0; i < n; ++i) gb += gr.grad[i * K + k];
            model.bias[k] -= lr * gb;
        }
        for (std::size_t k = 0; k < K; ++k) {
            for (std::size_t d = 0; d < D; ++d) {
                double gw = 0.0;
                for (std::size_t i = 0; i < n; ++i)
                    gw += gr.grad[i * K + k] * data.features[i * D + d];
                model.weights[k * D + d] -= lr * gw;
            }
        }

        const ProbField p =
            temperature_softmax(model_logits(model, data), tau);
        TraceRow row;
        row.iteration = it;
        row.loss = eval_loss(spec, p, data.labels);
        row.marginal = predicted_marginal(p).values();
        const Metrics metrics = evaluate(p, data.labels);
        row.dsc = metrics.dsc_per_class;
        row.mean_iou = metrics.mean_iou;
        const bool loss_finite = std::isfinite(row.loss);
        trace.rows.push_back(std::move(row));
        if (!loss_finite) {
            trace.status = TrainStatus::diverged;
            return trace;
        }
    }
    return trace;
}

std::vector<SweepRow> sweep(const ScenarioSpec& scenario,
                            const std::vector<std::string>& losses,
                            const std::vector<double>& lambdas,
                            const std::vector<std::uint64_t>& seeds,
                            const SweepOptions& options) {
    if (losses.empty() || lambdas.empty() || seeds.empty())
        throw invalid_parameter("sweep: empty loss/lambda/seed list");

    struct Job {
        std::string loss;
        double lambda;
        std::uint64_t seed;
    };
    std::vector<Job> jobs;
    for (const auto& loss : losses)
        for (double lambda : lambdas)
            for (std::uint64_t seed : seeds) jobs.push_back({loss, lambda, seed});

    std::vector<SweepRow> rows(jobs.size());
    auto run_job = [&](std::size_t j) {
        const Job& job = jobs[j];
        SweepRow row;
        row.loss = job.loss;
        row.lambda = job.lambda;
        row.seed = job.seed;
        ScenarioSpec seeded = scenario;
        seeded.seed = job.seed;
        const Dataset data = make_scenario(seeded);
        const LossSpec spec = LossSpec::from_name(job.loss, job.lambda);
        const Model model0 =
            init_model(seeded.num_classes, seeded.feature_dim, job.seed);
        const TrainTrace trace =
            train(model0, spec, data, options.lr, options.epochs, options.tau);
        row.status = trace.status;
        if (!trace.rows.empty()) {
            row.final_loss = trace.rows.back().loss;
            row.final_marginal = trace.rows.back().marginal;
        } else {
            row.final_marginal.assign(seeded.num_classes, 0.0);
        }
        const ProbField p = temperature_softmax(
            model_logits(trace.final_model, data), options.tau);
        row.metrics = evaluate(p, data.labels);
        rows[j] = std::move(row);
    };

    const unsigned threads =
        std::min<unsigned>(options.threads > 1 ? options.threads : 1,
                           static_cast<unsigned>(jobs.size()));
    if (threads <= 1) {
        for (std::size_t j = 0; j < jobs.size(); ++j) run_job(j);
    } else {
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < threads; ++t) {
            pool.emplace_back([&, t] {
                for (std::size_t j = t; j < jobs.size(); j += threads)
                    run_job(j);
            });
        }
        for (auto& th : pool) th.join();
    }
    return rows;
}

} // namespace seglab
