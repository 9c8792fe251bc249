// seglab: verification, bias curves, toy training and lambda sweeps for
// the CE/Dice loss family. All CSV output is byte-reproducible for a
// given configuration.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "seglab/csv.hpp"
#include "seglab/grad.hpp"
#include "seglab/pgm.hpp"
#include "seglab/synthlab.hpp"
#include "seglab/verify.hpp"

namespace {

using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitCheckFailed = 1;
constexpr int kExitUsage = 2;
constexpr int kExitDiverged = 3;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// JSON config support: file values fill in flags the user did not pass;
// explicit flags win; unknown keys are rejected.
void apply_config(CLI::App* cmd, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open config file " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw UsageError("bad JSON in " + path + ": " + e.what());
    }
    if (!j.is_object()) throw UsageError("config must be a JSON object");
    for (const auto& [key, value] : j.items()) {
        CLI::Option* opt = cmd->get_option_no_throw("--" + key);
        if (opt == nullptr || key == "config")
            throw UsageError("unknown config key '" + key + "'");
        if (opt->count() > 0) continue; // explicit flag overrides the file
        auto as_text = [](const json& v) {
            return v.is_string() ? v.get<std::string>() : v.dump();
        };
        if (value.is_array())
            for (const auto& element : value) opt->add_result(as_text(element));
        else
            opt->add_result(as_text(value));
        opt->run_callback();
    }
}

void write_file(const std::string& path, const std::string& contents) {
    const std::filesystem::path p(path);
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    out << contents;
    if (!out) throw std::runtime_error("write failed for " + path);
}

unsigned thread_cap() {
    unsigned threads = std::thread::hardware_concurrency();
    if (threads == 0) threads = 1;
    if (const char* env = std::getenv("SEGLAB_THREADS")) {
        char* end = nullptr;
        const unsigned long v = std::strtoul(env, &end, 10);
        if (end == env || *end != '\0')
            throw UsageError("SEGLAB_THREADS must be a number");
        threads = v == 0 ? 1 : std::min<unsigned long>(v, threads);
    }
    return threads;
}

// ---------------------------------------------------------------- verify

struct VerifyArgs {
    std::uint64_t seed = 1;
    std::string out = "verify_report.csv";
    double perturb_constant = 0.0;
};

int cmd_verify(const VerifyArgs& args) {
    seglab::VerifySuiteOptions options;
    options.seed = args.seed;
    options.perturb_constant = args.perturb_constant;
    const std::vector<seglab::CheckRow> rows = seglab::run_verify_suite(options);

    std::string csv = "check_id,params,max_violation,status\n";
    std::vector<std::string> failures;
    for (const auto& row : rows) {
        csv += seglab::csv_join({row.check_id, row.params,
                                 seglab::fmt_g9(row.max_violation),
                                 row.pass ? "PASS" : "FAIL"});
        std::cout << (row.pass ? "PASS" : "FAIL") << "  " << row.check_id
                  << "  (" << row.params
                  << ", max_violation=" << seglab::fmt_g9(row.max_violation)
                  << ")\n";
        if (!row.pass) failures.push_back(row.check_id);
    }
    write_file(args.out, csv);
    if (!failures.empty()) {
        std::cout << "FAILED checks:";
        for (const auto& id : failures) std::cout << ' ' << id;
        std::cout << '\n';
        return kExitCheckFailed;
    }
    std::cout << rows.size() << " checks passed\n";
    return kExitOk;
}

// ---------------------------------------------------------------- curves

struct CurvesArgs {
    double y1 = 0.1;
    std::size_t points = 99;
    std::string out = "curves.csv";
};

int cmd_curves(const CurvesArgs& args) {
    if (!(args.y1 > 0.0) || !(args.y1 < 1.0))
        throw UsageError("--y1 must lie strictly inside (0,1)");
    if (args.points == 0) throw UsageError("--points must be positive");
    const seglab::CurveTable table = seglab::bias_curves(args.y1, args.points);
    std::string csv = "p1,db1,kl,l1\n";
    for (std::size_t i = 0; i < table.p1.size(); ++i)
        csv += seglab::csv_join(
            {seglab::fmt_g9(table.p1[i]), seglab::fmt_g9(table.db1[i]),
             seglab::fmt_g9(table.kl[i]), seglab::fmt_g9(table.l1[i])});
    write_file(args.out, csv);
    std::cout << "wrote " << table.p1.size() << " rows to " << args.out << '\n';
    return kExitOk;
}

// ----------------------------------------------------------------- train

struct TrainArgs {
    std::string scenario = "binary_imbalanced";
    std::string loss = "ce";
    double lambda = 1.0;
    std::uint64_t seed = 1;
    double lr = 0.02;
    std::size_t epochs = 500;
    double tau = seglab::kDefaultTau;
    std::string out = "train_out";
};

std::string trace_csv(const seglab::TrainTrace& trace, std::size_t K) {
    std::string csv = "iteration,loss";
    for (std::size_t k = 1; k <= K; ++k) csv += ",p" + std::to_string(k);
    for (std::size_t k = 1; k <= K; ++k) csv += ",dsc" + std::to_string(k);
    csv += ",miou\n";
    for (const auto& row : trace.rows) {
        std::vector<std::string> cells{std::to_string(row.iteration),
                                       seglab::fmt_g9(row.loss)};
        for (double v : row.marginal) cells.push_back(seglab::fmt_g9(v));
        for (double v : row.dsc) cells.push_back(seglab::fmt_g9(v));
        cells.push_back(seglab::fmt_g9(row.mean_iou));
        csv += seglab::csv_join(cells);
    }
    return csv;
}

int cmd_train(const TrainArgs& args) {
    const seglab::ScenarioSpec scenario =
        seglab::ScenarioSpec::preset(args.scenario, args.seed);
    const seglab::Dataset data = seglab::make_scenario(scenario);
    const seglab::LossSpec spec = seglab::LossSpec::from_name(args.loss, args.lambda);
    const seglab::Model model0 = seglab::init_model(
        scenario.num_classes, scenario.feature_dim, args.seed);
    const seglab::TrainTrace trace =
        seglab::train(model0, spec, data, args.lr, args.epochs, args.tau);

    const std::filesystem::path dir(args.out);
    write_file((dir / "trace.csv").string(),
               trace_csv(trace, scenario.num_classes));
    write_file((dir / "config.json").string(), [&] {
        json j;
        j["scenario"] = json::parse(scenario.to_json());
        j["loss"] = json::parse(spec.to_json());
        j["lambda"] = args.lambda;
        j["seed"] = args.seed;
        j["lr"] = args.lr;
        j["epochs"] = args.epochs;
        j["tau"] = args.tau;
        return j.dump(2) + "\n";
    }());

    // final hard prediction as a PGM mask, plus the ground truth
    const seglab::ProbField p = seglab::temperature_softmax(
        seglab::model_logits(trace.final_model, data), args.tau);
    std::vector<int> pred(data.labels.size());
    for (std::size_t i = 0; i < pred.size(); ++i) {
        std::size_t best = 0;
        for (std::size_t k = 1; k < scenario.num_classes; ++k)
            if (p.at(i, k) > p.at(i, best)) best = k;
        pred[i] = static_cast<int>(best) + 1;
    }
    const seglab::LabelField pred_field(data.labels.height(), data.labels.width(),
                                        scenario.num_classes, std::move(pred));
    seglab::write_pgm_file((dir / "final_mask.pgm").string(), pred_field);
    seglab::write_pgm_file((dir / "labels.pgm").string(), data.labels);

    const seglab::Metrics metrics = seglab::evaluate(p, data.labels);
    std::cout << "final: loss=" << seglab::fmt_g9(trace.rows.empty()
                                                      ? 0.0
                                                      : trace.rows.back().loss)
              << " mean_dsc=" << seglab::fmt_g9(metrics.mean_dsc)
              << " mean_iou=" << seglab::fmt_g9(metrics.mean_iou)
              << " marginal_l1=" << seglab::fmt_g9(metrics.marginal_l1_error)
              << " status="
              << (trace.status == seglab::TrainStatus::completed ? "completed"
                                                                 : "diverged")
              << '\n';
    return trace.status == seglab::TrainStatus::completed ? kExitOk
                                                          : kExitDiverged;
}

// ----------------------------------------------------------------- sweep

struct SweepArgs {
    std::string scenario = "binary_imbalanced";
    std::vector<std::string> losses;
    std::vector<double> lambdas;
    std::vector<std::uint64_t> seeds;
    double lr = 0.02;
    std::size_t epochs = 500;
    double tau = seglab::kDefaultTau;
    std::string out = "sweep.csv";
};

int cmd_sweep(const SweepArgs& args) {
    if (args.losses.empty() || args.lambdas.empty() || args.seeds.empty())
        throw UsageError("--losses, --lambdas and --seeds must be non-empty");
    const seglab::ScenarioSpec scenario =
        seglab::ScenarioSpec::preset(args.scenario, 1);
    seglab::SweepOptions options;
    options.lr = args.lr;
    options.epochs = args.epochs;
    options.tau = args.tau;
    options.threads = thread_cap();
    const std::vector<seglab::SweepRow> rows =
        seglab::sweep(scenario, args.losses, args.lambdas, args.seeds, options);

    std::string csv = "loss,lambda,seed,status,final_loss,mean_dsc,mean_iou,"
                      "marginal_l1";
    for (std::size_t k = 1; k <= scenario.num_classes; ++k)
        csv += ",p" + std::to_string(k);
    csv += '\n';
    bool any_diverged = false;
    for (const auto& row : rows) {
        std::vector<std::string> cells{
            row.loss, seglab::fmt_g9(row.lambda), std::to_string(row.seed),
            row.status == seglab::TrainStatus::completed ? "completed"
                                                         : "diverged",
            seglab::fmt_g9(row.final_loss),
            seglab::fmt_g9(row.metrics.mean_dsc),
            seglab::fmt_g9(row.metrics.mean_iou),
            seglab::fmt_g9(row.metrics.marginal_l1_error)};
        for (double v : row.final_marginal) cells.push_back(seglab::fmt_g9(v));
        csv += seglab::csv_join(cells);
        any_diverged |= row.status == seglab::TrainStatus::diverged;
    }
    write_file(args.out, csv);
    std::cout << "wrote " << rows.size() << " rows to " << args.out << '\n';
    return any_diverged ? kExitDiverged : kExitOk;
}

// ------------------------------------------------------------- gradcheck

struct GradcheckArgs {
    std::uint64_t seed = 1;
    std::size_t instances = 10;
    std::string out = "gradcheck.csv";
};

int cmd_gradcheck(const GradcheckArgs& args) {
    const std::vector<seglab::GradCheckRow> rows =
        seglab::gradcheck(args.seed, args.instances);
    std::string csv = "spec_id,instance_seed,max_rel_err,status\n";
    bool all_pass = true;
    for (const auto& row : rows) {
        csv += seglab::csv_join({row.spec_id, std::to_string(row.instance_seed),
                                 seglab::fmt_g9(row.max_rel_err),
                                 row.pass ? "PASS" : "FAIL"});
        std::cout << (row.pass ? "PASS" : "FAIL") << "  " << row.spec_id
                  << "  max_rel_err=" << seglab::fmt_g9(row.max_rel_err) << '\n';
        all_pass &= row.pass;
    }
    write_file(args.out, csv);
    return all_pass ? kExitOk : kExitCheckFailed;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"segmentation loss laboratory"};
    app.require_subcommand(1);

    VerifyArgs verify_args;
    CurvesArgs curves_args;
    TrainArgs train_args;
    SweepArgs sweep_args;
    GradcheckArgs gradcheck_args;
    std::map<CLI::App*, std::string> config_paths;

    auto add_config = [&config_paths](CLI::App* cmd) {
        cmd->add_option_function<std::string>(
            "--config",
            [cmd, &config_paths](const std::string& path) {
                config_paths[cmd] = path;
            },
            "JSON config file; explicit flags override its values");
    };

    CLI::App* verify = app.add_subcommand(
        "verify", "run the decomposition/bound/proposition certificates");
    verify->add_option("--seed", verify_args.seed, "PRNG seed");
    verify->add_option("--out", verify_args.out, "report CSV path");
    verify->add_option("--perturb-constant", verify_args.perturb_constant,
                       "test hook: corrupt the reconstruction constant");
    add_config(verify);

    CLI::App* curves =
        app.add_subcommand("curves", "binary marginal-penalty curves");
    curves->add_option("--y1", curves_args.y1, "foreground proportion in (0,1)");
    curves->add_option("--points", curves_args.points, "number of rows");
    curves->add_option("--out", curves_args.out, "CSV path");
    add_config(curves);

    CLI::App* train = app.add_subcommand("train", "full-batch toy training run");
    train->add_option("--scenario", train_args.scenario,
                      "binary_imbalanced | multiclass_diverse | marginal_only");
    train->add_option("--loss", train_args.loss,
                      "loss name (ce, wce, focal, dice, logdice, gdice, kl, l1, "
                      "dicebias, dicece, logdicece, dicebiasce, ours-l1, ours-kl)");
    train->add_option("--lambda", train_args.lambda, "composite weight");
    train->add_option("--seed", train_args.seed, "scenario/model seed");
    train->add_option("--lr", train_args.lr, "learning rate");
    train->add_option("--epochs", train_args.epochs, "iterations");
    train->add_option("--tau", train_args.tau, "softmax temperature");
    train->add_option("--out", train_args.out, "output directory");
    add_config(train);

    CLI::App* sweep = app.add_subcommand("sweep", "grid of training runs");
    sweep->add_option("--scenario", sweep_args.scenario, "scenario name");
    sweep->add_option("--losses", sweep_args.losses, "loss names")
        ->delimiter(',');
    sweep->add_option("--lambdas", sweep_args.lambdas, "composite weights")
        ->delimiter(',');
    sweep->add_option("--seeds", sweep_args.seeds, "seeds")->delimiter(',');
    sweep->add_option("--lr", sweep_args.lr, "learning rate");
    sweep->add_option("--epochs", sweep_args.epochs, "iterations");
    sweep->add_option("--tau", sweep_args.tau, "softmax temperature");
    sweep->add_option("--out", sweep_args.out, "CSV path");
    add_config(sweep);

    CLI::App* gradcheck =
        app.add_subcommand("gradcheck", "analytic-vs-finite-difference report");
    gradcheck->add_option("--seed", gradcheck_args.seed, "PRNG seed");
    gradcheck->add_option("--instances", gradcheck_args.instances,
                          "instances per loss kind");
    gradcheck->add_option("--out", gradcheck_args.out, "CSV path");
    add_config(gradcheck);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e); // --help
        app.exit(e);
        return kExitUsage;
    }

    try {
        for (const auto& [cmd, path] : config_paths) apply_config(cmd, path);
        if (verify->parsed()) return cmd_verify(verify_args);
        if (curves->parsed()) return cmd_curves(curves_args);
        if (train->parsed()) return cmd_train(train_args);
        if (sweep->parsed()) return cmd_sweep(sweep_args);
        if (gradcheck->parsed()) return cmd_gradcheck(gradcheck_args);
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const seglab::invalid_parameter& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const seglab::invalid_spec& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitCheckFailed;
    }
    return kExitUsage;
}
