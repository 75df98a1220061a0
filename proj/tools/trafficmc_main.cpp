// trafficmc: ring-road traffic Monte Carlo simulator, energy-distribution
// analysis, dataset generation, and a convolutional-recurrent forecaster.
//
// Exit codes: 0 success, 1 runtime failure, 2 argument/usage errors.
// Diagnostics go to stderr; data only ever goes to files.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <random>
#include <string>

#include "trmc/dataset.hpp"
#include "trmc/diagram_io.hpp"
#include "trmc/energy.hpp"
#include "trmc/metropolis.hpp"
#include "trmc/nn/checkpoint.hpp"
#include "trmc/nn/predictor.hpp"
#include "trmc/pipeline.hpp"
#include "trmc/version.hpp"

namespace {

namespace fs = std::filesystem;

std::string version_string() {
    return std::string("trafficmc ") + trmc::kVersion + " (dataset format " +
           trmc::kDatasetMagic + ", checkpoint format " + trmc::kModelMagic + ")";
}

std::uint64_t entropy_seed() {
    std::random_device rd;
    return (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
}

/// Resolves --seed: drawn from entropy (and reported) when not given.
std::uint64_t resolve_seed(const CLI::App* cmd, std::uint64_t seed) {
    if (cmd->count("--seed") == 0) {
        seed = entropy_seed();
        std::cerr << "seed: " << seed << " (drawn from entropy)\n";
    }
    return seed;
}

struct ModelFlags {
    trmc::ModelParams params;
    std::string delta_mode = "exchange-delta";

    trmc::DeltaMode mode() const { return trmc::delta_mode_from_string(delta_mode); }
};

void add_model_flags(CLI::App* cmd, ModelFlags& flags) {
    cmd->add_option("--k0", flags.params.k0, "Base interaction strength")
        ->capture_default_str();
    cmd->add_option("--b", flags.params.b, "External field coefficient")
        ->capture_default_str();
    cmd->add_option("--beta", flags.params.beta, "Inverse-temperature constant")
        ->capture_default_str();
    cmd->add_option("--a0", flags.params.a0, "Pre-exponential factor in (0,1]")
        ->capture_default_str();
    cmd->add_option("--look-ahead", flags.params.look_ahead,
                    "Interaction range in sites")
        ->capture_default_str();
    cmd->add_option("--delta-mode", flags.delta_mode,
                    "Energy entering the acceptance probability")
        ->check(CLI::IsMember({"exchange-delta", "literal-site-h"}))
        ->capture_default_str();
}

void echo_effective_config(const CLI::App& app) {
    std::cerr << "# effective configuration\n";
    std::cerr << app.config_to_str(true, false);
}

// ---------------------------------------------------------------------------

int cmd_simulate(int sites, int steps, double density, std::uint64_t seed,
                 const ModelFlags& flags, const std::string& out, std::string format) {
    trmc::SimulationConfig cfg;
    cfg.model = flags.params;
    cfg.model.density = density;
    cfg.n_sites = sites;
    cfg.n_steps = steps;
    cfg.seed = seed;
    cfg.delta_mode = flags.mode();

    const auto diagram = trmc::simulate(cfg);
    if (format == "auto")
        format = fs::path(out).extension() == ".csv" ? "csv" : "pgm";
    if (format == "csv")
        trmc::write_diagram_csv(diagram, out);
    else
        trmc::write_diagram_pgm(diagram, out, format != "pgm-ascii");
    std::cerr << "wrote " << diagram.n_rows() << "x" << diagram.n_sites()
              << " diagram to " << out << "\n";
    return 0;
}

int cmd_analyze_energy(const std::vector<int>& sizes, int samples, double density,
                       const std::string& normalization, std::uint64_t seed,
                       const ModelFlags& flags, const std::string& out_dir, int threads) {
    trmc::pipeline::EnergyScanConfig cfg;
    cfg.sizes = sizes;
    cfg.n_samples = samples;
    cfg.density = density;
    cfg.params = flags.params;
    cfg.mode = trmc::normalization_from_string(normalization);
    cfg.seed = seed;

    const auto result = trmc::pipeline::run_energy_scan(cfg, threads);
    trmc::pipeline::write_energy_scan(result, out_dir);
    std::cerr << "max pairwise KS " << result.max_ks << ", max L1 " << result.max_l1
              << "; wrote " << sizes.size() << " histograms to " << out_dir << "\n";
    return 0;
}

int cmd_gen_dataset(int runs, int sites, int window, double density, std::uint64_t seed,
                    const ModelFlags& flags, const std::string& out,
                    const std::string& csv, int threads) {
    auto params = flags.params;
    params.density = density;
    const auto dataset =
        trmc::generate_dataset(runs, sites, window, params, seed, flags.mode(), threads);
    trmc::save_dataset(dataset, out);
    if (!csv.empty()) trmc::export_dataset_csv(dataset, csv);
    std::cerr << "wrote " << dataset.samples.size() << " samples to " << out << "\n";
    return 0;
}

int cmd_split(const std::string& data_path, double ratio, std::uint64_t seed,
              const std::string& out_train, const std::string& out_test) {
    const auto dataset = trmc::load_dataset(data_path);
    const auto parts = trmc::split(dataset, ratio, seed);
    trmc::save_dataset(parts.train, out_train);
    trmc::save_dataset(parts.test, out_test);
    std::cerr << "split " << dataset.samples.size() << " samples into "
              << parts.train.samples.size() << " train / " << parts.test.samples.size()
              << " test\n";
    return 0;
}

int cmd_train(const std::string& data_path, double split_ratio, std::uint64_t split_seed,
              trmc::nn::PredictorConfig cfg, const std::string& out,
              const std::string& history_path) {
    const auto dataset = trmc::load_dataset(data_path);
    cfg.n_sites = dataset.n_sites;
    cfg.window = dataset.window;
    const auto parts = trmc::split(dataset, split_ratio, split_seed);

    auto model = trmc::nn::init_model(cfg);
    const auto history =
        trmc::nn::train(model, parts, [](int epoch, const trmc::nn::EpochMetrics& m) {
            std::fprintf(stderr,
                         "epoch %3d  train loss %.4f acc %.4f | test loss %.4f acc %.4f\n",
                         epoch, m.train_loss, m.train_accuracy, m.test_loss,
                         m.test_accuracy);
        });

    trmc::nn::save_model(model, out);
    if (!history_path.empty()) trmc::nn::write_history_csv(history, history_path);
    if (!history.epochs.empty())
        std::cerr << "final train accuracy " << history.epochs.back().train_accuracy
                  << ", test accuracy " << history.epochs.back().test_accuracy << "\n";
    return 0;
}

int cmd_predict(const std::string& model_path, const std::string& input_path, int horizon,
                const std::string& out, const std::string& truth_path,
                const std::string& compare_path) {
    const auto model = trmc::nn::load_model(model_path);
    const int w = model.config.window;
    const int n = model.config.n_sites;

    const auto rows = trmc::read_binary_csv(input_path);
    if (rows.size() < static_cast<std::size_t>(w))
        throw std::runtime_error("input needs at least " + std::to_string(w) + " rows");
    if (rows.front().size() != static_cast<std::size_t>(n))
        throw std::runtime_error("input rows must have " + std::to_string(n) + " sites");

    // The last `window` rows seed the forecast.
    std::vector<std::uint8_t> seed_window;
    seed_window.reserve(static_cast<std::size_t>(w) * n);
    for (std::size_t t = rows.size() - w; t < rows.size(); ++t)
        seed_window.insert(seed_window.end(), rows[t].begin(), rows[t].end());

    const auto diagram = trmc::nn::rollout(model, seed_window, horizon);
    if (fs::path(out).extension() == ".csv")
        trmc::write_diagram_csv(diagram, out);
    else
        trmc::write_diagram_pgm(diagram, out);
    std::cerr << "wrote " << diagram.n_rows() << "x" << diagram.n_sites()
              << " rollout to " << out << "\n";

    if (!truth_path.empty()) {
        const auto truth_rows = trmc::read_binary_csv(truth_path);
        if (truth_rows.size() != static_cast<std::size_t>(diagram.n_rows()) ||
            truth_rows.front().size() != static_cast<std::size_t>(n))
            throw std::runtime_error("truth diagram must be " +
                                     std::to_string(diagram.n_rows()) + "x" +
                                     std::to_string(n));
        trmc::TimeSpaceDiagram truth(n, diagram.n_steps());
        for (int t = 0; t < diagram.n_rows(); ++t)
            for (int i = 0; i < n; ++i)
                truth.set(t, i, truth_rows[static_cast<std::size_t>(t)][static_cast<std::size_t>(i)] != 0);
        const std::string cmp = compare_path.empty() ? out + ".compare.pgm" : compare_path;
        trmc::write_comparison_pgm(truth, diagram, cmp);
        std::cerr << "wrote side-by-side comparison to " << cmp << "\n";
    }
    return 0;
}

int cmd_reproduce(const std::string& target, const std::string& out_dir,
                  std::uint64_t seed, int threads) {
    const bool all = target == "all";
    trmc::pipeline::TrainingRunConfig train_cfg =
        trmc::pipeline::reference_training_config(seed);

    if (all || target == "fig2") {
        trmc::pipeline::EnergyScanConfig cfg;
        cfg.seed = trmc::derive_seed(seed, 0);
        const auto result = trmc::pipeline::run_energy_scan(cfg, threads);
        trmc::pipeline::write_energy_scan(result, (fs::path(out_dir) / "fig2").string());
        std::cerr << "fig2: max pairwise KS " << result.max_ks << "\n";
    }

    std::optional<trmc::nn::PredictorModel> model;
    if (all || target == "fig4") {
        const auto result = trmc::pipeline::run_training(
            train_cfg, threads, [](int epoch, const trmc::nn::EpochMetrics& m) {
                std::fprintf(stderr, "fig4 epoch %3d  train acc %.4f  test acc %.4f\n",
                             epoch, m.train_accuracy, m.test_accuracy);
            });
        trmc::pipeline::write_training_run(result, (fs::path(out_dir) / "fig4").string());
        std::cerr << "fig4: final test accuracy "
                  << result.history.epochs.back().test_accuracy << "\n";
        model = result.model;
    }

    if (all || target == "fig5") {
        if (!model) {
            const auto checkpoint = fs::path(out_dir) / "fig4" / "model.trnn";
            if (fs::exists(checkpoint)) {
                model = trmc::nn::load_model(checkpoint.string());
            } else {
                std::cerr << "fig5: no checkpoint at " << checkpoint
                          << ", running the training preset first\n";
                const auto result = trmc::pipeline::run_training(train_cfg, threads);
                trmc::pipeline::write_training_run(result,
                                                   (fs::path(out_dir) / "fig4").string());
                model = result.model;
            }
        }
        trmc::pipeline::ForecastConfig cfg;
        cfg.sim_seed = trmc::derive_seed(seed, 1000);
        const auto result =
            trmc::pipeline::run_forecast(*model, train_cfg.params, train_cfg.mode, cfg);
        trmc::pipeline::write_forecast(result, (fs::path(out_dir) / "fig5").string());
        double mean_acc = 0.0;
        for (const double a : result.step_accuracy) mean_acc += a;
        mean_acc /= static_cast<double>(result.step_accuracy.size());
        std::cerr << "fig5: mean forecast accuracy " << mean_acc << "\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Ring-road traffic Monte Carlo and neural state forecasting"};
    app.set_version_flag("--version", version_string());
    app.set_config("--config", "", "Read options from an INI config file");
    app.require_subcommand(1);

    int threads = 0;
    app.add_option("--threads", threads,
                   "Worker cap for parallel stages (0 = hardware concurrency)")
        ->capture_default_str();

    // simulate ---------------------------------------------------------------
    auto* sim = app.add_subcommand("simulate", "Run one simulation and export the diagram");
    int sim_sites = 100;
    int sim_steps = 200;
    double sim_density = 0.5;
    std::uint64_t sim_seed = 0;
    std::string sim_out;
    std::string sim_format = "auto";
    ModelFlags sim_flags;
    sim->add_option("--sites", sim_sites, "Ring size N")->capture_default_str();
    sim->add_option("--steps", sim_steps, "Time steps")->capture_default_str();
    sim->add_option("--density", sim_density, "Vehicle density")->capture_default_str();
    sim->add_option("--seed", sim_seed, "RNG seed (entropy if omitted)");
    sim->add_option("--out", sim_out, "Output path (.pgm or .csv)")->required();
    sim->add_option("--format", sim_format, "Output format")
        ->check(CLI::IsMember({"auto", "csv", "pgm", "pgm-ascii"}))
        ->capture_default_str();
    add_model_flags(sim, sim_flags);

    // analyze-energy -----------------------------------------------------------
    auto* energy = app.add_subcommand(
        "analyze-energy", "Sample interaction-energy distributions across sizes");
    std::vector<int> en_sizes{30, 60, 120, 240, 600};
    int en_samples = 3200;
    double en_density = 0.5;
    std::string en_norm = "per-site-zscore";
    std::uint64_t en_seed = 0;
    std::string en_out;
    ModelFlags en_flags;
    energy->add_option("--sizes", en_sizes, "System sizes")
        ->delimiter(',')
        ->capture_default_str();
    energy->add_option("--samples", en_samples, "Configurations per size")
        ->capture_default_str();
    energy->add_option("--density", en_density, "Vehicle density")->capture_default_str();
    energy->add_option("--normalization", en_norm, "Normalization mode")
        ->check(CLI::IsMember({"per-site", "zscore", "per-site-zscore"}))
        ->capture_default_str();
    energy->add_option("--seed", en_seed, "RNG seed (entropy if omitted)");
    energy->add_option("--out", en_out, "Output directory")->required();
    add_model_flags(energy, en_flags);

    // gen-dataset --------------------------------------------------------------
    auto* gen = app.add_subcommand("gen-dataset", "Generate a supervised dataset");
    int gen_runs = 1000;
    int gen_sites = 50;
    int gen_window = 30;
    double gen_density = 0.5;
    std::uint64_t gen_seed = 0;
    std::string gen_out;
    std::string gen_csv;
    ModelFlags gen_flags;
    gen->add_option("--runs", gen_runs, "Independent simulations")->capture_default_str();
    gen->add_option("--sites", gen_sites, "Ring size N")->capture_default_str();
    gen->add_option("--window", gen_window, "Input window length W")->capture_default_str();
    gen->add_option("--density", gen_density, "Vehicle density")->capture_default_str();
    gen->add_option("--seed", gen_seed, "Base seed (entropy if omitted)");
    gen->add_option("--out", gen_out, "Dataset output path (.trmc)")->required();
    gen->add_option("--csv", gen_csv, "Optional CSV dump for inspection");
    add_model_flags(gen, gen_flags);

    // split ----------------------------------------------------------------------
    auto* spl = app.add_subcommand("split", "Split a dataset into train/test files");
    std::string spl_data;
    double spl_ratio = 0.2;
    std::uint64_t spl_seed = 0;
    std::string spl_train;
    std::string spl_test;
    spl->add_option("--data", spl_data, "Dataset path")->required();
    spl->add_option("--ratio", spl_ratio, "Test fraction")->capture_default_str();
    spl->add_option("--seed", spl_seed, "Partition seed (entropy if omitted)");
    spl->add_option("--out-train", spl_train, "Train output path")->required();
    spl->add_option("--out-test", spl_test, "Test output path")->required();

    // train ------------------------------------------------------------------------
    auto* tr = app.add_subcommand("train", "Train the predictor on a dataset");
    std::string tr_data;
    double tr_ratio = 0.2;
    std::uint64_t tr_split_seed = 0;
    std::string tr_out;
    std::string tr_history;
    trmc::nn::PredictorConfig tr_cfg;
    tr->add_option("--data", tr_data, "Dataset path")->required();
    tr->add_option("--split-ratio", tr_ratio, "Held-out fraction")->capture_default_str();
    tr->add_option("--split-seed", tr_split_seed, "Partition seed")->capture_default_str();
    tr->add_option("--epochs", tr_cfg.epochs, "Training epochs")->capture_default_str();
    tr->add_option("--alpha", tr_cfg.alpha, "Vehicle-count penalty weight")
        ->capture_default_str();
    std::string tr_optimizer = "momentum";
    tr->add_option("--optimizer", tr_optimizer, "Optimizer")
        ->check(CLI::IsMember({"momentum", "adam"}))
        ->capture_default_str();
    tr->add_option("--lr", tr_cfg.learning_rate, "Learning rate")->capture_default_str();
    tr->add_option("--momentum", tr_cfg.momentum, "Momentum")->capture_default_str();
    tr->add_option("--lr-decay", tr_cfg.lr_decay, "Step-decay factor")->capture_default_str();
    tr->add_option("--lr-decay-every", tr_cfg.lr_decay_every,
                   "Epochs between decays (0 = constant)")
        ->capture_default_str();
    tr->add_option("--batch", tr_cfg.batch_size, "Mini-batch size")->capture_default_str();
    tr->add_option("--dropout", tr_cfg.dropout_rate, "Dropout rate")->capture_default_str();
    tr->add_option("--dense-in", tr_cfg.dense_in, "Width of the initial dense layer")
        ->capture_default_str();
    tr->add_option("--conv1-channels", tr_cfg.conv1_channels, "Channels of conv layer 1")
        ->capture_default_str();
    tr->add_option("--conv2-channels", tr_cfg.conv2_channels, "Channels of conv layer 2")
        ->capture_default_str();
    tr->add_option("--kernel1", tr_cfg.conv1_kernel, "Kernel width of conv layer 1 (odd)")
        ->capture_default_str();
    tr->add_option("--kernel2", tr_cfg.conv2_kernel, "Kernel width of conv layer 2 (odd)")
        ->capture_default_str();
    tr->add_option("--lstm-hidden", tr_cfg.lstm_hidden, "LSTM hidden width")
        ->capture_default_str();
    tr->add_option("--seed", tr_cfg.init_seed, "Weight/dropout seed (entropy if omitted)");
    tr->add_option("--out", tr_out, "Checkpoint output path (.trnn)")->required();
    tr->add_option("--history", tr_history, "Per-epoch metrics CSV");

    // predict --------------------------------------------------------------------
    auto* pr = app.add_subcommand("predict", "Recursive rollout from a seed window");
    std::string pr_model;
    std::string pr_input;
    int pr_horizon = 30;
    std::string pr_out;
    std::string pr_truth;
    std::string pr_compare;
    pr->add_option("--model", pr_model, "Checkpoint path")->required();
    pr->add_option("--input", pr_input, "Seed window CSV (>= window rows of 0/1)")
        ->required();
    pr->add_option("--horizon", pr_horizon, "Steps to forecast")->capture_default_str();
    pr->add_option("--out", pr_out, "Rollout output (.pgm or .csv)")->required();
    pr->add_option("--truth", pr_truth, "True continuation CSV for comparison");
    pr->add_option("--compare", pr_compare, "Side-by-side image path");

    // reproduce ---------------------------------------------------------------------
    auto* rep = app.add_subcommand(
        "reproduce", "Run a canned preset: fig2, fig4, fig5 or all");
    std::string rep_target;
    std::string rep_out = "reproduce-out";
    std::uint64_t rep_seed = trmc::pipeline::kDefaultSeed;
    rep->add_option("target", rep_target, "Preset name")
        ->required()
        ->check(CLI::IsMember({"fig2", "fig4", "fig5", "all"}));
    rep->add_option("--out", rep_out, "Output directory")->capture_default_str();
    rep->add_option("--seed", rep_seed, "Preset seed")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        echo_effective_config(app);
        if (sim->parsed())
            return cmd_simulate(sim_sites, sim_steps, sim_density,
                                resolve_seed(sim, sim_seed), sim_flags, sim_out, sim_format);
        if (energy->parsed())
            return cmd_analyze_energy(en_sizes, en_samples, en_density, en_norm,
                                      resolve_seed(energy, en_seed), en_flags, en_out,
                                      threads);
        if (gen->parsed())
            return cmd_gen_dataset(gen_runs, gen_sites, gen_window, gen_density,
                                   resolve_seed(gen, gen_seed), gen_flags, gen_out, gen_csv,
                                   threads);
        if (spl->parsed())
            return cmd_split(spl_data, spl_ratio, resolve_seed(spl, spl_seed), spl_train,
                             spl_test);
        if (tr->parsed()) {
            tr_cfg.optimizer = trmc::nn::optimizer_from_string(tr_optimizer);
            if (tr->count("--seed") == 0) {
                tr_cfg.init_seed = entropy_seed();
                std::cerr << "seed: " << tr_cfg.init_seed << " (drawn from entropy)\n";
            }
            return cmd_train(tr_data, tr_ratio, tr_split_seed, tr_cfg, tr_out, tr_history);
        }
        if (pr->parsed())
            return cmd_predict(pr_model, pr_input, pr_horizon, pr_out, pr_truth, pr_compare);
        if (rep->parsed()) return cmd_reproduce(rep_target, rep_out, rep_seed, threads);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
