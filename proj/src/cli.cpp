#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "argmm/errors.hpp"
#include "argmm/estimation.hpp"
#include "argmm/harness.hpp"
#include "argmm/serialization.hpp"
#include "argmm/tuning.hpp"

namespace argmm {
namespace {

std::filesystem::path output_path(const ExperimentConfig& cfg, const std::string& name) {
    std::filesystem::create_directories(cfg.output_dir);
    return std::filesystem::path(cfg.output_dir) / name;
}

Eigen::VectorXd model_weights(const ArGmmModel& model) {
    Eigen::VectorXd w(model.num_components());
    for (int k = 0; k < model.num_components(); ++k) w(k) = model.components[k].weight;
    return w;
}

EmConfig em_for(const ExperimentConfig& cfg) {
    EmConfig em = cfg.em;
    em.seed = cfg.seed;
    em.threads = cfg.threads;
    return em;
}

int run_generate(const ExperimentConfig& cfg, int n) {
    const ChannelDataset data = generate_dataset(cfg.channel, n, cfg.seed, cfg.threads);
    const auto path = output_path(cfg, "dataset.bin");
    save_dataset(data, path.string());
    std::printf("wrote %s: M=%d N=%d P=%d seed=%llu\n", path.string().c_str(), data.dim(),
                data.size(), data.paths, static_cast<unsigned long long>(data.seed));
    return 0;
}

int run_fit(const ExperimentConfig& cfg, const std::string& data_path,
            const std::string& estimator, int k, int order, double lambda) {
    const ChannelDataset data = load_dataset(data_path);
    const EmConfig em = em_for(cfg);

    nlohmann::json j;
    EmTrace trace;
    if (estimator == "ar_gmm") {
        const std::vector<int> orders(static_cast<std::size_t>(k), order);
        const ConstraintSchedule schedule =
            lambda > 0.0 ? ConstraintSchedule::shared(lambda, k) : ConstraintSchedule::none();
        auto [model, tr] = fit(data.samples, k, orders, schedule, em);
        j = to_json(model);
        trace = std::move(tr);
    } else if (estimator == "gmm_full" || estimator == "gmm_toeplitz" ||
               estimator == "gmm_circulant") {
        auto [mixture, tr] = estimator == "gmm_full"       ? fit_full_gmm(data.samples, k, em)
                             : estimator == "gmm_toeplitz" ? fit_toeplitz_gmm(data.samples, k, em)
                                                           : fit_circulant_gmm(data.samples, k, em);
        j = to_json(mixture);
        trace = std::move(tr);
    } else {
        throw ConfigError("fit: estimator '" + estimator + "' has no trainable model");
    }

    const auto path = output_path(cfg, "model.json");
    save_json_file(j, path.string());
    const double final_ll =
        trace.log_likelihood.empty() ? trace.initial_log_likelihood : trace.log_likelihood.back();
    std::printf("wrote %s: estimator=%s K=%d iterations=%d converged=%d log_likelihood=%.12g\n",
                path.string().c_str(), estimator.c_str(), k, trace.iterations,
                trace.converged ? 1 : 0, final_ll);
    return 0;
}

int run_estimate(const ExperimentConfig& cfg, const std::string& model_path,
                 const std::string& data_path, double snr_db) {
    const nlohmann::json j = load_json_file(model_path);
    std::vector<Eigen::MatrixXcd> covariances;
    Eigen::VectorXd weights;
    if (json_is_ar_gmm(j)) {
        const ArGmmModel model = ar_gmm_from_json(j);
        covariances = ar_gmm_covariances(model);
        weights = model_weights(model);
    } else {
        const GaussianMixture mixture = mixture_from_json(j);
        covariances = mixture.covariances;
        weights = mixture.weights;
    }

    const ChannelDataset data = load_dataset(data_path);
    if (!covariances.empty() && covariances.front().rows() != data.samples.rows())
        throw ConfigError("estimate: model dimension does not match dataset");

    const double noise_var = noise_variance_for_snr(snr_db);
    Eigen::MatrixXcd noisy = data.samples;
    if (noise_var > 0.0) {
        const double scale = std::sqrt(noise_var);
        for (int i = 0; i < noisy.cols(); ++i) {
            RngStream rng = derive_stream(cfg.seed, StreamPurpose::Noise,
                                          static_cast<std::uint64_t>(i));
            for (int r = 0; r < noisy.rows(); ++r) noisy(r, i) += scale * rng.cgaussian();
        }
    }

    const GmmEstimator estimator(std::move(covariances), std::move(weights), noise_var);
    const Eigen::MatrixXcd estimates = estimator.estimate_all(noisy, cfg.threads);
    const NmseResult res = nmse_with_se(estimates, data.samples);
    std::printf("nmse=%.12g se=%.12g n=%d snr_db=%.12g\n", res.value, res.std_error,
                static_cast<int>(noisy.cols()), snr_db);
    return 0;
}

int run_sweep(ExperimentConfig cfg, const std::string& mode) {
    std::vector<EstimationReport> reports;
    if (mode == "fig1a") {
        cfg.train_sizes = {100};
        cfg.components = {16};
        cfg.snr_db = {-10.0, -5.0, 0.0, 5.0, 10.0, 15.0, 20.0};
        reports = run_snr_sweep(cfg);
    } else if (mode == "fig1b") {
        cfg.train_sizes = {100};
        cfg.components = {1, 2, 4, 8, 16, 32};
        cfg.snr_db = {10.0};
        reports = run_k_sweep(cfg);
    } else if (mode == "fig1c") {
        cfg.train_sizes = {100, 1000, 10000};
        cfg.components = {16};
        cfg.snr_db = {10.0};
        reports = run_n_sweep(cfg);
    } else if (mode == "custom") {
        reports = run_snr_sweep(cfg);
    } else {
        throw ConfigError("sweep: unknown mode '" + mode + "'");
    }
    const auto path = output_path(cfg, mode + ".csv");
    emit_csv(reports, path.string());
    std::printf("wrote %s: %d rows\n", path.string().c_str(), static_cast<int>(reports.size()));
    return 0;
}

int run_tune(const ExperimentConfig& cfg, const std::string& data_path, int n, int k,
             double snr_db, int budget, int steps, double val_fraction, bool per_component,
             const std::string& objective_name) {
    Eigen::MatrixXcd samples;
    if (!data_path.empty()) {
        samples = load_dataset(data_path).samples;
    } else {
        samples = generate_dataset(cfg.channel, n, cfg.seed, cfg.threads).samples;
    }
    auto [train, val] = split_dataset(samples, val_fraction, cfg.seed);

    ObjectiveConfig objective;
    if (objective_name == "nmse") {
        objective.mode = ObjectiveMode::NmseOnly;
    } else if (objective_name == "bic") {
        objective.mode = ObjectiveMode::BicOnly;
    } else if (objective_name == "weighted") {
        objective.mode = ObjectiveMode::Weighted;
        objective.bic_reference = static_cast<double>(parameter_count_full_gmm(
                                      k, static_cast<int>(train.rows()))) *
                                  std::log(static_cast<double>(train.cols()));
    } else {
        throw ConfigError("tune: unknown objective '" + objective_name + "'");
    }

    SearchSpace space;
    space.budget = budget;
    space.tie_mode = per_component ? TieMode::PerComponent : TieMode::Shared;
    // AR order must stay below the signal dimension or fits reject the trial.
    space.order_max = std::min(space.order_max, static_cast<int>(train.rows()) - 1);
    space.order_min = std::min(space.order_min, space.order_max);
    space.validate();

    Tuner tuner(train, val, k, snr_db, em_for(cfg), objective, cfg.seed);
    std::vector<TrialResult> trials = tuner.random_search(space);
    TrialResult best = trials.front();
    if (steps > 0) {
        best = tuner.local_refine(best, steps, space);
        if (best.trial_index != trials.front().trial_index) trials.insert(trials.begin(), best);
    }

    const auto trials_path = output_path(cfg, "trials.csv");
    {
        std::ofstream out(trials_path);
        if (!out) throw ConfigError("cannot write file: " + trials_path.string());
        out << format_trials_csv(trials);
    }
    TunedParams tuned;
    tuned.by_components[k] = {best.orders, best.lambdas};
    const auto tuned_path = output_path(cfg, "tuned_params.json");
    save_json_file(to_json(tuned), tuned_path.string());

    std::string orders_s, lambdas_s;
    for (std::size_t i = 0; i < best.orders.size(); ++i)
        orders_s += (i ? ";" : "") + std::to_string(best.orders[i]);
    for (std::size_t i = 0; i < best.lambdas.size(); ++i) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.4g", best.lambdas[i]);
        lambdas_s += (i ? ";" : "") + std::string(buf);
    }
    std::printf("wrote %s and %s: objective=%.12g val_nmse=%.12g orders=%s lambdas=%s trainings=%d\n",
                trials_path.string().c_str(), tuned_path.string().c_str(), best.objective,
                best.val_nmse, orders_s.c_str(), lambdas_s.c_str(), tuner.trainings());
    return 0;
}

int run_count_params(const ExperimentConfig& cfg, int k, int m, std::vector<int> orders) {
    if (orders.empty()) orders.assign(static_cast<std::size_t>(k), cfg.default_order);
    if (static_cast<int>(orders.size()) != k)
        throw ConfigError("count-params: orders length must equal K");
    for (int w : orders)
        if (w < 0 || w >= m) throw ConfigError("count-params: orders must lie in [0, M)");
    std::printf("full=%lld proposed=%lld\n",
                static_cast<long long>(parameter_count_full_gmm(k, m)),
                static_cast<long long>(parameter_count(orders)));
    return 0;
}

}  // namespace

int cli_main(int argc, const char* const* argv) {
    CLI::App app{"AR-GMM channel estimation harness"};
    app.require_subcommand(1);
    app.fallthrough();

    std::optional<std::string> config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out_dir;
    std::optional<int> threads;
    app.add_option("--config", config_path, "experiment config JSON");
    app.add_option("--seed", seed, "master seed override");
    app.add_option("--out", out_dir, "output directory override");
    app.add_option("--threads", threads, "worker thread count (0 = hardware)");

    auto* gen = app.add_subcommand("generate", "draw a channel dataset");
    int gen_n = 1000;
    gen->add_option("--n", gen_n, "number of samples")->check(CLI::PositiveNumber);

    auto* fit_cmd = app.add_subcommand("fit", "train a mixture model on a dataset");
    std::string fit_data, fit_estimator = "ar_gmm";
    int fit_k = 0, fit_order = -1;
    double fit_lambda = std::nan("");
    fit_cmd->add_option("--data", fit_data, "dataset.bin path")->required();
    fit_cmd->add_option("--estimator", fit_estimator, "ar_gmm|gmm_full|gmm_toeplitz|gmm_circulant");
    fit_cmd->add_option("--k", fit_k, "mixture components");
    fit_cmd->add_option("--order", fit_order, "AR order (ar_gmm)");
    fit_cmd->add_option("--lambda", fit_lambda, "coefficient decay bound, 0 disables (ar_gmm)");

    auto* est_cmd = app.add_subcommand("estimate", "evaluate a saved model on noisy observations");
    std::string est_model, est_data;
    double est_snr = 10.0;
    est_cmd->add_option("--model", est_model, "model.json path")->required();
    est_cmd->add_option("--data", est_data, "dataset.bin path")->required();
    est_cmd->add_option("--snr", est_snr, "observation SNR in dB");

    auto* sweep_cmd = app.add_subcommand("sweep", "run a benchmark grid and emit CSV");
    std::string sweep_mode = "custom";
    sweep_cmd->add_option("--mode", sweep_mode, "fig1a|fig1b|fig1c|custom");

    auto* tune_cmd = app.add_subcommand("tune", "hyperparameter search for the AR mixture");
    std::string tune_data, tune_objective = "nmse";
    int tune_n = 1000, tune_k = 0, tune_budget = 100, tune_steps = 20;
    double tune_snr = 10.0, tune_val_fraction = 0.2;
    bool tune_per_component = false;
    tune_cmd->add_option("--data", tune_data, "dataset.bin path (generated when absent)");
    tune_cmd->add_option("--n", tune_n, "samples to generate when --data is absent")
        ->check(CLI::PositiveNumber);
    tune_cmd->add_option("--k", tune_k, "mixture components");
    tune_cmd->add_option("--snr", tune_snr, "validation SNR in dB");
    tune_cmd->add_option("--budget", tune_budget, "random search trials")->check(CLI::PositiveNumber);
    tune_cmd->add_option("--steps", tune_steps, "local refinement steps")
        ->check(CLI::NonNegativeNumber);
    tune_cmd->add_option("--val-fraction", tune_val_fraction, "validation split fraction");
    tune_cmd->add_flag("--per-component", tune_per_component, "search per-component orders");
    tune_cmd->add_option("--objective", tune_objective, "nmse|bic|weighted");

    auto* count_cmd = app.add_subcommand("count-params", "compare mixture parameter counts");
    int count_k = 16, count_m = 64;
    std::vector<int> count_orders;
    count_cmd->add_option("--k", count_k, "mixture components")->check(CLI::PositiveNumber);
    count_cmd->add_option("--m", count_m, "signal dimension")->check(CLI::PositiveNumber);
    count_cmd->add_option("--orders", count_orders, "per-component AR orders");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        ExperimentConfig cfg;
        if (config_path) cfg = config_from_json(load_json_file(*config_path));
        if (seed) cfg.seed = *seed;
        if (out_dir) cfg.output_dir = *out_dir;
        if (threads) cfg.threads = *threads;
        cfg.validate();

        if (fit_k == 0) fit_k = cfg.components.empty() ? 16 : cfg.components.front();
        if (fit_order < 0) fit_order = cfg.default_order;
        if (std::isnan(fit_lambda)) fit_lambda = cfg.default_lambda;
        if (tune_k == 0) tune_k = cfg.components.empty() ? 16 : cfg.components.front();

        if (app.got_subcommand(gen)) return run_generate(cfg, gen_n);
        if (app.got_subcommand(fit_cmd))
            return run_fit(cfg, fit_data, fit_estimator, fit_k, fit_order, fit_lambda);
        if (app.got_subcommand(est_cmd)) return run_estimate(cfg, est_model, est_data, est_snr);
        if (app.got_subcommand(sweep_cmd)) return run_sweep(cfg, sweep_mode);
        if (app.got_subcommand(tune_cmd))
            return run_tune(cfg, tune_data, tune_n, tune_k, tune_snr, tune_budget, tune_steps,
                            tune_val_fraction, tune_per_component, tune_objective);
        if (app.got_subcommand(count_cmd)) return run_count_params(cfg, count_k, count_m, count_orders);
        throw ConfigError("no subcommand selected");
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const NumericalError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace argmm
