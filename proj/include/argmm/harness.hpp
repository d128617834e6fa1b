#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "argmm/em_config.hpp"
#include "argmm/estimation.hpp"
#include "argmm/signal_model.hpp"
#include "argmm/tuning.hpp"

namespace argmm {

inline constexpr int kConfigSchemaVersion = 1;

extern const std::vector<std::string> kAllEstimators;

// One experiment grid: every (estimator, N, K, SNR) combination produces a
// CSV row. Models are trained once per (estimator, N, K) and evaluated on a
// shared test set with fresh noise per SNR.
struct ExperimentConfig {
    ChannelModelConfig channel;
    std::vector<int> train_sizes{100};
    std::vector<int> components{16};
    std::vector<double> snr_db{-10.0, -5.0, 0.0, 5.0, 10.0, 15.0, 20.0};
    std::vector<std::string> estimators = kAllEstimators;
    int test_size = 10000;
    std::uint64_t seed = 1;
    int default_order = 4;
    double default_lambda = 0.85;
    std::string tuned_params_path;
    EmConfig em;
    bool record_timings = false;
    int threads = 1;
    std::string output_dir = "out";

    void validate() const;
};

// Strict parser: unknown keys are rejected, schema_version must match.
ExperimentConfig config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ExperimentConfig& cfg);

// Tuned (orders, lambdas) per component count, as written by the tune command.
struct TunedParams {
    std::map<int, std::pair<std::vector<int>, std::vector<double>>> by_components;
};
TunedParams tuned_params_from_json(const nlohmann::json& j);
nlohmann::json to_json(const TunedParams& params);

// The three Fig.-style sweep axes share one grid runner; they differ only in
// which config list carries more than one entry.
std::vector<EstimationReport> run_snr_sweep(const ExperimentConfig& cfg);
std::vector<EstimationReport> run_k_sweep(const ExperimentConfig& cfg);
std::vector<EstimationReport> run_n_sweep(const ExperimentConfig& cfg);

// CSV with header estimator,M,K,N,P,snr_db,nmse,test_size,seed,wall_s,status,
// rows sorted by the key columns, reals at 12 significant digits.
std::string format_csv(std::vector<EstimationReport> reports);
void emit_csv(const std::vector<EstimationReport>& reports, const std::string& path);

std::string format_trials_csv(const std::vector<TrialResult>& trials);

int cli_main(int argc, const char* const* argv);

}  // namespace argmm
