#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <limits>
#include <utility>
#include <vector>

#include "argmm/ar_gmm.hpp"
#include "argmm/em_config.hpp"

namespace argmm {

enum class TieMode { Shared, PerComponent };
enum class ObjectiveMode { NmseOnly, BicOnly, Weighted };

struct SearchSpace {
    int order_min = 1;
    int order_max = 12;
    double lambda_min = 0.3;
    double lambda_max = 1.0;
    TieMode tie_mode = TieMode::Shared;
    int budget = 100;

    void validate() const;
};

struct ObjectiveConfig {
    ObjectiveMode mode = ObjectiveMode::NmseOnly;
    double bic_weight = 1.0;
    // Normalization scale for the weighted mode, e.g. the full-GMM BIC
    // penalty at the same (K, M, N).
    double bic_reference = 1.0;
};

double objective_value(double nmse_val, double bic_val, const ObjectiveConfig& cfg);

struct TrialResult {
    std::vector<int> orders;
    std::vector<double> lambdas;
    double val_nmse = std::numeric_limits<double>::infinity();
    double bic = std::numeric_limits<double>::infinity();
    double objective = std::numeric_limits<double>::infinity();
    int em_iterations = 0;
    bool em_converged = false;
    std::uint64_t seed = 0;
    int trial_index = -1;
    bool failed = false;
};

// Seeded shuffle split of dataset columns into (train, validation).
std::pair<Eigen::MatrixXcd, Eigen::MatrixXcd> split_dataset(const Eigen::MatrixXcd& samples,
                                                            double val_fraction,
                                                            std::uint64_t seed);

// Hyperparameter search for the AR mixture: the validation observations are
// drawn once, so trials differ only through their hyperparameters and
// trial-derived training seeds.
class Tuner {
public:
    Tuner(Eigen::MatrixXcd train, Eigen::MatrixXcd val, int num_components, double snr_db,
          const EmConfig& em, const ObjectiveConfig& objective, std::uint64_t seed);

    // Exactly space.budget trials, sorted by objective with stable tie-break
    // on the trial index.
    std::vector<TrialResult> random_search(const SearchSpace& space);

    // Coordinate perturbation rounds, accepting only improvements.
    TrialResult local_refine(const TrialResult& best, int steps, const SearchSpace& space);

    // Number of model trainings performed so far.
    int trainings() const { return trainings_; }

private:
    TrialResult run_trial(std::vector<int> orders, std::vector<double> lambdas);

    Eigen::MatrixXcd train_;
    Eigen::MatrixXcd val_truth_;
    Eigen::MatrixXcd val_noisy_;
    int num_components_ = 0;
    double noise_var_ = 0.0;
    EmConfig em_;
    ObjectiveConfig objective_;
    std::uint64_t seed_ = 0;
    int trainings_ = 0;
};

}  // namespace argmm
