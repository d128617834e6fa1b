#pragma once

#include <Eigen/Dense>
#include <atomic>
#include <cstdint>
#include <string>
#include <vector>

#include "argmm/ar_gmm.hpp"
#include "argmm/baselines.hpp"

namespace argmm {

// One benchmark measurement; serializes to a harness CSV row.
struct EstimationReport {
    std::string estimator;
    int m = 0;
    int k = 0;
    int n = 0;
    int p = 0;
    double snr_db = 0.0;
    double nmse = 0.0;
    double se = 0.0;  // Monte Carlo standard error; not part of the CSV schema
    int test_size = 0;
    std::uint64_t seed = 0;
    double wall_s = 0.0;
    std::string status = "ok";
};

// Posterior-weighted conditional-mean estimator. Factorizes C_k + noise_var I
// once at construction; estimation over a test set is then read-only and
// parallel across observations.
class GmmEstimator {
public:
    GmmEstimator(std::vector<Eigen::MatrixXcd> covariances, Eigen::VectorXd weights,
                 double noise_var);

    int dim() const { return dim_; }
    int num_components() const { return static_cast<int>(covariances_.size()); }
    double noise_var() const { return noise_var_; }

    // Posterior weights of y under N(0, C_k + noise_var I); sums to 1.
    Eigen::VectorXd posteriors(const Eigen::Ref<const Eigen::VectorXcd>& y) const;

    // h_hat = sum_k posterior_k C_k (C_k + noise_var I)^{-1} y.
    Eigen::VectorXcd estimate(const Eigen::Ref<const Eigen::VectorXcd>& y) const;

    // Column-wise estimation of a whole observation matrix.
    Eigen::MatrixXcd estimate_all(const Eigen::MatrixXcd& observations, int threads = 1) const;

    // Observations for which every component underflowed (uniform fallback).
    int underflow_count() const { return underflows_.load(); }

private:
    int dim_ = 0;
    double noise_var_ = 0.0;
    Eigen::VectorXd log_weights_;
    std::vector<Eigen::MatrixXcd> covariances_;
    std::vector<Eigen::LLT<Eigen::MatrixXcd>> factors_;
    std::vector<double> logdet_;
    mutable std::atomic<int> underflows_{0};
};

// Dense Toeplitz covariances reconstructed from each AR component.
std::vector<Eigen::MatrixXcd> ar_gmm_covariances(const ArGmmModel& model);

// One-shot conveniences over GmmEstimator.
Eigen::VectorXd gmm_posteriors_noisy(const std::vector<Eigen::MatrixXcd>& covariances,
                                     const Eigen::VectorXd& weights, const Eigen::VectorXcd& y,
                                     double noise_var);
Eigen::VectorXcd gmm_channel_estimate(const std::vector<Eigen::MatrixXcd>& covariances,
                                      const Eigen::VectorXd& weights, const Eigen::VectorXcd& y,
                                      double noise_var);

// Energy-ratio NMSE: sum_n ||h - h_hat||^2 / sum_n ||h||^2.
double nmse(const Eigen::MatrixXcd& estimates, const Eigen::MatrixXcd& truths);

struct NmseResult {
    double value = 0.0;
    double std_error = 0.0;
};

// NMSE with its Monte Carlo standard error (delta method for the ratio).
NmseResult nmse_with_se(const Eigen::MatrixXcd& estimates, const Eigen::MatrixXcd& truths);

}  // namespace argmm
