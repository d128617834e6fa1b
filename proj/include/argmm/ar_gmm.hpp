#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <utility>
#include <vector>

#include "argmm/em_config.hpp"
#include "argmm/rng.hpp"
#include "argmm/signal_model.hpp"

namespace argmm {

// Per-coefficient magnitude bounds |a_i| <= lambda^i, one decay rate per
// mixture component. An empty `lambdas` vector disables the constraints.
struct ConstraintSchedule {
    std::vector<double> lambdas;

    static ConstraintSchedule shared(double lambda, int num_components);
    static ConstraintSchedule per_component(std::vector<double> lambdas);
    static ConstraintSchedule none();

    bool enabled() const { return !lambdas.empty(); }
    // Upper bound for coefficient index i (1-based) of component k.
    double bound(int component, int i) const;
    void validate(int num_components) const;
};

struct ArComponent {
    Eigen::VectorXcd coeffs;  // a_1..a_omega
    double sigma2 = 1.0;
    double weight = 1.0;

    int order() const { return static_cast<int>(coeffs.size()); }
};

struct ArGmmModel {
    int dim = 0;  // signal length M
    std::vector<ArComponent> components;
    ConstraintSchedule constraints;

    int num_components() const { return static_cast<int>(components.size()); }
    int max_order() const;
    void validate() const;
};

struct Responsibilities {
    Eigen::MatrixXd gamma;  // N x K, rows sum to 1
    int underflow_rows = 0;
};

struct EmTrace {
    double initial_log_likelihood = 0.0;
    std::vector<double> log_likelihood;  // one entry per completed iteration
    std::vector<int> clipped;            // active constraints per iteration
    int iterations = 0;
    bool converged = false;
    int rescues = 0;
};

// D x omega regression matrix with rows (x_{i-1}, ..., x_{i-omega}) for
// i = omega..M-1, D = M - omega.
Eigen::MatrixXcd regression_matrix(const Eigen::Ref<const Eigen::VectorXcd>& x, int order);

// Log density of x_{cond_len..M-1} given the first cond_len entries under the
// AR law of `comp`. Requires comp.order() <= cond_len < x.size().
double conditional_log_density(const Eigen::Ref<const Eigen::VectorXcd>& x,
                               const ArComponent& comp, int cond_len);

// Posterior responsibilities under the common conditioning length
// cond_len = max_k order_k. Rows whose densities all underflow fall back to
// uniform and are counted.
Responsibilities e_step(const ArGmmModel& model, const Eigen::MatrixXcd& samples,
                        int threads = 1);

// Weighted ridge least squares for one component's coefficients.
Eigen::VectorXcd m_step_coefficients(const Eigen::MatrixXcd& samples,
                                     const Eigen::Ref<const Eigen::VectorXd>& gamma_k,
                                     int order, double ridge_scale, int threads = 1);

// Weighted mean squared residual of the (projected) coefficients, floored.
double m_step_variance(const Eigen::MatrixXcd& samples,
                       const Eigen::Ref<const Eigen::VectorXd>& gamma_k,
                       const Eigen::VectorXcd& coeffs, double variance_floor,
                       int threads = 1);

Eigen::VectorXd m_step_weights(const Eigen::MatrixXd& gamma);

// Magnitude clipping onto the box; phases are preserved. Returns the
// projected coefficients and the number of clipped entries.
std::pair<Eigen::VectorXcd, int> project_coefficients(const Eigen::VectorXcd& coeffs,
                                                      const ConstraintSchedule& schedule,
                                                      int component);

// Default initialization: global least-squares AR fit per distinct order plus
// a seeded per-component perturbation.
ArGmmModel initial_model(const Eigen::MatrixXcd& samples, const std::vector<int>& orders,
                         const ConstraintSchedule& schedule, const EmConfig& cfg);

std::pair<ArGmmModel, EmTrace> fit(const Eigen::MatrixXcd& samples, int num_components,
                                   const std::vector<int>& orders,
                                   const ConstraintSchedule& schedule, const EmConfig& cfg);

// Same EM loop starting from an explicit model.
std::pair<ArGmmModel, EmTrace> fit_from(ArGmmModel model, const Eigen::MatrixXcd& samples,
                                        const EmConfig& cfg);

// Gohberg-Semencul inverse covariance Gamma = (B B^H - Z Z^H) / alpha_0 with
// alpha_0 = 1/sigma2 and alpha_i = -a_i/sigma2.
Eigen::MatrixXcd gs_inverse_covariance(const ArComponent& comp, int dim);

// Stationary autocovariance r_0..r_max_lag via the Yule-Walker equations.
// Requires a stable coefficient vector.
Eigen::VectorXcd ar_autocovariance(const Eigen::VectorXcd& coeffs, double sigma2,
                                   int max_lag);

// Hermitian Toeplitz covariance assembled from ar_autocovariance.
Eigen::MatrixXcd covariance_from_ar(const ArComponent& comp, int dim);

// Total conditional log-likelihood at cond_len = max_k order_k.
double log_likelihood(const ArGmmModel& model, const Eigen::MatrixXcd& samples,
                      int threads = 1);

std::int64_t parameter_count(const ArGmmModel& model);
std::int64_t parameter_count(const std::vector<int>& orders);
std::int64_t parameter_count_full_gmm(int num_components, int dim);

double bic(const ArGmmModel& model, const Eigen::MatrixXcd& samples, int threads = 1);

// Draws from the mixture using the reconstructed Toeplitz covariances.
Eigen::MatrixXcd sample(const ArGmmModel& model, int count, RngStream& rng);

}  // namespace argmm
