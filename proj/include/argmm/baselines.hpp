#pragma once

#include <Eigen/Dense>
#include <utility>
#include <vector>

#include "argmm/ar_gmm.hpp"
#include "argmm/em_config.hpp"

namespace argmm {

enum class CovStructure { Full, Toeplitz, Circulant };

// Zero-mean Gaussian mixture with unstructured or structured covariances.
struct GaussianMixture {
    int dim = 0;
    CovStructure structure = CovStructure::Full;
    Eigen::VectorXd weights;
    std::vector<Eigen::MatrixXcd> covariances;

    int num_components() const { return static_cast<int>(covariances.size()); }
    void validate() const;
};

std::pair<GaussianMixture, EmTrace> fit_full_gmm(const Eigen::MatrixXcd& samples,
                                                 int num_components, const EmConfig& cfg);

// Full EM with each covariance projected onto the Hermitian Toeplitz class
// after its update.
std::pair<GaussianMixture, EmTrace> fit_toeplitz_gmm(const Eigen::MatrixXcd& samples,
                                                     int num_components, const EmConfig& cfg);

// EM over circulant covariances C = F diag(p) F^H; closed-form spectral
// updates in the DFT domain.
std::pair<GaussianMixture, EmTrace> fit_circulant_gmm(const Eigen::MatrixXcd& samples,
                                                      int num_components, const EmConfig& cfg);

// (1/N) X X^H, chunk-reduced so the result does not depend on the thread count.
Eigen::MatrixXcd sample_covariance(const Eigen::MatrixXcd& samples, int threads = 1);

// Frobenius projection onto Hermitian Toeplitz matrices: per-diagonal
// averaging of the Hermitian part.
Eigen::MatrixXcd toeplitz_project(const Eigen::MatrixXcd& cov);

// Unitary DFT matrix, F(j, l) = exp(-2 pi i j l / dim) / sqrt(dim).
Eigen::MatrixXcd dft_matrix(int dim);

// Real spectral powers diag(F^H C F) of the Hermitian part of C.
Eigen::VectorXd circulant_powers(const Eigen::MatrixXcd& cov);

// Frobenius projection onto the circulant class, F diag(p) F^H.
Eigen::MatrixXcd circulant_project(const Eigen::MatrixXcd& cov);

// Least squares under the identity pilot: the observation itself.
Eigen::VectorXcd ls_estimate(const Eigen::VectorXcd& y);

// h_hat = C (C + nv I)^{-1} y, evaluated as y - nv (C + nv I)^{-1} y.
Eigen::VectorXcd lmmse_estimate(const Eigen::MatrixXcd& cov, const Eigen::VectorXcd& y,
                                double noise_var);

Eigen::VectorXcd sample_lmmse(const Eigen::MatrixXcd& train_samples, const Eigen::VectorXcd& y,
                              double noise_var);

Eigen::VectorXcd genie_lmmse(const Eigen::VectorXcd& y, const Eigen::MatrixXcd& genie_cov,
                             double noise_var);

}  // namespace argmm
