#pragma once

#include <Eigen/Dense>
#include <complex>

namespace argmm {

// Largest root magnitude of z^w - a_1 z^{w-1} - ... - a_w, i.e. the poles of
// the AR recursion.  Values < 1 mean a stable (stationary) process.
inline double ar_spectral_radius(const Eigen::VectorXcd& coeffs) {
    const int order = static_cast<int>(coeffs.size());
    if (order == 0) return 0.0;
    Eigen::MatrixXcd companion = Eigen::MatrixXcd::Zero(order, order);
    companion.row(0) = coeffs.transpose();
    for (int i = 1; i < order; ++i) companion(i, i - 1) = 1.0;
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> eig(companion, /*computeEigenvectors=*/false);
    return eig.eigenvalues().cwiseAbs().maxCoeff();
}

inline bool ar_is_stable(const Eigen::VectorXcd& coeffs, double margin = 0.0) {
    return ar_spectral_radius(coeffs) < 1.0 - margin;
}

}  // namespace argmm
