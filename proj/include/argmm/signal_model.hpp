#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <vector>

#include "argmm/rng.hpp"

namespace argmm {

using Eigen::MatrixXcd;
using Eigen::VectorXcd;

// Configuration of the multipath spatial channel generator: a uniform linear
// array observing P propagation paths, each with a Laplacian power angular
// spectrum around a uniformly drawn center angle.
struct ChannelModelConfig {
    int antennas = 64;             // M
    int paths = 1;                 // P
    double angle_spread_deg = 2.0; // per-path Laplacian angular std
    double angle_min_deg = -60.0;  // uniform path-angle range
    double angle_max_deg = 60.0;
    int pas_grid_points = 3600;    // integration grid over [-pi, pi)
    double antenna_spacing = 0.5;  // fraction of wavelength

    void validate() const;
};

// One channel realization together with the covariance it was drawn from.
struct ChannelSample {
    VectorXcd h;
    MatrixXcd genie_cov;  // Hermitian PSD, trace == M
};

struct NoisyObservation {
    VectorXcd y;
    double noise_var = 0.0;
    double snr_db = 0.0;
};

// A column-per-sample dataset of complex channel vectors plus the per-sample
// generation covariances when available.
struct ChannelDataset {
    MatrixXcd samples;                    // M x N
    std::vector<MatrixXcd> genie_covs;    // empty, or one M x M matrix per sample
    int paths = 0;
    std::uint64_t seed = 0;
    StreamPurpose stream_tag = StreamPurpose::ChannelDraw;

    int dim() const { return static_cast<int>(samples.rows()); }
    int size() const { return static_cast<int>(samples.cols()); }
    bool has_genie() const { return !genie_covs.empty(); }
};

// Draws P path center angles, uniform over the configured range. Radians.
std::vector<double> sample_path_angles(int paths, RngStream& rng, const ChannelModelConfig& cfg);

// Spatial covariance of the Laplacian-PAS multipath model at the given path
// angles: grid integration of g(theta) a(theta) a(theta)^H, equal per-path
// power, trace-normalized to M.  Hermitian Toeplitz PSD by construction.
MatrixXcd build_genie_covariance(const std::vector<double>& angles_rad, const ChannelModelConfig& cfg);

// Factor L with L L^H = C: Cholesky when C is definite, eigenvalue-clipped
// square root otherwise.  Throws NumericalError when C is not PSD.
MatrixXcd covariance_factor(const MatrixXcd& cov);

// Draws h ~ CN(0, C).
VectorXcd draw_channel(const MatrixXcd& cov, RngStream& rng);

// N independent channel samples with per-sample genie covariances.  A pure
// function of (cfg, n, seed); sample i only consumes streams derived for i.
ChannelDataset generate_dataset(const ChannelModelConfig& cfg, int n, std::uint64_t seed, int threads = 1);

// y = h + n with white circularly-symmetric noise at the given SNR.
// snr_db = +infinity yields a noiseless observation.
NoisyObservation add_noise(const VectorXcd& h, double snr_db, RngStream& rng);

inline double noise_variance_for_snr(double snr_db) {
    return std::isinf(snr_db) && snr_db > 0 ? 0.0 : std::pow(10.0, -snr_db / 10.0);
}

// Stationary sample of the AR process x_i = sum_j a_j x_{i-j} + eps_i after
// discarding burn_in steps.  Throws NumericalError for unstable coefficients.
VectorXcd sample_ar_process(const VectorXcd& coeffs, double sigma2, int length, RngStream& rng,
                            int burn_in = 1000);

}  // namespace argmm
