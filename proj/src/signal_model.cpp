#include "argmm/signal_model.hpp"

#include <cmath>

#include "argmm/errors.hpp"
#include "argmm/parallel.hpp"
#include "argmm/stability.hpp"

namespace argmm {

namespace {

constexpr double kDegToRad = M_PI / 180.0;

// Wraps an angle difference to [-pi, pi).
double wrap_angle(double x) {
    x = std::fmod(x + M_PI, 2.0 * M_PI);
    if (x < 0) x += 2.0 * M_PI;
    return x - M_PI;
}

}  // namespace

void ChannelModelConfig::validate() const {
    if (antennas < 1) throw ConfigError("channel model: antennas must be >= 1");
    if (paths < 1) throw ConfigError("channel model: paths must be >= 1");
    if (!(angle_spread_deg > 0)) throw ConfigError("channel model: angle spread must be positive");
    if (pas_grid_points < 16) throw ConfigError("channel model: pas_grid_points must be >= 16");
    if (!(angle_max_deg > angle_min_deg)) throw ConfigError("channel model: empty angle range");
    if (!(antenna_spacing > 0)) throw ConfigError("channel model: antenna spacing must be positive");
}

std::vector<double> sample_path_angles(int paths, RngStream& rng, const ChannelModelConfig& cfg) {
    cfg.validate();
    if (paths < 1) throw ConfigError("sample_path_angles: paths must be >= 1");
    std::vector<double> angles(paths);
    for (double& a : angles) a = rng.uniform(cfg.angle_min_deg, cfg.angle_max_deg) * kDegToRad;
    return angles;
}

MatrixXcd build_genie_covariance(const std::vector<double>& angles_rad, const ChannelModelConfig& cfg) {
    cfg.validate();
    const int m = cfg.antennas;
    const int grid = cfg.pas_grid_points;
    const double sigma = cfg.angle_spread_deg * kDegToRad;
    const double dtheta = 2.0 * M_PI / grid;

    // The ULA covariance is Toeplitz: entry (i, j) depends on i - j only.
    // Accumulate the first column c_l = sum_g pas(theta_g) e^{i 2 pi d l sin theta_g} dtheta.
    VectorXcd col = VectorXcd::Zero(m);
    const double per_path = 1.0 / static_cast<double>(angles_rad.size());
    for (double center : angles_rad) {
        for (int g = 0; g < grid; ++g) {
            const double theta = -M_PI + (g + 0.5) * dtheta;
            const double pas =
                std::exp(-std::sqrt(2.0) * std::abs(wrap_angle(theta - center)) / sigma) /
                (std::sqrt(2.0) * sigma);
            const double weight = per_path * pas * dtheta;
            const double phase = 2.0 * M_PI * cfg.antenna_spacing * std::sin(theta);
            const std::complex<double> step(std::cos(phase), std::sin(phase));
            std::complex<double> a(weight, 0.0);
            for (int l = 0; l < m; ++l) {
                col(l) += a;
                a *= step;
            }
        }
    }
    // Trace normalization to M: every diagonal entry equals col(0).
    col /= col(0).real();

    MatrixXcd cov(m, m);
    for (int j = 0; j < m; ++j) {
        for (int i = 0; i < m; ++i) {
            cov(i, j) = i >= j ? col(i - j) : std::conj(col(j - i));
        }
    }
    return cov;
}

MatrixXcd covariance_factor(const MatrixXcd& cov) {
    const int m = static_cast<int>(cov.rows());
    if (cov.cols() != m) throw NumericalError("covariance_factor: matrix must be square");

    Eigen::LLT<MatrixXcd> llt(cov);
    if (llt.info() == Eigen::Success) return llt.matrixL();

    // Semi-definite case: factor through the eigendecomposition, clipping
    // negative eigenvalues at zero.
    Eigen::SelfAdjointEigenSolver<MatrixXcd> eig(cov);
    if (eig.info() != Eigen::Success)
        throw NumericalError("covariance_factor: eigendecomposition failed");
    const double trace = cov.real().trace();
    const double floor = -1e-10 * std::max(trace, 1.0);
    Eigen::VectorXd ev = eig.eigenvalues();
    for (int i = 0; i < m; ++i) {
        if (ev(i) < floor) throw NumericalError("covariance_factor: matrix is not PSD");
        ev(i) = std::max(ev(i), 0.0);
    }
    return eig.eigenvectors() * ev.cwiseSqrt().cast<std::complex<double>>().asDiagonal();
}

VectorXcd draw_channel(const MatrixXcd& cov, RngStream& rng) {
    const int m = static_cast<int>(cov.rows());
    VectorXcd z(m);
    for (int i = 0; i < m; ++i) z(i) = rng.cgaussian();
    return covariance_factor(cov) * z;
}

ChannelDataset generate_dataset(const ChannelModelConfig& cfg, int n, std::uint64_t seed, int threads) {
    cfg.validate();
    if (n < 1) throw ConfigError("generate_dataset: sample count must be >= 1");

    ChannelDataset data;
    data.samples.resize(cfg.antennas, n);
    data.genie_covs.resize(n);
    data.paths = cfg.paths;
    data.seed = seed;
    data.stream_tag = StreamPurpose::ChannelDraw;

    parallel_for(static_cast<std::size_t>(n), threads, [&](std::size_t i) {
        RngStream angle_rng = derive_stream(seed, StreamPurpose::PathAngles, i);
        const std::vector<double> angles = sample_path_angles(cfg.paths, angle_rng, cfg);
        data.genie_covs[i] = build_genie_covariance(angles, cfg);
        RngStream draw_rng = derive_stream(seed, StreamPurpose::ChannelDraw, i);
        data.samples.col(static_cast<Eigen::Index>(i)) = draw_channel(data.genie_covs[i], draw_rng);
    });
    return data;
}

NoisyObservation add_noise(const VectorXcd& h, double snr_db, RngStream& rng) {
    NoisyObservation obs;
    obs.snr_db = snr_db;
    obs.noise_var = noise_variance_for_snr(snr_db);
    obs.y = h;
    if (obs.noise_var > 0) {
        const double scale = std::sqrt(obs.noise_var);
        for (Eigen::Index i = 0; i < h.size(); ++i) obs.y(i) += scale * rng.cgaussian();
    }
    return obs;
}

VectorXcd sample_ar_process(const VectorXcd& coeffs, double sigma2, int length, RngStream& rng,
                            int burn_in) {
    if (!(sigma2 > 0)) throw NumericalError("sample_ar_process: sigma2 must be positive");
    if (length < 1) throw ConfigError("sample_ar_process: length must be >= 1");
    const int order = static_cast<int>(coeffs.size());
    if (order > 0 && ar_spectral_radius(coeffs) >= 1.0)
        throw NumericalError("sample_ar_process: unstable AR coefficients");

    const double scale = std::sqrt(sigma2);
    std::vector<std::complex<double>> history(order, 0.0);
    VectorXcd out(length);
    const int total = burn_in + length;
    for (int t = 0; t < total; ++t) {
        std::complex<double> x = scale * rng.cgaussian();
        for (int j = 0; j < order; ++j) x += coeffs(j) * history[j];
        for (int j = order - 1; j > 0; --j) history[j] = history[j - 1];
        if (order > 0) history[0] = x;
        if (t >= burn_in) out(t - burn_in) = x;
    }
    return out;
}

}  // namespace argmm
