#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <vector>

#include "argmm/errors.hpp"
#include "argmm/rng.hpp"
#include "argmm/signal_model.hpp"

using namespace argmm;

namespace {

// Direct per-entry integration of the Laplacian-PAS ULA covariance. Same
// math as the library, but summed entrywise with std::polar instead of the
// first-column phase recurrence, then trace-normalized.
MatrixXcd direct_covariance(const std::vector<double>& angles, const ChannelModelConfig& cfg) {
    const int m = cfg.antennas;
    const double sigma = cfg.angle_spread_deg * M_PI / 180.0;
    const double dtheta = 2.0 * M_PI / cfg.pas_grid_points;
    MatrixXcd cov = MatrixXcd::Zero(m, m);
    for (double center : angles) {
        for (int g = 0; g < cfg.pas_grid_points; ++g) {
            const double theta = -M_PI + (g + 0.5) * dtheta;
            double diff = std::fmod(theta - center + M_PI, 2.0 * M_PI);
            if (diff < 0) diff += 2.0 * M_PI;
            diff -= M_PI;
            const double pas =
                std::exp(-std::sqrt(2.0) * std::abs(diff) / sigma) / (std::sqrt(2.0) * sigma);
            for (int p = 0; p < m; ++p)
                for (int q = 0; q < m; ++q)
                    cov(p, q) += pas * dtheta / static_cast<double>(angles.size()) *
                                 std::polar(1.0, 2.0 * M_PI * cfg.antenna_spacing * (p - q) *
                                                     std::sin(theta));
        }
    }
    return cov * (static_cast<double>(m) / cov.real().trace());
}

ChannelModelConfig small_config() {
    ChannelModelConfig cfg;
    cfg.antennas = 8;
    cfg.pas_grid_points = 256;
    return cfg;
}

}  // namespace

TEST_CASE("genie covariance matches direct entrywise integration") {
    ChannelModelConfig cfg = small_config();
    for (auto angles : std::vector<std::vector<double>>{{0.0}, {0.4}, {-0.7, 0.9}}) {
        const MatrixXcd fast = build_genie_covariance(angles, cfg);
        const MatrixXcd slow = direct_covariance(angles, cfg);
        CHECK((fast - slow).cwiseAbs().maxCoeff() < 1e-10);
    }
}

TEST_CASE("genie covariance oracle holds for non-default geometry") {
    ChannelModelConfig cfg = small_config();
    cfg.antenna_spacing = 0.7;
    cfg.angle_spread_deg = 11.0;
    const std::vector<double> angles{0.2, -1.0, 0.8};
    CHECK((build_genie_covariance(angles, cfg) - direct_covariance(angles, cfg))
              .cwiseAbs()
              .maxCoeff() < 1e-10);
}

TEST_CASE("genie covariance is Hermitian Toeplitz PSD with unit diagonal") {
    ChannelModelConfig cfg;
    cfg.antennas = 32;
    cfg.pas_grid_points = 720;
    RngStream rng(5);
    const auto angles = sample_path_angles(3, rng, cfg);
    const MatrixXcd cov = build_genie_covariance(angles, cfg);

    CHECK((cov - cov.adjoint()).cwiseAbs().maxCoeff() < 1e-14);
    for (int i = 1; i < cfg.antennas; ++i)
        for (int j = 1; j < cfg.antennas; ++j)
            CHECK(std::abs(cov(i, j) - cov(i - 1, j - 1)) < 1e-14);
    for (int i = 0; i < cfg.antennas; ++i) CHECK(cov(i, i) == std::complex<double>(1.0, 0.0));
    CHECK(cov.real().trace() == doctest::Approx(cfg.antennas).epsilon(1e-12));

    Eigen::SelfAdjointEigenSolver<MatrixXcd> eig(cov, Eigen::EigenvaluesOnly);
    CHECK(eig.eigenvalues().minCoeff() > -1e-10 * cfg.antennas);
}

TEST_CASE("channel config validation") {
    ChannelModelConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    cfg.antennas = 0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = ChannelModelConfig{};
    cfg.angle_spread_deg = 0.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = ChannelModelConfig{};
    cfg.angle_min_deg = 10.0;
    cfg.angle_max_deg = 10.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = ChannelModelConfig{};
    cfg.pas_grid_points = 4;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("path angles are uniform over the configured range") {
    ChannelModelConfig cfg;
    cfg.angle_min_deg = -30.0;
    cfg.angle_max_deg = 45.0;
    RngStream a(11), b(11);
    const auto angles = sample_path_angles(500, a, cfg);
    const auto again = sample_path_angles(500, b, cfg);
    REQUIRE(angles.size() == 500);
    CHECK(angles == again);
    const double lo = -30.0 * M_PI / 180.0, hi = 45.0 * M_PI / 180.0;
    double mean = 0.0;
    for (double ang : angles) {
        CHECK(ang >= lo);
        CHECK(ang < hi);
        mean += ang / 500.0;
    }
    CHECK(mean == doctest::Approx(0.5 * (lo + hi)).epsilon(0.15));
}

TEST_CASE("dataset columns are a pure function of the sample index") {
    ChannelModelConfig cfg = small_config();
    const ChannelDataset big = generate_dataset(cfg, 40, 99);
    const ChannelDataset prefix = generate_dataset(cfg, 25, 99);
    CHECK(big.samples.leftCols(25) == prefix.samples);
    for (int i = 0; i < 25; ++i) CHECK(big.genie_covs[static_cast<std::size_t>(i)] ==
                                       prefix.genie_covs[static_cast<std::size_t>(i)]);
}

TEST_CASE("dataset generation is bitwise identical across thread counts") {
    ChannelModelConfig cfg = small_config();
    const ChannelDataset one = generate_dataset(cfg, 600, 7, 1);
    const ChannelDataset four = generate_dataset(cfg, 600, 7, 4);
    CHECK(one.samples == four.samples);
    for (int i = 0; i < 600; ++i)
        CHECK(one.genie_covs[static_cast<std::size_t>(i)] ==
              four.genie_covs[static_cast<std::size_t>(i)]);
}

TEST_CASE("dataset metadata") {
    ChannelModelConfig cfg = small_config();
    cfg.paths = 2;
    const ChannelDataset data = generate_dataset(cfg, 5, 3);
    CHECK(data.dim() == 8);
    CHECK(data.size() == 5);
    CHECK(data.paths == 2);
    CHECK(data.seed == 3);
    CHECK(data.has_genie());
    CHECK_THROWS_AS(generate_dataset(cfg, 0, 3), ConfigError);
}

TEST_CASE("draw_channel reproduces the generating covariance in Monte Carlo") {
    ChannelModelConfig cfg = small_config();
    cfg.antennas = 4;
    cfg.angle_spread_deg = 20.0;
    const MatrixXcd cov = build_genie_covariance({0.3}, cfg);

    RngStream rng(13);
    const int n = 20000;
    MatrixXcd acc = MatrixXcd::Zero(4, 4);
    VectorXcd mean = VectorXcd::Zero(4);
    for (int i = 0; i < n; ++i) {
        const VectorXcd h = draw_channel(cov, rng);
        acc += h * h.adjoint();
        mean += h;
    }
    acc /= n;
    CHECK((acc - cov).norm() / cov.norm() < 0.05);
    CHECK(mean.norm() / n < 0.02);
}

TEST_CASE("covariance_factor recovers PD and PSD inputs") {
    Eigen::MatrixXcd c(2, 2);
    c << 2.0, std::complex<double>(0.5, 0.25), std::complex<double>(0.5, -0.25), 1.0;
    const MatrixXcd l = covariance_factor(c);
    CHECK((l * l.adjoint() - c).cwiseAbs().maxCoeff() < 1e-12);

    VectorXcd x(3);
    x << std::complex<double>(1, 1), std::complex<double>(0, -2), 0.5;
    const MatrixXcd rank1 = x * x.adjoint();  // singular, LLT rejects it
    const MatrixXcd lr = covariance_factor(rank1);
    CHECK((lr * lr.adjoint() - rank1).cwiseAbs().maxCoeff() < 1e-12);

    Eigen::MatrixXcd indef = Eigen::MatrixXcd::Identity(2, 2);
    indef(1, 1) = -1.0;
    CHECK_THROWS_AS(covariance_factor(indef), NumericalError);
}

TEST_CASE("add_noise hits the requested noise power") {
    RngStream rng(21);
    const VectorXcd h = VectorXcd::Ones(16);

    const NoisyObservation clean = add_noise(h, std::numeric_limits<double>::infinity(), rng);
    CHECK(clean.noise_var == 0.0);
    CHECK(clean.y == h);

    double acc = 0.0;
    const int reps = 4000;
    for (int r = 0; r < reps; ++r) {
        const NoisyObservation obs = add_noise(h, 0.0, rng);
        CHECK(obs.noise_var == 1.0);
        acc += (obs.y - h).squaredNorm() / h.size();
    }
    CHECK(acc / reps == doctest::Approx(1.0).epsilon(0.03));
}

TEST_CASE("noise_variance_for_snr") {
    CHECK(noise_variance_for_snr(0.0) == 1.0);
    CHECK(noise_variance_for_snr(10.0) == doctest::Approx(0.1).epsilon(1e-12));
    CHECK(noise_variance_for_snr(-10.0) == doctest::Approx(10.0).epsilon(1e-12));
    CHECK(noise_variance_for_snr(std::numeric_limits<double>::infinity()) == 0.0);
}

TEST_CASE("sample_ar_process matches AR(1) autocovariances") {
    const std::complex<double> a = std::polar(0.7, 0.5);
    VectorXcd coeffs(1);
    coeffs << a;
    const double sigma2 = 0.36;

    RngStream rng(31);
    const int n = 200000;
    const VectorXcd x = sample_ar_process(coeffs, sigma2, n, rng);

    std::complex<double> r0 = 0.0, r1 = 0.0;
    for (int t = 0; t + 1 < n; ++t) {
        r0 += x(t) * std::conj(x(t));
        r1 += x(t + 1) * std::conj(x(t));
    }
    r0 /= n - 1;
    r1 /= n - 1;
    const double r0_true = sigma2 / (1.0 - std::norm(a));
    CHECK(r0.real() == doctest::Approx(r0_true).epsilon(0.03));
    CHECK(std::abs(r1 - a * r0_true) < 0.03 * r0_true);
}

TEST_CASE("sample_ar_process edge cases") {
    RngStream rng(41);
    const VectorXcd white = sample_ar_process(VectorXcd(), 2.0, 50000, rng, 0);
    CHECK(white.squaredNorm() / 50000 == doctest::Approx(2.0).epsilon(0.03));

    VectorXcd unstable(1);
    unstable << 1.01;
    CHECK_THROWS_AS(sample_ar_process(unstable, 1.0, 10, rng), NumericalError);
    CHECK_THROWS_AS(sample_ar_process(VectorXcd(), 0.0, 10, rng), NumericalError);
}
