#include "argmm/baselines.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "argmm/errors.hpp"
#include "argmm/parallel.hpp"

namespace argmm {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double loading_of(const Eigen::MatrixXcd& cov, double scale) {
    return scale * cov.real().trace() / static_cast<double>(cov.rows());
}

Eigen::MatrixXcd hermitian_part(const Eigen::MatrixXcd& a) { return 0.5 * (a + a.adjoint()); }

// Per-component EM state; dense covariances carry a Cholesky factor, the
// circulant variant works directly on the spectral powers.
struct MixState {
    CovStructure structure = CovStructure::Full;
    int dim = 0;
    Eigen::VectorXd weights;
    std::vector<Eigen::MatrixXcd> cov;
    std::vector<Eigen::MatrixXcd> chol;
    std::vector<double> logdet;
    std::vector<Eigen::VectorXd> powers;

    int num_components() const { return static_cast<int>(weights.size()); }
};

void refresh_factors(MixState& st) {
    const int k = st.num_components();
    if (st.structure == CovStructure::Circulant) {
        st.logdet.assign(static_cast<std::size_t>(k), 0.0);
        for (int j = 0; j < k; ++j)
            st.logdet[static_cast<std::size_t>(j)] =
                st.powers[static_cast<std::size_t>(j)].array().log().sum();
        return;
    }
    st.chol.resize(static_cast<std::size_t>(k));
    st.logdet.assign(static_cast<std::size_t>(k), 0.0);
    for (int j = 0; j < k; ++j) {
        Eigen::LLT<Eigen::MatrixXcd> llt(st.cov[static_cast<std::size_t>(j)]);
        if (llt.info() != Eigen::Success)
            throw NumericalError("gmm fit: covariance " + std::to_string(j) +
                                 " is not positive definite");
        st.chol[static_cast<std::size_t>(j)] = llt.matrixL();
        st.logdet[static_cast<std::size_t>(j)] =
            2.0 * st.chol[static_cast<std::size_t>(j)].diagonal().real().array().log().sum();
    }
}

struct GmmEStep {
    Eigen::MatrixXd gamma;
    double loglik = 0.0;
    int underflow_rows = 0;
};

GmmEStep gmm_e_step(const MixState& st, const Eigen::MatrixXcd& samples,
                    const Eigen::MatrixXd& spec2, int threads) {
    const int n = static_cast<int>(samples.cols());
    const int k = st.num_components();
    const int m = st.dim;

    Eigen::MatrixXd lp(n, k);
    for (int j = 0; j < k; ++j) {
        const double w = st.weights(j);
        const double base = w > 0 ? std::log(w) - m * std::log(M_PI) - st.logdet[static_cast<std::size_t>(j)]
                                  : kNegInf;
        if (!std::isfinite(base)) {
            lp.col(j).setConstant(kNegInf);
            continue;
        }
        if (st.structure == CovStructure::Circulant) {
            const Eigen::VectorXd invp = st.powers[static_cast<std::size_t>(j)].cwiseInverse();
            lp.col(j) = (-(spec2.transpose() * invp)).array() + base;
        } else {
            constexpr int kBlock = 1024;
            const auto blocks = static_cast<std::size_t>((n + kBlock - 1) / kBlock);
            const auto& l = st.chol[static_cast<std::size_t>(j)];
            parallel_for(blocks, threads, [&](std::size_t b) {
                const int lo = static_cast<int>(b) * kBlock;
                const int len = std::min(kBlock, n - lo);
                const Eigen::MatrixXcd y =
                    l.triangularView<Eigen::Lower>().solve(samples.middleCols(lo, len));
                lp.col(j).segment(lo, len) =
                    (-y.colwise().squaredNorm().transpose()).array() + base;
            });
        }
    }

    GmmEStep out;
    out.gamma.resize(n, k);
    for (int i = 0; i < n; ++i) {
        const double mx = lp.row(i).maxCoeff();
        if (!std::isfinite(mx)) {
            out.gamma.row(i).setConstant(1.0 / k);
            ++out.underflow_rows;
            out.loglik += mx;
            continue;
        }
        double s = 0.0;
        for (int j = 0; j < k; ++j) {
            const double e = std::exp(lp(i, j) - mx);
            out.gamma(i, j) = e;
            s += e;
        }
        out.gamma.row(i) /= s;
        out.loglik += mx + std::log(s);
    }
    return out;
}

Eigen::MatrixXcd weighted_scatter(const Eigen::MatrixXcd& samples,
                                  const Eigen::Ref<const Eigen::VectorXd>& gamma_k, int threads) {
    const int m = static_cast<int>(samples.rows());
    const Eigen::MatrixXcd zero = Eigen::MatrixXcd::Zero(m, m);
    return chunked_reduce(
        static_cast<std::size_t>(samples.cols()), zero, threads,
        [&](std::size_t lo, std::size_t hi) {
            const auto lo_i = static_cast<Eigen::Index>(lo);
            const auto len = static_cast<Eigen::Index>(hi - lo);
            const Eigen::VectorXcd w =
                gamma_k.segment(lo_i, len).cast<std::complex<double>>();
            Eigen::MatrixXcd p(m, m);
            p.noalias() = (samples.middleCols(lo_i, len) * w.asDiagonal()) *
                          samples.middleCols(lo_i, len).adjoint();
            return p;
        },
        [](Eigen::MatrixXcd a, const Eigen::MatrixXcd& b) {
            a += b;
            return a;
        });
}

// Ensures positive definiteness of a (projected) covariance by lifting the
// spectrum whenever the smallest eigenvalue falls below the loading level.
void enforce_pd(Eigen::MatrixXcd& cov, double loading) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(cov, Eigen::EigenvaluesOnly);
    const double mn = eig.eigenvalues().minCoeff();
    if (mn < loading) cov.diagonal().array() += loading - mn;
}

void update_component(MixState& st, int j, const Eigen::MatrixXcd& scatter, double nk,
                      const Eigen::MatrixXd& spec2,
                      const Eigen::Ref<const Eigen::VectorXd>& gamma_k, const EmConfig& cfg) {
    const auto js = static_cast<std::size_t>(j);
    if (st.structure == CovStructure::Circulant) {
        Eigen::VectorXd p = (spec2 * gamma_k) / nk;
        st.powers[js] = p.cwiseMax(cfg.variance_floor);
        return;
    }
    Eigen::MatrixXcd c = hermitian_part(scatter / nk);
    if (st.structure == CovStructure::Toeplitz) {
        c = toeplitz_project(c);
        enforce_pd(c, loading_of(c, cfg.loading_scale));
    } else {
        c.diagonal().array() += loading_of(c, cfg.loading_scale);
    }
    st.cov[js] = std::move(c);
}

void rescue_gmm_component(MixState& st, int j, const Eigen::MatrixXcd& samples,
                          const Eigen::MatrixXcd& dft, const EmConfig& cfg, int rescue_ordinal) {
    RngStream rng = derive_stream(cfg.seed, StreamPurpose::ModelInit,
                                  0x80000000ULL + static_cast<std::uint64_t>(rescue_ordinal));
    const auto pick = static_cast<Eigen::Index>(rng.uniform_index(samples.cols()));
    const Eigen::VectorXcd x = samples.col(pick);
    const auto js = static_cast<std::size_t>(j);

    if (st.structure == CovStructure::Circulant) {
        st.powers[js] = (dft.adjoint() * x).cwiseAbs2().cwiseMax(cfg.variance_floor);
    } else {
        Eigen::MatrixXcd c = x * x.adjoint();
        if (st.structure == CovStructure::Toeplitz) c = toeplitz_project(c);
        const double loading = 0.01 * x.squaredNorm() / st.dim;
        c.diagonal().array() += loading;
        c = hermitian_part(c);
        if (st.structure == CovStructure::Toeplitz) enforce_pd(c, loading);
        st.cov[js] = std::move(c);
    }

    const int k = st.num_components();
    st.weights(j) = 1.0 / k;
    st.weights /= st.weights.sum();
}

std::pair<GaussianMixture, EmTrace> fit_gmm_impl(const Eigen::MatrixXcd& samples,
                                                 int num_components, const EmConfig& cfg,
                                                 CovStructure structure) {
    cfg.validate();
    const int m = static_cast<int>(samples.rows());
    const int n = static_cast<int>(samples.cols());
    if (num_components < 1) throw ConfigError("gmm fit: need at least one component");
    if (n < num_components)
        throw ConfigError("gmm fit: need at least as many samples as components");
    const int k = num_components;

    Eigen::MatrixXcd dft;
    Eigen::MatrixXd spec2;
    if (structure == CovStructure::Circulant) {
        dft = dft_matrix(m);
        spec2 = (dft.adjoint() * samples).cwiseAbs2();
    }

    const Eigen::MatrixXcd s = sample_covariance(samples, cfg.threads);
    const double scale = s.real().trace() / m;

    MixState st;
    st.structure = structure;
    st.dim = m;
    st.weights = Eigen::VectorXd::Constant(k, 1.0 / k);
    if (structure == CovStructure::Circulant) {
        const Eigen::VectorXd p0 = circulant_powers(s);
        st.powers.resize(static_cast<std::size_t>(k));
        for (int j = 0; j < k; ++j) {
            RngStream rng = derive_stream(cfg.seed, StreamPurpose::ModelInit,
                                          static_cast<std::uint64_t>(j));
            st.powers[static_cast<std::size_t>(j)] =
                (p0.array() + cfg.init_perturbation * scale * rng.uniform01())
                    .max(cfg.variance_floor)
                    .matrix();
        }
    } else {
        const Eigen::MatrixXcd base =
            structure == CovStructure::Toeplitz ? toeplitz_project(s) : s;
        st.cov.resize(static_cast<std::size_t>(k));
        for (int j = 0; j < k; ++j) {
            RngStream rng = derive_stream(cfg.seed, StreamPurpose::ModelInit,
                                          static_cast<std::uint64_t>(j));
            Eigen::MatrixXcd c = base;
            if (structure == CovStructure::Toeplitz) {
                c.diagonal().array() += cfg.init_perturbation * scale * rng.uniform01();
            } else {
                for (int i = 0; i < m; ++i)
                    c(i, i) += cfg.init_perturbation * scale * rng.uniform01();
            }
            c.diagonal().array() += loading_of(c, cfg.loading_scale);
            if (structure == CovStructure::Toeplitz)
                enforce_pd(c, loading_of(c, cfg.loading_scale));
            st.cov[static_cast<std::size_t>(j)] = std::move(c);
        }
    }

    EmTrace trace;
    refresh_factors(st);
    GmmEStep cur = gmm_e_step(st, samples, spec2, cfg.threads);
    if (!std::isfinite(cur.loglik))
        throw NumericalError("gmm fit: non-finite log-likelihood at initialization");
    trace.initial_log_likelihood = cur.loglik;
    double prev_ll = cur.loglik;

    for (int iter = 1; iter <= cfg.max_iters; ++iter) {
        Eigen::VectorXd nk = cur.gamma.colwise().sum();
        bool rescued = false;
        for (int j = 0; j < k; ++j) {
            if (nk(j) < cfg.empty_threshold * n) {
                rescue_gmm_component(st, j, samples, dft, cfg, trace.rescues);
                ++trace.rescues;
                rescued = true;
            }
        }
        if (rescued) {
            refresh_factors(st);
            cur = gmm_e_step(st, samples, spec2, cfg.threads);
            nk = cur.gamma.colwise().sum();
        }

        for (int j = 0; j < k; ++j) {
            if (!(nk(j) > 0)) continue;
            Eigen::MatrixXcd scatter;
            if (structure != CovStructure::Circulant)
                scatter = weighted_scatter(samples, cur.gamma.col(j), cfg.threads);
            update_component(st, j, scatter, nk(j), spec2, cur.gamma.col(j), cfg);
        }
        st.weights = nk / static_cast<double>(n);

        refresh_factors(st);
        cur = gmm_e_step(st, samples, spec2, cfg.threads);
        if (!std::isfinite(cur.loglik))
            throw NumericalError("gmm fit: non-finite log-likelihood at iteration " +
                                 std::to_string(iter));
        trace.log_likelihood.push_back(cur.loglik);
        trace.clipped.push_back(0);
        trace.iterations = iter;
        if (std::abs(cur.loglik - prev_ll) <= cfg.rel_tol * (1.0 + std::abs(prev_ll))) {
            trace.converged = true;
            break;
        }
        prev_ll = cur.loglik;
    }

    GaussianMixture out;
    out.dim = m;
    out.structure = structure;
    out.weights = st.weights;
    out.covariances.resize(static_cast<std::size_t>(k));
    for (int j = 0; j < k; ++j) {
        const auto js = static_cast<std::size_t>(j);
        if (structure == CovStructure::Circulant) {
            out.covariances[js] = hermitian_part(
                dft * st.powers[js].cast<std::complex<double>>().asDiagonal() * dft.adjoint());
        } else {
            out.covariances[js] = st.cov[js];
        }
    }
    return {std::move(out), std::move(trace)};
}

}  // namespace

void GaussianMixture::validate() const {
    if (dim < 1) throw ConfigError("mixture: dim must be >= 1");
    if (covariances.empty()) throw ConfigError("mixture: needs at least one component");
    if (weights.size() != static_cast<Eigen::Index>(covariances.size()))
        throw ConfigError("mixture: one weight per covariance required");
    double wsum = 0.0;
    for (int j = 0; j < num_components(); ++j) {
        if (!(weights(j) >= 0)) throw ConfigError("mixture: weights must be nonnegative");
        wsum += weights(j);
        const auto& c = covariances[static_cast<std::size_t>(j)];
        if (c.rows() != dim || c.cols() != dim)
            throw ConfigError("mixture: covariance dimensions must match dim");
        if ((c - c.adjoint()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, c.cwiseAbs().maxCoeff()))
            throw ConfigError("mixture: covariances must be Hermitian");
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(c, Eigen::EigenvaluesOnly);
        if (eig.eigenvalues().minCoeff() < -1e-10 * std::max(c.real().trace(), 1.0))
            throw ConfigError("mixture: covariances must be positive semidefinite");
    }
    if (std::abs(wsum - 1.0) > 1e-12) throw ConfigError("mixture: weights must sum to 1");
}

std::pair<GaussianMixture, EmTrace> fit_full_gmm(const Eigen::MatrixXcd& samples,
                                                 int num_components, const EmConfig& cfg) {
    return fit_gmm_impl(samples, num_components, cfg, CovStructure::Full);
}

std::pair<GaussianMixture, EmTrace> fit_toeplitz_gmm(const Eigen::MatrixXcd& samples,
                                                     int num_components, const EmConfig& cfg) {
    return fit_gmm_impl(samples, num_components, cfg, CovStructure::Toeplitz);
}

std::pair<GaussianMixture, EmTrace> fit_circulant_gmm(const Eigen::MatrixXcd& samples,
                                                      int num_components, const EmConfig& cfg) {
    return fit_gmm_impl(samples, num_components, cfg, CovStructure::Circulant);
}

Eigen::MatrixXcd sample_covariance(const Eigen::MatrixXcd& samples, int threads) {
    const int n = static_cast<int>(samples.cols());
    if (n < 1) throw ConfigError("sample_covariance: need at least one sample");
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(n);
    return weighted_scatter(samples, ones, threads) / static_cast<double>(n);
}

Eigen::MatrixXcd toeplitz_project(const Eigen::MatrixXcd& cov) {
    const int m = static_cast<int>(cov.rows());
    if (cov.cols() != m) throw ConfigError("toeplitz_project: matrix must be square");
    const Eigen::MatrixXcd h = hermitian_part(cov);
    Eigen::VectorXcd t(m);
    for (int l = 0; l < m; ++l) {
        std::complex<double> s = 0.0;
        for (int i = 0; i + l < m; ++i) s += h(i + l, i);
        t(l) = s / static_cast<double>(m - l);
    }
    t(0) = t(0).real();
    Eigen::MatrixXcd out(m, m);
    for (int j = 0; j < m; ++j)
        for (int i = 0; i < m; ++i) out(i, j) = i >= j ? t(i - j) : std::conj(t(j - i));
    return out;
}

Eigen::MatrixXcd dft_matrix(int dim) {
    if (dim < 1) throw ConfigError("dft_matrix: dim must be >= 1");
    Eigen::MatrixXcd f(dim, dim);
    const double scale = 1.0 / std::sqrt(static_cast<double>(dim));
    for (int j = 0; j < dim; ++j) {
        for (int l = 0; l < dim; ++l) {
            const double phase = -2.0 * M_PI * static_cast<double>(j) * l / dim;
            f(j, l) = scale * std::complex<double>(std::cos(phase), std::sin(phase));
        }
    }
    return f;
}

Eigen::VectorXd circulant_powers(const Eigen::MatrixXcd& cov) {
    const int m = static_cast<int>(cov.rows());
    if (cov.cols() != m) throw ConfigError("circulant_powers: matrix must be square");
    const Eigen::MatrixXcd f = dft_matrix(m);
    return (f.adjoint() * hermitian_part(cov) * f).diagonal().real();
}

Eigen::MatrixXcd circulant_project(const Eigen::MatrixXcd& cov) {
    const Eigen::MatrixXcd f = dft_matrix(static_cast<int>(cov.rows()));
    const Eigen::VectorXd p = circulant_powers(cov);
    return hermitian_part(f * p.cast<std::complex<double>>().asDiagonal() * f.adjoint());
}

Eigen::VectorXcd ls_estimate(const Eigen::VectorXcd& y) { return y; }

Eigen::VectorXcd lmmse_estimate(const Eigen::MatrixXcd& cov, const Eigen::VectorXcd& y,
                                double noise_var) {
    if (cov.rows() != cov.cols() || cov.rows() != y.size())
        throw ConfigError("lmmse_estimate: dimension mismatch");
    if (noise_var < 0) throw ConfigError("lmmse_estimate: noise variance must be >= 0");
    if (noise_var == 0) return y;
    Eigen::MatrixXcd a = cov;
    a.diagonal().array() += noise_var;
    Eigen::LLT<Eigen::MatrixXcd> llt(a);
    if (llt.info() != Eigen::Success)
        throw NumericalError("lmmse_estimate: noisy covariance is not positive definite");
    return y - noise_var * llt.solve(y);
}

Eigen::VectorXcd sample_lmmse(const Eigen::MatrixXcd& train_samples, const Eigen::VectorXcd& y,
                              double noise_var) {
    Eigen::MatrixXcd c = sample_covariance(train_samples);
    c.diagonal().array() += loading_of(c, 1e-6);
    return lmmse_estimate(c, y, noise_var);
}

Eigen::VectorXcd genie_lmmse(const Eigen::VectorXcd& y, const Eigen::MatrixXcd& genie_cov,
                             double noise_var) {
    return lmmse_estimate(genie_cov, y, noise_var);
}

}  // namespace argmm
