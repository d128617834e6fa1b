#include "argmm/estimation.hpp"

#include <cmath>
#include <limits>

#include "argmm/errors.hpp"
#include "argmm/parallel.hpp"

namespace argmm {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

}  // namespace

GmmEstimator::GmmEstimator(std::vector<Eigen::MatrixXcd> covariances, Eigen::VectorXd weights,
                           double noise_var)
    : noise_var_(noise_var), covariances_(std::move(covariances)) {
    const int k = static_cast<int>(covariances_.size());
    if (k < 1) throw ConfigError("estimator: needs at least one component");
    if (weights.size() != k) throw ConfigError("estimator: one weight per covariance required");
    if (noise_var < 0) throw ConfigError("estimator: noise variance must be >= 0");
    dim_ = static_cast<int>(covariances_[0].rows());

    double wsum = 0.0;
    for (int j = 0; j < k; ++j) {
        if (!(weights(j) >= 0)) throw ConfigError("estimator: weights must be nonnegative");
        wsum += weights(j);
        const auto& c = covariances_[static_cast<std::size_t>(j)];
        if (c.rows() != dim_ || c.cols() != dim_)
            throw ConfigError("estimator: covariance dimensions must agree");
    }
    if (!(wsum > 0)) throw ConfigError("estimator: weights must not all be zero");

    log_weights_.resize(k);
    for (int j = 0; j < k; ++j)
        log_weights_(j) = weights(j) > 0 ? std::log(weights(j) / wsum) : kNegInf;

    factors_.resize(static_cast<std::size_t>(k));
    logdet_.resize(static_cast<std::size_t>(k));
    for (int j = 0; j < k; ++j) {
        const auto js = static_cast<std::size_t>(j);
        Eigen::MatrixXcd a = covariances_[js];
        a.diagonal().array() += noise_var_;
        factors_[js].compute(a);
        if (factors_[js].info() != Eigen::Success) {
            // Happens only in the noiseless case with singular covariances.
            a.diagonal().array() += 1e-12 * std::max(a.real().trace() / dim_, 1.0);
            factors_[js].compute(a);
            if (factors_[js].info() != Eigen::Success)
                throw NumericalError("estimator: covariance factorization failed");
        }
        logdet_[js] = 2.0 * factors_[js].matrixLLT().diagonal().real().array().log().sum();
    }
}

Eigen::VectorXd GmmEstimator::posteriors(const Eigen::Ref<const Eigen::VectorXcd>& y) const {
    if (y.size() != dim_) throw ConfigError("estimator: observation length mismatch");
    const int k = num_components();
    Eigen::VectorXd lp(k);
    for (int j = 0; j < k; ++j) {
        const auto js = static_cast<std::size_t>(j);
        if (!std::isfinite(log_weights_(j))) {
            lp(j) = kNegInf;
            continue;
        }
        const Eigen::VectorXcd s =
            factors_[js].matrixL().solve(y);
        lp(j) = log_weights_(j) - dim_ * std::log(M_PI) - logdet_[js] - s.squaredNorm();
    }
    const double mx = lp.maxCoeff();
    Eigen::VectorXd w(k);
    if (!std::isfinite(mx)) {
        underflows_.fetch_add(1);
        w.setConstant(1.0 / k);
        return w;
    }
    double sum = 0.0;
    for (int j = 0; j < k; ++j) {
        w(j) = std::exp(lp(j) - mx);
        sum += w(j);
    }
    return w / sum;
}

Eigen::VectorXcd GmmEstimator::estimate(const Eigen::Ref<const Eigen::VectorXcd>& y) const {
    const Eigen::VectorXd w = posteriors(y);
    if (noise_var_ == 0) return y;
    Eigen::VectorXcd acc = Eigen::VectorXcd::Zero(dim_);
    for (int j = 0; j < num_components(); ++j) {
        if (w(j) == 0) continue;
        acc += w(j) * factors_[static_cast<std::size_t>(j)].solve(y);
    }
    return y - noise_var_ * acc;
}

Eigen::MatrixXcd GmmEstimator::estimate_all(const Eigen::MatrixXcd& observations,
                                            int threads) const {
    if (observations.rows() != dim_) throw ConfigError("estimator: observation length mismatch");
    Eigen::MatrixXcd out(observations.rows(), observations.cols());
    parallel_for(static_cast<std::size_t>(observations.cols()), threads, [&](std::size_t i) {
        const auto idx = static_cast<Eigen::Index>(i);
        out.col(idx) = estimate(observations.col(idx));
    });
    return out;
}

std::vector<Eigen::MatrixXcd> ar_gmm_covariances(const ArGmmModel& model) {
    model.validate();
    std::vector<Eigen::MatrixXcd> covs;
    covs.reserve(model.components.size());
    for (const auto& c : model.components) covs.push_back(covariance_from_ar(c, model.dim));
    return covs;
}

Eigen::VectorXd gmm_posteriors_noisy(const std::vector<Eigen::MatrixXcd>& covariances,
                                     const Eigen::VectorXd& weights, const Eigen::VectorXcd& y,
                                     double noise_var) {
    return GmmEstimator(covariances, weights, noise_var).posteriors(y);
}

Eigen::VectorXcd gmm_channel_estimate(const std::vector<Eigen::MatrixXcd>& covariances,
                                      const Eigen::VectorXd& weights, const Eigen::VectorXcd& y,
                                      double noise_var) {
    return GmmEstimator(covariances, weights, noise_var).estimate(y);
}

double nmse(const Eigen::MatrixXcd& estimates, const Eigen::MatrixXcd& truths) {
    if (estimates.rows() != truths.rows() || estimates.cols() != truths.cols())
        throw ConfigError("nmse: estimate and truth shapes must agree");
    if (truths.cols() < 1) throw ConfigError("nmse: empty input");
    const double den = truths.squaredNorm();
    if (!(den > 0)) throw NumericalError("nmse: truth set has zero energy");
    return (estimates - truths).squaredNorm() / den;
}

NmseResult nmse_with_se(const Eigen::MatrixXcd& estimates, const Eigen::MatrixXcd& truths) {
    const double r = nmse(estimates, truths);
    const auto n = static_cast<int>(truths.cols());
    NmseResult out;
    out.value = r;
    if (n < 2) return out;

    // Delta-method standard error of the ratio of per-sample energy means.
    const double vbar = truths.squaredNorm() / n;
    double s2 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double u = (estimates.col(i) - truths.col(i)).squaredNorm();
        const double v = truths.col(i).squaredNorm();
        const double d = u - r * v;
        s2 += d * d;
    }
    s2 /= (n - 1);
    out.std_error = std::sqrt(s2 / n) / vbar;
    return out;
}

}  // namespace argmm
