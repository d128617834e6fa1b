#include "argmm/tuning.hpp"

#include <algorithm>
#include <cmath>

#include "argmm/errors.hpp"
#include "argmm/estimation.hpp"
#include "argmm/signal_model.hpp"

namespace argmm {

namespace {

std::uint64_t trial_seed(std::uint64_t base, std::uint64_t index) {
    return detail::splitmix64(detail::splitmix64(base) ^ (0x7261696cULL + index));
}

}  // namespace

void SearchSpace::validate() const {
    if (order_min < 0 || order_max < order_min)
        throw ConfigError("search space: empty order range");
    if (!(lambda_min > 0) || lambda_min > lambda_max || lambda_max > 1.0)
        throw ConfigError("search space: lambda range must satisfy 0 < min <= max <= 1");
    if (budget < 1) throw ConfigError("search space: budget must be >= 1");
}

double objective_value(double nmse_val, double bic_val, const ObjectiveConfig& cfg) {
    switch (cfg.mode) {
        case ObjectiveMode::NmseOnly:
            return nmse_val;
        case ObjectiveMode::BicOnly:
            return bic_val;
        case ObjectiveMode::Weighted: {
            const double ref = cfg.bic_reference != 0 ? cfg.bic_reference : 1.0;
            return nmse_val * (1.0 + cfg.bic_weight * bic_val / ref);
        }
    }
    throw ConfigError("objective: unknown mode");
}

std::pair<Eigen::MatrixXcd, Eigen::MatrixXcd> split_dataset(const Eigen::MatrixXcd& samples,
                                                            double val_fraction,
                                                            std::uint64_t seed) {
    const int n = static_cast<int>(samples.cols());
    if (!(val_fraction > 0) || !(val_fraction < 1))
        throw ConfigError("split_dataset: val fraction must be in (0, 1)");
    const int nval = std::max(1, static_cast<int>(std::lround(val_fraction * n)));
    const int ntrain = n - nval;
    if (ntrain < 1) throw ConfigError("split_dataset: split leaves no training samples");

    std::vector<int> perm(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) perm[static_cast<std::size_t>(i)] = i;
    RngStream rng = derive_stream(seed, StreamPurpose::Split);
    for (int i = n - 1; i > 0; --i) {
        const auto j = static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(i) + 1));
        std::swap(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]);
    }

    Eigen::MatrixXcd train(samples.rows(), ntrain);
    Eigen::MatrixXcd val(samples.rows(), nval);
    for (int i = 0; i < ntrain; ++i) train.col(i) = samples.col(perm[static_cast<std::size_t>(i)]);
    for (int i = 0; i < nval; ++i)
        val.col(i) = samples.col(perm[static_cast<std::size_t>(ntrain + i)]);
    return {std::move(train), std::move(val)};
}

Tuner::Tuner(Eigen::MatrixXcd train, Eigen::MatrixXcd val, int num_components, double snr_db,
             const EmConfig& em, const ObjectiveConfig& objective, std::uint64_t seed)
    : train_(std::move(train)),
      val_truth_(std::move(val)),
      num_components_(num_components),
      noise_var_(noise_variance_for_snr(snr_db)),
      em_(em),
      objective_(objective),
      seed_(seed) {
    if (num_components_ < 1) throw ConfigError("tuner: need at least one component");
    if (train_.cols() < num_components_)
        throw ConfigError("tuner: need at least as many training samples as components");
    if (val_truth_.cols() < 1) throw ConfigError("tuner: validation set is empty");
    if (train_.rows() != val_truth_.rows()) throw ConfigError("tuner: dimension mismatch");

    // Validation noise is drawn once so every trial scores the same observations.
    val_noisy_ = val_truth_;
    const double scale = std::sqrt(noise_var_);
    for (Eigen::Index i = 0; i < val_noisy_.cols(); ++i) {
        RngStream rng = derive_stream(seed_, StreamPurpose::Noise, static_cast<std::uint64_t>(i));
        for (Eigen::Index r = 0; r < val_noisy_.rows(); ++r)
            val_noisy_(r, i) += scale * rng.cgaussian();
    }
}

TrialResult Tuner::run_trial(std::vector<int> orders, std::vector<double> lambdas) {
    TrialResult trial;
    trial.orders = std::move(orders);
    trial.lambdas = std::move(lambdas);
    trial.trial_index = trainings_;
    trial.seed = trial_seed(seed_, static_cast<std::uint64_t>(trainings_));
    ++trainings_;

    EmConfig em = em_;
    em.seed = trial.seed;
    try {
        auto [model, trace] = fit(train_, num_components_, trial.orders,
                                  ConstraintSchedule::per_component(trial.lambdas), em);
        trial.em_iterations = trace.iterations;
        trial.em_converged = trace.converged;
        trial.bic = bic(model, train_, em.threads);

        Eigen::VectorXd weights(model.num_components());
        for (int j = 0; j < model.num_components(); ++j) weights(j) = model.components[static_cast<std::size_t>(j)].weight;
        GmmEstimator estimator(ar_gmm_covariances(model), weights, noise_var_);
        const Eigen::MatrixXcd est = estimator.estimate_all(val_noisy_, em.threads);
        trial.val_nmse = nmse(est, val_truth_);
        trial.objective = objective_value(trial.val_nmse, trial.bic, objective_);
        trial.failed = !std::isfinite(trial.objective);
    } catch (const NumericalError&) {
        trial.failed = true;
    }
    if (trial.failed) {
        trial.val_nmse = std::numeric_limits<double>::infinity();
        trial.objective = std::numeric_limits<double>::infinity();
    }
    return trial;
}

std::vector<TrialResult> Tuner::random_search(const SearchSpace& space) {
    space.validate();
    const int k = space.tie_mode == TieMode::PerComponent ? num_components_ : 1;

    std::vector<TrialResult> results;
    results.reserve(static_cast<std::size_t>(space.budget));
    for (int t = 0; t < space.budget; ++t) {
        RngStream rng = derive_stream(seed_, StreamPurpose::Tuning, static_cast<std::uint64_t>(t));
        std::vector<int> orders(static_cast<std::size_t>(k));
        std::vector<double> lambdas(static_cast<std::size_t>(k));
        for (int j = 0; j < k; ++j)
            orders[static_cast<std::size_t>(j)] =
                space.order_min + static_cast<int>(rng.uniform_index(
                                      static_cast<std::uint64_t>(space.order_max - space.order_min) + 1));
        for (int j = 0; j < k; ++j)
            lambdas[static_cast<std::size_t>(j)] = rng.uniform(space.lambda_min, space.lambda_max);
        if (k == 1) {
            orders.assign(static_cast<std::size_t>(num_components_), orders[0]);
            lambdas.assign(static_cast<std::size_t>(num_components_), lambdas[0]);
        }
        results.push_back(run_trial(std::move(orders), std::move(lambdas)));
    }
    std::stable_sort(results.begin(), results.end(), [](const TrialResult& a, const TrialResult& b) {
        return a.objective < b.objective;
    });
    return results;
}

TrialResult Tuner::local_refine(const TrialResult& best, int steps, const SearchSpace& space) {
    space.validate();
    if (steps < 0) throw ConfigError("local_refine: steps must be >= 0");
    if (static_cast<int>(best.orders.size()) != num_components_ ||
        best.orders.size() != best.lambdas.size())
        throw ConfigError("local_refine: trial shape does not match the tuner");

    const bool shared = space.tie_mode == TieMode::Shared;
    const int ncoords = shared ? 2 : 2 * num_components_;
    TrialResult current = best;

    for (int step = 0; step < steps; ++step) {
        RngStream rng = derive_stream(seed_, StreamPurpose::Tuning,
                                      0x40000000ULL + static_cast<std::uint64_t>(step));
        const int coord = step % ncoords;
        std::vector<int> orders = current.orders;
        std::vector<double> lambdas = current.lambdas;

        const bool order_coord = shared ? coord == 0 : coord % 2 == 0;
        if (order_coord) {
            const int delta = rng.uniform01() < 0.5 ? -1 : 1;
            auto bump = [&](int w) { return std::clamp(w + delta, space.order_min, space.order_max); };
            if (shared) {
                for (auto& w : orders) w = bump(w);
            } else {
                auto& w = orders[static_cast<std::size_t>(coord / 2)];
                w = bump(w);
            }
        } else {
            const double u = rng.uniform(-0.1, 0.1);
            auto scale = [&](double l) {
                return std::clamp(l * std::exp(u), space.lambda_min, space.lambda_max);
            };
            if (shared) {
                for (auto& l : lambdas) l = scale(l);
            } else {
                auto& l = lambdas[static_cast<std::size_t>(coord / 2)];
                l = scale(l);
            }
        }

        TrialResult trial = run_trial(std::move(orders), std::move(lambdas));
        if (trial.objective < current.objective) current = trial;
    }
    return current;
}

}  // namespace argmm
