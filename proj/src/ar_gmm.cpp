#include "argmm/ar_gmm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>

#include "argmm/errors.hpp"
#include "argmm/parallel.hpp"
#include "argmm/stability.hpp"

namespace argmm {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Gram matrix and right-hand side of the weighted AR normal equations,
// accumulated over sample chunks.
struct NormalEqPartial {
    Eigen::MatrixXcd gram;
    Eigen::VectorXcd rhs;
};

void fill_regression(const Eigen::Ref<const Eigen::VectorXcd>& x, int order,
                     Eigen::MatrixXcd& a) {
    const Eigen::Index d = x.size() - order;
    for (int j = 0; j < order; ++j) a.col(j) = x.segment(order - 1 - j, d);
}

}  // namespace

void EmConfig::validate() const {
    if (max_iters < 1) throw ConfigError("em config: max_iters must be >= 1");
    if (!(rel_tol >= 0)) throw ConfigError("em config: rel_tol must be >= 0");
    if (!(ridge_scale >= 0)) throw ConfigError("em config: ridge_scale must be >= 0");
    if (!(variance_floor > 0)) throw ConfigError("em config: variance_floor must be positive");
    if (!(empty_threshold >= 0)) throw ConfigError("em config: empty_threshold must be >= 0");
    if (!(init_perturbation >= 0)) throw ConfigError("em config: init_perturbation must be >= 0");
    if (!(loading_scale >= 0)) throw ConfigError("em config: loading_scale must be >= 0");
    if (threads < 0) throw ConfigError("em config: threads must be >= 0");
}

ConstraintSchedule ConstraintSchedule::shared(double lambda, int num_components) {
    ConstraintSchedule s;
    s.lambdas.assign(static_cast<std::size_t>(std::max(num_components, 0)), lambda);
    s.validate(num_components);
    return s;
}

ConstraintSchedule ConstraintSchedule::per_component(std::vector<double> lambdas) {
    ConstraintSchedule s;
    s.lambdas = std::move(lambdas);
    s.validate(static_cast<int>(s.lambdas.size()));
    return s;
}

ConstraintSchedule ConstraintSchedule::none() { return ConstraintSchedule{}; }

double ConstraintSchedule::bound(int component, int i) const {
    if (!enabled()) return std::numeric_limits<double>::infinity();
    return std::pow(lambdas.at(static_cast<std::size_t>(component)), i);
}

void ConstraintSchedule::validate(int num_components) const {
    if (!enabled()) return;
    if (static_cast<int>(lambdas.size()) != num_components)
        throw ConfigError("constraints: need one decay rate per component");
    for (double l : lambdas)
        if (!(l > 0.0) || l > 1.0) throw ConfigError("constraints: decay rates must be in (0, 1]");
}

int ArGmmModel::max_order() const {
    int w = 0;
    for (const auto& c : components) w = std::max(w, c.order());
    return w;
}

void ArGmmModel::validate() const {
    if (dim < 1) throw ConfigError("model: dim must be >= 1");
    if (components.empty()) throw ConfigError("model: needs at least one component");
    constraints.validate(num_components());
    double wsum = 0.0;
    for (int k = 0; k < num_components(); ++k) {
        const ArComponent& c = components[static_cast<std::size_t>(k)];
        if (c.order() >= dim) throw ConfigError("model: component order must be below dim");
        if (!(c.sigma2 > 0) || !std::isfinite(c.sigma2))
            throw ConfigError("model: component variances must be positive");
        if (!(c.weight >= 0) || !std::isfinite(c.weight))
            throw ConfigError("model: component weights must be nonnegative");
        wsum += c.weight;
        if (constraints.enabled()) {
            for (int i = 0; i < c.order(); ++i) {
                const double b = constraints.bound(k, i + 1);
                if (std::abs(c.coeffs(i)) > b * (1.0 + 1e-9))
                    throw ConfigError("model: coefficients violate the constraint box");
            }
        }
    }
    if (std::abs(wsum - 1.0) > 1e-6) throw ConfigError("model: weights must sum to 1");
}

Eigen::MatrixXcd regression_matrix(const Eigen::Ref<const Eigen::VectorXcd>& x, int order) {
    const int m = static_cast<int>(x.size());
    if (order < 0 || order >= m)
        throw ConfigError("regression_matrix: need 0 <= order < signal length");
    Eigen::MatrixXcd a(m - order, order);
    fill_regression(x, order, a);
    return a;
}

double conditional_log_density(const Eigen::Ref<const Eigen::VectorXcd>& x,
                               const ArComponent& comp, int cond_len) {
    const int m = static_cast<int>(x.size());
    const int w = comp.order();
    if (cond_len < w || cond_len >= m)
        throw ConfigError("conditional_log_density: need order <= cond_len < signal length");
    if (!(comp.sigma2 > 0))
        throw NumericalError("conditional_log_density: sigma2 must be positive");

    const int d = m - cond_len;
    Eigen::VectorXcd resid = x.segment(cond_len, d);
    for (int j = 1; j <= w; ++j) resid.noalias() -= comp.coeffs(j - 1) * x.segment(cond_len - j, d);
    return -d * std::log(M_PI * comp.sigma2) - resid.squaredNorm() / comp.sigma2;
}

namespace {

struct EStepResult {
    Responsibilities resp;
    double loglik = 0.0;
};

// One pass over the data computing both the responsibilities and the mixture
// log-likelihood, so the EM loop evaluates each density exactly once.
EStepResult e_step_internal(const ArGmmModel& model, const Eigen::MatrixXcd& samples,
                            int threads) {
    const int n = static_cast<int>(samples.cols());
    const int k = model.num_components();
    const int cond_len = model.max_order();
    if (model.dim != samples.rows()) throw ConfigError("e_step: sample length does not match model");

    Eigen::VectorXd log_w(k);
    for (int j = 0; j < k; ++j) {
        const double w = model.components[static_cast<std::size_t>(j)].weight;
        log_w(j) = w > 0 ? std::log(w) : kNegInf;
    }

    EStepResult out;
    out.resp.gamma.resize(n, k);
    Eigen::VectorXd row_ll(n);
    std::vector<unsigned char> underflow(static_cast<std::size_t>(n), 0);

    parallel_for(static_cast<std::size_t>(n), threads, [&](std::size_t i) {
        const auto idx = static_cast<Eigen::Index>(i);
        Eigen::VectorXd lp(k);
        for (int j = 0; j < k; ++j) {
            lp(j) = std::isfinite(log_w(j))
                        ? log_w(j) + conditional_log_density(
                                         samples.col(idx),
                                         model.components[static_cast<std::size_t>(j)], cond_len)
                        : kNegInf;
        }
        const double mx = lp.maxCoeff();
        if (!std::isfinite(mx)) {
            out.resp.gamma.row(idx).setConstant(1.0 / k);
            underflow[i] = 1;
            row_ll(idx) = mx;
            return;
        }
        double s = 0.0;
        for (int j = 0; j < k; ++j) {
            const double e = std::exp(lp(j) - mx);
            out.resp.gamma(idx, j) = e;
            s += e;
        }
        out.resp.gamma.row(idx) /= s;
        row_ll(idx) = mx + std::log(s);
    });

    for (int i = 0; i < n; ++i) out.resp.underflow_rows += underflow[static_cast<std::size_t>(i)];
    for (int i = 0; i < n; ++i) out.loglik += row_ll(i);
    return out;
}

}  // namespace

Responsibilities e_step(const ArGmmModel& model, const Eigen::MatrixXcd& samples, int threads) {
    return e_step_internal(model, samples, threads).resp;
}

Eigen::VectorXcd m_step_coefficients(const Eigen::MatrixXcd& samples,
                                     const Eigen::Ref<const Eigen::VectorXd>& gamma_k,
                                     int order, double ridge_scale, int threads) {
    const int m = static_cast<int>(samples.rows());
    const int n = static_cast<int>(samples.cols());
    if (gamma_k.size() != n) throw ConfigError("m_step_coefficients: weight length mismatch");
    if (order < 0 || order >= m)
        throw ConfigError("m_step_coefficients: need 0 <= order < signal length");
    if (order == 0) return Eigen::VectorXcd();

    const int d = m - order;
    NormalEqPartial identity{Eigen::MatrixXcd::Zero(order, order), Eigen::VectorXcd::Zero(order)};
    NormalEqPartial acc = chunked_reduce(
        static_cast<std::size_t>(n), identity, threads,
        [&](std::size_t lo, std::size_t hi) {
            NormalEqPartial p{Eigen::MatrixXcd::Zero(order, order),
                              Eigen::VectorXcd::Zero(order)};
            Eigen::MatrixXcd a(d, order);
            for (std::size_t i = lo; i < hi; ++i) {
                const auto idx = static_cast<Eigen::Index>(i);
                const double g = gamma_k(idx);
                if (g == 0.0) continue;
                fill_regression(samples.col(idx), order, a);
                p.gram.noalias() += g * (a.adjoint() * a);
                p.rhs.noalias() += g * (a.adjoint() * samples.col(idx).tail(d));
            }
            return p;
        },
        [](NormalEqPartial x, const NormalEqPartial& y) {
            x.gram += y.gram;
            x.rhs += y.rhs;
            return x;
        });

    const double ridge = ridge_scale * acc.gram.real().trace() / order;
    acc.gram.diagonal().array() += ridge;
    Eigen::LDLT<Eigen::MatrixXcd> ldlt(acc.gram);
    const Eigen::VectorXcd sol = ldlt.solve(acc.rhs);
    if (ldlt.info() != Eigen::Success || !sol.allFinite())
        throw NumericalError("m_step_coefficients: singular normal equations");
    return sol;
}

double m_step_variance(const Eigen::MatrixXcd& samples,
                       const Eigen::Ref<const Eigen::VectorXd>& gamma_k,
                       const Eigen::VectorXcd& coeffs, double variance_floor, int threads) {
    const int m = static_cast<int>(samples.rows());
    const int n = static_cast<int>(samples.cols());
    const int order = static_cast<int>(coeffs.size());
    if (gamma_k.size() != n) throw ConfigError("m_step_variance: weight length mismatch");
    if (order >= m) throw ConfigError("m_step_variance: order must be below signal length");

    const int d = m - order;
    const double num = chunked_reduce(
        static_cast<std::size_t>(n), 0.0, threads,
        [&](std::size_t lo, std::size_t hi) {
            double s = 0.0;
            Eigen::VectorXcd resid(d);
            for (std::size_t i = lo; i < hi; ++i) {
                const auto idx = static_cast<Eigen::Index>(i);
                const double g = gamma_k(idx);
                if (g == 0.0) continue;
                resid = samples.col(idx).tail(d);
                for (int j = 1; j <= order; ++j)
                    resid.noalias() -= coeffs(j - 1) * samples.col(idx).segment(order - j, d);
                s += g * resid.squaredNorm();
            }
            return s;
        },
        std::plus<double>());
    const double den = static_cast<double>(d) * gamma_k.sum();
    if (!(den > 0)) return variance_floor;
    return std::max(num / den, variance_floor);
}

Eigen::VectorXd m_step_weights(const Eigen::MatrixXd& gamma) {
    if (gamma.rows() == 0) throw ConfigError("m_step_weights: empty responsibilities");
    return gamma.colwise().sum() / static_cast<double>(gamma.rows());
}

std::pair<Eigen::VectorXcd, int> project_coefficients(const Eigen::VectorXcd& coeffs,
                                                      const ConstraintSchedule& schedule,
                                                      int component) {
    Eigen::VectorXcd out = coeffs;
    if (!schedule.enabled()) return {out, 0};
    int clipped = 0;
    for (int i = 0; i < out.size(); ++i) {
        const double b = schedule.bound(component, i + 1);
        double mag = std::abs(out(i));
        if (mag <= b) continue;
        ++clipped;
        // Rescale until the magnitude lands at or below the bound, so the
        // projection is an exact fixed point under rounding.
        while (mag > b) {
            double ratio = b / mag;
            if (ratio >= 1.0) ratio = std::nextafter(1.0, 0.0);
            out(i) *= ratio;
            mag = std::abs(out(i));
        }
    }
    // The box alone does not keep the AR polynomial stable. Shrinking a_j by
    // t^j scales every root by t and stays inside the box for t <= 1, so an
    // unstable vector is contracted radially onto the stable class. The
    // target sits slightly below the cap so one pass suffices and the result
    // is a fixed point of the projection.
    constexpr double kRadiusCap = 0.999;
    double rho = ar_spectral_radius(out);
    while (rho > kRadiusCap) {
        double t = (kRadiusCap - 1e-6) / rho;
        if (t >= 1.0) t = std::nextafter(1.0, 0.0);
        double tj = 1.0;
        for (int i = 0; i < out.size(); ++i) {
            tj *= t;
            out(i) *= tj;
        }
        rho = ar_spectral_radius(out);
    }
    return {out, clipped};
}

namespace {

// Unweighted global AR fit used for initialization; returns coefficients and
// the matching residual variance.
std::pair<Eigen::VectorXcd, double> global_ar_fit(const Eigen::MatrixXcd& samples, int order,
                                                  const EmConfig& cfg) {
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(samples.cols());
    Eigen::VectorXcd a;
    if (order > 0) a = m_step_coefficients(samples, ones, order, cfg.ridge_scale, cfg.threads);
    const double s2 = m_step_variance(samples, ones, a, cfg.variance_floor, cfg.threads);
    return {std::move(a), s2};
}

void rescue_component(ArGmmModel& model, int comp_index, const Eigen::MatrixXcd& samples,
                      const EmConfig& cfg, int rescue_ordinal) {
    RngStream rng = derive_stream(cfg.seed, StreamPurpose::ModelInit,
                                  0x80000000ULL + static_cast<std::uint64_t>(rescue_ordinal));
    const auto pick = static_cast<Eigen::Index>(rng.uniform_index(samples.cols()));
    ArComponent& comp = model.components[static_cast<std::size_t>(comp_index)];
    const int w = comp.order();

    const Eigen::MatrixXcd x = samples.col(pick);
    const Eigen::VectorXd one = Eigen::VectorXd::Ones(1);
    Eigen::VectorXcd a;
    if (w > 0) {
        a = m_step_coefficients(x, one, w, std::max(cfg.ridge_scale, 1e-8), 1);
        a = project_coefficients(a, model.constraints, comp_index).first;
    }
    comp.coeffs = a;
    comp.sigma2 = m_step_variance(x, one, a, cfg.variance_floor, 1);

    const int k = model.num_components();
    comp.weight = 1.0 / k;
    double wsum = 0.0;
    for (const auto& c : model.components) wsum += c.weight;
    for (auto& c : model.components) c.weight /= wsum;
}

}  // namespace

ArGmmModel initial_model(const Eigen::MatrixXcd& samples, const std::vector<int>& orders,
                         const ConstraintSchedule& schedule, const EmConfig& cfg) {
    cfg.validate();
    const int m = static_cast<int>(samples.rows());
    const int n = static_cast<int>(samples.cols());
    const int k = static_cast<int>(orders.size());
    if (k < 1) throw ConfigError("initial_model: need at least one component");
    if (n < 1) throw ConfigError("initial_model: need at least one sample");
    schedule.validate(k);
    for (int w : orders)
        if (w < 0 || w >= m) throw ConfigError("initial_model: need 0 <= order < signal length");

    std::map<int, std::pair<Eigen::VectorXcd, double>> base;
    for (int w : orders)
        if (!base.count(w)) base[w] = global_ar_fit(samples, w, cfg);

    ArGmmModel model;
    model.dim = m;
    model.constraints = schedule;
    model.components.resize(static_cast<std::size_t>(k));
    for (int j = 0; j < k; ++j) {
        const auto& [a0, s0] = base[orders[static_cast<std::size_t>(j)]];
        const int w = static_cast<int>(a0.size());
        RngStream rng = derive_stream(cfg.seed, StreamPurpose::ModelInit, static_cast<std::uint64_t>(j));
        Eigen::VectorXcd a = a0;
        if (w > 0) {
            const double rms = a0.norm() / std::sqrt(static_cast<double>(w));
            const double scale = cfg.init_perturbation * std::max(rms, 0.05);
            for (int i = 0; i < w; ++i) a(i) += scale * rng.cgaussian();
            a = project_coefficients(a, schedule, j).first;
        }
        ArComponent& comp = model.components[static_cast<std::size_t>(j)];
        comp.coeffs = std::move(a);
        comp.sigma2 = std::max(s0, cfg.variance_floor);
        comp.weight = 1.0 / k;
    }
    return model;
}

std::pair<ArGmmModel, EmTrace> fit(const Eigen::MatrixXcd& samples, int num_components,
                                   const std::vector<int>& orders,
                                   const ConstraintSchedule& schedule, const EmConfig& cfg) {
    if (num_components < 1) throw ConfigError("fit: need at least one component");
    std::vector<int> per_comp = orders;
    if (per_comp.size() == 1) per_comp.assign(static_cast<std::size_t>(num_components), orders[0]);
    if (static_cast<int>(per_comp.size()) != num_components)
        throw ConfigError("fit: need one order (or a shared order) per component");
    return fit_from(initial_model(samples, per_comp, schedule, cfg), samples, cfg);
}

std::pair<ArGmmModel, EmTrace> fit_from(ArGmmModel model, const Eigen::MatrixXcd& samples,
                                        const EmConfig& cfg) {
    cfg.validate();
    model.validate();
    if (model.dim != samples.rows()) throw ConfigError("fit: sample length does not match model");
    const int n = static_cast<int>(samples.cols());
    const int k = model.num_components();
    if (n < k) throw ConfigError("fit: need at least as many samples as components");

    EmTrace trace;
    EStepResult cur = e_step_internal(model, samples, cfg.threads);
    if (!std::isfinite(cur.loglik))
        throw NumericalError("fit: non-finite log-likelihood at initialization");
    trace.initial_log_likelihood = cur.loglik;
    double prev_ll = cur.loglik;

    for (int iter = 1; iter <= cfg.max_iters; ++iter) {
        Eigen::VectorXd nk = cur.resp.gamma.colwise().sum();
        bool rescued = false;
        for (int j = 0; j < k; ++j) {
            if (nk(j) < cfg.empty_threshold * n) {
                rescue_component(model, j, samples, cfg, trace.rescues);
                ++trace.rescues;
                rescued = true;
            }
        }
        if (rescued) {
            cur = e_step_internal(model, samples, cfg.threads);
            nk = cur.resp.gamma.colwise().sum();
        }

        int clips = 0;
        for (int j = 0; j < k; ++j) {
            ArComponent& comp = model.components[static_cast<std::size_t>(j)];
            if (comp.order() > 0 && nk(j) > 0) {
                Eigen::VectorXcd a = m_step_coefficients(samples, cur.resp.gamma.col(j),
                                                         comp.order(), cfg.ridge_scale, cfg.threads);
                auto [proj, c] = project_coefficients(a, model.constraints, j);
                comp.coeffs = std::move(proj);
                clips += c;
            }
            comp.sigma2 = m_step_variance(samples, cur.resp.gamma.col(j), comp.coeffs,
                                          cfg.variance_floor, cfg.threads);
        }
        const Eigen::VectorXd w = m_step_weights(cur.resp.gamma);
        for (int j = 0; j < k; ++j) model.components[static_cast<std::size_t>(j)].weight = w(j);

        cur = e_step_internal(model, samples, cfg.threads);
        if (!std::isfinite(cur.loglik))
            throw NumericalError("fit: non-finite log-likelihood at iteration " +
                                 std::to_string(iter));
        trace.log_likelihood.push_back(cur.loglik);
        trace.clipped.push_back(clips);
        trace.iterations = iter;
        if (std::abs(cur.loglik - prev_ll) <= cfg.rel_tol * (1.0 + std::abs(prev_ll))) {
            trace.converged = true;
            break;
        }
        prev_ll = cur.loglik;
    }
    return {std::move(model), std::move(trace)};
}

Eigen::MatrixXcd gs_inverse_covariance(const ArComponent& comp, int dim) {
    const int w = comp.order();
    if (dim < 1) throw ConfigError("gs_inverse_covariance: dim must be >= 1");
    if (w >= dim) throw ConfigError("gs_inverse_covariance: dim must exceed the AR order");
    if (!(comp.sigma2 > 0))
        throw NumericalError("gs_inverse_covariance: sigma2 must be positive");

    Eigen::VectorXcd alpha = Eigen::VectorXcd::Zero(dim);
    alpha(0) = 1.0 / comp.sigma2;
    for (int i = 1; i <= w; ++i) alpha(i) = -comp.coeffs(i - 1) / comp.sigma2;

    Eigen::MatrixXcd b = Eigen::MatrixXcd::Zero(dim, dim);
    Eigen::MatrixXcd z = Eigen::MatrixXcd::Zero(dim, dim);
    for (int j = 0; j < dim; ++j) {
        for (int i = j; i < dim; ++i) {
            b(i, j) = alpha(i - j);
            if (i > j) z(i, j) = std::conj(alpha(dim - (i - j)));
        }
    }
    const Eigen::MatrixXcd gamma = (b * b.adjoint() - z * z.adjoint()) * comp.sigma2;
    return 0.5 * (gamma + gamma.adjoint());
}

Eigen::VectorXcd ar_autocovariance(const Eigen::VectorXcd& coeffs, double sigma2, int max_lag) {
    if (max_lag < 0) throw ConfigError("ar_autocovariance: max_lag must be >= 0");
    if (!(sigma2 > 0)) throw NumericalError("ar_autocovariance: sigma2 must be positive");
    const int w = static_cast<int>(coeffs.size());
    if (w == 0) {
        Eigen::VectorXcd r = Eigen::VectorXcd::Zero(max_lag + 1);
        r(0) = sigma2;
        return r;
    }
    if (!ar_is_stable(coeffs))
        throw NumericalError("ar_autocovariance: unstable AR coefficients");

    // The Yule-Walker equations couple r_l and conj(r_l), so solve the
    // real-linear system in the stacked (Re r_l, Im r_l) unknowns.
    const int nu = 2 * (w + 1);
    Eigen::MatrixXd sys = Eigen::MatrixXd::Zero(nu, nu);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(nu);
    auto add_term = [&](int eq, int lag, std::complex<double> c, bool conj_var) {
        const double s = conj_var ? -1.0 : 1.0;
        sys(2 * eq, 2 * lag) += c.real();
        sys(2 * eq, 2 * lag + 1) += -s * c.imag();
        sys(2 * eq + 1, 2 * lag) += c.imag();
        sys(2 * eq + 1, 2 * lag + 1) += s * c.real();
    };

    add_term(0, 0, 1.0, false);
    for (int m = 1; m <= w; ++m) add_term(0, m, -coeffs(m - 1), true);
    rhs(0) = sigma2;
    for (int l = 1; l <= w; ++l) {
        add_term(l, l, 1.0, false);
        for (int m = 1; m <= w; ++m) {
            const int d = l - m;
            if (d >= 0)
                add_term(l, d, -coeffs(m - 1), false);
            else
                add_term(l, -d, -coeffs(m - 1), true);
        }
    }

    const Eigen::VectorXd sol = sys.colPivHouseholderQr().solve(rhs);
    if (!sol.allFinite()) throw NumericalError("ar_autocovariance: Yule-Walker solve failed");

    Eigen::VectorXcd r(std::max(max_lag, w) + 1);
    r(0) = sol(0);
    for (int l = 1; l <= w; ++l) r(l) = {sol(2 * l), sol(2 * l + 1)};
    for (int l = w + 1; l <= max_lag; ++l) {
        std::complex<double> v = 0.0;
        for (int m = 1; m <= w; ++m) v += coeffs(m - 1) * r(l - m);
        r(l) = v;
    }
    return r.head(max_lag + 1);
}

Eigen::MatrixXcd covariance_from_ar(const ArComponent& comp, int dim) {
    if (dim < 1) throw ConfigError("covariance_from_ar: dim must be >= 1");
    const Eigen::VectorXcd r = ar_autocovariance(comp.coeffs, comp.sigma2, dim - 1);
    Eigen::MatrixXcd cov(dim, dim);
    for (int j = 0; j < dim; ++j) {
        for (int i = 0; i < dim; ++i) {
            cov(i, j) = i >= j ? r(i - j) : std::conj(r(j - i));
        }
    }
    return cov;
}

double log_likelihood(const ArGmmModel& model, const Eigen::MatrixXcd& samples, int threads) {
    return e_step_internal(model, samples, threads).loglik;
}

std::int64_t parameter_count(const std::vector<int>& orders) {
    const auto k = static_cast<std::int64_t>(orders.size());
    std::int64_t p = 0;
    for (int w : orders) p += 2 * static_cast<std::int64_t>(w);
    return p + k + (k - 1);
}

std::int64_t parameter_count(const ArGmmModel& model) {
    std::vector<int> orders;
    orders.reserve(model.components.size());
    for (const auto& c : model.components) orders.push_back(c.order());
    return parameter_count(orders);
}

std::int64_t parameter_count_full_gmm(int num_components, int dim) {
    const auto k = static_cast<std::int64_t>(num_components);
    const auto m = static_cast<std::int64_t>(dim);
    return k * m * m + (k - 1);
}

double bic(const ArGmmModel& model, const Eigen::MatrixXcd& samples, int threads) {
    const double ll = log_likelihood(model, samples, threads);
    const auto n = static_cast<double>(samples.cols());
    return -2.0 * ll + static_cast<double>(parameter_count(model)) * std::log(n);
}

Eigen::MatrixXcd sample(const ArGmmModel& model, int count, RngStream& rng) {
    model.validate();
    if (count < 1) throw ConfigError("sample: count must be >= 1");
    const int k = model.num_components();
    const int m = model.dim;

    std::vector<Eigen::MatrixXcd> factors;
    factors.reserve(static_cast<std::size_t>(k));
    for (const auto& c : model.components)
        factors.push_back(covariance_factor(covariance_from_ar(c, m)));

    std::vector<double> cumw(static_cast<std::size_t>(k));
    double acc = 0.0;
    for (int j = 0; j < k; ++j) {
        acc += model.components[static_cast<std::size_t>(j)].weight;
        cumw[static_cast<std::size_t>(j)] = acc;
    }

    Eigen::MatrixXcd out(m, count);
    Eigen::VectorXcd z(m);
    for (int i = 0; i < count; ++i) {
        const double u = rng.uniform01() * acc;
        int pick = k - 1;
        for (int j = 0; j < k; ++j) {
            if (u < cumw[static_cast<std::size_t>(j)]) {
                pick = j;
                break;
            }
        }
        for (int l = 0; l < m; ++l) z(l) = rng.cgaussian();
        out.col(i) = factors[static_cast<std::size_t>(pick)] * z;
    }
    return out;
}

}  // namespace argmm
