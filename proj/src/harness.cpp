#include "argmm/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <tuple>

#include "argmm/baselines.hpp"
#include "argmm/errors.hpp"
#include "argmm/parallel.hpp"

namespace argmm {

const std::vector<std::string> kAllEstimators = {
    "ar_gmm", "gmm_full", "gmm_toeplitz", "gmm_circulant",
    "ls", "sample_lmmse", "genie_lmmse"};

namespace {

constexpr std::uint64_t kTrainSalt = 0x747261696eULL;
constexpr std::uint64_t kTestSalt = 0x74657374ULL;
constexpr std::uint64_t kNoiseSalt = 0x6e6f697365ULL;
constexpr std::uint64_t kFitSalt = 0x666974ULL;

std::uint64_t sub_seed(std::uint64_t seed, std::uint64_t salt, std::uint64_t a = 0,
                       std::uint64_t b = 0) {
    std::uint64_t h = detail::splitmix64(seed ^ salt);
    h = detail::splitmix64(h ^ a);
    return detail::splitmix64(h ^ b);
}

bool known_estimator(const std::string& name) {
    return std::find(kAllEstimators.begin(), kAllEstimators.end(), name) != kAllEstimators.end();
}

bool estimator_uses_training(const std::string& name) {
    return name != "ls" && name != "genie_lmmse";
}

bool estimator_uses_components(const std::string& name) {
    return name == "ar_gmm" || name == "gmm_full" || name == "gmm_toeplitz" ||
           name == "gmm_circulant";
}

std::string fmt_real(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

double now_seconds() {
    return std::chrono::duration<double>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

// Evaluation of one trained point across all SNR slots.
struct PointResult {
    std::vector<double> nmse;
    std::vector<double> se;
    std::vector<std::string> status;
    std::vector<double> eval_s;
    double train_s = 0.0;
};

struct GridContext {
    const ExperimentConfig* cfg = nullptr;
    int threads = 1;
    ChannelDataset test;
    ChannelDataset train;
    std::vector<double> noise_vars;
    std::vector<Eigen::MatrixXcd> observations;  // one per SNR slot
    TunedParams tuned;
};

void ar_hyperparams(const GridContext& ctx, int k, std::vector<int>& orders,
                    std::vector<double>& lambdas) {
    const auto it = ctx.tuned.by_components.find(k);
    if (it != ctx.tuned.by_components.end()) {
        orders = it->second.first;
        lambdas = it->second.second;
        if (orders.size() == 1) orders.assign(static_cast<std::size_t>(k), orders[0]);
        if (lambdas.size() == 1) lambdas.assign(static_cast<std::size_t>(k), lambdas[0]);
        if (static_cast<int>(orders.size()) != k || static_cast<int>(lambdas.size()) != k)
            throw ConfigError("tuned params: entry shape does not match K");
        return;
    }
    orders.assign(static_cast<std::size_t>(k), ctx.cfg->default_order);
    lambdas.assign(static_cast<std::size_t>(k), ctx.cfg->default_lambda);
}

PointResult evaluate_point(const GridContext& ctx, const std::string& estimator, int n, int k) {
    const auto nsnr = ctx.noise_vars.size();
    PointResult res;
    res.nmse.assign(nsnr, std::numeric_limits<double>::quiet_NaN());
    res.se.assign(nsnr, std::numeric_limits<double>::quiet_NaN());
    res.status.assign(nsnr, "failed");
    res.eval_s.assign(nsnr, 0.0);

    std::vector<Eigen::MatrixXcd> covs;
    Eigen::VectorXd weights;
    const double t0 = now_seconds();
    try {
        if (estimator == "ar_gmm") {
            std::vector<int> orders;
            std::vector<double> lambdas;
            ar_hyperparams(ctx, k, orders, lambdas);
            EmConfig em = ctx.cfg->em;
            em.threads = ctx.threads;
            em.seed = sub_seed(ctx.cfg->seed, kFitSalt, static_cast<std::uint64_t>(n),
                               static_cast<std::uint64_t>(k));
            auto [model, trace] = fit(ctx.train.samples.leftCols(n), k, orders,
                                      ConstraintSchedule::per_component(lambdas), em);
            covs = ar_gmm_covariances(model);
            weights.resize(k);
            for (int j = 0; j < k; ++j)
                weights(j) = model.components[static_cast<std::size_t>(j)].weight;
        } else if (estimator == "gmm_full" || estimator == "gmm_toeplitz" ||
                   estimator == "gmm_circulant") {
            EmConfig em = ctx.cfg->em;
            em.threads = ctx.threads;
            em.seed = sub_seed(ctx.cfg->seed, kFitSalt, static_cast<std::uint64_t>(n),
                               static_cast<std::uint64_t>(k));
            const auto train = ctx.train.samples.leftCols(n);
            GaussianMixture mix;
            if (estimator == "gmm_full")
                mix = fit_full_gmm(train, k, em).first;
            else if (estimator == "gmm_toeplitz")
                mix = fit_toeplitz_gmm(train, k, em).first;
            else
                mix = fit_circulant_gmm(train, k, em).first;
            covs = mix.covariances;
            weights = mix.weights;
        } else if (estimator == "sample_lmmse") {
            Eigen::MatrixXcd c = sample_covariance(ctx.train.samples.leftCols(n), ctx.threads);
            c.diagonal().array() += 1e-6 * c.real().trace() / c.rows();
            covs.push_back(std::move(c));
            weights = Eigen::VectorXd::Ones(1);
        }
    } catch (const NumericalError&) {
        return res;  // every SNR slot reports failed
    }
    res.train_s = now_seconds() - t0;

    for (std::size_t s = 0; s < nsnr; ++s) {
        const double nv = ctx.noise_vars[s];
        const Eigen::MatrixXcd& obs = ctx.observations[s];
        const double t1 = now_seconds();
        try {
            Eigen::MatrixXcd est;
            if (estimator == "ls") {
                est = obs;
            } else if (estimator == "genie_lmmse") {
                est.resize(obs.rows(), obs.cols());
                parallel_for(static_cast<std::size_t>(obs.cols()), ctx.threads,
                             [&](std::size_t i) {
                                 const auto idx = static_cast<Eigen::Index>(i);
                                 est.col(idx) = genie_lmmse(obs.col(idx), ctx.test.genie_covs[i], nv);
                             });
            } else {
                GmmEstimator gmm(covs, weights, nv);
                est = gmm.estimate_all(obs, ctx.threads);
            }
            const NmseResult nr = nmse_with_se(est, ctx.test.samples);
            res.nmse[s] = nr.value;
            res.se[s] = nr.std_error;
            res.status[s] = "ok";
        } catch (const NumericalError&) {
            res.nmse[s] = std::numeric_limits<double>::quiet_NaN();
            res.status[s] = "failed";
        }
        res.eval_s[s] = now_seconds() - t1;
    }
    return res;
}

std::vector<EstimationReport> run_grid(const ExperimentConfig& cfg) {
    cfg.validate();

    GridContext ctx;
    ctx.cfg = &cfg;
    ctx.threads = resolve_threads(cfg.threads);

    if (!cfg.tuned_params_path.empty()) {
        std::ifstream in(cfg.tuned_params_path);
        if (!in) throw ConfigError("cannot open tuned params file: " + cfg.tuned_params_path);
        nlohmann::json j;
        try {
            in >> j;
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError("invalid JSON in " + cfg.tuned_params_path + ": " + e.what());
        }
        ctx.tuned = tuned_params_from_json(j);
    }

    // Disjoint stream roots keep test draws out of every training path.
    const std::uint64_t train_seed = sub_seed(cfg.seed, kTrainSalt);
    const std::uint64_t test_seed = sub_seed(cfg.seed, kTestSalt);
    const int max_n = *std::max_element(cfg.train_sizes.begin(), cfg.train_sizes.end());
    ctx.test = generate_dataset(cfg.channel, cfg.test_size, test_seed, ctx.threads);
    ctx.train = generate_dataset(cfg.channel, max_n, train_seed, ctx.threads);
    ctx.train.stream_tag = StreamPurpose::PathAngles;

    const auto nsnr = cfg.snr_db.size();
    ctx.noise_vars.resize(nsnr);
    ctx.observations.resize(nsnr);
    for (std::size_t s = 0; s < nsnr; ++s) {
        ctx.noise_vars[s] = noise_variance_for_snr(cfg.snr_db[s]);
        Eigen::MatrixXcd y = ctx.test.samples;
        if (ctx.noise_vars[s] > 0) {
            const double scale = std::sqrt(ctx.noise_vars[s]);
            const std::uint64_t noise_seed = sub_seed(cfg.seed, kNoiseSalt, s);
            parallel_for(static_cast<std::size_t>(y.cols()), ctx.threads, [&](std::size_t i) {
                RngStream rng = derive_stream(noise_seed, StreamPurpose::Noise, i);
                const auto idx = static_cast<Eigen::Index>(i);
                for (Eigen::Index r = 0; r < y.rows(); ++r) y(r, idx) += scale * rng.cgaussian();
            });
        }
        ctx.observations[s] = std::move(y);
    }

    std::map<std::tuple<std::string, int, int>, PointResult> cache;
    std::vector<EstimationReport> rows;
    rows.reserve(cfg.estimators.size() * cfg.train_sizes.size() * cfg.components.size() * nsnr);

    for (const std::string& estimator : cfg.estimators) {
        for (int n : cfg.train_sizes) {
            for (int k : cfg.components) {
                const int eff_n = estimator_uses_training(estimator) ? n : 0;
                const int eff_k = estimator_uses_components(estimator) ? k : 0;
                const auto key = std::make_tuple(estimator, eff_n, eff_k);
                auto it = cache.find(key);
                if (it == cache.end())
                    it = cache.emplace(key, evaluate_point(ctx, estimator, n, k)).first;
                const PointResult& pr = it->second;
                for (std::size_t s = 0; s < nsnr; ++s) {
                    EstimationReport r;
                    r.estimator = estimator;
                    r.m = cfg.channel.antennas;
                    r.k = k;
                    r.n = n;
                    r.p = cfg.channel.paths;
                    r.snr_db = cfg.snr_db[s];
                    r.nmse = pr.nmse[s];
                    r.se = pr.se[s];
                    r.test_size = cfg.test_size;
                    r.seed = cfg.seed;
                    r.wall_s = cfg.record_timings
                                   ? pr.train_s / static_cast<double>(nsnr) + pr.eval_s[s]
                                   : 0.0;
                    r.status = pr.status[s];
                    rows.push_back(std::move(r));
                }
            }
        }
    }
    return rows;
}

}  // namespace

void ExperimentConfig::validate() const {
    channel.validate();
    if (train_sizes.empty() || components.empty() || snr_db.empty() || estimators.empty())
        throw ConfigError("experiment config: all sweep lists must be non-empty");
    for (int n : train_sizes)
        if (n < 1) throw ConfigError("experiment config: training sizes must be >= 1");
    for (int k : components)
        if (k < 1) throw ConfigError("experiment config: component counts must be >= 1");
    for (const auto& e : estimators)
        if (!known_estimator(e)) throw ConfigError("experiment config: unknown estimator '" + e + "'");
    if (test_size < 1000) throw ConfigError("experiment config: test_size must be >= 1000");
    if (default_order < 0 || default_order >= channel.antennas)
        throw ConfigError("experiment config: default_order must be in [0, M)");
    if (!(default_lambda > 0) || default_lambda > 1)
        throw ConfigError("experiment config: default_lambda must be in (0, 1]");
    if (threads < 0) throw ConfigError("experiment config: threads must be >= 0");
    em.validate();
}

namespace {

void require_config_keys(const nlohmann::json& j, std::initializer_list<const char*> allowed,
                         const char* what) {
    for (const auto& item : j.items()) {
        bool ok = false;
        for (const char* k : allowed) ok = ok || item.key() == k;
        if (!ok)
            throw ConfigError(std::string(what) + ": unknown key '" + item.key() + "'");
    }
}

template <class T>
std::vector<T> list_from_json(const nlohmann::json& j, const char* what) {
    if (!j.is_array() || j.empty())
        throw ConfigError(std::string(what) + " must be a non-empty array");
    std::vector<T> out;
    for (const auto& e : j) out.push_back(e.get<T>());
    return out;
}

}  // namespace

ExperimentConfig config_from_json(const nlohmann::json& j) {
    require_config_keys(j,
                        {"schema_version", "channel", "train_sizes", "components", "snr_db",
                         "estimators", "test_size", "seed", "default_order", "default_lambda",
                         "tuned_params", "em", "record_timings", "threads", "output_dir"},
                        "experiment config");
    if (j.contains("schema_version") && j.at("schema_version").get<int>() != kConfigSchemaVersion)
        throw ConfigError("experiment config: unsupported schema_version");

    ExperimentConfig cfg;
    if (j.contains("channel")) {
        const auto& jc = j.at("channel");
        require_config_keys(jc,
                            {"antennas", "paths", "angle_spread_deg", "angle_min_deg",
                             "angle_max_deg", "pas_grid_points", "antenna_spacing"},
                            "channel config");
        cfg.channel.antennas = jc.value("antennas", cfg.channel.antennas);
        cfg.channel.paths = jc.value("paths", cfg.channel.paths);
        cfg.channel.angle_spread_deg = jc.value("angle_spread_deg", cfg.channel.angle_spread_deg);
        cfg.channel.angle_min_deg = jc.value("angle_min_deg", cfg.channel.angle_min_deg);
        cfg.channel.angle_max_deg = jc.value("angle_max_deg", cfg.channel.angle_max_deg);
        cfg.channel.pas_grid_points = jc.value("pas_grid_points", cfg.channel.pas_grid_points);
        cfg.channel.antenna_spacing = jc.value("antenna_spacing", cfg.channel.antenna_spacing);
    }
    if (j.contains("train_sizes")) cfg.train_sizes = list_from_json<int>(j.at("train_sizes"), "train_sizes");
    if (j.contains("components")) cfg.components = list_from_json<int>(j.at("components"), "components");
    if (j.contains("snr_db")) cfg.snr_db = list_from_json<double>(j.at("snr_db"), "snr_db");
    if (j.contains("estimators"))
        cfg.estimators = list_from_json<std::string>(j.at("estimators"), "estimators");
    cfg.test_size = j.value("test_size", cfg.test_size);
    cfg.seed = j.value("seed", cfg.seed);
    cfg.default_order = j.value("default_order", cfg.default_order);
    cfg.default_lambda = j.value("default_lambda", cfg.default_lambda);
    cfg.tuned_params_path = j.value("tuned_params", cfg.tuned_params_path);
    if (j.contains("em")) {
        const auto& je = j.at("em");
        require_config_keys(je,
                            {"max_iters", "rel_tol", "ridge_scale", "variance_floor",
                             "empty_threshold", "init_perturbation", "loading_scale"},
                            "em config");
        cfg.em.max_iters = je.value("max_iters", cfg.em.max_iters);
        cfg.em.rel_tol = je.value("rel_tol", cfg.em.rel_tol);
        cfg.em.ridge_scale = je.value("ridge_scale", cfg.em.ridge_scale);
        cfg.em.variance_floor = je.value("variance_floor", cfg.em.variance_floor);
        cfg.em.empty_threshold = je.value("empty_threshold", cfg.em.empty_threshold);
        cfg.em.init_perturbation = je.value("init_perturbation", cfg.em.init_perturbation);
        cfg.em.loading_scale = je.value("loading_scale", cfg.em.loading_scale);
    }
    cfg.record_timings = j.value("record_timings", cfg.record_timings);
    cfg.threads = j.value("threads", cfg.threads);
    cfg.output_dir = j.value("output_dir", cfg.output_dir);
    cfg.validate();
    return cfg;
}

nlohmann::json to_json(const ExperimentConfig& cfg) {
    nlohmann::json j;
    j["schema_version"] = kConfigSchemaVersion;
    j["channel"] = {{"antennas", cfg.channel.antennas},
                    {"paths", cfg.channel.paths},
                    {"angle_spread_deg", cfg.channel.angle_spread_deg},
                    {"angle_min_deg", cfg.channel.angle_min_deg},
                    {"angle_max_deg", cfg.channel.angle_max_deg},
                    {"pas_grid_points", cfg.channel.pas_grid_points},
                    {"antenna_spacing", cfg.channel.antenna_spacing}};
    j["train_sizes"] = cfg.train_sizes;
    j["components"] = cfg.components;
    j["snr_db"] = cfg.snr_db;
    j["estimators"] = cfg.estimators;
    j["test_size"] = cfg.test_size;
    j["seed"] = cfg.seed;
    j["default_order"] = cfg.default_order;
    j["default_lambda"] = cfg.default_lambda;
    if (!cfg.tuned_params_path.empty()) j["tuned_params"] = cfg.tuned_params_path;
    j["em"] = {{"max_iters", cfg.em.max_iters},
               {"rel_tol", cfg.em.rel_tol},
               {"ridge_scale", cfg.em.ridge_scale},
               {"variance_floor", cfg.em.variance_floor},
               {"empty_threshold", cfg.em.empty_threshold},
               {"init_perturbation", cfg.em.init_perturbation},
               {"loading_scale", cfg.em.loading_scale}};
    j["record_timings"] = cfg.record_timings;
    j["threads"] = cfg.threads;
    j["output_dir"] = cfg.output_dir;
    return j;
}

TunedParams tuned_params_from_json(const nlohmann::json& j) {
    require_config_keys(j, {"schema_version", "entries"}, "tuned params");
    if (j.contains("schema_version") && j.at("schema_version").get<int>() != kConfigSchemaVersion)
        throw ConfigError("tuned params: unsupported schema_version");
    TunedParams out;
    if (!j.contains("entries")) return out;
    for (const auto& je : j.at("entries")) {
        require_config_keys(je, {"K", "orders", "lambdas"}, "tuned params entry");
        const int k = je.at("K").get<int>();
        if (k < 1) throw ConfigError("tuned params: K must be >= 1");
        auto orders = list_from_json<int>(je.at("orders"), "tuned orders");
        auto lambdas = list_from_json<double>(je.at("lambdas"), "tuned lambdas");
        out.by_components[k] = {std::move(orders), std::move(lambdas)};
    }
    return out;
}

nlohmann::json to_json(const TunedParams& params) {
    nlohmann::json entries = nlohmann::json::array();
    for (const auto& [k, v] : params.by_components)
        entries.push_back({{"K", k}, {"orders", v.first}, {"lambdas", v.second}});
    return {{"schema_version", kConfigSchemaVersion}, {"entries", std::move(entries)}};
}

std::vector<EstimationReport> run_snr_sweep(const ExperimentConfig& cfg) { return run_grid(cfg); }
std::vector<EstimationReport> run_k_sweep(const ExperimentConfig& cfg) { return run_grid(cfg); }
std::vector<EstimationReport> run_n_sweep(const ExperimentConfig& cfg) { return run_grid(cfg); }

std::string format_csv(std::vector<EstimationReport> reports) {
    std::sort(reports.begin(), reports.end(),
              [](const EstimationReport& a, const EstimationReport& b) {
                  return std::tie(a.estimator, a.m, a.k, a.n, a.p, a.snr_db) <
                         std::tie(b.estimator, b.m, b.k, b.n, b.p, b.snr_db);
              });
    std::string out = "estimator,M,K,N,P,snr_db,nmse,test_size,seed,wall_s,status\n";
    for (const auto& r : reports) {
        out += r.estimator;
        out += ',' + std::to_string(r.m);
        out += ',' + std::to_string(r.k);
        out += ',' + std::to_string(r.n);
        out += ',' + std::to_string(r.p);
        out += ',' + fmt_real(r.snr_db);
        out += ',' + fmt_real(r.nmse);
        out += ',' + std::to_string(r.test_size);
        out += ',' + std::to_string(r.seed);
        out += ',' + fmt_real(r.wall_s);
        out += ',' + r.status;
        out += '\n';
    }
    return out;
}

void emit_csv(const std::vector<EstimationReport>& reports, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write file: " + path);
    out << format_csv(reports);
    if (!out) throw ConfigError("write failed: " + path);
}

std::string format_trials_csv(const std::vector<TrialResult>& trials) {
    std::string out = "trial,objective,val_nmse,bic,orders,lambdas,iterations,converged,failed,seed\n";
    for (const auto& t : trials) {
        std::string orders, lambdas;
        for (std::size_t i = 0; i < t.orders.size(); ++i)
            orders += (i ? ";" : "") + std::to_string(t.orders[i]);
        for (std::size_t i = 0; i < t.lambdas.size(); ++i)
            lambdas += (i ? ";" : "") + fmt_real(t.lambdas[i]);
        out += std::to_string(t.trial_index);
        out += ',' + fmt_real(t.objective);
        out += ',' + fmt_real(t.val_nmse);
        out += ',' + fmt_real(t.bic);
        out += ',' + orders;
        out += ',' + lambdas;
        out += ',' + std::to_string(t.em_iterations);
        out += ',' + std::string(t.em_converged ? "1" : "0");
        out += ',' + std::string(t.failed ? "1" : "0");
        out += ',' + std::to_string(t.seed);
        out += '\n';
    }
    return out;
}

}  // namespace argmm
