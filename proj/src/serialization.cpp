#include "argmm/serialization.hpp"

#include <cstring>
#include <fstream>

#include "argmm/errors.hpp"

namespace argmm {

namespace {

constexpr char kDatasetMagic[8] = {'A', 'R', 'G', 'M', 'M', 'D', 'S', '\0'};
constexpr std::uint32_t kDatasetVersion = 1;

nlohmann::json complex_vector_to_json(const Eigen::VectorXcd& v) {
    nlohmann::json arr = nlohmann::json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i)
        arr.push_back({v(i).real(), v(i).imag()});
    return arr;
}

Eigen::VectorXcd complex_vector_from_json(const nlohmann::json& arr, const char* what) {
    if (!arr.is_array()) throw ConfigError(std::string(what) + ": expected an array");
    Eigen::VectorXcd v(static_cast<Eigen::Index>(arr.size()));
    Eigen::Index i = 0;
    for (const auto& e : arr) {
        if (!e.is_array() || e.size() != 2 || !e[0].is_number() || !e[1].is_number())
            throw ConfigError(std::string(what) + ": complex entries must be [re, im] pairs");
        v(i++) = {e[0].get<double>(), e[1].get<double>()};
    }
    return v;
}

void require_keys(const nlohmann::json& j, std::initializer_list<const char*> allowed,
                  const char* what) {
    for (const auto& item : j.items()) {
        bool ok = false;
        for (const char* k : allowed) ok = ok || item.key() == k;
        if (!ok) throw ConfigError(std::string(what) + ": unknown key '" + item.key() + "'");
    }
}

template <class T>
void write_pod(std::ostream& os, const T& v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
void read_pod(std::istream& is, T& v) {
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is) throw ConfigError("dataset file: truncated");
}

}  // namespace

nlohmann::json to_json(const ArGmmModel& model) {
    model.validate();
    nlohmann::json j;
    j["model_type"] = "ar_gmm";
    j["M"] = model.dim;
    j["K"] = model.num_components();
    nlohmann::json comps = nlohmann::json::array();
    for (int k = 0; k < model.num_components(); ++k) {
        const ArComponent& c = model.components[static_cast<std::size_t>(k)];
        nlohmann::json jc;
        jc["order"] = c.order();
        jc["coeffs"] = complex_vector_to_json(c.coeffs);
        jc["sigma2"] = c.sigma2;
        jc["weight"] = c.weight;
        if (model.constraints.enabled())
            jc["lambda"] = model.constraints.lambdas[static_cast<std::size_t>(k)];
        comps.push_back(std::move(jc));
    }
    j["components"] = std::move(comps);
    return j;
}

ArGmmModel ar_gmm_from_json(const nlohmann::json& j) {
    require_keys(j, {"model_type", "M", "K", "components"}, "ar_gmm model");
    if (j.value("model_type", "ar_gmm") != "ar_gmm")
        throw ConfigError("ar_gmm model: wrong model_type");
    ArGmmModel model;
    model.dim = j.at("M").get<int>();
    const auto& comps = j.at("components");
    if (!comps.is_array() || comps.empty())
        throw ConfigError("ar_gmm model: components must be a non-empty array");
    if (j.contains("K") && j.at("K").get<int>() != static_cast<int>(comps.size()))
        throw ConfigError("ar_gmm model: K does not match the component count");

    std::vector<double> lambdas;
    int with_lambda = 0;
    for (const auto& jc : comps) {
        require_keys(jc, {"order", "coeffs", "sigma2", "weight", "lambda"}, "ar_gmm component");
        ArComponent c;
        c.coeffs = complex_vector_from_json(jc.at("coeffs"), "ar_gmm coeffs");
        if (jc.contains("order") && jc.at("order").get<int>() != c.order())
            throw ConfigError("ar_gmm model: order does not match the coefficient count");
        c.sigma2 = jc.at("sigma2").get<double>();
        c.weight = jc.at("weight").get<double>();
        if (jc.contains("lambda")) {
            ++with_lambda;
            lambdas.push_back(jc.at("lambda").get<double>());
        }
        model.components.push_back(std::move(c));
    }
    if (with_lambda != 0 && with_lambda != static_cast<int>(comps.size()))
        throw ConfigError("ar_gmm model: lambda must be present on all components or none");
    if (with_lambda > 0) model.constraints = ConstraintSchedule::per_component(std::move(lambdas));
    model.validate();
    return model;
}

nlohmann::json to_json(const GaussianMixture& mixture) {
    mixture.validate();
    nlohmann::json j;
    j["model_type"] = "gmm";
    switch (mixture.structure) {
        case CovStructure::Full: j["structure"] = "full"; break;
        case CovStructure::Toeplitz: j["structure"] = "toeplitz"; break;
        case CovStructure::Circulant: j["structure"] = "circulant"; break;
    }
    j["M"] = mixture.dim;
    j["K"] = mixture.num_components();
    nlohmann::json comps = nlohmann::json::array();
    for (int k = 0; k < mixture.num_components(); ++k) {
        nlohmann::json jc;
        jc["weight"] = mixture.weights(k);
        const auto& c = mixture.covariances[static_cast<std::size_t>(k)];
        nlohmann::json cols = nlohmann::json::array();
        for (Eigen::Index col = 0; col < c.cols(); ++col)
            cols.push_back(complex_vector_to_json(c.col(col)));
        jc["covariance"] = std::move(cols);
        comps.push_back(std::move(jc));
    }
    j["components"] = std::move(comps);
    return j;
}

GaussianMixture mixture_from_json(const nlohmann::json& j) {
    require_keys(j, {"model_type", "structure", "M", "K", "components"}, "gmm model");
    if (j.value("model_type", "") != "gmm") throw ConfigError("gmm model: wrong model_type");
    GaussianMixture mix;
    mix.dim = j.at("M").get<int>();
    const std::string structure = j.at("structure").get<std::string>();
    if (structure == "full")
        mix.structure = CovStructure::Full;
    else if (structure == "toeplitz")
        mix.structure = CovStructure::Toeplitz;
    else if (structure == "circulant")
        mix.structure = CovStructure::Circulant;
    else
        throw ConfigError("gmm model: unknown structure tag");

    const auto& comps = j.at("components");
    if (!comps.is_array() || comps.empty())
        throw ConfigError("gmm model: components must be a non-empty array");
    if (j.contains("K") && j.at("K").get<int>() != static_cast<int>(comps.size()))
        throw ConfigError("gmm model: K does not match the component count");

    mix.weights.resize(static_cast<Eigen::Index>(comps.size()));
    Eigen::Index k = 0;
    for (const auto& jc : comps) {
        require_keys(jc, {"weight", "covariance"}, "gmm component");
        mix.weights(k) = jc.at("weight").get<double>();
        const auto& cols = jc.at("covariance");
        if (!cols.is_array() || static_cast<int>(cols.size()) != mix.dim)
            throw ConfigError("gmm model: covariance must have M columns");
        Eigen::MatrixXcd c(mix.dim, mix.dim);
        Eigen::Index col = 0;
        for (const auto& jcol : cols) {
            const Eigen::VectorXcd v = complex_vector_from_json(jcol, "gmm covariance column");
            if (v.size() != mix.dim) throw ConfigError("gmm model: covariance column length");
            c.col(col++) = v;
        }
        mix.covariances.push_back(std::move(c));
        ++k;
    }
    mix.validate();
    return mix;
}

bool json_is_ar_gmm(const nlohmann::json& j) {
    return j.value("model_type", "ar_gmm") == "ar_gmm";
}

nlohmann::json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("invalid JSON in " + path + ": " + e.what());
    }
    return j;
}

void save_json_file(const nlohmann::json& j, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write file: " + path);
    out << j.dump(2) << '\n';
    if (!out) throw ConfigError("write failed: " + path);
}

void save_dataset(const ChannelDataset& data, const std::string& path, bool include_genie) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write file: " + path);

    const std::uint32_t m = static_cast<std::uint32_t>(data.dim());
    const std::uint32_t n = static_cast<std::uint32_t>(data.size());
    const std::uint32_t p = static_cast<std::uint32_t>(data.paths);
    const std::uint8_t genie = include_genie && data.has_genie() ? 1 : 0;

    out.write(kDatasetMagic, sizeof(kDatasetMagic));
    write_pod(out, kDatasetVersion);
    write_pod(out, m);
    write_pod(out, n);
    write_pod(out, p);
    write_pod(out, data.seed);
    write_pod(out, genie);

    for (std::uint32_t i = 0; i < n; ++i) {
        for (std::uint32_t r = 0; r < m; ++r) {
            const std::complex<double> v = data.samples(r, i);
            write_pod(out, v.real());
            write_pod(out, v.imag());
        }
    }
    if (genie) {
        for (std::uint32_t i = 0; i < n; ++i) {
            const auto& c = data.genie_covs[i];
            for (std::uint32_t col = 0; col < m; ++col) {
                for (std::uint32_t r = 0; r < m; ++r) {
                    const std::complex<double> v = c(r, col);
                    write_pod(out, v.real());
                    write_pod(out, v.imag());
                }
            }
        }
    }
    if (!out) throw ConfigError("write failed: " + path);
}

ChannelDataset load_dataset(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open file: " + path);

    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kDatasetMagic, sizeof(magic)) != 0)
        throw ConfigError("dataset file: bad magic in " + path);
    std::uint32_t version = 0, m = 0, n = 0, p = 0;
    std::uint64_t seed = 0;
    std::uint8_t genie = 0;
    read_pod(in, version);
    if (version != kDatasetVersion) throw ConfigError("dataset file: unsupported version");
    read_pod(in, m);
    read_pod(in, n);
    read_pod(in, p);
    read_pod(in, seed);
    read_pod(in, genie);
    if (m < 1 || n < 1) throw ConfigError("dataset file: empty dimensions");

    ChannelDataset data;
    data.samples.resize(m, n);
    data.paths = static_cast<int>(p);
    data.seed = seed;
    for (std::uint32_t i = 0; i < n; ++i) {
        for (std::uint32_t r = 0; r < m; ++r) {
            double re = 0, im = 0;
            read_pod(in, re);
            read_pod(in, im);
            data.samples(r, i) = {re, im};
        }
    }
    if (genie) {
        data.genie_covs.resize(n);
        for (std::uint32_t i = 0; i < n; ++i) {
            Eigen::MatrixXcd c(m, m);
            for (std::uint32_t col = 0; col < m; ++col) {
                for (std::uint32_t r = 0; r < m; ++r) {
                    double re = 0, im = 0;
                    read_pod(in, re);
                    read_pod(in, im);
                    c(r, col) = {re, im};
                }
            }
            data.genie_covs[i] = std::move(c);
        }
    }
    return data;
}

}  // namespace argmm
