#pragma once

#include <string>

#include <json.hpp>

#include "argmm/ar_gmm.hpp"
#include "argmm/baselines.hpp"
#include "argmm/signal_model.hpp"

namespace argmm {

// Lossless JSON forms (doubles survive a round trip bit-exactly).
nlohmann::json to_json(const ArGmmModel& model);
ArGmmModel ar_gmm_from_json(const nlohmann::json& j);

nlohmann::json to_json(const GaussianMixture& mixture);
GaussianMixture mixture_from_json(const nlohmann::json& j);

// Dispatches on the embedded model_type tag.
bool json_is_ar_gmm(const nlohmann::json& j);

nlohmann::json load_json_file(const std::string& path);
void save_json_file(const nlohmann::json& j, const std::string& path);

// Binary dataset container: magic, schema version, M, N, P, seed, a genie
// flag, then interleaved re/im doubles per sample followed by the optional
// per-sample covariances.
void save_dataset(const ChannelDataset& data, const std::string& path,
                  bool include_genie = true);
ChannelDataset load_dataset(const std::string& path);

}  // namespace argmm
