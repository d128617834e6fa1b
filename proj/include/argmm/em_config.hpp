#pragma once

#include <cstdint>

namespace argmm {

// Shared knobs for all EM trainers.
struct EmConfig {
    int max_iters = 500;
    double rel_tol = 1e-6;          // relative log-likelihood change per iteration
    double ridge_scale = 1e-10;     // normal-equation ridge, scaled by trace(Gram)/order
    double variance_floor = 1e-12;
    double empty_threshold = 1e-6;  // N_k < empty_threshold * N reinitializes component k
    double init_perturbation = 0.1; // relative scale of the per-component init noise
    double loading_scale = 1e-6;    // diagonal loading for dense covariance M-steps
    std::uint64_t seed = 0;
    int threads = 1;

    void validate() const;
};

}  // namespace argmm
