#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <initializer_list>
#include <random>

namespace argmm {

// Purpose tags for derived random streams.  Keeping the purposes on separate
// streams means e.g. growing the training set does not perturb the noise
// draws of an unrelated sweep point.
enum class StreamPurpose : std::uint64_t {
    PathAngles = 1,
    ChannelDraw = 2,
    Noise = 3,
    ModelInit = 4,
    Tuning = 5,
    Sampling = 6,
    Split = 7,
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

}  // namespace detail

// A seeded random stream with explicit, portable draw algorithms.  All
// distributions are implemented on top of raw 64-bit engine output so that
// results are bit-identical across standard libraries and across runs.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed, StreamPurpose purpose = StreamPurpose::ModelInit)
        : engine_(detail::splitmix64(seed ^ static_cast<std::uint64_t>(purpose) * 0x9e3779b97f4a7c15ULL)),
          purpose_(purpose) {}

    StreamPurpose purpose() const { return purpose_; }

    // Uniform in [0, 1) with 53 random bits.
    double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    // Integer in [0, n).
    std::uint64_t uniform_index(std::uint64_t n) {
        return static_cast<std::uint64_t>(uniform01() * static_cast<double>(n)) % n;
    }

    // Standard real normal via Box-Muller (stateless, one pair of uniforms per draw).
    double gaussian() {
        const double u1 = std::max(uniform01(), 0x1.0p-53);
        const double u2 = uniform01();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

    // Circularly-symmetric complex normal with E|z|^2 = 1.
    std::complex<double> cgaussian() {
        const double u1 = std::max(uniform01(), 0x1.0p-53);
        const double u2 = uniform01();
        const double r = std::sqrt(-std::log(u1));  // includes the 1/sqrt(2) per-part scaling
        return {r * std::cos(2.0 * M_PI * u2), r * std::sin(2.0 * M_PI * u2)};
    }

private:
    std::mt19937_64 engine_;
    StreamPurpose purpose_;
};

// Derives an independent stream for (seed, purpose, index), e.g. one stream
// per dataset sample.  Streams with distinct coordinates are uncorrelated.
inline RngStream derive_stream(std::uint64_t seed, StreamPurpose purpose, std::uint64_t index = 0) {
    std::uint64_t h = detail::splitmix64(seed);
    h = detail::splitmix64(h ^ static_cast<std::uint64_t>(purpose));
    h = detail::splitmix64(h ^ index);
    return RngStream(h, purpose);
}

}  // namespace argmm
