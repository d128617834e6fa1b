#pragma once

#include <stdexcept>
#include <string>

namespace argmm {

// Bad user-supplied configuration (CLI exit code 1).
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Numerical failure at runtime: unstable models, non-PSD inputs,
// non-finite likelihoods (CLI exit code 2).
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace argmm
