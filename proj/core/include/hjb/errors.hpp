#pragma once

#include <array>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>

namespace hjb {

/// A finite-difference update or an inner minimization produced a non-finite
/// number. Carries the probe location so callers can report it.
class NumericalFailure : public std::runtime_error {
public:
    explicit NumericalFailure(const std::string& what,
                              std::array<double, 2> x = {0.0, 0.0},
                              std::array<double, 2> a = {0.0, 0.0},
                              std::size_t node = npos)
        : std::runtime_error(what), x_probe(x), a_probe(a), node_index(node) {}

    static constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();

    std::array<double, 2> x_probe;
    std::array<double, 2> a_probe;
    std::size_t node_index;
};

/// Configuration file or command-line usage error (maps to exit code 64).
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace hjb
