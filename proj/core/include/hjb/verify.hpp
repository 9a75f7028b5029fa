#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hjb/grid.hpp"
#include "hjb/problem.hpp"
#include "hjb/upwind.hpp"

namespace hjb {

struct PropertyResult {
    std::string name;
    int trials = 0;
    /// Signed slack actually observed; the per-property pass rule is
    /// documented in the report writer. Violations make `pass` false.
    double worst_margin = 0.0;
    bool pass = true;
    /// JSON text describing the first violating trial; empty when none.
    std::string counterexample;
};

struct VerifyReport {
    std::uint64_t seed = 0;
    std::vector<PropertyResult> properties;
    bool all_pass() const;
};

struct VerifyOptions {
    std::uint64_t seed = 0;
    int trials = 100;
    int threads = 1;
    /// Run solves even when the strict stability gate fails, and run the
    /// one-step trials at the grid's (unstable) ratio. Used to demonstrate
    /// that the scheme's structural properties break without the gate.
    bool force_cfl = false;
};

/// Runs the seeded property suite against the given problem and grid:
/// one-step monotonicity, constant shift, and comparison principle on
/// randomized problems and fields; terminal-perturbation stability, flux
/// Lipschitz bound, total-variation decay, and the derivative-field
/// correspondence on the given problem. Deterministic for a fixed seed.
VerifyReport run_verify_suite(const ControlProblem& problem,
                              const GridSpec& grid,
                              const VerifyOptions& options = {});

}  // namespace hjb
