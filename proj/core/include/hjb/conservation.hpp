#pragma once

#include <vector>

#include "hjb/grid.hpp"
#include "hjb/problem.hpp"
#include "hjb/upwind.hpp"

namespace hjb {

/// Which one-sided difference of the value field a derivative field tracks.
enum class DifferenceSide { plus, minus };

/// The per-axis one-sided differences of the value field, evolved backward
/// in time as a discrete conservation law driven by a frozen policy. When
/// the policy comes from a value solve, every slice reproduces the direct
/// difference of that solve's value field; the identity is algebraic, so the
/// match is exact up to floating-point associativity.
struct DerivativeField {
    DifferenceSide side = DifferenceSide::plus;
    GridSpec grid;
    /// One sequence of slices (j = 0 .. n_time) per state axis.
    std::vector<FieldSequence> components;
    /// The evolution is guaranteed monotone only under the tighter
    /// alpha * sup|f| <= 1/2 gate; recorded so callers can warn.
    bool modified_cfl_satisfied = true;
};

/// Plus-side numerical flux at a node:
///   sum_d [ f_d^+(x, a) * u_right_d + f_d^-(x, a) * u_left_d ] + g(x, a).
double numerical_flux_plus(const ControlProblem& problem, const Vec& x,
                           const Vec& a_star, const Vec& u_left,
                           const Vec& u_right);

/// Minus-side numerical flux at a node:
///   sum_d [ f_d^+(x, a) * u_up_d + f_d^-(x, a) * u_center_d ] + g(x, a).
double numerical_flux_minus(const ControlProblem& problem, const Vec& x,
                            const Vec& a_star, const Vec& u_center,
                            const Vec& u_up);

/// One backward step of the derivative evolution. `policy_j` holds the
/// per-axis input slices at time index j; `components_j` the per-axis
/// derivative slices at j. Returns the slices at j - 1.
std::vector<ScalarField> derivative_step(
    const ControlProblem& problem,
    const std::vector<const ScalarField*>& policy_j,
    const std::vector<const ScalarField*>& components_j, DifferenceSide side);

/// Evolves the one-sided differences of the terminal cost backward through
/// the supplied policy (the one the value solve produced; re-minimizing
/// would break the exact correspondence with the value field).
DerivativeField evolve_derivative(const ControlProblem& problem,
                                  const GridSpec& grid,
                                  const std::vector<FieldSequence>& policy,
                                  DifferenceSide side);

/// Total variation of one slice over the periodic index range; for dim 2,
/// the sum of the per-axis variations.
double total_variation(const ScalarField& slice);

struct FluxLipschitzSample {
    double u_left = 0.0;
    double u_right = 0.0;
    double u_bar = 0.0;
};

/// Probes the Lipschitz bound of the plus-side flux against the frozen
/// pointwise flux p(u) = f(x, a*) u + g(x, a*): returns the largest
///   |P(u_left, u_right) - p(u_bar)| / max(|u_left - u_bar|, |u_right - u_bar|)
/// over all nodes of the slice and all samples, excluding zero denominators.
/// Callers compare the result against sup|f|. One-dimensional state only.
double flux_lipschitz_probe(const ControlProblem& problem,
                            const ScalarField& policy_slice,
                            const std::vector<FluxLipschitzSample>& samples);

}  // namespace hjb
