#pragma once

#include <array>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "hjb/grid.hpp"

namespace hjb {

/// Box of admissible inputs, one interval per control axis.
struct InputSet {
    int dim = 1;
    Vec lower{-1.0, -1.0};
    Vec upper{1.0, 1.0};

    bool contains(const Vec& a) const;
    Vec clamp(const Vec& a) const;
    void validate() const;
};

/// Declares that the dynamics are componentwise linear in the input
/// (f_d(x, a) = dyn_coeff[d] * a_d) and the running cost carries a separable
/// quadratic input term (sum_d cost_coeff[d] * a_d^2, cost_coeff > 0). Under
/// this structure the per-node argmin separates by axis and has a closed
/// form; the solver uses it instead of the generic scan when present.
struct QuadraticControlModel {
    Vec dyn_coeff{1.0, 1.0};
    Vec cost_coeff{1.0, 1.0};
};

/// A finite-horizon control problem: dynamics f, running cost g, terminal
/// cost, admissible input box, and a per-axis bound on |f| used for the
/// time-step stability gate. The callbacks must be pure functions; the
/// solver may evaluate them concurrently and in any order.
struct ControlProblem {
    std::string name = "custom";
    int state_dim = 1;
    int control_dim = 1;
    std::function<Vec(const Vec& x, const Vec& a)> dynamics;
    std::function<double(const Vec& x, const Vec& a)> running_cost;
    std::function<double(const Vec& x)> terminal_cost;
    InputSet input_set;
    /// sup over the domain and input box of |f_d|, per state axis. Supplied
    /// analytically so the stability gate is exact rather than sampled.
    Vec sup_speed{1.0, 0.0};
    std::optional<QuadraticControlModel> quadratic_control;
};

/// Scalar double integrator's little sibling: f(x,a) = a,
/// g(x,a) = (x^2 + a^2)/2, zero terminal cost, inputs clipped to [-1, 1].
/// Has a closed-form value function and feedback law on the whole line.
struct LqrBenchmark {
    double horizon = 1.0;
    ControlProblem problem() const;
};

/// Closed-form value of the 1D benchmark, tanh(T - t) * x^2 / 2.
double exact_lqr_value(double x, double t, double horizon);
/// Closed-form optimal input of the 1D benchmark, -tanh(T - t) * x.
double exact_lqr_input(double x, double t, double horizon);

/// Planar navigation benchmark: drive toward a target while a narrow
/// Gaussian bump penalizes passing near an obstacle. All matrices are
/// diagonal and stored as their diagonals.
struct ObstacleBenchmark2D {
    Vec dynamics_gain{1.0, 1.0};         // input-to-velocity gain, per axis
    Vec input_weight{1.0, 1.0};          // quadratic input penalty
    Vec state_weight{1.0, 1.0};          // quadratic distance-to-target
    Vec terminal_weight{0.8, 0.8};       // terminal distance-to-target
    Vec obstacle_kernel{0.01, 0.01};     // Gaussian bump covariance diagonal
    double obstacle_gain = 0.2;          // bump height in the running cost
    double terminal_obstacle_gain = 0.2; // bump height in the terminal cost
    Vec target{0.5, 0.5};
    Vec obstacle_center{-0.1, -0.1};
    Vec input_lower{-1.0, -1.0};
    Vec input_upper{1.0, 1.0};
    // Accepted for configuration compatibility; not referenced by the
    // implemented costs.
    Vec input_kernel{0.02, 0.02};
    double aux_scale = 1.0;

    ControlProblem problem() const;
};

/// Forward-Euler playback of a policy field from x0: one Euler step per grid
/// time level, with the input looked up through the piecewise-constant
/// extension of the per-axis policy slices.
struct RolloutResult {
    std::vector<double> times;
    std::vector<Vec> states;         // n_time + 1 entries
    std::vector<Vec> inputs;         // n_time + 1 entries (last at t = T)
    std::vector<double> running_costs;  // g(X_j, A_j) per entry
    double total_cost = 0.0;
    /// Set when the raw Euler update ever left [-L, L]^dim before wrapping;
    /// the trajectory keeps going on the torus but callers may want to
    /// discard wrapped runs.
    bool left_domain = false;
};

RolloutResult rollout(const ControlProblem& problem, const GridSpec& grid,
                      const std::vector<FieldSequence>& policy, const Vec& x0);

}  // namespace hjb
