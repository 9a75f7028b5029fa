#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "hjb/grid.hpp"
#include "hjb/problem.hpp"

namespace hjb {

/// Outcome of the explicit-step stability gate. The gated quantity is
/// alpha * sup|f|, summed over axes for dim > 1.
struct CflStatus {
    double alpha_times_sup = 0.0;
    bool satisfies_strict = false;    // alpha * sup|f| <  1
    bool satisfies_modified = false;  // alpha * sup|f| <= 1/2
};

CflStatus check_cfl(const ControlProblem& problem, const GridSpec& grid);

/// Thrown when a solve is refused because the strict stability condition
/// fails and forcing was not requested.
class CflViolation : public std::runtime_error {
public:
    explicit CflViolation(CflStatus s);
    CflStatus status;
};

struct MinimizerOptions {
    /// Coarse scan resolution per control axis.
    int scan_points = 33;
    /// Target bracket width, in input units, for the golden-section
    /// refinement.
    double refine_tolerance = 1e-10;
    /// Coordinate-descent sweep cap for multi-axis inputs.
    int max_sweeps = 16;
    /// Use the closed-form per-axis argmin when the problem declares a
    /// QuadraticControlModel.
    bool use_closed_form = true;
};

struct MinimizerStats {
    std::uint64_t objective_evaluations = 0;
    std::uint64_t refine_iterations = 0;
    std::uint64_t nodes_minimized = 0;

    void merge(const MinimizerStats& other);
};

/// Upwind Hamiltonian at a single node: for each state axis, the forward
/// difference rides positive speeds and the backward difference rides
/// negative ones,
///   sum_d [ max(f_d, 0) * d_plus_d + min(f_d, 0) * d_minus_d ] + g(x, a).
/// Throws std::invalid_argument when a lies outside the input box.
double upwind_hamiltonian(const ControlProblem& problem, const Vec& x,
                          const Vec& a, const Vec& d_plus, const Vec& d_minus);

struct InnerMinimum {
    Vec control{0.0, 0.0};
    double value = 0.0;
};

/// Minimizes the upwind Hamiltonian over the input box.
///
/// Deterministic two-phase search: a uniform coarse scan (scan_points per
/// axis) followed by golden-section refinement of the bracketing interval,
/// swept coordinate-wise for multi-axis inputs. Among exact ties the
/// lexicographically smallest input wins. The objective is only piecewise
/// smooth in a (the positive/negative speed split), which is why the search
/// is derivative-free.
InnerMinimum minimize_input(const ControlProblem& problem, const Vec& x,
                            const Vec& d_plus, const Vec& d_minus,
                            const MinimizerOptions& options = {},
                            MinimizerStats* stats = nullptr);

/// Closed-form per-axis argmin, available when the problem declares a
/// QuadraticControlModel. Candidates per axis: the clamped stationary point
/// of each smooth piece, zero, and the box corners. Agrees with
/// minimize_input to tight tolerance (cross-checked in the test suite).
InnerMinimum minimize_input_closed_form(const ControlProblem& problem,
                                        const Vec& x, const Vec& d_plus,
                                        const Vec& d_minus,
                                        MinimizerStats* stats = nullptr);

struct StepOptions {
    MinimizerOptions minimizer;
    int threads = 1;
    /// Skips the convex-combination sanity assertion; set for deliberately
    /// unstable demonstration runs.
    bool allow_cfl_violation = false;
};

struct StepResult {
    ScalarField value_prev;            // time index j - 1
    std::vector<ScalarField> policy;   // per control axis, time index j
};

/// One explicit backward step. At every node the inner minimization runs on
/// the local one-sided differences, then the new value is the convex
/// combination
///   (1 - sum_d alpha |f_d|) V_i + sum_d alpha f_d^+ V_{i+e_d}
///                                - sum_d alpha f_d^- V_{i-e_d} + dt g,
/// with periodic index wrap. Per-node work is independent and may be run on
/// several threads; results are bitwise identical to the sequential order.
StepResult step_backward(const ControlProblem& problem,
                         const ScalarField& value_j,
                         const StepOptions& options = {},
                         MinimizerStats* stats = nullptr);

struct SolveOptions {
    MinimizerOptions minimizer;
    int threads = 1;
    /// Run even when the strict stability gate fails. Recorded in the
    /// result so downstream artifacts can flag the run.
    bool force_cfl = false;
};

struct SolveResult {
    GridSpec grid;
    FieldSequence value;                 // slices j = 0 .. n_time
    std::vector<FieldSequence> policy;   // per control axis, j = 1 .. n_time
    CflStatus cfl;
    bool cfl_forced = false;
    MinimizerStats minimizer_stats;
};

/// Full backward sweep from the problem's terminal cost.
SolveResult solve(const ControlProblem& problem, const GridSpec& grid,
                  const SolveOptions& options = {});

/// Full backward sweep from explicit terminal data (must live on `grid` at
/// time index n_time).
SolveResult solve(const ControlProblem& problem, const GridSpec& grid,
                  const ScalarField& terminal,
                  const SolveOptions& options = {});

}  // namespace hjb
