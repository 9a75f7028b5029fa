#pragma once

#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "hjb/grid.hpp"
#include "hjb/problem.hpp"
#include "hjb/upwind.hpp"

namespace hjb {

/// Axis-aligned box of nodes over which error sums run. Node membership
/// carries a small absolute slack so that nodes sitting exactly on the box
/// edge are kept regardless of rounding.
struct MeasurementRegion {
    Vec lower{-0.5, -0.5};
    Vec upper{0.5, 0.5};

    static MeasurementRegion full(const GridSpec& grid);
    /// Half-width interior box; the default for domain-truncated problems,
    /// keeping boundary-contaminated cells out of the sums.
    static MeasurementRegion interior_half(const GridSpec& grid);

    bool contains(const Vec& x, int dim) const;
};

/// Discrete space-time L2 norm: sqrt( sum z(x_i, t_j)^2 * dx^dim * dt ) over
/// the nodes inside the region and every slice of the sequence. Throws
/// std::invalid_argument when the region contains no nodes.
double grid_norm(const FieldSequence& error, const MeasurementRegion& region);

/// Least-squares slope of log(error) against log(dx). Needs at least two
/// points with positive values.
double fit_order(const std::vector<std::pair<double, double>>& dx_error);

struct ConvergenceReport {
    std::vector<std::pair<double, double>> resolutions;  // (dx, dt)
    std::vector<double> errors_value;
    std::vector<double> errors_input;
    std::optional<double> fitted_order_value;
    std::optional<double> fitted_order_input;
    MeasurementRegion region;
    /// Largest pointwise value error per resolution over the region (filled
    /// by studies with an exact reference).
    std::vector<double> sup_errors_value;
};

/// Refinement study of the 1D closed-form benchmark: solves each resolution
/// at fixed alpha, measures value and input errors against the exact
/// solution inside the region, and fits the orders. Resolutions must be
/// strictly decreasing in dx.
ConvergenceReport convergence_study_lqr(const std::vector<double>& dxs,
                                        double horizon,
                                        const MeasurementRegion& region,
                                        double alpha = 0.5,
                                        const SolveOptions& options = {});

/// Self-refinement study of the 2D benchmark against a finer reference run.
/// Both solutions are read through their piecewise-constant extensions at
/// the coarse grid nodes; input errors combine axes in the Euclidean norm.
ConvergenceReport self_convergence_study_2d(
    const ObstacleBenchmark2D& benchmark, const std::vector<double>& dxs,
    double reference_dx, double horizon, const MeasurementRegion& region,
    double alpha = 0.1, const SolveOptions& options = {});

struct EpiDiagnostic {
    std::vector<std::array<double, 2>> sample_points;  // (x, t)
    std::vector<double> resolutions;                   // dx, as given
    /// distances[r][k]: distance from the scheme's input at sample k on
    /// resolution r to the argmin set of the frozen pointwise objective.
    std::vector<std::vector<double>> distances;
    /// Fraction of samples whose distance at the finest resolution does not
    /// exceed the distance at the coarsest.
    double summary_fraction = 0.0;
    int skipped = 0;
};

struct EpiDiagnosticOptions {
    double alpha = 0.5;
    double scan_spacing = 1e-4;
    /// Membership tolerance, in objective value, for the argmin set.
    double objective_tolerance = 1e-6;
    SolveOptions solve;
};

/// Distance-to-argmin diagnostic for the input function on a 1D problem
/// with a known spatial derivative of the value function. For each sample
/// and each resolution, the argmin set of
///   h(a) = f(x, a) * dv(x, t) + g(x, a)
/// is found by a dense scan of the input box, and the distance from the
/// scheme's piecewise-constant input there is recorded. Samples outside the
/// domain are skipped and counted.
EpiDiagnostic epi_diagnostic(
    const ControlProblem& problem, double horizon,
    const std::vector<double>& resolutions,
    const std::vector<std::array<double, 2>>& sample_points,
    const std::function<double(double x, double t)>& exact_space_derivative,
    const EpiDiagnosticOptions& options = {});

}  // namespace hjb
