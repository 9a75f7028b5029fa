#include "hjb/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace hjb {

namespace {

constexpr double kRegionSlack = 1e-12;

long round_count(double value, const char* what) {
    const double r = std::round(value);
    if (!(r >= 1.0) || std::abs(value - r) > 1e-6 * std::max(1.0, r)) {
        throw std::invalid_argument(std::string(what) +
                                    ": resolution does not divide the domain");
    }
    return static_cast<long>(r);
}

GridSpec grid_for(int dim, double half_width, double dx, double horizon,
                  double alpha, const char* what) {
    const long n_space = round_count(half_width / dx, what);
    const long n_time = round_count(horizon / (alpha * dx), what);
    return make_grid(dim, half_width, static_cast<int>(n_space), horizon,
                     static_cast<int>(n_time));
}

}  // namespace

MeasurementRegion MeasurementRegion::full(const GridSpec& grid) {
    const double l = grid.half_width();
    return {{-l, -l}, {l, l}};
}

MeasurementRegion MeasurementRegion::interior_half(const GridSpec& grid) {
    const double l = 0.5 * grid.half_width();
    return {{-l, -l}, {l, l}};
}

bool MeasurementRegion::contains(const Vec& x, int dim) const {
    for (int d = 0; d < dim; ++d) {
        if (x[d] < lower[d] - kRegionSlack || x[d] > upper[d] + kRegionSlack) {
            return false;
        }
    }
    return true;
}

double grid_norm(const FieldSequence& error, const MeasurementRegion& region) {
    const GridSpec& grid = error.grid();
    std::vector<std::size_t> nodes;
    for (std::size_t s = 0; s < grid.num_nodes(); ++s) {
        if (region.contains(grid.point_of(s), grid.dim())) nodes.push_back(s);
    }
    if (nodes.empty()) {
        throw std::invalid_argument("grid_norm: empty measurement region");
    }
    double weight = grid.dt();
    for (int d = 0; d < grid.dim(); ++d) weight *= grid.dx();
    double sum = 0.0;
    for (const ScalarField& slice : error.slices) {
        for (std::size_t s : nodes) {
            sum += slice[s] * slice[s];
        }
    }
    return std::sqrt(sum * weight);
}

double fit_order(const std::vector<std::pair<double, double>>& dx_error) {
    if (dx_error.size() < 2) {
        throw std::invalid_argument("fit_order: need at least two points");
    }
    double mx = 0.0;
    double my = 0.0;
    for (const auto& [dx, err] : dx_error) {
        if (!(dx > 0.0)) {
            throw std::invalid_argument("fit_order: dx must be positive");
        }
        if (!(err > 0.0)) {
            throw std::invalid_argument("fit_order: errors must be positive");
        }
        mx += std::log(dx);
        my += std::log(err);
    }
    mx /= static_cast<double>(dx_error.size());
    my /= static_cast<double>(dx_error.size());
    double sxy = 0.0;
    double sxx = 0.0;
    for (const auto& [dx, err] : dx_error) {
        const double lx = std::log(dx) - mx;
        sxy += lx * (std::log(err) - my);
        sxx += lx * lx;
    }
    if (sxx == 0.0) {
        throw std::invalid_argument("fit_order: resolutions must differ");
    }
    return sxy / sxx;
}

namespace {

void require_strictly_decreasing(const std::vector<double>& dxs,
                                 const char* what) {
    if (dxs.empty()) {
        throw std::invalid_argument(std::string(what) +
                                    ": empty resolution ladder");
    }
    for (std::size_t i = 1; i < dxs.size(); ++i) {
        if (!(dxs[i] < dxs[i - 1])) {
            throw std::invalid_argument(
                std::string(what) +
                ": resolutions must be strictly decreasing in dx");
        }
    }
}

std::optional<double> maybe_fit(const std::vector<double>& dxs,
                                const std::vector<double>& errors) {
    if (dxs.size() < 2) return std::nullopt;
    std::vector<std::pair<double, double>> points;
    for (std::size_t i = 0; i < dxs.size(); ++i) {
        points.emplace_back(dxs[i], errors[i]);
    }
    return fit_order(points);
}

}  // namespace

ConvergenceReport convergence_study_lqr(const std::vector<double>& dxs,
                                        double horizon,
                                        const MeasurementRegion& region,
                                        double alpha,
                                        const SolveOptions& options) {
    require_strictly_decreasing(dxs, "convergence_study_lqr");
    const ControlProblem problem = LqrBenchmark{horizon}.problem();

    ConvergenceReport report;
    report.region = region;
    for (double dx : dxs) {
        const GridSpec grid =
            grid_for(1, 1.0, dx, horizon, alpha, "convergence_study_lqr");
        const SolveResult solved = solve(problem, grid, options);

        FieldSequence value_error{0, {}};
        double sup_error = 0.0;
        for (int j = 0; j <= grid.n_time(); ++j) {
            ScalarField slice(grid, j);
            const ScalarField& v = solved.value.at_time_index(j);
            const double t = grid.time(j);
            for (std::size_t s = 0; s < grid.num_nodes(); ++s) {
                const Vec x = grid.point_of(s);
                const double e =
                    v[s] - exact_lqr_value(x[0], std::min(t, horizon), horizon);
                slice[s] = e;
                if (region.contains(x, 1)) {
                    sup_error = std::max(sup_error, std::abs(e));
                }
            }
            value_error.slices.push_back(std::move(slice));
        }

        FieldSequence input_error{1, {}};
        for (int j = 1; j <= grid.n_time(); ++j) {
            ScalarField slice(grid, j);
            const ScalarField& a = solved.policy[0].at_time_index(j);
            const double t = grid.time(j);
            for (std::size_t s = 0; s < grid.num_nodes(); ++s) {
                const Vec x = grid.point_of(s);
                slice[s] =
                    a[s] - exact_lqr_input(x[0], std::min(t, horizon), horizon);
            }
            input_error.slices.push_back(std::move(slice));
        }

        report.resolutions.emplace_back(grid.dx(), grid.dt());
        report.errors_value.push_back(grid_norm(value_error, region));
        report.errors_input.push_back(grid_norm(input_error, region));
        report.sup_errors_value.push_back(sup_error);
    }
    report.fitted_order_value = maybe_fit(dxs, report.errors_value);
    report.fitted_order_input = maybe_fit(dxs, report.errors_input);
    return report;
}

ConvergenceReport self_convergence_study_2d(
    const ObstacleBenchmark2D& benchmark, const std::vector<double>& dxs,
    double reference_dx, double horizon, const MeasurementRegion& region,
    double alpha, const SolveOptions& options) {
    require_strictly_decreasing(dxs, "self_convergence_study_2d");
    if (!(reference_dx < dxs.back())) {
        throw std::invalid_argument(
            "self_convergence_study_2d: reference must be finer than every "
            "study resolution");
    }
    const ControlProblem problem = benchmark.problem();
    const GridSpec reference_grid = grid_for(2, 1.0, reference_dx, horizon,
                                             alpha, "self_convergence_study_2d");
    const SolveResult reference = solve(problem, reference_grid, options);

    ConvergenceReport report;
    report.region = region;
    for (double dx : dxs) {
        const GridSpec grid =
            grid_for(2, 1.0, dx, horizon, alpha, "self_convergence_study_2d");
        const SolveResult solved = solve(problem, grid, options);

        FieldSequence value_error{0, {}};
        for (int j = 0; j <= grid.n_time(); ++j) {
            ScalarField slice(grid, j);
            const ScalarField& v = solved.value.at_time_index(j);
            const double t = std::min(grid.time(j), horizon);
            for (std::size_t s = 0; s < grid.num_nodes(); ++s) {
                slice[s] = reference.value.sample(grid.point_of(s), t) - v[s];
            }
            value_error.slices.push_back(std::move(slice));
        }

        // Input error per node: Euclidean distance across control axes.
        FieldSequence input_error{1, {}};
        for (int j = 1; j <= grid.n_time(); ++j) {
            ScalarField slice(grid, j);
            const double t = std::min(grid.time(j), horizon);
            for (std::size_t s = 0; s < grid.num_nodes(); ++s) {
                const Vec x = grid.point_of(s);
                double sq = 0.0;
                for (int c = 0; c < problem.control_dim; ++c) {
                    const double e =
                        reference.policy[static_cast<std::size_t>(c)].sample(x, t) -
                        solved.policy[static_cast<std::size_t>(c)].at_time_index(j)[s];
                    sq += e * e;
                }
                slice[s] = std::sqrt(sq);
            }
            input_error.slices.push_back(std::move(slice));
        }

        report.resolutions.emplace_back(grid.dx(), grid.dt());
        report.errors_value.push_back(grid_norm(value_error, region));
        report.errors_input.push_back(grid_norm(input_error, region));
    }
    report.fitted_order_value = maybe_fit(dxs, report.errors_value);
    report.fitted_order_input = maybe_fit(dxs, report.errors_input);
    return report;
}

EpiDiagnostic epi_diagnostic(
    const ControlProblem& problem, double horizon,
    const std::vector<double>& resolutions,
    const std::vector<std::array<double, 2>>& sample_points,
    const std::function<double(double x, double t)>& exact_space_derivative,
    const EpiDiagnosticOptions& options) {
    if (problem.state_dim != 1 || problem.control_dim != 1) {
        throw std::invalid_argument(
            "epi_diagnostic: one-dimensional problems only");
    }
    require_strictly_decreasing(resolutions, "epi_diagnostic");

    EpiDiagnostic diag;
    diag.resolutions = resolutions;

    // Keep only in-domain samples; note how many were dropped.
    const double l = 1.0;
    for (const auto& p : sample_points) {
        if (p[0] < -l || p[0] >= l || p[1] < 0.0 || p[1] > horizon) {
            ++diag.skipped;
            continue;
        }
        diag.sample_points.push_back(p);
    }

    const double lo = problem.input_set.lower[0];
    const double hi = problem.input_set.upper[0];
    const long n_scan =
        std::max(1L, std::lround((hi - lo) / options.scan_spacing));

    for (double dx : resolutions) {
        const GridSpec grid =
            grid_for(1, l, dx, horizon, options.alpha, "epi_diagnostic");
        const SolveResult solved = solve(problem, grid, options.solve);
        std::vector<double> dists;
        dists.reserve(diag.sample_points.size());
        for (const auto& p : diag.sample_points) {
            const double x = p[0];
            const double t = p[1];
            const double scheme_input =
                solved.policy[0].sample({x, 0.0}, t);
            const double dv = exact_space_derivative(x, t);

            // Dense scan of the frozen pointwise objective.
            double h_min = std::numeric_limits<double>::infinity();
            std::vector<double> h_values(static_cast<std::size_t>(n_scan) + 1);
            for (long k = 0; k <= n_scan; ++k) {
                const double a =
                    lo + (hi - lo) * (static_cast<double>(k) / n_scan);
                const double h =
                    problem.dynamics({x, 0.0}, {a, 0.0})[0] * dv +
                    problem.running_cost({x, 0.0}, {a, 0.0});
                h_values[static_cast<std::size_t>(k)] = h;
                h_min = std::min(h_min, h);
            }
            double dist = std::numeric_limits<double>::infinity();
            for (long k = 0; k <= n_scan; ++k) {
                if (h_values[static_cast<std::size_t>(k)] <=
                    h_min + options.objective_tolerance) {
                    const double a =
                        lo + (hi - lo) * (static_cast<double>(k) / n_scan);
                    dist = std::min(dist, std::abs(scheme_input - a));
                }
            }
            dists.push_back(dist);
        }
        diag.distances.push_back(std::move(dists));
    }

    if (!diag.sample_points.empty() && diag.distances.size() >= 2) {
        const std::vector<double>& coarsest = diag.distances.front();
        const std::vector<double>& finest = diag.distances.back();
        std::size_t good = 0;
        for (std::size_t k = 0; k < diag.sample_points.size(); ++k) {
            if (finest[k] <= coarsest[k] + 1e-12) ++good;
        }
        diag.summary_fraction =
            static_cast<double>(good) /
            static_cast<double>(diag.sample_points.size());
    }
    return diag;
}

}  // namespace hjb
