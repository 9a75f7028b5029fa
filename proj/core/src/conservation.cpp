#include "hjb/conservation.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "hjb/errors.hpp"

namespace hjb {

double numerical_flux_plus(const ControlProblem& problem, const Vec& x,
                           const Vec& a_star, const Vec& u_left,
                           const Vec& u_right) {
    const Vec f = problem.dynamics(x, a_star);
    double flux = problem.running_cost(x, a_star);
    for (int d = 0; d < problem.state_dim; ++d) {
        flux += std::max(f[d], 0.0) * u_right[d] +
                std::min(f[d], 0.0) * u_left[d];
    }
    return flux;
}

double numerical_flux_minus(const ControlProblem& problem, const Vec& x,
                            const Vec& a_star, const Vec& u_center,
                            const Vec& u_up) {
    const Vec f = problem.dynamics(x, a_star);
    double flux = problem.running_cost(x, a_star);
    for (int d = 0; d < problem.state_dim; ++d) {
        flux += std::max(f[d], 0.0) * u_up[d] +
                std::min(f[d], 0.0) * u_center[d];
    }
    return flux;
}

namespace {

Vec policy_at(const std::vector<const ScalarField*>& policy_j,
              std::size_t node) {
    Vec a{0.0, 0.0};
    for (std::size_t c = 0; c < policy_j.size(); ++c) {
        a[c] = (*policy_j[c])[node];
    }
    return a;
}

}  // namespace

std::vector<ScalarField> derivative_step(
    const ControlProblem& problem,
    const std::vector<const ScalarField*>& policy_j,
    const std::vector<const ScalarField*>& components_j,
    DifferenceSide side) {
    if (policy_j.empty() || components_j.empty()) {
        throw std::invalid_argument("derivative_step: missing slices");
    }
    const GridSpec& grid = components_j.front()->grid();
    const int dim = grid.dim();
    const std::size_t n = grid.num_nodes();
    const int j = components_j.front()->time_index();
    const double alpha = grid.alpha();

    // Flux at every node, shared by all axes of the update.
    std::vector<double> flux(n);
    for (std::size_t s = 0; s < n; ++s) {
        const Vec x = grid.point_of(s);
        const Vec a = policy_at(policy_j, s);
        Vec u_center{0.0, 0.0};
        Vec u_side{0.0, 0.0};
        if (side == DifferenceSide::plus) {
            // P_i needs U_i and the left neighbor along each axis.
            for (int d = 0; d < dim; ++d) {
                u_center[d] = (*components_j[d])[s];
                u_side[d] = (*components_j[d])[grid.neighbor(s, d, -1)];
            }
            flux[s] = numerical_flux_plus(problem, x, a, u_side, u_center);
        } else {
            // The minus-side flux needs U_i and the right neighbor.
            for (int d = 0; d < dim; ++d) {
                u_center[d] = (*components_j[d])[s];
                u_side[d] = (*components_j[d])[grid.neighbor(s, d, +1)];
            }
            flux[s] = numerical_flux_minus(problem, x, a, u_center, u_side);
        }
    }

    std::vector<ScalarField> next;
    next.reserve(static_cast<std::size_t>(dim));
    for (int d = 0; d < dim; ++d) {
        ScalarField out(grid, j - 1);
        for (std::size_t s = 0; s < n; ++s) {
            double increment;
            if (side == DifferenceSide::plus) {
                increment = flux[grid.neighbor(s, d, +1)] - flux[s];
            } else {
                increment = flux[s] - flux[grid.neighbor(s, d, -1)];
            }
            const double value = (*components_j[d])[s] + alpha * increment;
            if (!std::isfinite(value)) {
                throw NumericalFailure(
                    "derivative_step: non-finite value at node " +
                        std::to_string(s),
                    grid.point_of(s), policy_at(policy_j, s), s);
            }
            out[s] = value;
        }
        next.push_back(std::move(out));
    }
    return next;
}

DerivativeField evolve_derivative(const ControlProblem& problem,
                                  const GridSpec& grid,
                                  const std::vector<FieldSequence>& policy,
                                  DifferenceSide side) {
    if (static_cast<int>(policy.size()) != problem.control_dim) {
        throw std::invalid_argument(
            "evolve_derivative: policy must carry one sequence per control "
            "axis");
    }
    const int n_time = grid.n_time();
    for (const auto& axis : policy) {
        if (axis.first_time_index > 1 || axis.last_time_index() < n_time) {
            throw std::invalid_argument(
                "evolve_derivative: policy slices must cover time indices "
                "1 .. n_time");
        }
    }

    DerivativeField field;
    field.side = side;
    field.grid = grid;
    field.modified_cfl_satisfied = check_cfl(problem, grid).satisfies_modified;
    field.components.assign(static_cast<std::size_t>(grid.dim()),
                            FieldSequence{0, {}});

    // Terminal data: the chosen one-sided difference of the terminal cost
    // samples, exactly as the value solve assigns them.
    const double dx = grid.dx();
    std::vector<double> terminal_samples(grid.num_nodes());
    for (std::size_t s = 0; s < terminal_samples.size(); ++s) {
        terminal_samples[s] = problem.terminal_cost(grid.point_of(s));
    }
    for (int d = 0; d < grid.dim(); ++d) {
        auto& seq = field.components[static_cast<std::size_t>(d)];
        seq.first_time_index = 0;
        seq.slices.resize(static_cast<std::size_t>(n_time) + 1,
                          ScalarField(grid, 0));
        ScalarField terminal(grid, n_time);
        for (std::size_t s = 0; s < terminal_samples.size(); ++s) {
            if (side == DifferenceSide::plus) {
                terminal[s] = (terminal_samples[grid.neighbor(s, d, +1)] -
                               terminal_samples[s]) /
                              dx;
            } else {
                terminal[s] = (terminal_samples[s] -
                               terminal_samples[grid.neighbor(s, d, -1)]) /
                              dx;
            }
        }
        seq.slices[static_cast<std::size_t>(n_time)] = std::move(terminal);
    }

    for (int j = n_time; j >= 1; --j) {
        std::vector<const ScalarField*> policy_j;
        for (const auto& axis : policy) {
            policy_j.push_back(&axis.at_time_index(j));
        }
        std::vector<const ScalarField*> components_j;
        for (const auto& comp : field.components) {
            components_j.push_back(&comp.slices[static_cast<std::size_t>(j)]);
        }
        std::vector<ScalarField> next =
            derivative_step(problem, policy_j, components_j, side);
        for (int d = 0; d < grid.dim(); ++d) {
            field.components[static_cast<std::size_t>(d)]
                .slices[static_cast<std::size_t>(j - 1)] =
                std::move(next[static_cast<std::size_t>(d)]);
        }
    }
    return field;
}

double total_variation(const ScalarField& slice) {
    const GridSpec& grid = slice.grid();
    const std::size_t n = grid.num_nodes();
    double tv = 0.0;
    for (std::size_t s = 0; s < n; ++s) {
        for (int d = 0; d < grid.dim(); ++d) {
            tv += std::abs(slice[s] - slice[grid.neighbor(s, d, -1)]);
        }
    }
    return tv;
}

double flux_lipschitz_probe(const ControlProblem& problem,
                            const ScalarField& policy_slice,
                            const std::vector<FluxLipschitzSample>& samples) {
    const GridSpec& grid = policy_slice.grid();
    if (grid.dim() != 1 || problem.state_dim != 1) {
        throw std::invalid_argument(
            "flux_lipschitz_probe: one-dimensional state only");
    }
    double max_ratio = 0.0;
    for (std::size_t s = 0; s < grid.num_nodes(); ++s) {
        const Vec x = grid.point_of(s);
        const Vec a{policy_slice[s], 0.0};
        const double f = problem.dynamics(x, a)[0];
        const double g = problem.running_cost(x, a);
        for (const auto& sample : samples) {
            const double denom = std::max(std::abs(sample.u_left - sample.u_bar),
                                          std::abs(sample.u_right - sample.u_bar));
            if (denom == 0.0) continue;
            const double flux = std::max(f, 0.0) * sample.u_right +
                                std::min(f, 0.0) * sample.u_left + g;
            const double frozen = f * sample.u_bar + g;
            max_ratio = std::max(max_ratio, std::abs(flux - frozen) / denom);
        }
    }
    return max_ratio;
}

}  // namespace hjb
