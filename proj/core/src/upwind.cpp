#include "hjb/upwind.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>
#include <sstream>
#include <thread>

#include "hjb/errors.hpp"

namespace hjb {

namespace {

std::string format_probe(const Vec& x, const Vec& a, int dim, int control_dim) {
    std::ostringstream os;
    os << "x = (" << x[0];
    if (dim > 1) os << ", " << x[1];
    os << "), a = (" << a[0];
    if (control_dim > 1) os << ", " << a[1];
    os << ")";
    return os.str();
}

}  // namespace

CflStatus check_cfl(const ControlProblem& problem, const GridSpec& grid) {
    double value = 0.0;
    for (int d = 0; d < grid.dim(); ++d) {
        value += grid.alpha() * problem.sup_speed[d];
    }
    CflStatus s;
    s.alpha_times_sup = value;
    s.satisfies_strict = value < 1.0;
    s.satisfies_modified = value <= 0.5;
    return s;
}

CflViolation::CflViolation(CflStatus s)
    : std::runtime_error("solve refused: alpha * sup|f| = " +
                         std::to_string(s.alpha_times_sup) +
                         " violates the strict stability condition (< 1)"),
      status(s) {}

void MinimizerStats::merge(const MinimizerStats& other) {
    objective_evaluations += other.objective_evaluations;
    refine_iterations += other.refine_iterations;
    nodes_minimized += other.nodes_minimized;
}

double upwind_hamiltonian(const ControlProblem& problem, const Vec& x,
                          const Vec& a, const Vec& d_plus,
                          const Vec& d_minus) {
    if (!problem.input_set.contains(a)) {
        throw std::invalid_argument("upwind_hamiltonian: input outside the "
                                    "admissible box, " +
                                    format_probe(x, a, problem.state_dim,
                                                 problem.control_dim));
    }
    const Vec f = problem.dynamics(x, a);
    double h = problem.running_cost(x, a);
    for (int d = 0; d < problem.state_dim; ++d) {
        h += std::max(f[d], 0.0) * d_plus[d] + std::min(f[d], 0.0) * d_minus[d];
    }
    return h;
}

namespace {

// Objective wrapper that counts evaluations and rejects non-finite values.
struct Objective {
    const ControlProblem& problem;
    const Vec& x;
    const Vec& d_plus;
    const Vec& d_minus;
    MinimizerStats& stats;

    double operator()(const Vec& a) const {
        ++stats.objective_evaluations;
        const double h = upwind_hamiltonian(problem, x, a, d_plus, d_minus);
        if (!std::isfinite(h)) {
            throw NumericalFailure(
                "inner minimization: non-finite objective at probe " +
                    format_probe(x, a, problem.state_dim, problem.control_dim),
                x, a);
        }
        return h;
    }
};

struct Best {
    Vec a{0.0, 0.0};
    double value = std::numeric_limits<double>::infinity();

    // Strict improvement only, so ascending candidate order keeps the
    // lexicographically smallest input among exact ties.
    void offer(const Vec& candidate, double v) {
        if (v < value) {
            value = v;
            a = candidate;
        }
    }
};

constexpr double kInvPhi = 0.6180339887498949;  // (sqrt(5) - 1) / 2

// Golden-section refinement of objective(a) along one axis of `point`,
// restricted to [lo, hi]. Feeds every probe to `best`.
void golden_refine(const std::function<double(const Vec&)>& eval, Vec point,
                   int axis, double lo, double hi, double tol, Best& best,
                   MinimizerStats& stats) {
    double a = lo;
    double b = hi;
    double c = b - kInvPhi * (b - a);
    double d = a + kInvPhi * (b - a);
    auto probe = [&](double s) {
        Vec p = point;
        p[axis] = s;
        const double v = eval(p);
        best.offer(p, v);
        return v;
    };
    double fc = probe(c);
    double fd = probe(d);
    // Below a few ulps the probes stop being distinct; cap the request there.
    const double tol_eff =
        std::max(tol, 8.0 * std::numeric_limits<double>::epsilon() *
                          std::max({1.0, std::abs(lo), std::abs(hi)}));
    while (b - a > tol_eff) {
        ++stats.refine_iterations;
        if (fc <= fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - kInvPhi * (b - a);
            fc = probe(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + kInvPhi * (b - a);
            fd = probe(d);
        }
    }
}

// Uniform scan positions along one input axis.
double scan_coord(double lo, double hi, int k, int points) {
    if (points <= 1) return lo;
    return lo + (hi - lo) * (static_cast<double>(k) / (points - 1));
}

// Scan one axis through `base`, then golden-refine around every scan-local
// minimum (capped at the eight best). The objective is only piecewise
// smooth, so a single bracket around the best sample could refine the wrong
// basin and return a near-miss; covering all sampled basins pins the global
// minimum down to refinement accuracy.
void line_search(const std::function<double(const Vec&)>& eval,
                 const Vec& base, int axis, double lo, double hi, int points,
                 double tol, Best& best, MinimizerStats& stats) {
    std::vector<double> sampled(static_cast<std::size_t>(points));
    for (int k = 0; k < points; ++k) {
        Vec a = base;
        a[axis] = scan_coord(lo, hi, k, points);
        const double v = eval(a);
        sampled[static_cast<std::size_t>(k)] = v;
        best.offer(a, v);
    }
    if (!(hi > lo)) return;

    std::vector<int> minima;
    for (int k = 0; k < points; ++k) {
        const bool left_ok = k == 0 || sampled[k] <= sampled[k - 1];
        const bool right_ok = k == points - 1 || sampled[k] <= sampled[k + 1];
        if (left_ok && right_ok) minima.push_back(k);
    }
    constexpr std::size_t kMaxBrackets = 8;
    if (minima.size() > kMaxBrackets) {
        std::stable_sort(minima.begin(), minima.end(), [&](int a, int b) {
            return sampled[static_cast<std::size_t>(a)] <
                   sampled[static_cast<std::size_t>(b)];
        });
        minima.resize(kMaxBrackets);
        std::sort(minima.begin(), minima.end());
    }
    for (int k : minima) {
        const double bl = scan_coord(lo, hi, std::max(k - 1, 0), points);
        const double bh = scan_coord(lo, hi, std::min(k + 1, points - 1), points);
        golden_refine(eval, base, axis, bl, bh, tol, best, stats);
    }
}

}  // namespace

InnerMinimum minimize_input(const ControlProblem& problem, const Vec& x,
                            const Vec& d_plus, const Vec& d_minus,
                            const MinimizerOptions& options,
                            MinimizerStats* stats) {
    MinimizerStats local;
    MinimizerStats& st = stats ? *stats : local;
    ++st.nodes_minimized;

    const InputSet& box = problem.input_set;
    const int m = problem.control_dim;
    const int points = std::max(2, options.scan_points);
    Objective objective{problem, x, d_plus, d_minus, st};
    auto eval = [&](const Vec& a) { return objective(box.clamp(a)); };

    Best best;
    if (m == 1) {
        line_search(eval, {0.0, 0.0}, 0, box.lower[0], box.upper[0], points,
                    options.refine_tolerance, best, st);
        return {box.clamp(best.a), best.value};
    }

    // Multi-axis: full grid scan to seed, then coordinate-descent sweeps of
    // the same line search.
    for (int k0 = 0; k0 < points; ++k0) {
        for (int k1 = 0; k1 < points; ++k1) {
            const Vec a{scan_coord(box.lower[0], box.upper[0], k0, points),
                        scan_coord(box.lower[1], box.upper[1], k1, points)};
            best.offer(a, eval(a));
        }
    }
    for (int sweep = 0; sweep < options.max_sweeps; ++sweep) {
        const Vec before = best.a;
        for (int axis = 0; axis < m; ++axis) {
            if (!(box.upper[axis] > box.lower[axis])) continue;
            line_search(eval, best.a, axis, box.lower[axis], box.upper[axis],
                        points, options.refine_tolerance, best, st);
        }
        double moved = 0.0;
        for (int axis = 0; axis < m; ++axis) {
            moved = std::max(moved, std::abs(best.a[axis] - before[axis]));
        }
        if (moved < options.refine_tolerance) break;
    }
    return {box.clamp(best.a), best.value};
}

InnerMinimum minimize_input_closed_form(const ControlProblem& problem,
                                        const Vec& x, const Vec& d_plus,
                                        const Vec& d_minus,
                                        MinimizerStats* stats) {
    if (!problem.quadratic_control) {
        throw std::invalid_argument(
            "minimize_input_closed_form: problem declares no quadratic "
            "control model");
    }
    MinimizerStats local;
    MinimizerStats& st = stats ? *stats : local;
    ++st.nodes_minimized;

    const QuadraticControlModel& qc = *problem.quadratic_control;
    const InputSet& box = problem.input_set;
    Vec a_star{0.0, 0.0};
    for (int d = 0; d < problem.control_dim; ++d) {
        const double b = qc.dyn_coeff[d];
        const double r = qc.cost_coeff[d];
        const double lo = box.lower[d];
        const double hi = box.upper[d];
        const double p_plus = d_plus[d];
        const double p_minus = d_minus[d];
        auto clampd = [lo, hi](double s) {
            return std::min(std::max(s, lo), hi);
        };
        // Stationary points of the two smooth pieces (b*s >= 0 rides the
        // forward difference, b*s <= 0 the backward one), the kink at zero,
        // and the box corners.
        std::array<double, 5> candidates{
            lo, hi, clampd(0.0), clampd(-b * p_plus / (2.0 * r)),
            clampd(-b * p_minus / (2.0 * r))};
        std::sort(candidates.begin(), candidates.end());
        double best_s = candidates[0];
        double best_v = std::numeric_limits<double>::infinity();
        for (double s : candidates) {
            const double bs = b * s;
            const double v = std::max(bs, 0.0) * p_plus +
                             std::min(bs, 0.0) * p_minus + r * s * s;
            ++st.objective_evaluations;
            if (v < best_v) {
                best_v = v;
                best_s = s;
            }
        }
        a_star[d] = best_s;
    }
    const double h = upwind_hamiltonian(problem, x, a_star, d_plus, d_minus);
    ++st.objective_evaluations;
    if (!std::isfinite(h)) {
        throw NumericalFailure(
            "inner minimization: non-finite objective at probe " +
                format_probe(x, a_star, problem.state_dim,
                             problem.control_dim),
            x, a_star);
    }
    return {a_star, h};
}

namespace {

// Per-node explicit update; writes the new value and the per-axis policy.
struct NodeStepper {
    const ControlProblem& problem;
    const GridSpec& grid;
    std::span<const double> v;
    const StepOptions& options;
    bool closed_form;

    void run(std::size_t begin, std::size_t end, std::span<double> out,
             std::vector<std::span<double>>& policy_out,
             MinimizerStats& stats) const {
        const double dx = grid.dx();
        const double dt = grid.dt();
        const double alpha = grid.alpha();
        const int dim = grid.dim();
        for (std::size_t s = begin; s < end; ++s) {
            const Vec x = grid.point_of(s);
            Vec d_plus{0.0, 0.0};
            Vec d_minus{0.0, 0.0};
            std::array<std::size_t, 2> up{s, s};
            std::array<std::size_t, 2> down{s, s};
            for (int d = 0; d < dim; ++d) {
                up[d] = grid.neighbor(s, d, +1);
                down[d] = grid.neighbor(s, d, -1);
                d_plus[d] = (v[up[d]] - v[s]) / dx;
                d_minus[d] = (v[s] - v[down[d]]) / dx;
            }
            const InnerMinimum m =
                closed_form
                    ? minimize_input_closed_form(problem, x, d_plus, d_minus,
                                                 &stats)
                    : minimize_input(problem, x, d_plus, d_minus,
                                     options.minimizer, &stats);

            const Vec f = problem.dynamics(x, m.control);
            double center_weight = 1.0;
            double next = 0.0;
            for (int d = 0; d < dim; ++d) {
                center_weight -= alpha * std::abs(f[d]);
                next += alpha * std::max(f[d], 0.0) * v[up[d]] -
                        alpha * std::min(f[d], 0.0) * v[down[d]];
            }
#ifndef NDEBUG
            if (!options.allow_cfl_violation) {
                // The update must be a convex combination plus source.
                assert(center_weight >= -1e-12);
            }
#endif
            next += center_weight * v[s] +
                    dt * problem.running_cost(x, m.control);
            if (!std::isfinite(next)) {
                throw NumericalFailure(
                    "step_backward: non-finite value at node " +
                        std::to_string(s),
                    x, m.control, s);
            }
            out[s] = next;
            for (int c = 0; c < problem.control_dim; ++c) {
                policy_out[static_cast<std::size_t>(c)][s] = m.control[c];
            }
        }
    }
};

}  // namespace

StepResult step_backward(const ControlProblem& problem,
                         const ScalarField& value_j,
                         const StepOptions& options, MinimizerStats* stats) {
    const GridSpec& grid = value_j.grid();
    if (grid.dim() != problem.state_dim) {
        throw std::invalid_argument(
            "step_backward: grid dimension does not match the problem");
    }
    const int j = value_j.time_index();
    if (j < 1) {
        throw std::invalid_argument(
            "step_backward: cannot step below time index 0");
    }

    StepResult result{ScalarField(grid, j - 1), {}};
    result.policy.reserve(static_cast<std::size_t>(problem.control_dim));
    for (int c = 0; c < problem.control_dim; ++c) {
        result.policy.emplace_back(grid, j);
    }
    std::vector<std::span<double>> policy_spans;
    for (auto& p : result.policy) policy_spans.push_back(p.values());

    const bool closed_form =
        options.minimizer.use_closed_form && problem.quadratic_control.has_value();
    const NodeStepper stepper{problem, grid, value_j.values(), options,
                              closed_form};
    const std::size_t n = grid.num_nodes();
    const int threads = std::max(1, options.threads);

    MinimizerStats total;
    if (threads == 1 || n < 256) {
        stepper.run(0, n, result.value_prev.values(), policy_spans, total);
    } else {
        // Contiguous chunks, one per thread; every chunk writes a disjoint
        // range, so the result does not depend on scheduling.
        const std::size_t chunk = (n + threads - 1) / threads;
        std::vector<MinimizerStats> chunk_stats(static_cast<std::size_t>(threads));
        std::vector<std::exception_ptr> errors(static_cast<std::size_t>(threads));
        std::vector<std::thread> pool;
        for (int t = 0; t < threads; ++t) {
            const std::size_t begin = std::min(n, t * chunk);
            const std::size_t end = std::min(n, begin + chunk);
            if (begin >= end) break;
            pool.emplace_back([&, t, begin, end] {
                try {
                    stepper.run(begin, end, result.value_prev.values(),
                                policy_spans, chunk_stats[static_cast<std::size_t>(t)]);
                } catch (...) {
                    errors[static_cast<std::size_t>(t)] = std::current_exception();
                }
            });
        }
        for (auto& th : pool) th.join();
        for (auto& err : errors) {
            if (err) std::rethrow_exception(err);
        }
        for (const auto& cs : chunk_stats) total.merge(cs);
    }
    if (stats) stats->merge(total);
    return result;
}

SolveResult solve(const ControlProblem& problem, const GridSpec& grid,
                  const ScalarField& terminal, const SolveOptions& options) {
    if (grid.dim() != problem.state_dim) {
        throw std::invalid_argument(
            "solve: grid dimension does not match the problem");
    }
    if (!(terminal.grid() == grid) || terminal.time_index() != grid.n_time()) {
        throw std::invalid_argument(
            "solve: terminal data must live on the grid at time index n_time");
    }
    const CflStatus cfl = check_cfl(problem, grid);
    if (!cfl.satisfies_strict && !options.force_cfl) {
        throw CflViolation(cfl);
    }

    SolveResult result;
    result.grid = grid;
    result.cfl = cfl;
    result.cfl_forced = options.force_cfl && !cfl.satisfies_strict;

    const int n_time = grid.n_time();
    result.value.first_time_index = 0;
    result.value.slices.resize(static_cast<std::size_t>(n_time) + 1,
                               ScalarField(grid, 0));
    result.policy.assign(static_cast<std::size_t>(problem.control_dim),
                         FieldSequence{1, {}});
    for (auto& axis : result.policy) {
        axis.slices.resize(static_cast<std::size_t>(n_time),
                           ScalarField(grid, 1));
    }

    result.value.slices[static_cast<std::size_t>(n_time)] = terminal;

    StepOptions step_options{options.minimizer, options.threads,
                             !cfl.satisfies_strict};
    for (int j = n_time; j >= 1; --j) {
        StepResult step =
            step_backward(problem, result.value.slices[static_cast<std::size_t>(j)],
                          step_options, &result.minimizer_stats);
        result.value.slices[static_cast<std::size_t>(j - 1)] =
            std::move(step.value_prev);
        for (int c = 0; c < problem.control_dim; ++c) {
            result.policy[static_cast<std::size_t>(c)]
                .slices[static_cast<std::size_t>(j - 1)] =
                std::move(step.policy[static_cast<std::size_t>(c)]);
        }
    }
    return result;
}

SolveResult solve(const ControlProblem& problem, const GridSpec& grid,
                  const SolveOptions& options) {
    ScalarField terminal = ScalarField::sampled(
        grid, grid.n_time(),
        [&problem](const Vec& x) { return problem.terminal_cost(x); });
    return solve(problem, grid, terminal, options);
}

}  // namespace hjb
