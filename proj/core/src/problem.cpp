#include "hjb/problem.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace hjb {

bool InputSet::contains(const Vec& a) const {
    for (int d = 0; d < dim; ++d) {
        if (a[d] < lower[d] || a[d] > upper[d]) return false;
    }
    return true;
}

Vec InputSet::clamp(const Vec& a) const {
    Vec r = a;
    for (int d = 0; d < dim; ++d) {
        r[d] = std::min(std::max(a[d], lower[d]), upper[d]);
    }
    return r;
}

void InputSet::validate() const {
    if (dim != 1 && dim != 2) {
        throw std::invalid_argument("InputSet: dim must be 1 or 2");
    }
    for (int d = 0; d < dim; ++d) {
        if (!std::isfinite(lower[d]) || !std::isfinite(upper[d])) {
            throw std::invalid_argument("InputSet: bounds must be finite");
        }
        if (lower[d] > upper[d]) {
            throw std::invalid_argument(
                "InputSet: lower bound exceeds upper bound on axis " +
                std::to_string(d));
        }
    }
}

ControlProblem LqrBenchmark::problem() const {
    if (!(horizon > 0.0)) {
        throw std::invalid_argument("LqrBenchmark: horizon must be positive");
    }
    ControlProblem p;
    p.name = "lqr1d";
    p.state_dim = 1;
    p.control_dim = 1;
    p.dynamics = [](const Vec&, const Vec& a) { return Vec{a[0], 0.0}; };
    p.running_cost = [](const Vec& x, const Vec& a) {
        return 0.5 * (x[0] * x[0] + a[0] * a[0]);
    };
    p.terminal_cost = [](const Vec&) { return 0.0; };
    p.input_set = InputSet{1, {-1.0, 0.0}, {1.0, 0.0}};
    p.sup_speed = {1.0, 0.0};
    p.quadratic_control = QuadraticControlModel{{1.0, 0.0}, {0.5, 0.0}};
    return p;
}

double exact_lqr_value(double x, double t, double horizon) {
    if (t < 0.0 || t > horizon) {
        throw std::out_of_range("exact_lqr_value: t outside [0, horizon]");
    }
    return std::tanh(horizon - t) * 0.5 * x * x;
}

double exact_lqr_input(double x, double t, double horizon) {
    if (t < 0.0 || t > horizon) {
        throw std::out_of_range("exact_lqr_input: t outside [0, horizon]");
    }
    return -std::tanh(horizon - t) * x;
}

ControlProblem ObstacleBenchmark2D::problem() const {
    for (int d = 0; d < 2; ++d) {
        if (!(dynamics_gain[d] > 0.0)) {
            throw std::invalid_argument(
                "ObstacleBenchmark2D: dynamics_gain must be positive");
        }
        if (!(input_weight[d] > 0.0)) {
            throw std::invalid_argument(
                "ObstacleBenchmark2D: input_weight must be positive");
        }
        if (!(state_weight[d] > 0.0)) {
            throw std::invalid_argument(
                "ObstacleBenchmark2D: state_weight must be positive");
        }
        if (!(terminal_weight[d] > 0.0)) {
            throw std::invalid_argument(
                "ObstacleBenchmark2D: terminal_weight must be positive");
        }
        if (!(obstacle_kernel[d] > 0.0)) {
            throw std::invalid_argument(
                "ObstacleBenchmark2D: obstacle_kernel must be positive");
        }
    }
    if (!(obstacle_gain > 0.0) || !(terminal_obstacle_gain > 0.0)) {
        throw std::invalid_argument(
            "ObstacleBenchmark2D: obstacle gains must be positive");
    }

    const Vec b = dynamics_gain;
    const Vec r = input_weight;
    const Vec q = state_weight;
    const Vec qt = terminal_weight;
    const Vec sig = obstacle_kernel;
    const double s = obstacle_gain;
    const double st = terminal_obstacle_gain;
    const Vec xt = target;
    const Vec xo = obstacle_center;

    auto bump = [sig, xo](const Vec& x) {
        const double d0 = x[0] - xo[0];
        const double d1 = x[1] - xo[1];
        return std::exp(-(d0 * d0 / sig[0] + d1 * d1 / sig[1]));
    };

    ControlProblem p;
    p.name = "obstacle2d";
    p.state_dim = 2;
    p.control_dim = 2;
    p.dynamics = [b](const Vec&, const Vec& a) {
        return Vec{b[0] * a[0], b[1] * a[1]};
    };
    p.running_cost = [q, r, s, xt, bump](const Vec& x, const Vec& a) {
        const double e0 = x[0] - xt[0];
        const double e1 = x[1] - xt[1];
        return q[0] * e0 * e0 + q[1] * e1 * e1 + s * bump(x) +
               r[0] * a[0] * a[0] + r[1] * a[1] * a[1];
    };
    p.terminal_cost = [qt, st, xt, bump](const Vec& x) {
        const double e0 = x[0] - xt[0];
        const double e1 = x[1] - xt[1];
        return qt[0] * e0 * e0 + qt[1] * e1 * e1 + st * bump(x);
    };
    p.input_set = InputSet{2, input_lower, input_upper};
    p.input_set.validate();
    p.sup_speed = {
        b[0] * std::max(std::abs(input_lower[0]), std::abs(input_upper[0])),
        b[1] * std::max(std::abs(input_lower[1]), std::abs(input_upper[1]))};
    p.quadratic_control = QuadraticControlModel{b, r};
    return p;
}

RolloutResult rollout(const ControlProblem& problem, const GridSpec& grid,
                      const std::vector<FieldSequence>& policy,
                      const Vec& x0) {
    if (static_cast<int>(policy.size()) != problem.control_dim) {
        throw std::invalid_argument(
            "rollout: policy must carry one sequence per control axis");
    }
    const int n_time = grid.n_time();
    const double dt = grid.dt();
    const double width = 2.0 * grid.half_width();

    RolloutResult result;
    result.times.reserve(n_time + 1);
    result.states.reserve(n_time + 1);
    result.inputs.reserve(n_time + 1);
    result.running_costs.reserve(n_time + 1);

    auto wrap_state = [&](Vec& x) {
        for (int d = 0; d < grid.dim(); ++d) {
            if (x[d] < -grid.half_width() || x[d] >= grid.half_width()) {
                result.left_domain = true;
                x[d] -= width * std::floor((x[d] + grid.half_width()) / width);
                if (x[d] >= grid.half_width()) x[d] -= width;
            }
        }
    };

    Vec x = x0;
    wrap_state(x);
    double accumulated = 0.0;
    for (int j = 0; j <= n_time; ++j) {
        const double t = grid.time(j);
        Vec a{0.0, 0.0};
        for (int c = 0; c < problem.control_dim; ++c) {
            a[c] = policy[static_cast<std::size_t>(c)].sample(x, std::min(t, grid.horizon()));
        }
        const double g = problem.running_cost(x, a);
        result.times.push_back(t);
        result.states.push_back(x);
        result.inputs.push_back(a);
        result.running_costs.push_back(g);
        if (j < n_time) {
            accumulated += dt * g;
            const Vec f = problem.dynamics(x, a);
            for (int d = 0; d < grid.dim(); ++d) x[d] += dt * f[d];
            wrap_state(x);
        }
    }
    result.total_cost = accumulated + problem.terminal_cost(x);
    return result;
}

}  // namespace hjb
