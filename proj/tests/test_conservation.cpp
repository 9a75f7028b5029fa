#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "hjb/analysis.hpp"
#include "hjb/conservation.hpp"
#include "hjb/problem.hpp"
#include "hjb/upwind.hpp"

using namespace hjb;

namespace {

ControlProblem passthrough_speed_problem(double cost) {
    // f(x, a) = a, so a policy slice dictates the transport speed per node.
    ControlProblem p;
    p.state_dim = 1;
    p.control_dim = 1;
    p.dynamics = [](const Vec&, const Vec& a) { return Vec{a[0], 0.0}; };
    p.running_cost = [cost](const Vec&, const Vec&) { return cost; };
    p.terminal_cost = [](const Vec&) { return 0.0; };
    p.input_set = InputSet{1, {-2.0, 0.0}, {2.0, 0.0}};
    p.sup_speed = {2.0, 0.0};
    return p;
}

double max_relative_deviation(const SolveResult& solved,
                              const DerivativeField& evolved,
                              DifferenceSide side) {
    const GridSpec& g = solved.grid;
    double worst = 0.0;
    for (int j = 0; j <= g.n_time(); ++j) {
        const ScalarField& v = solved.value.at_time_index(j);
        for (int d = 0; d < g.dim(); ++d) {
            const ScalarField& u =
                evolved.components[static_cast<std::size_t>(d)]
                    .slices[static_cast<std::size_t>(j)];
            for (std::size_t s = 0; s < v.size(); ++s) {
                const double direct =
                    side == DifferenceSide::plus
                        ? (v[g.neighbor(s, d, +1)] - v[s]) / g.dx()
                        : (v[s] - v[g.neighbor(s, d, -1)]) / g.dx();
                const double scale =
                    std::max({1.0, std::abs(direct), std::abs(u[s])});
                worst = std::max(worst, std::abs(u[s] - direct) / scale);
            }
        }
    }
    return worst;
}

}  // namespace

TEST_CASE("numerical flux picks the upwind side") {
    const ControlProblem p = passthrough_speed_problem(0.7);
    const Vec u_left{2.0, 0.0};
    const Vec u_right{5.0, 0.0};
    CHECK(numerical_flux_plus(p, {0, 0}, {1.0, 0.0}, u_left, u_right) ==
          doctest::Approx(5.7).epsilon(1e-15));
    CHECK(numerical_flux_plus(p, {0, 0}, {-1.0, 0.0}, u_left, u_right) ==
          doctest::Approx(-2.0 + 0.7).epsilon(1e-15));
    CHECK(numerical_flux_plus(p, {0, 0}, {0.0, 0.0}, u_left, u_right) ==
          doctest::Approx(0.7).epsilon(1e-15));
}

TEST_CASE("zero dynamics freeze the difference field") {
    ControlProblem p;
    p.state_dim = 1;
    p.control_dim = 1;
    p.dynamics = [](const Vec&, const Vec&) { return Vec{0.0, 0.0}; };
    p.running_cost = [](const Vec&, const Vec&) { return 0.0; };
    p.terminal_cost = [](const Vec& x) { return std::cos(x[0]) + 1.0; };
    p.sup_speed = {0.0, 0.0};
    const GridSpec g = make_grid(1, 1.0, 12, 1.0, 12);

    std::vector<FieldSequence> policy{FieldSequence{1, {}}};
    for (int j = 1; j <= g.n_time(); ++j) {
        policy[0].slices.emplace_back(g, j, 0.0);
    }
    const DerivativeField f =
        evolve_derivative(p, g, policy, DifferenceSide::plus);
    const ScalarField& last = f.components[0].slices.back();
    for (int j = 0; j <= g.n_time(); ++j) {
        const ScalarField& slice =
            f.components[0].slices[static_cast<std::size_t>(j)];
        for (std::size_t s = 0; s < slice.size(); ++s) {
            CHECK(slice[s] == last[s]);
        }
    }
}

TEST_CASE("difference evolution reproduces the value differences exactly") {
    SUBCASE("1D benchmark") {
        const ControlProblem p = LqrBenchmark{1.0}.problem();
        const GridSpec g = make_grid(1, 1.0, 20, 1.0, 40);
        const SolveResult solved = solve(p, g);
        for (DifferenceSide side :
             {DifferenceSide::plus, DifferenceSide::minus}) {
            const DerivativeField evolved =
                evolve_derivative(p, g, solved.policy, side);
            CHECK(max_relative_deviation(solved, evolved, side) <= 1e-12);
        }
    }
    SUBCASE("planar benchmark") {
        const ControlProblem p = ObstacleBenchmark2D{}.problem();
        const GridSpec g = make_grid(2, 1.0, 10, 0.5, 50);
        const SolveResult solved = solve(p, g);
        for (DifferenceSide side :
             {DifferenceSide::plus, DifferenceSide::minus}) {
            const DerivativeField evolved =
                evolve_derivative(p, g, solved.policy, side);
            CHECK(max_relative_deviation(solved, evolved, side) <= 1e-12);
        }
    }
}

TEST_CASE("derivative evolution demands a full policy") {
    const ControlProblem p = LqrBenchmark{1.0}.problem();
    const GridSpec g = make_grid(1, 1.0, 10, 1.0, 20);
    std::vector<FieldSequence> truncated{FieldSequence{1, {}}};
    truncated[0].slices.emplace_back(g, 1, 0.0);  // only the first level
    CHECK_THROWS_AS(
        evolve_derivative(p, g, truncated, DifferenceSide::plus),
        std::invalid_argument);
}

TEST_CASE("total variation of simple slices") {
    const GridSpec g = make_grid(1, 1.0, 8, 1.0, 1);
    ScalarField constant(g, 0, 4.0);
    CHECK(total_variation(constant) == 0.0);

    ScalarField step(g, 0, 0.0);
    const double h = 1.5;
    for (std::size_t s = 5; s < 12; ++s) step[s] = h;
    // One rise and one fall around the periodic loop.
    CHECK(total_variation(step) == doctest::Approx(2.0 * h).epsilon(1e-15));
}

TEST_CASE("frozen constant speed keeps the step variation-diminishing") {
    // With one fixed transport speed everywhere, the flux no longer varies
    // across nodes and the classical per-step bound applies.
    const ControlProblem p = passthrough_speed_problem(0.4);
    const GridSpec g = make_grid(1, 1.0, 16, 0.25, 16);  // alpha*sup = 1/2
    std::mt19937_64 rng(41);
    std::uniform_real_distribution<double> value(-2.0, 2.0);
    for (double speed : {1.0, -1.3, 0.0, 2.0}) {
        ScalarField policy(g, g.n_time(), speed);
        for (int trial = 0; trial < 10; ++trial) {
            ScalarField u(g, g.n_time());
            for (std::size_t s = 0; s < u.size(); ++s) u[s] = value(rng);
            const auto next =
                derivative_step(p, {&policy}, {&u}, DifferenceSide::plus);
            CHECK(total_variation(next[0]) <= total_variation(u) + 1e-12);
        }
    }
}

TEST_CASE("benchmark variation grows only toward earlier times and stays "
          "bounded under refinement") {
    // The terminal difference field of the 1D benchmark is identically zero
    // and the running cost's spatial variation feeds the field at every
    // step, so variation accumulates monotonically as the sweep moves away
    // from the terminal time; its peak must stay bounded as the mesh
    // refines.
    const ControlProblem p = LqrBenchmark{1.0}.problem();
    auto peak_tv = [&p](int n_space) {
        const GridSpec g = make_grid(1, 1.0, n_space, 1.0, 2 * n_space);
        const SolveResult solved = solve(p, g);
        const DerivativeField evolved =
            evolve_derivative(p, g, solved.policy, DifferenceSide::plus);
        CHECK(evolved.modified_cfl_satisfied);
        double peak = 0.0;
        for (int j = g.n_time(); j >= 1; --j) {
            const double tv_late = total_variation(
                evolved.components[0].slices[static_cast<std::size_t>(j)]);
            const double tv_early = total_variation(
                evolved.components[0].slices[static_cast<std::size_t>(j - 1)]);
            CHECK(tv_late <= tv_early + 1e-12);
            peak = std::max({peak, tv_late, tv_early});
        }
        return peak;
    };
    const double coarse = peak_tv(20);
    const double fine = peak_tv(40);
    CHECK(fine <= 1.25 * coarse);
}

TEST_CASE("derivative step is monotone under a shared policy") {
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> speed(-2.0, 2.0);
    std::uniform_real_distribution<double> value(-2.0, 2.0);
    std::uniform_real_distribution<double> drop(0.0, 1.0);
    const ControlProblem p = passthrough_speed_problem(0.3);
    // dt chosen so alpha * sup|f| = 2 * dt/dx stays at 1/2.
    const GridSpec g = make_grid(1, 1.0, 16, 0.25, 16);
    for (int trial = 0; trial < 30; ++trial) {
        ScalarField policy(g, g.n_time());
        ScalarField upper(g, g.n_time());
        ScalarField lower(g, g.n_time());
        for (std::size_t s = 0; s < policy.size(); ++s) {
            policy[s] = speed(rng);
            upper[s] = value(rng);
            lower[s] = upper[s] - drop(rng);
        }
        const auto next_upper =
            derivative_step(p, {&policy}, {&upper}, DifferenceSide::plus);
        const auto next_lower =
            derivative_step(p, {&policy}, {&lower}, DifferenceSide::plus);
        for (std::size_t s = 0; s < policy.size(); ++s) {
            CHECK(next_upper[0][s] >= next_lower[0][s] - 1e-12);
        }
    }
}

TEST_CASE("terminal difference data integrates the terminal slope") {
    // Riemann sums of phi * D+(terminal cost) must approach the integral of
    // phi * (terminal slope) at first order as the mesh refines.
    ControlProblem p;
    p.state_dim = 1;
    p.control_dim = 1;
    p.dynamics = [](const Vec&, const Vec&) { return Vec{0.0, 0.0}; };
    p.running_cost = [](const Vec&, const Vec&) { return 0.0; };
    p.terminal_cost = [](const Vec& x) {
        return std::exp(std::sin(std::numbers::pi * x[0]));
    };
    p.sup_speed = {0.0, 0.0};

    auto phi = [](double x) {
        return std::exp(std::cos(std::numbers::pi * x + 0.7));
    };
    auto integrand = [&](double x) {
        return phi(x) * std::numbers::pi * std::cos(std::numbers::pi * x) *
               std::exp(std::sin(std::numbers::pi * x));
    };
    // Simpson quadrature oracle on a fine mesh.
    const int quad = 200000;
    double integral = 0.0;
    const double hq = 2.0 / quad;
    for (int k = 0; k < quad; ++k) {
        const double a = -1.0 + k * hq;
        integral += hq / 6.0 *
                    (integrand(a) + 4.0 * integrand(a + hq / 2.0) +
                     integrand(a + hq));
    }

    std::vector<std::pair<double, double>> points;
    for (int n_space : {16, 32, 64, 128}) {
        const GridSpec g = make_grid(1, 1.0, n_space, 1.0, n_space);
        std::vector<FieldSequence> policy{FieldSequence{1, {}}};
        for (int j = 1; j <= g.n_time(); ++j) {
            policy[0].slices.emplace_back(g, j, 0.0);
        }
        const DerivativeField f =
            evolve_derivative(p, g, policy, DifferenceSide::plus);
        const ScalarField& terminal = f.components[0].slices.back();
        double sum = 0.0;
        for (std::size_t s = 0; s < terminal.size(); ++s) {
            sum += phi(g.point_of(s)[0]) * terminal[s] * g.dx();
        }
        points.emplace_back(g.dx(), std::abs(sum - integral));
    }
    CHECK(fit_order(points) >= 0.9);
}

TEST_CASE("flux Lipschitz ratio is capped by the speed bound") {
    SUBCASE("coincident samples are excluded") {
        const ControlProblem p = passthrough_speed_problem(0.0);
        const GridSpec g = make_grid(1, 1.0, 4, 1.0, 4);
        ScalarField policy(g, 1, 1.0);
        CHECK(flux_lipschitz_probe(p, policy, {{2.0, 2.0, 2.0}}) == 0.0);
    }
    SUBCASE("unit speed gives ratio at most one") {
        const ControlProblem p = passthrough_speed_problem(0.0);
        const GridSpec g = make_grid(1, 1.0, 4, 1.0, 4);
        ScalarField policy(g, 1, 1.0);
        std::mt19937_64 rng(29);
        std::uniform_real_distribution<double> u(-3.0, 3.0);
        std::vector<FluxLipschitzSample> samples;
        for (int k = 0; k < 200; ++k) {
            samples.push_back({u(rng), u(rng), u(rng)});
        }
        CHECK(flux_lipschitz_probe(p, policy, samples) <= 1.0 + 1e-12);
    }
    SUBCASE("solved benchmark slice") {
        const ControlProblem p = LqrBenchmark{1.0}.problem();
        const GridSpec g = make_grid(1, 1.0, 20, 1.0, 40);
        const SolveResult solved = solve(p, g);
        std::mt19937_64 rng(31);
        std::uniform_real_distribution<double> u(-3.0, 3.0);
        std::vector<FluxLipschitzSample> samples;
        for (int k = 0; k < 200; ++k) {
            samples.push_back({u(rng), u(rng), u(rng)});
        }
        const double ratio = flux_lipschitz_probe(
            p, solved.policy[0].at_time_index(g.n_time() / 2), samples);
        CHECK(ratio <= p.sup_speed[0] + 1e-9);
    }
}
