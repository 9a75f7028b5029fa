#include <doctest.h>

#include <cmath>
#include <random>

#include "hjb/analysis.hpp"
#include "hjb/problem.hpp"

using namespace hjb;

namespace {

FieldSequence constant_sequence(const GridSpec& g, double value) {
    FieldSequence seq{0, {}};
    for (int j = 0; j <= g.n_time(); ++j) {
        seq.slices.emplace_back(g, j, value);
    }
    return seq;
}

}  // namespace

TEST_CASE("grid norm of simple fields") {
    const GridSpec g = make_grid(1, 1.0, 20, 1.0, 40);
    const MeasurementRegion full = MeasurementRegion::full(g);

    CHECK(grid_norm(constant_sequence(g, 0.0), full) == 0.0);

    // 40 nodes, 41 slices, weight dx * dt.
    const double expected = std::sqrt(40.0 * 41.0 * 0.05 * 0.025);
    CHECK(grid_norm(constant_sequence(g, 1.0), full) ==
          doctest::Approx(expected).epsilon(1e-13));
    CHECK(expected == doctest::Approx(1.4317821063276353).epsilon(1e-15));

    const double c = -3.25;
    CHECK(grid_norm(constant_sequence(g, c), full) ==
          doctest::Approx(std::abs(c) * expected).epsilon(1e-13));
}

TEST_CASE("grid norm is absolutely homogeneous") {
    const GridSpec g = make_grid(1, 1.0, 8, 0.5, 10);
    std::mt19937_64 rng(37);
    std::uniform_real_distribution<double> value(-2.0, 2.0);
    FieldSequence seq{0, {}};
    for (int j = 0; j <= g.n_time(); ++j) {
        ScalarField slice(g, j);
        for (std::size_t s = 0; s < g.num_nodes(); ++s) slice[s] = value(rng);
        seq.slices.push_back(std::move(slice));
    }
    const MeasurementRegion region = MeasurementRegion::interior_half(g);
    const double base = grid_norm(seq, region);
    for (double c : {2.0, -0.5, 7.75}) {
        FieldSequence scaled = seq;
        for (auto& slice : scaled.slices) {
            for (std::size_t s = 0; s < slice.size(); ++s) slice[s] *= c;
        }
        CHECK(grid_norm(scaled, region) ==
              doctest::Approx(std::abs(c) * base).epsilon(1e-13));
    }
}

TEST_CASE("grid norm rejects an empty region") {
    const GridSpec g = make_grid(1, 1.0, 4, 1.0, 4);
    MeasurementRegion nowhere;
    nowhere.lower = {5.0, 5.0};
    nowhere.upper = {6.0, 6.0};
    CHECK_THROWS_AS(grid_norm(constant_sequence(g, 1.0), nowhere),
                    std::invalid_argument);
}

TEST_CASE("region membership keeps edge nodes") {
    const GridSpec g = make_grid(1, 1.0, 20, 1.0, 10);
    const MeasurementRegion region = MeasurementRegion::interior_half(g);
    CHECK(region.contains({-0.5, 0.0}, 1));
    CHECK(region.contains({0.5, 0.0}, 1));
    CHECK(region.contains({10.0 * g.dx(), 0.0}, 1));
    CHECK(!region.contains({0.55, 0.0}, 1));
}

TEST_CASE("order fitting on exact power laws") {
    CHECK(fit_order({{0.1, 0.01}, {0.05, 0.005}}) ==
          doctest::Approx(1.0).epsilon(1e-10));
    CHECK(fit_order({{0.1, 0.01}, {0.05, 0.0025}}) ==
          doctest::Approx(2.0).epsilon(1e-10));
    CHECK(fit_order({{0.1, 0.42}, {0.05, 0.42}, {0.025, 0.42}}) ==
          doctest::Approx(0.0).epsilon(1e-10));

    std::vector<std::pair<double, double>> synthetic;
    for (double dx : {0.2, 0.1, 0.05, 0.025}) {
        synthetic.emplace_back(dx, 3.0 * std::pow(dx, 1.7));
    }
    CHECK(fit_order(synthetic) == doctest::Approx(1.7).epsilon(1e-10));
}

TEST_CASE("order fitting input validation") {
    CHECK_THROWS_AS(fit_order({{0.1, 0.01}}), std::invalid_argument);
    CHECK_THROWS_AS(fit_order({{0.1, 0.0}, {0.05, 0.01}}),
                    std::invalid_argument);
    CHECK_THROWS_AS(fit_order({{0.1, -0.5}, {0.05, 0.01}}),
                    std::invalid_argument);
}

TEST_CASE("benchmark study errors shrink with the mesh") {
    const GridSpec probe = make_grid(1, 1.0, 10, 1.0, 20);
    const MeasurementRegion region = MeasurementRegion::interior_half(probe);
    const ConvergenceReport report =
        convergence_study_lqr({0.1, 0.05}, 1.0, region);
    REQUIRE(report.errors_value.size() == 2);
    CHECK(report.errors_value[1] < report.errors_value[0]);
    CHECK(report.errors_input[1] < report.errors_input[0]);
    REQUIRE(report.fitted_order_value.has_value());
    CHECK(*report.fitted_order_value > 0.5);
    CHECK(*report.fitted_order_value < 1.6);
    CHECK(report.sup_errors_value[1] < report.sup_errors_value[0]);
}

TEST_CASE("study with one resolution carries no orders") {
    const GridSpec probe = make_grid(1, 1.0, 10, 1.0, 20);
    const ConvergenceReport report = convergence_study_lqr(
        {0.1}, 1.0, MeasurementRegion::interior_half(probe));
    CHECK(!report.fitted_order_value.has_value());
    CHECK(!report.fitted_order_input.has_value());
    CHECK(report.errors_value.size() == 1);
}

TEST_CASE("study rejects a disordered ladder") {
    const GridSpec probe = make_grid(1, 1.0, 10, 1.0, 20);
    CHECK_THROWS_AS(convergence_study_lqr(
                        {0.05, 0.1}, 1.0,
                        MeasurementRegion::interior_half(probe)),
                    std::invalid_argument);
}

TEST_CASE("argmin-distance diagnostic on symmetric and generic points") {
    const ControlProblem p = LqrBenchmark{1.0}.problem();
    auto dv = [](double x, double t) {
        return std::tanh(1.0 - t) * x;  // space derivative of the value
    };

    SUBCASE("the symmetry point pins the input at zero") {
        const EpiDiagnostic diag =
            epi_diagnostic(p, 1.0, {0.1, 0.05}, {{0.0, 0.5}}, dv);
        for (const auto& per_resolution : diag.distances) {
            REQUIRE(per_resolution.size() == 1);
            CHECK(per_resolution[0] <= 2e-3);
        }
    }
    SUBCASE("distances shrink across the ladder at a generic point") {
        const EpiDiagnostic diag = epi_diagnostic(
            p, 1.0, {0.1, 0.05, 0.025}, {{0.5, 0.0}}, dv);
        REQUIRE(diag.distances.size() == 3);
        CHECK(diag.distances[2][0] <= diag.distances[0][0]);
        CHECK(diag.summary_fraction == 1.0);
    }
    SUBCASE("samples outside the domain are skipped") {
        const EpiDiagnostic diag = epi_diagnostic(
            p, 1.0, {0.1, 0.05}, {{2.5, 0.5}, {0.25, 0.25}}, dv);
        CHECK(diag.skipped == 1);
        CHECK(diag.sample_points.size() == 1);
    }
}
