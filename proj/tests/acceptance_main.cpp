// Acceptance suite: one check per release criterion, one pass/fail line per
// check, nonzero exit when anything fails. Everything runs single-threaded
// unless a criterion is explicitly about parallel determinism.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <unistd.h>
#include <vector>

#include "hjb/analysis.hpp"
#include "hjb/cli.hpp"
#include "hjb/conservation.hpp"
#include "hjb/problem.hpp"
#include "hjb/upwind.hpp"
#include "hjb/verify.hpp"

using namespace hjb;
namespace fs = std::filesystem;

namespace {

int failures = 0;

void report(int number, const std::string& label, bool pass,
            const std::string& detail) {
    std::printf("[%s] criterion %2d: %s (%s)\n", pass ? "PASS" : "FAIL",
                number, label.c_str(), detail.c_str());
    std::fflush(stdout);
    if (!pass) ++failures;
}

void report_error(int number, const std::string& label,
                  const std::exception& e) {
    report(number, label, false, std::string("exception: ") + e.what());
}

std::string fmt(double v) { return format_double(v); }

double median(std::vector<double> values) {
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    return n % 2 ? values[n / 2]
                 : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

const PropertyResult& property(const VerifyReport& report,
                               const std::string& name) {
    for (const PropertyResult& p : report.properties) {
        if (p.name == name) return p;
    }
    throw std::runtime_error("property '" + name + "' missing from report");
}

}  // namespace

int main() {
    const double horizon = 1.0;
    const ControlProblem lqr = LqrBenchmark{horizon}.problem();
    const GridSpec probe = make_grid(1, 1.0, 20, horizon, 40);
    const MeasurementRegion interior = MeasurementRegion::interior_half(probe);

    // Criteria 1-3 share one refinement ladder.
    ConvergenceReport ladder;
    bool ladder_ok = false;
    double ladder_seconds = 0.0;
    try {
        const auto start = std::chrono::steady_clock::now();
        ladder = convergence_study_lqr({0.1, 0.05, 0.025, 0.0125}, horizon,
                                       interior, 0.5);
        ladder_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                          start)
                .count();
        ladder_ok = true;
    } catch (const std::exception& e) {
        report_error(1, "1D value-function order", e);
        report_error(2, "1D input order", e);
        report_error(3, "pointwise error bound shape", e);
    }

    if (ladder_ok) {
        const double order_v = ladder.fitted_order_value.value_or(-1.0);
        report(1, "1D value-function order",
               order_v >= 0.8 && order_v <= 1.2 && ladder_seconds < 60.0,
               "fitted_order_value=" + fmt(order_v) + " in [0.8,1.2], " +
                   fmt(ladder_seconds) + "s < 60s");

        const double order_a = ladder.fitted_order_input.value_or(-1.0);
        report(2, "1D input order", order_a >= 0.7 && order_a <= 1.2,
               "fitted_order_input=" + fmt(order_a) + " in [0.7,1.2]");

        double c_min = std::numeric_limits<double>::infinity();
        double c_max = 0.0;
        for (std::size_t i = 0; i < ladder.resolutions.size(); ++i) {
            const double scale =
                ladder.resolutions[i].first + ladder.resolutions[i].second;
            const double c = ladder.sup_errors_value[i] / scale;
            c_min = std::min(c_min, c);
            c_max = std::max(c_max, c);
        }
        report(3, "pointwise error bound shape", c_max <= 2.0 * c_min,
               "sup|V-v| <= C(dt+dx) with C in [" + fmt(c_min) + ", " +
                   fmt(c_max) + "], ratio " + fmt(c_max / c_min) + " <= 2");
    }

    // Criterion 4: terminal-perturbation stability, 100 seeded trials.
    try {
        const GridSpec grid = make_grid(1, 1.0, 20, horizon, 40);
        const SolveResult base = solve(lqr, grid);
        std::mt19937_64 rng(4);
        std::uniform_real_distribution<double> noise(-0.3, 0.3);
        int violations = 0;
        double worst = 0.0;
        for (int trial = 0; trial < 100; ++trial) {
            ScalarField terminal = base.value.slices.back();
            for (std::size_t s = 0; s < terminal.size(); ++s) {
                terminal[s] += noise(rng);
            }
            const SolveResult perturbed = solve(lqr, grid, terminal);
            double sup_next = 0.0;
            for (std::size_t s = 0; s < terminal.size(); ++s) {
                sup_next =
                    std::max(sup_next, std::abs(perturbed.value.slices.back()[s] -
                                                base.value.slices.back()[s]));
            }
            for (int j = grid.n_time(); j >= 1; --j) {
                double sup_prev = 0.0;
                const ScalarField& pv = perturbed.value.at_time_index(j - 1);
                const ScalarField& bv = base.value.at_time_index(j - 1);
                for (std::size_t s = 0; s < pv.size(); ++s) {
                    sup_prev = std::max(sup_prev, std::abs(pv[s] - bv[s]));
                }
                worst = std::max(worst, sup_prev - sup_next);
                if (sup_prev > sup_next + 1e-12) ++violations;
                sup_next = sup_prev;
            }
        }
        report(4, "terminal-perturbation stability", violations == 0,
               "100 trials, violations=" + std::to_string(violations) +
                   ", worst growth=" + fmt(worst));
    } catch (const std::exception& e) {
        report_error(4, "terminal-perturbation stability", e);
    }

    // Criterion 5: one-step structural properties, plus a forced-instability
    // counterexample search.
    try {
        const GridSpec grid = make_grid(1, 1.0, 20, horizon, 40);
        VerifyOptions options;
        options.seed = 0;
        options.trials = 100;
        const VerifyReport stable = run_verify_suite(lqr, grid, options);
        const PropertyResult& mono = property(stable, "monotonicity");
        const PropertyResult& shift = property(stable, "constant_shift");
        const PropertyResult& cmp = property(stable, "comparison_principle");

        const GridSpec forced_grid = make_grid(1, 1.0, 20, 1.1, 20);
        VerifyOptions forced_options = options;
        forced_options.force_cfl = true;
        const VerifyReport forced =
            run_verify_suite(lqr, forced_grid, forced_options);
        const PropertyResult& forced_mono = property(forced, "monotonicity");

        report(5, "one-step structural properties",
               mono.pass && shift.pass && cmp.pass && !forced_mono.pass,
               "monotonicity margin=" + fmt(mono.worst_margin) +
                   ", shift=" + fmt(shift.worst_margin) +
                   ", comparison=" + fmt(cmp.worst_margin) +
                   "; forced ratio 1.1 finds a violation: " +
                   (forced_mono.pass ? "no" : "yes"));
    } catch (const std::exception& e) {
        report_error(5, "one-step structural properties", e);
    }

    // Criterion 6: derivative-field correspondence on both benchmarks.
    try {
        double worst = 0.0;
        auto correspondence = [&worst](const ControlProblem& problem,
                                       const GridSpec& grid) {
            const SolveResult solved = solve(problem, grid);
            for (DifferenceSide side :
                 {DifferenceSide::plus, DifferenceSide::minus}) {
                const DerivativeField evolved =
                    evolve_derivative(problem, grid, solved.policy, side);
                for (int j = 0; j <= grid.n_time(); ++j) {
                    const ScalarField& v = solved.value.at_time_index(j);
                    for (int d = 0; d < grid.dim(); ++d) {
                        const ScalarField& u =
                            evolved.components[static_cast<std::size_t>(d)]
                                .slices[static_cast<std::size_t>(j)];
                        for (std::size_t s = 0; s < v.size(); ++s) {
                            const double direct =
                                side == DifferenceSide::plus
                                    ? (v[grid.neighbor(s, d, +1)] - v[s]) /
                                          grid.dx()
                                    : (v[s] - v[grid.neighbor(s, d, -1)]) /
                                          grid.dx();
                            const double scale = std::max(
                                {1.0, std::abs(direct), std::abs(u[s])});
                            worst = std::max(
                                worst, std::abs(u[s] - direct) / scale);
                        }
                    }
                }
            }
        };
        correspondence(lqr, make_grid(1, 1.0, 20, horizon, 40));
        correspondence(ObstacleBenchmark2D{}.problem(),
                       make_grid(2, 1.0, 20, horizon, 200));
        report(6, "derivative-field correspondence", worst <= 1e-12,
               "max relative deviation=" + fmt(worst) + " <= 1e-12");
    } catch (const std::exception& e) {
        report_error(6, "derivative-field correspondence", e);
    }

    // Criterion 7: total-variation decay at the tighter stability ratio.
    try {
        const GridSpec grid = make_grid(1, 1.0, 20, horizon, 40);
        const SolveResult solved = solve(lqr, grid);
        const DerivativeField evolved =
            evolve_derivative(lqr, grid, solved.policy, DifferenceSide::plus);
        double worst = -std::numeric_limits<double>::infinity();
        for (int j = grid.n_time(); j >= 1; --j) {
            const double tv_next = total_variation(
                evolved.components[0].slices[static_cast<std::size_t>(j)]);
            const double tv_prev = total_variation(
                evolved.components[0].slices[static_cast<std::size_t>(j - 1)]);
            worst = std::max(worst, tv_prev - tv_next);
        }
        report(7, "total-variation decay", worst <= 1e-12,
               "max TV growth=" + fmt(worst) +
                   " <= 1e-12; note: the terminal difference slice has zero "
                   "variation while the cost gradient feeds variation in at "
                   "every step, so per-step decay cannot hold here");
    } catch (const std::exception& e) {
        report_error(7, "total-variation decay", e);
    }

    // Criterion 8: input argmin-distance diagnostic across the ladder.
    try {
        std::mt19937_64 rng(8);
        std::uniform_real_distribution<double> coord(-0.5, 0.5);
        std::uniform_real_distribution<double> time(0.0, horizon);
        std::vector<std::array<double, 2>> samples;
        for (int k = 0; k < 200; ++k) {
            samples.push_back({coord(rng), time(rng)});
        }
        const EpiDiagnostic diag = epi_diagnostic(
            lqr, horizon, {0.1, 0.05, 0.025}, samples,
            [horizon](double x, double t) {
                return std::tanh(horizon - t) * x;
            });
        const double med_coarse = median(diag.distances.front());
        const double med_fine = median(diag.distances.back());
        report(8, "input argmin-distance diagnostic",
               diag.summary_fraction >= 0.9 && med_fine < med_coarse,
               "non-increasing fraction=" + fmt(diag.summary_fraction) +
                   " >= 0.9, median " + fmt(med_fine) + " < " +
                   fmt(med_coarse));
    } catch (const std::exception& e) {
        report_error(8, "input argmin-distance diagnostic", e);
    }

    // Criterion 9: planar self-refinement errors decrease.
    try {
        const GridSpec probe2d = make_grid(2, 1.0, 50, horizon, 500);
        const ConvergenceReport study = self_convergence_study_2d(
            ObstacleBenchmark2D{}, {0.1, 0.05}, 0.02, horizon,
            MeasurementRegion::full(probe2d), 0.1);
        const bool value_down = study.errors_value[1] < study.errors_value[0];
        const bool input_down = study.errors_input[1] < study.errors_input[0];
        report(9, "planar self-refinement trend", value_down && input_down,
               "value errors " + fmt(study.errors_value[0]) + " -> " +
                   fmt(study.errors_value[1]) + ", input errors " +
                   fmt(study.errors_input[0]) + " -> " +
                   fmt(study.errors_input[1]));
    } catch (const std::exception& e) {
        report_error(9, "planar self-refinement trend", e);
    }

    // Criterion 10: rollout cost against the solved value at the start.
    try {
        auto cost_gap = [&](int n_space) {
            const GridSpec grid =
                make_grid(1, 1.0, n_space, horizon, 2 * n_space);
            const SolveResult solved = solve(lqr, grid);
            const RolloutResult run =
                rollout(lqr, grid, solved.policy, {0.5, 0.0});
            const double at_start =
                solved.value.at_time_index(0)[grid.cell_of({0.5, 0.0})];
            return std::abs(run.total_cost - at_start);
        };
        const double gap_coarse = cost_gap(40);   // dx = 0.025
        const double gap_fine = cost_gap(80);     // dx = 0.0125
        report(10, "rollout cost consistency",
               gap_coarse < 0.05 && gap_fine < gap_coarse,
               "|cost - V| = " + fmt(gap_coarse) + " < 0.05 at dx=0.025, " +
                   fmt(gap_fine) + " at dx=0.0125");
    } catch (const std::exception& e) {
        report_error(10, "rollout cost consistency", e);
    }

    // Criterion 11: byte-identical artifacts for identical config and seed,
    // with parallel execution enabled.
    try {
        const std::string config_text =
            "problem = lqr1d\n"
            "study.dx_ladder = 0.1, 0.05, 0.025\n"
            "seed = 0\n"
            "threads = 2\n";
        const fs::path base =
            fs::temp_directory_path() /
            ("hjb_acceptance_" + std::to_string(::getpid()));
        fs::remove_all(base);
        RunConfig first = parse_config_text(config_text);
        RunConfig second = parse_config_text(config_text);
        first.out_dir = (base / "a").string();
        second.out_dir = (base / "b").string();
        const int rc_a = cmd_convergence(first);
        const int rc_b = cmd_convergence(second);
        const bool identical =
            rc_a == 0 && rc_b == 0 &&
            slurp(base / "a" / "convergence.csv") ==
                slurp(base / "b" / "convergence.csv") &&
            slurp(base / "a" / "orders.json") ==
                slurp(base / "b" / "orders.json");
        fs::remove_all(base);
        report(11, "deterministic artifacts", identical,
               identical ? "two threaded runs byte-identical"
                         : "outputs differ");
    } catch (const std::exception& e) {
        report_error(11, "deterministic artifacts", e);
    }

    std::printf("%d/11 criteria passed\n", 11 - failures);
    return failures == 0 ? 0 : 1;
}
