#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hjb/analysis.hpp"
#include "hjb/grid.hpp"
#include "hjb/problem.hpp"
#include "hjb/upwind.hpp"

namespace hjb {

inline constexpr int kExitOk = 0;
inline constexpr int kExitPropertyFailure = 1;
inline constexpr int kExitCflRefused = 2;
inline constexpr int kExitUsage = 64;

/// Parsed run configuration. The file format is a flat list of
/// `dotted.key = value` lines; `#` starts a comment. Unknown keys are
/// rejected. Per-axis values are comma-separated lists (a single entry
/// broadcasts to both axes).
struct RunConfig {
    std::string problem = "lqr1d";

    double half_width = 1.0;
    double horizon = 1.0;
    std::optional<int> n_space;
    std::optional<int> n_time;
    std::optional<double> dx;
    std::optional<double> alpha;

    MinimizerOptions minimizer;

    std::vector<double> dx_ladder{0.1, 0.05, 0.025, 0.0125};
    double reference_dx = 0.02;
    std::optional<Vec> region_lower;
    std::optional<Vec> region_upper;

    int verify_trials = 100;
    std::uint64_t seed = 0;
    bool force_cfl = false;
    int threads = 1;

    std::string out_dir = "out";
    bool write_csv = true;
    bool write_json = true;

    std::optional<Vec> rollout_x0;
    std::optional<std::string> load_dir;

    std::optional<Vec> input_lower;
    std::optional<Vec> input_upper;
    ObstacleBenchmark2D obstacle;

    /// Raw key -> value pairs exactly as parsed, echoed into meta.json.
    std::map<std::string, std::string> raw;
};

/// Parses configuration text; throws ConfigError on any malformed or
/// unknown entry.
RunConfig parse_config_text(const std::string& text);
RunConfig parse_config_file(const std::string& path);

/// Instantiates the configured problem (benchmark plus overrides).
ControlProblem problem_from(const RunConfig& config);
/// Resolves the grid; exactly one of the (n_space, n_time) and (dx[, alpha])
/// parameterizations may be present. With neither, a problem-appropriate
/// default is used.
GridSpec grid_from(const RunConfig& config, const ControlProblem& problem);
MeasurementRegion region_from(const RunConfig& config, const GridSpec& grid);

/// Solves and writes value/policy time slices plus meta.json.
int cmd_solve(const RunConfig& config);
/// Runs the configured refinement study and writes convergence.csv and
/// orders.json.
int cmd_convergence(const RunConfig& config);
/// Runs the seeded property suite and writes verify_report.json; exit 0
/// only when every property passes.
int cmd_verify(const RunConfig& config);
/// Plays the solved policy forward from x0 and writes trajectory.csv. The
/// solve either runs in-process or is loaded from a directory previously
/// written by cmd_solve.
int cmd_rollout(const RunConfig& config, const Vec& x0);

/// Round-trip-exact decimal rendering used for every CSV number.
std::string format_double(double value);

}  // namespace hjb
