#include "hjb/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "hjb/conservation.hpp"
#include "hjb/errors.hpp"
#include "hjb/verify.hpp"

namespace hjb {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r\n");
    return s.substr(begin, end - begin + 1);
}

double parse_double(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        const double d = std::stod(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return d;
    } catch (const std::exception&) {
        throw ConfigError("config: key '" + key + "' has non-numeric value '" +
                          value + "'");
    }
}

long parse_long(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        const long v = std::stol(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config: key '" + key + "' has non-integer value '" +
                          value + "'");
    }
}

bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1" || value == "on") return true;
    if (value == "false" || value == "0" || value == "off") return false;
    throw ConfigError("config: key '" + key + "' has non-boolean value '" +
                      value + "'");
}

std::vector<double> parse_list(const std::string& key,
                               const std::string& value) {
    std::vector<double> out;
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty()) {
            throw ConfigError("config: key '" + key + "' has an empty entry");
        }
        out.push_back(parse_double(key, item));
    }
    if (out.empty()) {
        throw ConfigError("config: key '" + key + "' has no entries");
    }
    return out;
}

/// One or two entries; a single entry broadcasts to both axes.
Vec parse_axes(const std::string& key, const std::string& value) {
    const std::vector<double> list = parse_list(key, value);
    if (list.size() == 1) return {list[0], list[0]};
    if (list.size() == 2) return {list[0], list[1]};
    throw ConfigError("config: key '" + key + "' takes one or two entries");
}

}  // namespace

std::string format_double(double value) {
    char buffer[64];
    std::snprintf(buffer, sizeof(buffer), "%.17g", value);
    return buffer;
}

RunConfig parse_config_text(const std::string& text) {
    RunConfig config;
    std::istringstream lines(text);
    std::string line;
    int line_number = 0;
    while (std::getline(lines, line)) {
        ++line_number;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("config: line " + std::to_string(line_number) +
                              " is not a 'key = value' entry");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty() || value.empty()) {
            throw ConfigError("config: line " + std::to_string(line_number) +
                              " has an empty key or value");
        }
        if (config.raw.count(key)) {
            throw ConfigError("config: key '" + key + "' given twice");
        }
        config.raw[key] = value;

        if (key == "problem") {
            if (value != "lqr1d" && value != "obstacle2d") {
                throw ConfigError("config: unknown problem '" + value + "'");
            }
            config.problem = value;
        } else if (key == "grid.half_width") {
            config.half_width = parse_double(key, value);
        } else if (key == "grid.horizon") {
            config.horizon = parse_double(key, value);
        } else if (key == "grid.n_space") {
            config.n_space = static_cast<int>(parse_long(key, value));
        } else if (key == "grid.n_time") {
            config.n_time = static_cast<int>(parse_long(key, value));
        } else if (key == "grid.dx") {
            config.dx = parse_double(key, value);
        } else if (key == "grid.alpha") {
            config.alpha = parse_double(key, value);
        } else if (key == "minimizer.scan_points") {
            config.minimizer.scan_points =
                static_cast<int>(parse_long(key, value));
        } else if (key == "minimizer.refine_tolerance") {
            config.minimizer.refine_tolerance = parse_double(key, value);
        } else if (key == "study.dx_ladder") {
            config.dx_ladder = parse_list(key, value);
        } else if (key == "study.reference_dx") {
            config.reference_dx = parse_double(key, value);
        } else if (key == "study.region_lower") {
            config.region_lower = parse_axes(key, value);
        } else if (key == "study.region_upper") {
            config.region_upper = parse_axes(key, value);
        } else if (key == "verify.trials") {
            config.verify_trials = static_cast<int>(parse_long(key, value));
        } else if (key == "seed") {
            config.seed = static_cast<std::uint64_t>(parse_long(key, value));
        } else if (key == "force_cfl") {
            config.force_cfl = parse_bool(key, value);
        } else if (key == "threads") {
            config.threads = static_cast<int>(parse_long(key, value));
        } else if (key == "output.dir") {
            config.out_dir = value;
        } else if (key == "output.formats") {
            config.write_csv = false;
            config.write_json = false;
            std::stringstream ss(value);
            std::string fmt;
            while (std::getline(ss, fmt, ',')) {
                fmt = trim(fmt);
                if (fmt == "csv") {
                    config.write_csv = true;
                } else if (fmt == "json") {
                    config.write_json = true;
                } else {
                    throw ConfigError("config: unknown output format '" + fmt +
                                      "'");
                }
            }
        } else if (key == "rollout.x0") {
            config.rollout_x0 = parse_axes(key, value);
        } else if (key == "rollout.load_dir") {
            config.load_dir = value;
        } else if (key == "input.lower") {
            config.input_lower = parse_axes(key, value);
        } else if (key == "input.upper") {
            config.input_upper = parse_axes(key, value);
        } else if (key == "obstacle.dynamics_gain") {
            config.obstacle.dynamics_gain = parse_axes(key, value);
        } else if (key == "obstacle.input_weight") {
            config.obstacle.input_weight = parse_axes(key, value);
        } else if (key == "obstacle.state_weight") {
            config.obstacle.state_weight = parse_axes(key, value);
        } else if (key == "obstacle.terminal_weight") {
            config.obstacle.terminal_weight = parse_axes(key, value);
        } else if (key == "obstacle.obstacle_kernel") {
            config.obstacle.obstacle_kernel = parse_axes(key, value);
        } else if (key == "obstacle.obstacle_gain") {
            config.obstacle.obstacle_gain = parse_double(key, value);
        } else if (key == "obstacle.terminal_obstacle_gain") {
            config.obstacle.terminal_obstacle_gain = parse_double(key, value);
        } else if (key == "obstacle.target") {
            config.obstacle.target = parse_axes(key, value);
        } else if (key == "obstacle.obstacle_center") {
            config.obstacle.obstacle_center = parse_axes(key, value);
        } else if (key == "obstacle.input_kernel") {
            // Accepted for compatibility; the implemented costs do not use it.
            config.obstacle.input_kernel = parse_axes(key, value);
        } else if (key == "obstacle.aux_scale") {
            // Accepted for compatibility; the implemented costs do not use it.
            config.obstacle.aux_scale = parse_double(key, value);
        } else {
            throw ConfigError("config: unknown key '" + key + "'");
        }
    }

    if ((config.n_space.has_value() || config.n_time.has_value()) &&
        (config.dx.has_value() || config.alpha.has_value())) {
        throw ConfigError(
            "config: give either grid.n_space/grid.n_time or "
            "grid.dx/grid.alpha, not both");
    }
    if (config.n_space.has_value() != config.n_time.has_value()) {
        throw ConfigError(
            "config: grid.n_space and grid.n_time must be given together");
    }
    if (config.threads < 1) {
        throw ConfigError("config: threads must be at least 1");
    }
    if (config.verify_trials < 1) {
        throw ConfigError("config: verify.trials must be at least 1");
    }
    if (config.minimizer.scan_points < 2) {
        throw ConfigError("config: minimizer.scan_points must be at least 2");
    }
    return config;
}

RunConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("config: cannot open '" + path + "'");
    }
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_config_text(buffer.str());
}

ControlProblem problem_from(const RunConfig& config) {
    ControlProblem problem;
    if (config.problem == "lqr1d") {
        problem = LqrBenchmark{config.horizon}.problem();
    } else {
        ObstacleBenchmark2D benchmark = config.obstacle;
        if (config.input_lower) benchmark.input_lower = *config.input_lower;
        if (config.input_upper) benchmark.input_upper = *config.input_upper;
        problem = benchmark.problem();
    }
    if (config.problem == "lqr1d" &&
        (config.input_lower || config.input_upper)) {
        if (config.input_lower) problem.input_set.lower = *config.input_lower;
        if (config.input_upper) problem.input_set.upper = *config.input_upper;
        problem.input_set.validate();
        const double bound = std::max(std::abs(problem.input_set.lower[0]),
                                      std::abs(problem.input_set.upper[0]));
        problem.sup_speed = {bound, 0.0};
    }
    return problem;
}

GridSpec grid_from(const RunConfig& config, const ControlProblem& problem) {
    const int dim = problem.state_dim;
    if (config.n_space) {
        return make_grid(dim, config.half_width, *config.n_space,
                         config.horizon, *config.n_time);
    }
    const double dx = config.dx.value_or(0.05);
    const double alpha =
        config.alpha.value_or(config.problem == "obstacle2d" ? 0.1 : 0.5);
    if (!(dx > 0.0)) throw ConfigError("config: grid.dx must be positive");
    if (!(alpha > 0.0)) throw ConfigError("config: grid.alpha must be positive");
    const long n_space = std::lround(config.half_width / dx);
    const long n_time = std::lround(config.horizon / (alpha * dx));
    if (n_space < 1 ||
        std::abs(n_space * dx - config.half_width) > 1e-9 * config.half_width) {
        throw ConfigError("config: grid.dx must divide grid.half_width");
    }
    if (n_time < 1) {
        throw ConfigError("config: grid.alpha leaves no time steps");
    }
    return make_grid(dim, config.half_width, static_cast<int>(n_space),
                     config.horizon, static_cast<int>(n_time));
}

MeasurementRegion region_from(const RunConfig& config, const GridSpec& grid) {
    MeasurementRegion region = config.problem == "lqr1d"
                                   ? MeasurementRegion::interior_half(grid)
                                   : MeasurementRegion::full(grid);
    if (config.region_lower) region.lower = *config.region_lower;
    if (config.region_upper) region.upper = *config.region_upper;
    return region;
}

namespace {

json grid_json(const GridSpec& grid) {
    return json{{"dim", grid.dim()},
                {"half_width", grid.half_width()},
                {"n_space", grid.n_space()},
                {"horizon", grid.horizon()},
                {"n_time", grid.n_time()},
                {"dx", grid.dx()},
                {"dt", grid.dt()},
                {"alpha", grid.alpha()}};
}

json cfl_json(const CflStatus& cfl, bool forced) {
    return json{{"alpha_times_sup", cfl.alpha_times_sup},
                {"strict", cfl.satisfies_strict},
                {"modified", cfl.satisfies_modified},
                {"forced", forced}};
}

json stats_json(const MinimizerStats& stats) {
    return json{{"objective_evaluations", stats.objective_evaluations},
                {"refine_iterations", stats.refine_iterations},
                {"nodes_minimized", stats.nodes_minimized}};
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot write '" + path.string() + "'");
    }
    out << text;
}

void write_json_file(const fs::path& path, const json& j) {
    write_text(path, j.dump(2) + "\n");
}

void write_slice_csv(const fs::path& path, const ScalarField& slice) {
    const GridSpec& grid = slice.grid();
    std::string text = grid.dim() == 1 ? "x,value\n" : "x,y,value\n";
    for (std::size_t s = 0; s < slice.size(); ++s) {
        const Vec x = grid.point_of(s);
        text += format_double(x[0]);
        if (grid.dim() == 2) {
            text += ',';
            text += format_double(x[1]);
        }
        text += ',';
        text += format_double(slice[s]);
        text += '\n';
    }
    write_text(path, text);
}

SolveOptions solve_options_from(const RunConfig& config) {
    SolveOptions options;
    options.minimizer = config.minimizer;
    options.threads = config.threads;
    options.force_cfl = config.force_cfl;
    return options;
}

void write_solve_artifacts(const RunConfig& config, const fs::path& dir,
                           const ControlProblem& problem,
                           const SolveResult& solved) {
    fs::create_directories(dir);
    if (config.write_csv) {
        for (int j = 0; j <= solved.grid.n_time(); ++j) {
            write_slice_csv(dir / ("value_t" + std::to_string(j) + ".csv"),
                            solved.value.at_time_index(j));
        }
        for (int j = 1; j <= solved.grid.n_time(); ++j) {
            if (problem.control_dim == 1) {
                write_slice_csv(dir / ("policy_t" + std::to_string(j) + ".csv"),
                                solved.policy[0].at_time_index(j));
            } else {
                for (int c = 0; c < problem.control_dim; ++c) {
                    write_slice_csv(dir / ("policy_t" + std::to_string(j) +
                                           "_axis" + std::to_string(c) +
                                           ".csv"),
                                    solved.policy[static_cast<std::size_t>(c)]
                                        .at_time_index(j));
                }
            }
        }
    }
    if (config.write_json) {
        write_json_file(dir / "meta.json",
                        json{{"problem", problem.name},
                             {"grid", grid_json(solved.grid)},
                             {"cfl", cfl_json(solved.cfl, solved.cfl_forced)},
                             {"minimizer_stats",
                              stats_json(solved.minimizer_stats)},
                             {"config", config.raw}});
    }
}

std::vector<double> read_csv_values(const fs::path& path,
                                    std::size_t expected_rows) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("rollout: cannot open '" + path.string() + "'");
    }
    std::string line;
    std::getline(in, line);  // header
    std::vector<double> values;
    values.reserve(expected_rows);
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        const auto comma = line.find_last_of(',');
        if (comma == std::string::npos) {
            throw ConfigError("rollout: malformed row in '" + path.string() +
                              "'");
        }
        values.push_back(parse_double("csv", trim(line.substr(comma + 1))));
    }
    if (values.size() != expected_rows) {
        throw ConfigError("rollout: '" + path.string() + "' holds " +
                          std::to_string(values.size()) + " rows, expected " +
                          std::to_string(expected_rows));
    }
    return values;
}

struct LoadedSolve {
    GridSpec grid;
    std::vector<FieldSequence> policy;
    ScalarField value_at_start;
};

LoadedSolve load_solve(const fs::path& dir, const ControlProblem& problem) {
    std::ifstream meta_in(dir / "meta.json");
    if (!meta_in) {
        throw ConfigError("rollout: cannot open '" +
                          (dir / "meta.json").string() + "'");
    }
    json meta = json::parse(meta_in);
    const json& g = meta.at("grid");
    const GridSpec grid =
        make_grid(g.at("dim").get<int>(), g.at("half_width").get<double>(),
                  g.at("n_space").get<int>(), g.at("horizon").get<double>(),
                  g.at("n_time").get<int>());

    LoadedSolve loaded{grid, {}, ScalarField(grid, 0)};
    const std::size_t n = grid.num_nodes();
    loaded.policy.assign(static_cast<std::size_t>(problem.control_dim),
                         FieldSequence{1, {}});
    for (int j = 1; j <= grid.n_time(); ++j) {
        for (int c = 0; c < problem.control_dim; ++c) {
            const fs::path path =
                problem.control_dim == 1
                    ? dir / ("policy_t" + std::to_string(j) + ".csv")
                    : dir / ("policy_t" + std::to_string(j) + "_axis" +
                             std::to_string(c) + ".csv");
            const std::vector<double> values = read_csv_values(path, n);
            ScalarField slice(grid, j);
            std::copy(values.begin(), values.end(), slice.values().begin());
            loaded.policy[static_cast<std::size_t>(c)].slices.push_back(
                std::move(slice));
        }
    }
    const std::vector<double> v0 = read_csv_values(dir / "value_t0.csv", n);
    std::copy(v0.begin(), v0.end(), loaded.value_at_start.values().begin());
    return loaded;
}

}  // namespace

int cmd_solve(const RunConfig& config) {
    const ControlProblem problem = problem_from(config);
    const GridSpec grid = grid_from(config, problem);
    SolveResult solved;
    try {
        solved = solve(problem, grid, solve_options_from(config));
    } catch (const CflViolation& e) {
        std::cerr << e.what() << "\n";
        return kExitCflRefused;
    }
    write_solve_artifacts(config, config.out_dir, problem, solved);
    return kExitOk;
}

int cmd_convergence(const RunConfig& config) {
    if (config.dx_ladder.size() < 2) {
        std::cerr << "convergence: need at least two resolutions in "
                     "study.dx_ladder\n";
        return kExitUsage;
    }
    const ControlProblem problem = problem_from(config);
    const GridSpec grid = grid_from(config, problem);
    const MeasurementRegion region = region_from(config, grid);

    ConvergenceReport report;
    try {
        if (config.problem == "lqr1d") {
            const double alpha = config.alpha.value_or(0.5);
            report = convergence_study_lqr(config.dx_ladder, config.horizon,
                                           region, alpha,
                                           solve_options_from(config));
        } else {
            ObstacleBenchmark2D benchmark = config.obstacle;
            if (config.input_lower) benchmark.input_lower = *config.input_lower;
            if (config.input_upper) benchmark.input_upper = *config.input_upper;
            const double alpha = config.alpha.value_or(0.1);
            report = self_convergence_study_2d(
                benchmark, config.dx_ladder, config.reference_dx,
                config.horizon, region, alpha, solve_options_from(config));
        }
    } catch (const CflViolation& e) {
        std::cerr << e.what() << "\n";
        return kExitCflRefused;
    } catch (const std::invalid_argument& e) {
        std::cerr << "convergence: " << e.what() << "\n";
        return kExitUsage;
    }

    const fs::path dir(config.out_dir);
    fs::create_directories(dir);
    if (config.write_csv) {
        std::string text = "dx,dt,err_value,err_input\n";
        for (std::size_t i = 0; i < report.resolutions.size(); ++i) {
            text += format_double(report.resolutions[i].first);
            text += ',';
            text += format_double(report.resolutions[i].second);
            text += ',';
            text += format_double(report.errors_value[i]);
            text += ',';
            text += format_double(report.errors_input[i]);
            text += '\n';
        }
        write_text(dir / "convergence.csv", text);
    }
    if (config.write_json) {
        json orders{{"order_value", nullptr}, {"order_input", nullptr}};
        if (report.fitted_order_value) {
            orders["order_value"] = *report.fitted_order_value;
        }
        if (report.fitted_order_input) {
            orders["order_input"] = *report.fitted_order_input;
        }
        write_json_file(dir / "orders.json", orders);
    }
    return kExitOk;
}

int cmd_verify(const RunConfig& config) {
    const ControlProblem problem = problem_from(config);
    const GridSpec grid = grid_from(config, problem);

    VerifyOptions options;
    options.seed = config.seed;
    options.trials = config.verify_trials;
    options.threads = config.threads;
    options.force_cfl = config.force_cfl;

    VerifyReport report;
    try {
        report = run_verify_suite(problem, grid, options);
    } catch (const CflViolation& e) {
        std::cerr << e.what() << "\n";
        return kExitCflRefused;
    }

    const fs::path dir(config.out_dir);
    fs::create_directories(dir);
    if (config.write_json) {
        json properties = json::array();
        for (const PropertyResult& p : report.properties) {
            json entry{{"name", p.name},
                       {"trials", p.trials},
                       {"worst_margin", p.worst_margin},
                       {"pass", p.pass},
                       {"counterexample", nullptr}};
            if (!p.counterexample.empty()) {
                entry["counterexample"] = json::parse(p.counterexample);
            }
            properties.push_back(std::move(entry));
        }
        write_json_file(dir / "verify_report.json",
                        json{{"seed", report.seed},
                             {"all_pass", report.all_pass()},
                             {"cfl", cfl_json(check_cfl(problem, grid),
                                              config.force_cfl)},
                             {"properties", std::move(properties)}});
    }
    for (const PropertyResult& p : report.properties) {
        std::cout << (p.pass ? "[pass] " : "[FAIL] ") << p.name
                  << " (trials=" << p.trials
                  << ", worst_margin=" << format_double(p.worst_margin)
                  << ")\n";
    }
    return report.all_pass() ? kExitOk : kExitPropertyFailure;
}

int cmd_rollout(const RunConfig& config, const Vec& x0) {
    const ControlProblem problem = problem_from(config);
    for (int d = 0; d < problem.state_dim; ++d) {
        if (std::abs(x0[d]) > config.half_width) {
            std::cerr << "rollout: x0 outside the domain\n";
            return kExitUsage;
        }
    }

    GridSpec grid = make_grid(1, 1, 1, 1, 1);
    std::vector<FieldSequence> policy;
    double value_at_x0 = 0.0;
    if (config.load_dir) {
        LoadedSolve loaded = load_solve(*config.load_dir, problem);
        grid = loaded.grid;
        policy = std::move(loaded.policy);
        value_at_x0 = loaded.value_at_start[grid.cell_of(x0)];
    } else {
        grid = grid_from(config, problem);
        SolveResult solved;
        try {
            solved = solve(problem, grid, solve_options_from(config));
        } catch (const CflViolation& e) {
            std::cerr << e.what() << "\n";
            return kExitCflRefused;
        }
        policy = std::move(solved.policy);
        value_at_x0 = solved.value.at_time_index(0)[grid.cell_of(x0)];
    }

    const RolloutResult result = rollout(problem, grid, policy, x0);

    const fs::path dir(config.out_dir);
    fs::create_directories(dir);
    if (config.write_csv) {
        std::string text;
        if (grid.dim() == 1) {
            text = "t,x,a,running_cost\n";
        } else if (problem.control_dim == 1) {
            text = "t,x,y,a,running_cost\n";
        } else {
            text = "t,x,y,a0,a1,running_cost\n";
        }
        for (std::size_t k = 0; k < result.times.size(); ++k) {
            text += format_double(result.times[k]);
            for (int d = 0; d < grid.dim(); ++d) {
                text += ',';
                text += format_double(result.states[k][d]);
            }
            for (int c = 0; c < problem.control_dim; ++c) {
                text += ',';
                text += format_double(result.inputs[k][c]);
            }
            text += ',';
            text += format_double(result.running_costs[k]);
            text += '\n';
        }
        write_text(dir / "trajectory.csv", text);
    }
    std::cout << "total_cost=" << format_double(result.total_cost)
              << " value_at_x0=" << format_double(value_at_x0)
              << (result.left_domain ? " (trajectory wrapped)" : "") << "\n";
    return kExitOk;
}

}  // namespace hjb
