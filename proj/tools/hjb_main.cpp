#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "hjb/cli.hpp"
#include "hjb/errors.hpp"

namespace {

hjb::Vec parse_point(const std::string& text, int dim) {
    hjb::Vec x{0.0, 0.0};
    std::stringstream ss(text);
    std::string item;
    int count = 0;
    while (std::getline(ss, item, ',')) {
        if (count >= 2) throw hjb::ConfigError("--x0 takes at most two entries");
        x[count++] = std::stod(item);
    }
    if (count != dim) {
        throw hjb::ConfigError("--x0 needs " + std::to_string(dim) +
                               " comma-separated entries for this problem");
    }
    return x;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Backward upwind solver for finite-horizon optimal control"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    std::optional<long> seed;
    bool force_cfl = false;
    std::string x0_text;
    std::string load_dir;

    app.add_option("--config", config_path, "flat key=value configuration file")
        ->check(CLI::ExistingFile);
    app.add_option("--out", out_dir, "output directory (overrides output.dir)");
    app.add_option("--seed", seed, "seed for randomized suites (overrides seed)");
    app.add_flag("--force-cfl", force_cfl,
                 "run even when the strict stability gate fails");

    CLI::App* solve = app.add_subcommand(
        "solve", "solve the configured problem and write value/policy slices");
    CLI::App* convergence = app.add_subcommand(
        "convergence", "run the refinement study and fit orders");
    CLI::App* verify =
        app.add_subcommand("verify", "run the seeded property suite");
    CLI::App* roll = app.add_subcommand(
        "rollout", "play the solved policy forward from a start point");
    roll->add_option("--x0", x0_text, "start point, e.g. 0.5 or -0.5,-0.5");
    roll->add_option("--load", load_dir,
                     "reuse a solve previously written by the solve command");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : hjb::kExitUsage;
    }

    try {
        hjb::RunConfig config = config_path.empty()
                                    ? hjb::RunConfig{}
                                    : hjb::parse_config_file(config_path);
        if (!out_dir.empty()) config.out_dir = out_dir;
        if (seed) config.seed = static_cast<std::uint64_t>(*seed);
        if (force_cfl) config.force_cfl = true;
        if (!load_dir.empty()) config.load_dir = load_dir;

        if (solve->parsed()) return hjb::cmd_solve(config);
        if (convergence->parsed()) return hjb::cmd_convergence(config);
        if (verify->parsed()) return hjb::cmd_verify(config);
        if (roll->parsed()) {
            const int dim = config.problem == "obstacle2d" ? 2 : 1;
            hjb::Vec x0{0.0, 0.0};
            if (!x0_text.empty()) {
                x0 = parse_point(x0_text, dim);
            } else if (config.rollout_x0) {
                x0 = *config.rollout_x0;
            } else {
                std::cerr << "rollout: give --x0 or set rollout.x0\n";
                return hjb::kExitUsage;
            }
            return hjb::cmd_rollout(config, x0);
        }
    } catch (const hjb::ConfigError& e) {
        std::cerr << e.what() << "\n";
        return hjb::kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return hjb::kExitUsage;
}
