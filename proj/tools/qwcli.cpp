#include <iostream>

#include "CLI11.hpp"
#include "qw/cli.hpp"

int main(int argc, char** argv)
{
    CLI::App app{"q-weight map checks: validation, classification, corners, boundary expectations"};
    app.require_subcommand(1);

    qw::cli::RunConfig cfg;
    std::string input;
    const char* commands[] = {"check", "classify", "corner", "expectation", "ranktheorem", "flowsim", "curves"};
    const char* help[] = {
        "validate a map and certify its GBR samples",
        "q-purity verdict with witness",
        "build or verify a q-corner of an assembled map",
        "boundary expectation and axiom flags",
        "range-rank trichotomy and rank-two standard form",
        "recover the weight from the discretized resolvent",
        "write h, c and det(I + X) curves as CSV",
    };
    for (std::size_t i = 0; i < std::size(commands); ++i) {
        CLI::App* sub = app.add_subcommand(commands[i], help[i]);
        sub->add_option("input", input, "map spec (JSON)")->required();
        sub->add_option("--grid-min", cfg.grid.t_min, "smallest truncation point")->capture_default_str();
        sub->add_option("--grid-max", cfg.grid.t_max, "largest truncation point")->capture_default_str();
        sub->add_option("--grid-points", cfg.grid.points, "number of geometric grid points")->capture_default_str();
        sub->add_option("--tol", cfg.tol, "PSD tolerance")->capture_default_str();
        sub->add_option("--seed", cfg.seed, "seed for sampled checks")->capture_default_str();
        sub->add_option("--out", cfg.out_dir, "output directory")->capture_default_str();
        if (std::string_view(commands[i]) == "flowsim") {
            sub->add_option("--cells", cfg.cells, "grid cells m on (0, horizon)")->capture_default_str();
            sub->add_option("--horizon", cfg.horizon, "half-line truncation")->capture_default_str();
            sub->add_option("--x", cfg.x, "recovery point, a multiple of horizon / m")->capture_default_str();
        }
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return qw::cli::InputError;
    }

    cfg.command = qw::cli::parse_command(app.get_subcommands().front()->get_name());
    cfg.input = input;
    return qw::cli::run(cfg);
}
