#include <cstddef>
#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "ccr/cli.hpp"

namespace {

struct CommonArgs {
    std::string config;
    std::string out;
    std::optional<std::uint64_t> seed;
    unsigned jobs = 1;
    bool discount = false;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config, "JSON run configuration")
        ->required();
    cmd->add_option("--out", args.out, "Output directory (overrides config)");
    cmd->add_option("--seed", args.seed, "Monte Carlo seed (overrides config)");
    cmd->add_option("--jobs", args.jobs,
                    "Worker threads over (spot, vol) cells");
    cmd->add_flag("--discount", args.discount,
                  "Discount profiles by exp(-r t_k); off by default");
}

int dispatch(int (*run)(const ccr::cli::RunConfig&, const ccr::cli::RunOptions&),
             const CommonArgs& args) {
    const ccr::cli::RunConfig cfg = ccr::cli::load_config(args.config);
    ccr::cli::RunOptions opt;
    opt.output = args.out;
    opt.seed = args.seed;
    opt.jobs = args.jobs;
    opt.discount = args.discount;
    return run(cfg, opt);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Counterparty exposure profiles by optimal quantization"};
    app.require_subcommand(1);

    std::size_t grid_n = 0;
    double grid_tol = 1e-10;
    std::string grid_out = "grid.txt";
    CLI::App* grid = app.add_subcommand(
        "grid", "Build an optimal normal quantizer grid and save it");
    grid->add_option("--n", grid_n, "Number of grid points")->required();
    grid->add_option("--tol", grid_tol, "Fixed-point tolerance");
    grid->add_option("--out", grid_out, "Grid file path");

    CommonArgs exposure_args, portfolio_args, sweep_args;
    CLI::App* exposure = app.add_subcommand(
        "exposure", "Single-option exposure tables, one CSV per (spot, vol)");
    add_common(exposure, exposure_args);
    CLI::App* portfolio = app.add_subcommand(
        "portfolio", "Netting-set exposure tables against a Sobol benchmark");
    add_common(portfolio, portfolio_args);
    CLI::App* sweep = app.add_subcommand(
        "sweep", "Long-format (spot, vol, method, bucket) table for plotting");
    add_common(sweep, sweep_args);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (grid->parsed()) return ccr::cli::run_grid(grid_n, grid_tol, grid_out);
        if (exposure->parsed())
            return dispatch(ccr::cli::run_exposure, exposure_args);
        if (portfolio->parsed())
            return dispatch(ccr::cli::run_portfolio, portfolio_args);
        return dispatch(ccr::cli::run_sweep, sweep_args);
    } catch (const ccr::cli::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
