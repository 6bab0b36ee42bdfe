#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ccr/exposure.hpp"
#include "ccr/market.hpp"
#include "ccr/sampling.hpp"

namespace ccr::cli {

// Configuration problems: malformed JSON, unknown or ill-typed keys, missing
// target files. Reported with the key path (or file position for syntax
// errors); the runner maps them to exit code 2.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct McConfig {
    std::size_t n = 1000;
    std::uint64_t seed = sampling::default_seed;
    exposure::McMode mode = exposure::McMode::djs;
};

// A method runs iff its key appears in the config's methods object. The
// analytic column of the exposure table and the Sobol benchmark column of
// the portfolio table are structural and always computed; listing them only
// changes their parameters.
struct MethodsConfig {
    bool analytic = false;
    bool numerical = false;
    bool quantization = false;
    bool mc = false;
    bool sobol = false;
    bool benchmark = false;
    std::size_t numerical_n = 1000;
    std::size_t quantization_n = 1000;
    McConfig mc_cfg;
    std::size_t sobol_n = 1000;
    std::size_t benchmark_n = 1000000;
};

struct RunConfig {
    // Single options are described inline; a netting set by file path. The
    // exposure and sweep commands take the former, portfolio the latter.
    std::string portfolio_path;
    market::OptionKind kind = market::OptionKind::call;
    market::Side side = market::Side::buy;
    double strike = 100.0;
    double maturity = 1.0;
    std::vector<double> spots = {100.0};
    std::vector<double> vols = {0.25};
    double rate = 0.03;
    std::vector<double> bucket_times;  // empty: default grid
    double collateral = 0.0;
    MethodsConfig methods;
    std::filesystem::path output = ".";
    std::filesystem::path grid_cache;  // empty: rebuild in memory
};

RunConfig load_config(const std::filesystem::path& path);

// Command-line overrides applied on top of the config.
struct RunOptions {
    std::filesystem::path output;       // non-empty: overrides config output
    std::optional<std::uint64_t> seed;  // overrides methods.mc.seed
    unsigned jobs = 1;                  // worker pool over (spot, vol) cells
    bool discount = false;              // exp(-r t_k) on every profile
};

// Each returns the process exit status: 0 when every requested method
// completed, 1 when some method failed (its cells print NaN and the reason
// goes to stderr). Configuration problems throw ConfigError instead.
int run_grid(std::size_t n, double tol, const std::filesystem::path& out);
int run_exposure(const RunConfig& cfg, const RunOptions& opt);
int run_portfolio(const RunConfig& cfg, const RunOptions& opt);
int run_sweep(const RunConfig& cfg, const RunOptions& opt);

}  // namespace ccr::cli
