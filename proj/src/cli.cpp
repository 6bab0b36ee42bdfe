#include "ccr/cli.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <json.hpp>

#include "ccr/quantizer.hpp"

namespace ccr::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr double nan = std::numeric_limits<double>::quiet_NaN();

[[noreturn]] void fail(const std::string& keypath, const std::string& msg) {
    throw ConfigError(keypath + ": " + msg);
}

double as_number(const json& v, const std::string& kp) {
    if (!v.is_number()) fail(kp, "expected a number");
    return v.get<double>();
}

double as_positive(const json& v, const std::string& kp) {
    const double x = as_number(v, kp);
    if (!(x > 0.0)) fail(kp, "must be positive");
    return x;
}

std::size_t as_count(const json& v, const std::string& kp) {
    if (!v.is_number_integer() && !v.is_number_unsigned())
        fail(kp, "expected a positive integer");
    if (v.is_number_integer() && v.get<long long>() <= 0)
        fail(kp, "must be positive");
    return v.get<std::uint64_t>();
}

std::uint64_t as_seed(const json& v, const std::string& kp) {
    if (!v.is_number_integer() && !v.is_number_unsigned())
        fail(kp, "expected an integer");
    if (v.is_number_integer() && v.get<long long>() < 0)
        fail(kp, "must be nonnegative");
    return v.get<std::uint64_t>();
}

std::string as_string(const json& v, const std::string& kp) {
    if (!v.is_string()) fail(kp, "expected a string");
    return v.get<std::string>();
}

std::vector<double> as_positive_list(const json& v, const std::string& kp) {
    if (!v.is_array() || v.empty()) fail(kp, "expected a non-empty array");
    std::vector<double> out;
    out.reserve(v.size());
    for (std::size_t i = 0; i < v.size(); ++i)
        out.push_back(as_positive(v[i], kp + "[" + std::to_string(i) + "]"));
    return out;
}

void check_keys(const json& obj, const std::string& prefix,
                const std::set<std::string>& known) {
    for (const auto& [k, v] : obj.items())
        if (!known.count(k))
            fail(prefix.empty() ? k : prefix + "." + k, "unknown key");
}

void parse_methods(const json& jm, MethodsConfig& m) {
    if (!jm.is_object() || jm.empty())
        fail("methods", "at least one method must be requested");
    for (const auto& [name, v] : jm.items()) {
        const std::string kp = "methods." + name;
        if (!v.is_object()) fail(kp, "expected an object");
        if (name == "analytic") {
            check_keys(v, kp, {});
            m.analytic = true;
        } else if (name == "numerical") {
            check_keys(v, kp, {"N"});
            m.numerical = true;
            if (v.contains("N")) m.numerical_n = as_count(v["N"], kp + ".N");
        } else if (name == "quantization") {
            check_keys(v, kp, {"N"});
            m.quantization = true;
            if (v.contains("N"))
                m.quantization_n = as_count(v["N"], kp + ".N");
        } else if (name == "mc") {
            check_keys(v, kp, {"N", "seed", "mode"});
            m.mc = true;
            if (v.contains("N")) m.mc_cfg.n = as_count(v["N"], kp + ".N");
            if (v.contains("seed"))
                m.mc_cfg.seed = as_seed(v["seed"], kp + ".seed");
            if (v.contains("mode")) {
                const std::string mode = as_string(v["mode"], kp + ".mode");
                if (mode == "djs")
                    m.mc_cfg.mode = exposure::McMode::djs;
                else if (mode == "pds")
                    m.mc_cfg.mode = exposure::McMode::pds;
                else
                    fail(kp + ".mode", "expected \"djs\" or \"pds\"");
            }
        } else if (name == "sobol") {
            check_keys(v, kp, {"N"});
            m.sobol = true;
            if (v.contains("N")) m.sobol_n = as_count(v["N"], kp + ".N");
        } else if (name == "benchmark") {
            check_keys(v, kp, {"N"});
            m.benchmark = true;
            if (v.contains("N")) m.benchmark_n = as_count(v["N"], kp + ".N");
        } else {
            fail(kp, "unknown method");
        }
    }
}

// "kw" up to one month, then "km", whole years "ky"; anything off the weekly
// and monthly lattices prints as a plain number.
std::string bucket_label(double t) {
    const auto as_int = [](double x) -> long {
        const double r = std::round(x);
        return (r >= 1.0 && std::abs(x - r) < 1e-9) ? static_cast<long>(r)
                                                    : 0;
    };
    if (const long k = as_int(t)) return std::to_string(k) + "y";
    if (const long k = as_int(t * 52.0); k && k <= 4)
        return std::to_string(k) + "w";
    if (const long k = as_int(t * 12.0)) return std::to_string(k) + "m";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", t);
    return buf;
}

std::string fmt_num(double v, bool raw) {
    if (std::isnan(v)) return "NaN";
    char buf[40];
    std::snprintf(buf, sizeof buf, raw ? "%.17g" : "%.4f", v);
    return buf;
}

std::string fmt_g(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

double pct(double x) { return 100.0 * x; }

market::BucketGrid make_buckets(const RunConfig& cfg) {
    if (cfg.bucket_times.empty()) return market::default_buckets();
    try {
        return market::BucketGrid(cfg.bucket_times);
    } catch (const std::exception& e) {
        fail("buckets", e.what());
    }
}

quant::QuantizerGrid get_grid(std::size_t n, const fs::path& cache) {
    if (cache.empty()) return quant::build_grid(n);
    const fs::path file = cache / ("grid_" + std::to_string(n) + ".txt");
    if (fs::exists(file)) return quant::load_grid(file);
    const quant::QuantizerGrid grid = quant::build_grid(n);
    fs::create_directories(cache);
    quant::save_grid(grid, file);
    return grid;
}

enum class Cmd { exposure, portfolio, sweep };

struct CellOut {
    double spot = 0.0;
    double vol = 0.0;
    std::optional<exposure::ExposureProfile> analytic, numerical, quantization,
        mc, sobol, benchmark;
    std::optional<exposure::ErrorMetrics> numerical_err, quantization_err,
        mc_err, sobol_err;
    std::vector<std::string> errors;
};

double cell_ee(const std::optional<exposure::ExposureProfile>& p,
               std::size_t k) {
    return p ? p->ee[k] : nan;
}
double cell_epe(const std::optional<exposure::ExposureProfile>& p) {
    return p ? p->epe : nan;
}
double cell_eps(const std::optional<exposure::ErrorMetrics>& m,
                std::size_t k) {
    return m ? m->eps[k] : nan;
}
double cell_rsd(const std::optional<exposure::ErrorMetrics>& m,
                std::size_t k) {
    return m ? m->rsd[k] : nan;
}

std::optional<exposure::ErrorMetrics> metrics_of(
    const std::optional<exposure::ExposureProfile>& prof,
    const std::optional<exposure::ExposureProfile>& bench) {
    if (!prof) return std::nullopt;
    // RSD columns need no benchmark: fall back to the profile itself, whose
    // eps against itself is discarded.
    const exposure::ExposureProfile& b = bench ? *bench : *prof;
    return exposure::error_metrics(*prof, b);
}

CellOut compute_cell(Cmd cmd, const RunConfig& cfg, const RunOptions& opt,
                     const market::BucketGrid& buckets,
                     const std::optional<market::Portfolio>& ptf,
                     const quant::QuantizerGrid* grid, std::size_t cell_index,
                     double spot, double vol) {
    CellOut out;
    out.spot = spot;
    out.vol = vol;

    exposure::ExposureTask task{
        ptf ? std::variant<market::OptionSpec, market::Portfolio>(*ptf)
            : std::variant<market::OptionSpec, market::Portfolio>(
                  market::OptionSpec{cfg.kind, cfg.side, cfg.strike,
                                     cfg.maturity, 1.0}),
        market::MarketParams{spot, cfg.rate, vol}, buckets, cfg.collateral};

    const auto guard = [&](const char* name,
                           std::optional<exposure::ExposureProfile>& dst,
                           auto&& fn) {
        try {
            dst = fn();
            if (opt.discount) dst = exposure::discounted(*dst, task);
        } catch (const std::exception& e) {
            out.errors.push_back(std::string(name) + ": " + e.what());
        }
    };

    const MethodsConfig& m = cfg.methods;
    if (cmd != Cmd::portfolio)
        guard("analytic", out.analytic,
              [&] { return exposure::ee_analytic(task); });
    if (cmd == Cmd::portfolio)
        guard("benchmark", out.benchmark, [&] {
            return exposure::ee_sobol(task, m.benchmark_n);
        });
    if (m.numerical && cmd != Cmd::portfolio)
        guard("numerical", out.numerical,
              [&] { return exposure::ee_numerical(task, m.numerical_n); });
    if (m.quantization)
        guard("quantization", out.quantization, [&] {
            if (!grid)
                throw std::runtime_error("grid unavailable");
            return exposure::ee_quantized_djs(task, *grid);
        });
    if (m.mc)
        guard("mc", out.mc, [&] {
            sampling::NormalStream stream =
                sampling::NormalStream::pseudo(m.mc_cfg.seed, buckets.size())
                    .substream(cell_index);
            return exposure::ee_mc(task, m.mc_cfg.n, m.mc_cfg.mode, stream);
        });
    if (m.sobol)
        guard("sobol", out.sobol, [&] {
            return exposure::ee_sobol(task, m.sobol_n, 0,
                                      cmd == Cmd::portfolio);
        });

    const auto& bench = cmd == Cmd::portfolio ? out.benchmark : out.analytic;
    out.numerical_err = metrics_of(out.numerical, bench);
    out.quantization_err = metrics_of(out.quantization, bench);
    out.mc_err = metrics_of(out.mc, bench);
    out.sobol_err = metrics_of(out.sobol, bench);
    return out;
}

template <typename Fn>
void for_each_cell(std::size_t count, unsigned jobs, Fn&& fn) {
    const std::size_t workers =
        std::min<std::size_t>(std::max(1u, jobs), count);
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= count) return;
                fn(i);
            }
        });
    for (auto& t : pool) t.join();
}

std::string cell_stem(const char* prefix, double spot, double vol) {
    return std::string(prefix) + "_s" + fmt_g(spot) + "_v" +
           fmt_g(pct(vol));
}

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path.string());
    out << content;
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

std::string render_exposure(const CellOut& c, const market::BucketGrid& b,
                            bool raw) {
    std::ostringstream os;
    os << "bucket,analytic_ee,numerical_ee,numerical_eps_pct,"
          "quantization_ee,quantization_eps_pct,mc_ee,mc_rsd_pct,"
          "sobol_ee,sobol_eps_pct\n";
    for (std::size_t k = 0; k < b.size(); ++k)
        os << bucket_label(b.times()[k]) << ','
           << fmt_num(cell_ee(c.analytic, k), raw) << ','
           << fmt_num(cell_ee(c.numerical, k), raw) << ','
           << fmt_num(pct(cell_eps(c.numerical_err, k)), raw) << ','
           << fmt_num(cell_ee(c.quantization, k), raw) << ','
           << fmt_num(pct(cell_eps(c.quantization_err, k)), raw) << ','
           << fmt_num(cell_ee(c.mc, k), raw) << ','
           << fmt_num(pct(cell_rsd(c.mc_err, k)), raw) << ','
           << fmt_num(cell_ee(c.sobol, k), raw) << ','
           << fmt_num(pct(cell_eps(c.sobol_err, k)), raw) << '\n';
    os << "EPE," << fmt_num(cell_epe(c.analytic), raw) << ','
       << fmt_num(cell_epe(c.numerical), raw) << ','
       << fmt_num(pct(c.numerical_err ? c.numerical_err->epe_eps : nan), raw)
       << ',' << fmt_num(cell_epe(c.quantization), raw) << ','
       << fmt_num(pct(c.quantization_err ? c.quantization_err->epe_eps : nan),
                  raw)
       << ',' << fmt_num(cell_epe(c.mc), raw) << ','
       << fmt_num(pct(c.mc_err ? c.mc_err->epe_rsd : nan), raw) << ','
       << fmt_num(cell_epe(c.sobol), raw) << ','
       << fmt_num(pct(c.sobol_err ? c.sobol_err->epe_eps : nan), raw) << '\n';
    return os.str();
}

std::string render_portfolio(const CellOut& c, const market::BucketGrid& b,
                             bool raw) {
    std::ostringstream os;
    os << "bucket,benchmark_ee,quantization_ee,quantization_eps_pct,"
          "mc_ee,mc_rsd_pct,sobol_ee,sobol_rsd_pct\n";
    for (std::size_t k = 0; k < b.size(); ++k)
        os << bucket_label(b.times()[k]) << ','
           << fmt_num(cell_ee(c.benchmark, k), raw) << ','
           << fmt_num(cell_ee(c.quantization, k), raw) << ','
           << fmt_num(pct(cell_eps(c.quantization_err, k)), raw) << ','
           << fmt_num(cell_ee(c.mc, k), raw) << ','
           << fmt_num(pct(cell_rsd(c.mc_err, k)), raw) << ','
           << fmt_num(cell_ee(c.sobol, k), raw) << ','
           << fmt_num(pct(cell_rsd(c.sobol_err, k)), raw) << '\n';
    os << "EPE," << fmt_num(cell_epe(c.benchmark), raw) << ','
       << fmt_num(cell_epe(c.quantization), raw) << ','
       << fmt_num(pct(c.quantization_err ? c.quantization_err->epe_eps : nan),
                  raw)
       << ',' << fmt_num(cell_epe(c.mc), raw) << ','
       << fmt_num(pct(c.mc_err ? c.mc_err->epe_rsd : nan), raw) << ','
       << fmt_num(cell_epe(c.sobol), raw) << ','
       << fmt_num(pct(c.sobol_err ? c.sobol_err->epe_rsd : nan), raw) << '\n';
    return os.str();
}

std::string render_sweep(const std::vector<CellOut>& cells,
                         const RunConfig& cfg, const market::BucketGrid& b,
                         bool raw) {
    std::ostringstream os;
    os << "spot,vol,method,bucket,ee,metric_pct\n";
    for (const CellOut& c : cells) {
        struct Row {
            const char* name;
            const std::optional<exposure::ExposureProfile>* prof;
            const std::optional<exposure::ErrorMetrics>* err;
            bool rsd;  // metric column: relative dispersion, not eps
        };
        const Row rows[] = {
            {"numerical", &c.numerical, &c.numerical_err, false},
            {"quantization", &c.quantization, &c.quantization_err, false},
            {"mc", &c.mc, &c.mc_err, true},
            {"sobol", &c.sobol, &c.sobol_err, false},
        };
        for (const Row& r : rows) {
            const bool requested =
                (r.name == std::string("numerical") && cfg.methods.numerical) ||
                (r.name == std::string("quantization") &&
                 cfg.methods.quantization) ||
                (r.name == std::string("mc") && cfg.methods.mc) ||
                (r.name == std::string("sobol") && cfg.methods.sobol);
            if (!requested) continue;
            for (std::size_t k = 0; k < b.size(); ++k) {
                const double metric = r.rsd ? cell_rsd(*r.err, k)
                                            : cell_eps(*r.err, k);
                os << fmt_g(c.spot) << ',' << fmt_g(c.vol) << ',' << r.name
                   << ',' << bucket_label(b.times()[k]) << ','
                   << fmt_num(cell_ee(*r.prof, k), raw) << ','
                   << fmt_num(pct(metric), raw) << '\n';
            }
        }
    }
    return os.str();
}

struct Prepared {
    RunConfig cfg;
    market::BucketGrid buckets;
    std::optional<market::Portfolio> portfolio;
    std::optional<quant::QuantizerGrid> grid;
    std::vector<CellOut> cells;
    std::vector<std::string> global_errors;
};

Prepared run_cells(Cmd cmd, const RunConfig& cfg0, const RunOptions& opt) {
    RunConfig cfg = cfg0;
    if (!opt.output.empty()) cfg.output = opt.output;
    if (opt.seed) cfg.methods.mc_cfg.seed = *opt.seed;

    Prepared prep{std::move(cfg), make_buckets(cfg0), std::nullopt,
                  std::nullopt, {}, {}};
    const RunConfig& c = prep.cfg;

    if (cmd == Cmd::portfolio) {
        if (c.portfolio_path.empty())
            fail("target", "the portfolio command needs a portfolio file");
        try {
            prep.portfolio = market::load_portfolio(c.portfolio_path);
        } catch (const std::exception& e) {
            fail("target", e.what());
        }
    } else if (!c.portfolio_path.empty()) {
        fail("target",
             "this command studies a single inline option; use the portfolio "
             "command for netting sets");
    }

    if (c.methods.quantization) {
        try {
            prep.grid = get_grid(c.methods.quantization_n, c.grid_cache);
        } catch (const std::exception& e) {
            prep.global_errors.push_back(std::string("quantization: ") +
                                         e.what());
        }
    }

    const std::size_t count = c.spots.size() * c.vols.size();
    prep.cells.resize(count);
    for_each_cell(count, opt.jobs, [&](std::size_t i) {
        const double spot = c.spots[i / c.vols.size()];
        const double vol = c.vols[i % c.vols.size()];
        prep.cells[i] =
            compute_cell(cmd, c, opt, prep.buckets, prep.portfolio,
                         prep.grid ? &*prep.grid : nullptr, i, spot, vol);
    });
    return prep;
}

int finish(const Prepared& prep, const char* cmd_name) {
    bool failed = !prep.global_errors.empty();
    for (const std::string& e : prep.global_errors)
        std::cerr << cmd_name << ": " << e << '\n';
    for (const CellOut& c : prep.cells)
        for (const std::string& e : c.errors) {
            failed = true;
            std::cerr << cmd_name << " s=" << fmt_g(c.spot)
                      << " v=" << fmt_g(pct(c.vol)) << "%: " << e << '\n';
        }
    return failed ? 1 : 0;
}

}  // namespace

RunConfig load_config(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config file: " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();

    json root;
    try {
        root = json::parse(ss.str());
    } catch (const json::parse_error& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
    if (!root.is_object())
        throw ConfigError(path.string() + ": config root must be an object");

    check_keys(root, "",
               {"target", "kind", "side", "strike", "maturity", "spots",
                "vols", "rate", "buckets", "collateral", "methods", "output",
                "grid_cache"});

    RunConfig cfg;
    if (root.contains("target"))
        cfg.portfolio_path = as_string(root["target"], "target");
    if (root.contains("kind")) {
        const std::string v = as_string(root["kind"], "kind");
        if (v == "call")
            cfg.kind = market::OptionKind::call;
        else if (v == "put")
            cfg.kind = market::OptionKind::put;
        else
            fail("kind", "expected \"call\" or \"put\"");
    }
    if (root.contains("side")) {
        const std::string v = as_string(root["side"], "side");
        if (v == "buy")
            cfg.side = market::Side::buy;
        else if (v == "sell")
            cfg.side = market::Side::sell;
        else
            fail("side", "expected \"buy\" or \"sell\"");
    }
    if (root.contains("strike"))
        cfg.strike = as_positive(root["strike"], "strike");
    if (root.contains("maturity"))
        cfg.maturity = as_positive(root["maturity"], "maturity");
    if (root.contains("spots"))
        cfg.spots = as_positive_list(root["spots"], "spots");
    if (root.contains("vols"))
        cfg.vols = as_positive_list(root["vols"], "vols");
    if (root.contains("rate")) cfg.rate = as_number(root["rate"], "rate");
    if (root.contains("buckets")) {
        cfg.bucket_times = as_positive_list(root["buckets"], "buckets");
        try {
            market::BucketGrid check(cfg.bucket_times);
        } catch (const std::exception& e) {
            fail("buckets", e.what());
        }
    }
    if (root.contains("collateral"))
        cfg.collateral = as_number(root["collateral"], "collateral");
    if (!root.contains("methods"))
        fail("methods", "at least one method must be requested");
    parse_methods(root["methods"], cfg.methods);
    if (root.contains("output"))
        cfg.output = fs::path(as_string(root["output"], "output"));
    if (root.contains("grid_cache"))
        cfg.grid_cache = fs::path(as_string(root["grid_cache"], "grid_cache"));
    return cfg;
}

int run_grid(std::size_t n, double tol, const fs::path& out) {
    quant::BuildReport report;
    const quant::QuantizerGrid grid = quant::build_grid(n, tol, 100000,
                                                        &report);
    quant::save_grid(grid, out);
    std::printf(
        "grid n=%zu distortion=%.12g stationarity_residual=%.3g "
        "iterations=%zu -> %s\n",
        grid.size(), grid.distortion, report.residual, report.iterations,
        out.string().c_str());
    return 0;
}

int run_exposure(const RunConfig& cfg, const RunOptions& opt) {
    const Prepared prep = run_cells(Cmd::exposure, cfg, opt);
    fs::create_directories(prep.cfg.output);
    for (const CellOut& c : prep.cells) {
        const std::string stem = cell_stem("exposure", c.spot, c.vol);
        write_file(prep.cfg.output / (stem + ".csv"),
                   render_exposure(c, prep.buckets, false));
        write_file(prep.cfg.output / (stem + "-raw.csv"),
                   render_exposure(c, prep.buckets, true));
    }
    return finish(prep, "exposure");
}

int run_portfolio(const RunConfig& cfg, const RunOptions& opt) {
    const Prepared prep = run_cells(Cmd::portfolio, cfg, opt);
    fs::create_directories(prep.cfg.output);
    for (const CellOut& c : prep.cells) {
        const std::string stem = cell_stem("portfolio", c.spot, c.vol);
        write_file(prep.cfg.output / (stem + ".csv"),
                   render_portfolio(c, prep.buckets, false));
        write_file(prep.cfg.output / (stem + "-raw.csv"),
                   render_portfolio(c, prep.buckets, true));
    }
    return finish(prep, "portfolio");
}

int run_sweep(const RunConfig& cfg, const RunOptions& opt) {
    const Prepared prep = run_cells(Cmd::sweep, cfg, opt);
    fs::create_directories(prep.cfg.output);
    write_file(prep.cfg.output / "sweep.csv",
               render_sweep(prep.cells, prep.cfg, prep.buckets, false));
    write_file(prep.cfg.output / "sweep-raw.csv",
               render_sweep(prep.cells, prep.cfg, prep.buckets, true));
    return finish(prep, "sweep");
}

}  // namespace ccr::cli
