#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "ccr/market.hpp"
#include "ccr/quantizer.hpp"
#include "ccr/sampling.hpp"

namespace ccr::exposure {

enum class Method { analytic, numerical, quantization, quantization_tree, mc, sobol };

enum class McMode {
    pds,  // path-dependent simulation: one Brownian path per draw
    djs,  // date-of-default joint simulation: independent normal per bucket
};

const char* method_name(Method m);

// One estimation problem: a position (single option or netting set), the
// market it lives in, the bucket dates, and a constant collateral amount
// subtracted from the netted mark-to-market before taking the positive part.
struct ExposureTask {
    std::variant<market::OptionSpec, market::Portfolio> target;
    market::MarketParams market;
    market::BucketGrid buckets;
    double collateral = 0.0;
};

// Netted mark-to-market minus collateral, floored at zero.
double exposure_at(const ExposureTask& task, double t, double z);

// Exposure profile over the task's buckets. epe and eepe are time-averages
// over [0, t_K] with left-endpoint weights dt_k / t_K; eee is the running
// maximum of ee. stderr_ and epe_stderr are filled by the simulation
// estimators only (for Sobol they are the nominal iid dispersion, not an
// error bound). pfe maps a confidence level to the per-bucket quantiles.
struct ExposureProfile {
    Method method = Method::analytic;
    std::vector<double> ee;
    std::vector<double> eee;
    double epe = 0.0;
    double eepe = 0.0;
    std::vector<double> stderr_;
    double epe_stderr = 0.0;
    std::map<double, std::vector<double>> pfe;
};

// Left-continuous quantile of a weighted discrete distribution: the smallest
// atom whose cumulative weight reaches alpha. Weights need not be normalized.
double weighted_quantile(std::span<const double> values,
                         std::span<const double> weights, double alpha);

// Closed form for a single bought option without collateral: the discounted
// mark-to-market is a martingale and stays nonnegative, so
// EE_k = quantity * price_0 * exp(r t_k). Anything else has no such form and
// is rejected.
ExposureProfile ee_analytic(const ExposureTask& task);

// Midpoint rule on z in [-6, 6] with n cells, weights phi(z_i) * h. The
// truncated tail mass is ~2e-9 and the integrand is smooth, so the rule is
// far more accurate than its generic O(h^2) bound.
ExposureProfile ee_numerical(const ExposureTask& task, std::size_t n = 1000,
                             const std::vector<double>& alphas = {});

// Marginal quantization: bucket k uses the optimal grid of W_{t_k}/sqrt(t_k),
// EE_k = sum_i p_i * exposure(t_k, x_i). One grid shared by every bucket, or
// one grid per bucket.
ExposureProfile ee_quantized_djs(const ExposureTask& task,
                                 const quant::QuantizerGrid& grid,
                                 const std::vector<double>& alphas = {});
ExposureProfile ee_quantized_djs(const ExposureTask& task,
                                 const std::vector<quant::QuantizerGrid>& grids,
                                 const std::vector<double>& alphas = {});

// Quantization tree: marginal weights are propagated through the transition
// chain, q_{k+1} = q_k pi^k, instead of read off the grids. Agrees with the
// marginal estimator up to quadrature and pruning error.
ExposureProfile ee_quantized_tree(const ExposureTask& task,
                                  const std::vector<quant::QuantizerGrid>& grids,
                                  double prune_z = gauss::inf,
                                  const std::vector<double>& alphas = {});

// Monte Carlo with n_paths draws from the stream, which must have dimension
// equal to the number of buckets. djs consumes one independent normal per
// bucket; pds consumes Brownian increments along a path.
ExposureProfile ee_mc(const ExposureTask& task, std::size_t n_paths,
                      McMode mode, sampling::NormalStream& stream,
                      const std::vector<double>& alphas = {});

// Sobol points skip+1 .. skip+n, one coordinate per bucket (marginal scheme).
// with_dispersion fills stderr_ / epe_stderr with the iid formulas; for a
// low-discrepancy sequence these are nominal, not confidence half-widths.
ExposureProfile ee_sobol(const ExposureTask& task, std::size_t n,
                         std::uint64_t skip = 0, bool with_dispersion = false,
                         const std::vector<double>& alphas = {});

// Relative errors of prof against bench (NaN where the benchmark vanishes)
// and relative statistical dispersions of prof itself (NaN without stderr_).
struct ErrorMetrics {
    std::vector<double> eps;
    std::vector<double> rsd;
    double epe_eps = 0.0;
    double epe_rsd = 0.0;
};

ErrorMetrics error_metrics(const ExposureProfile& prof,
                           const ExposureProfile& bench);

// Same profile with every bucket quantity discounted by exp(-r t_k) and the
// time-averages recomputed.
ExposureProfile discounted(const ExposureProfile& profile,
                           const ExposureTask& task);

}  // namespace ccr::exposure
