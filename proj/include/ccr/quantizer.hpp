#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "ccr/gaussian.hpp"

namespace ccr::quant {

// Optimal quadratic quantizer of N(0, 1). Points are strictly increasing,
// probs are the Voronoi cell masses (midpoint boundaries, sum 1), and
// distortion is E[min_i (X - x_i)^2].
struct QuantizerGrid {
    std::vector<double> points;
    std::vector<double> probs;
    double distortion = 0.0;

    std::size_t size() const { return points.size(); }
};

struct BuildReport {
    std::size_t iterations = 0;
    double movement = 0.0;  // largest point move in the final iteration
    double residual = 0.0;  // max_i |x_i - E[X | cell_i]|
};

// Raised when the fixed point is not reached within the iteration cap; carries
// the stationarity residual of the last iterate.
class ConvergenceError : public std::runtime_error {
public:
    ConvergenceError(const std::string& what, double residual)
        : std::runtime_error(what), residual_(residual) {}
    double residual() const { return residual_; }

private:
    double residual_;
};

// Voronoi boundaries for a sorted point set: n+1 values, midpoints inside,
// +-inf at the ends.
std::vector<double> boundaries(const std::vector<double>& points);

// Cell masses for a sorted point set.
std::vector<double> cell_probabilities(const std::vector<double>& points);

// Distortion of the Voronoi quantizer induced by a sorted point set,
// evaluated in closed form from truncated moments.
double grid_distortion(const std::vector<double>& points);

// max_i |x_i - E[X | cell_i]|; zero exactly at a stationary grid.
double stationarity_residual(const std::vector<double>& points);

// Builds the optimal grid by Lloyd fixed-point iteration started at the
// quantiles (2i-1)/(2n), accelerated with Newton steps on the stationarity
// system. Converges when the largest point movement falls below tol; throws
// ConvergenceError after max_iter iterations.
QuantizerGrid build_grid(std::size_t n, double tol = 1e-10,
                         std::size_t max_iter = 100000,
                         BuildReport* report = nullptr);

// Text format: "N=<n>" header, then n lines "x_i<TAB>p_i" with 17
// significant digits, enough to round-trip doubles exactly.
void save_grid(const QuantizerGrid& grid, const std::filesystem::path& path);

// Throws std::runtime_error naming the offending line on malformed input.
QuantizerGrid load_grid(const std::filesystem::path& path);

// Transition probabilities between the scaled grids of consecutive buckets:
// pi(i, j) = P(W_{t1} in sqrt(t1) C_j | W_t0 in sqrt(t0) C_i). Rows are
// stochastic within 1e-8. pruned marks entries zeroed by the distance
// heuristic; their row was renormalized.
struct TransitionMatrix {
    std::size_t step = 0;  // index of the originating bucket
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> pi;              // row-major
    std::vector<std::uint8_t> pruned;    // row-major mask

    double operator()(std::size_t i, std::size_t j) const {
        return pi[i * cols + j];
    }
};

// Computes the matrix by adaptive Gauss-Kronrod quadrature (absolute
// tolerance 1e-10 per entry) of the exact conditional kernel. Entries whose
// standardized point distance |x_j sqrt(t1) - x_i sqrt(t0)| / sqrt(t1 - t0)
// exceeds prune_z are zeroed and the row renormalized; the default threshold
// of +inf disables pruning. Requires 0 < t0 < t1; the first bucket of a tree
// starts from a deterministic point and takes the marginal probabilities
// instead of a transition row.
TransitionMatrix transition_matrix(const QuantizerGrid& from, double t0,
                                   const QuantizerGrid& to, double t1,
                                   double prune_z = gauss::inf);

// Matrices for every consecutive pair of buckets; step is set to the index
// of the originating bucket (0-based).
std::vector<TransitionMatrix> transition_chain(
    const std::vector<QuantizerGrid>& grids, const std::vector<double>& times,
    double prune_z = gauss::inf);

// max_j |sum_i p_from_i pi(i, j) - p_to_j|: discrepancy of the propagated
// marginal against the direct one.
double chapman_check(const std::vector<double>& p_from,
                     const TransitionMatrix& pi,
                     const std::vector<double>& p_to);

}  // namespace ccr::quant
