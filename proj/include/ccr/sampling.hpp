#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace ccr::sampling {

inline constexpr std::uint64_t default_seed = 0x5EEDCCE0ull;

// Maximum Sobol dimension backed by the embedded direction numbers.
std::size_t sobol_max_dimension();

// xoshiro256++ with splitmix64 seeding. F2-linear state transition, period
// 2^256 - 1; jump() advances by 2^128 steps, giving disjoint substreams.
class Xoshiro256 {
public:
    explicit Xoshiro256(std::uint64_t seed);

    std::uint64_t next();
    // Uniform on (0, 1): dyadic midpoint of the 53-bit lattice, never 0 or 1.
    double next_uniform();
    void jump();

private:
    std::uint64_t s_[4];
};

// Unscrambled Sobol sequence. Index 0 is the all-zeros point; points are
// generated on a 52-bit lattice, so every coordinate lies in (0, 1) from
// index 1 on.
class SobolSequence {
public:
    // Starts so that the first emitted point has the given index.
    explicit SobolSequence(std::size_t dim, std::uint64_t first_index = 0);

    std::size_t dim() const { return dim_; }
    std::uint64_t next_index() const { return index_; }
    // Writes the point with the current index and advances.
    void next_uniforms(std::span<double> out);

private:
    std::size_t dim_;
    std::uint64_t index_;
    std::vector<std::uint64_t> v_;  // direction numbers, dim x 52
    std::vector<std::uint64_t> y_;  // Gray-code state for index_ - 1
};

enum class StreamKind { pseudo, sobol };

// Stream of N(0, 1) rows of fixed dimension, produced by inverse transform
// of either generator. Sobol streams skip the all-zeros point: the first row
// drawn from a fresh stream is the index-1 point, i.e. all coordinates 0.
class NormalStream {
public:
    static NormalStream pseudo(std::uint64_t seed = default_seed,
                               std::size_t dim = 1);
    // skip shifts the stream start: the first row is the point with index
    // skip + 1. Parallel consumers take disjoint index blocks.
    static NormalStream sobol(std::size_t dim, std::uint64_t skip = 0);

    StreamKind kind() const { return kind_; }
    std::size_t dim() const { return dim_; }

    // Fills one row of dim standard normals.
    void draw(std::span<double> row);

    // Pseudo streams only: an independent stream 2^128 (worker + 1) steps
    // ahead of this one's seed state.
    NormalStream substream(std::uint64_t worker) const;

private:
    NormalStream(StreamKind kind, std::size_t dim, std::uint64_t seed,
                 std::uint64_t skip);

    StreamKind kind_;
    std::size_t dim_;
    std::uint64_t seed_;
    Xoshiro256 rng_;
    SobolSequence sobol_;
};

// n rows of stream.dim() normals, row-major.
std::vector<double> draw_normals(NormalStream& stream, std::size_t n);

}  // namespace ccr::sampling
