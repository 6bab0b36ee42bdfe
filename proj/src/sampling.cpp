#include "ccr/sampling.hpp"

#include <bit>
#include <cmath>
#include <stdexcept>

#include "ccr/gaussian.hpp"

namespace ccr::sampling {

namespace {

constexpr int sobol_bits = 52;

// Primitive polynomials and initial direction numbers (Joe and Kuo),
// dimensions 2..40. poly is the full GF(2) encoding including leading
// and trailing coefficients; m holds the degree-many initial values.
constexpr std::uint32_t kSobolPoly[] = {
    3, 7, 11, 13, 19, 25, 37, 41, 47, 55, 59, 61, 67, 91, 97, 103, 109, 115,
    131, 137, 143, 145, 157, 167, 171, 185, 191, 193, 203, 211, 213, 229, 239,
    241, 247, 253, 285, 299, 301,
};

constexpr std::uint32_t kSobolMinit[] = {
    1,
    1, 3,
    1, 3, 1,
    1, 1, 1,
    1, 1, 3, 3,
    1, 3, 5, 13,
    1, 1, 5, 5, 17,
    1, 1, 5, 5, 5,
    1, 1, 7, 11, 19,
    1, 1, 5, 1, 1,
    1, 1, 1, 3, 11,
    1, 3, 5, 5, 31,
    1, 3, 3, 9, 7, 49,
    1, 1, 1, 15, 21, 21,
    1, 3, 1, 13, 27, 49,
    1, 1, 1, 15, 7, 5,
    1, 3, 1, 15, 13, 25,
    1, 1, 5, 5, 19, 61,
    1, 3, 7, 11, 23, 15, 103,
    1, 3, 7, 13, 13, 15, 69,
    1, 1, 3, 13, 7, 35, 63,
    1, 3, 5, 9, 1, 25, 53,
    1, 3, 1, 13, 9, 35, 107,
    1, 3, 1, 5, 27, 61, 31,
    1, 1, 5, 11, 19, 41, 61,
    1, 3, 5, 3, 3, 13, 69,
    1, 1, 7, 13, 1, 19, 1,
    1, 3, 7, 5, 13, 19, 59,
    1, 1, 3, 9, 25, 29, 41,
    1, 3, 5, 13, 23, 1, 55,
    1, 3, 7, 3, 13, 59, 17,
    1, 3, 1, 3, 5, 53, 69,
    1, 1, 5, 5, 23, 33, 13,
    1, 1, 7, 7, 1, 61, 123,
    1, 1, 7, 9, 13, 61, 49,
    1, 3, 3, 5, 3, 55, 33,
    1, 3, 1, 15, 31, 13, 49, 245,
    1, 3, 5, 15, 31, 59, 63, 97,
    1, 3, 1, 11, 11, 11, 77, 249,
};

constexpr std::size_t kSobolDims =
    sizeof(kSobolPoly) / sizeof(kSobolPoly[0]) + 1;

std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
}

}  // namespace

std::size_t sobol_max_dimension() { return kSobolDims; }

Xoshiro256::Xoshiro256(std::uint64_t seed) {
    std::uint64_t sm = seed;
    for (auto& s : s_) s = splitmix64(sm);
}

std::uint64_t Xoshiro256::next() {
    const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
}

double Xoshiro256::next_uniform() {
    return (static_cast<double>(next() >> 11) + 0.5) * 0x1.0p-53;
}

void Xoshiro256::jump() {
    static constexpr std::uint64_t steps[4] = {
        0x180ec6d33cfd0abaull, 0xd5a61266f0c9392cull, 0xa9582618e03fc9aaull,
        0x39abdc4529b1661cull};
    std::uint64_t acc[4] = {0, 0, 0, 0};
    for (std::uint64_t step : steps) {
        for (int b = 0; b < 64; ++b) {
            if (step & (1ull << b))
                for (int w = 0; w < 4; ++w) acc[w] ^= s_[w];
            next();
        }
    }
    for (int w = 0; w < 4; ++w) s_[w] = acc[w];
}

SobolSequence::SobolSequence(std::size_t dim, std::uint64_t first_index)
    : dim_(dim), index_(first_index) {
    if (dim == 0)
        throw std::invalid_argument("sampling::SobolSequence: dim must be >= 1");
    if (dim > kSobolDims)
        throw std::invalid_argument(
            "sampling::SobolSequence: only " + std::to_string(kSobolDims) +
            " dimensions of direction numbers are available");
    if (first_index >= (1ull << sobol_bits))
        throw std::invalid_argument("sampling::SobolSequence: index overflow");

    v_.assign(dim * sobol_bits, 0);
    std::uint64_t m[sobol_bits];
    std::size_t offset = 0;
    for (std::size_t j = 0; j < dim; ++j) {
        if (j == 0) {
            for (int k = 0; k < sobol_bits; ++k) m[k] = 1;
        } else {
            const std::uint32_t poly = kSobolPoly[j - 1];
            const int s = std::bit_width(poly) - 1;
            for (int k = 0; k < s; ++k) m[k] = kSobolMinit[offset + k];
            offset += static_cast<std::size_t>(s);
            for (int k = s; k < sobol_bits; ++k) {
                std::uint64_t mk = m[k - s] ^ (m[k - s] << s);
                for (int t = 1; t < s; ++t)
                    if ((poly >> (s - t)) & 1u) mk ^= m[k - t] << t;
                m[k] = mk;
            }
        }
        for (int k = 0; k < sobol_bits; ++k)
            v_[j * sobol_bits + k] = m[k] << (sobol_bits - 1 - k);
    }

    // Gray-code state for the first point, built directly from its index.
    y_.assign(dim, 0);
    const std::uint64_t gray = first_index ^ (first_index >> 1);
    for (int b = 0; b < sobol_bits; ++b)
        if (gray & (1ull << b))
            for (std::size_t j = 0; j < dim; ++j)
                y_[j] ^= v_[j * sobol_bits + b];
}

void SobolSequence::next_uniforms(std::span<double> out) {
    if (out.size() != dim_)
        throw std::invalid_argument("sampling::SobolSequence: bad row size");
    for (std::size_t j = 0; j < dim_; ++j)
        out[j] = static_cast<double>(y_[j]) * 0x1.0p-52;
    ++index_;
    if (index_ >= (1ull << sobol_bits))
        throw std::runtime_error("sampling::SobolSequence: index overflow");
    const int b = std::countr_zero(index_);
    for (std::size_t j = 0; j < dim_; ++j) y_[j] ^= v_[j * sobol_bits + b];
}

NormalStream::NormalStream(StreamKind kind, std::size_t dim,
                           std::uint64_t seed, std::uint64_t skip)
    : kind_(kind),
      dim_(dim),
      seed_(seed),
      rng_(seed),
      sobol_(kind == StreamKind::sobol ? dim : 1,
             kind == StreamKind::sobol ? skip + 1 : 0) {
    if (dim == 0)
        throw std::invalid_argument("sampling::NormalStream: dim must be >= 1");
}

NormalStream NormalStream::pseudo(std::uint64_t seed, std::size_t dim) {
    return NormalStream(StreamKind::pseudo, dim, seed, 0);
}

NormalStream NormalStream::sobol(std::size_t dim, std::uint64_t skip) {
    return NormalStream(StreamKind::sobol, dim, 0, skip);
}

void NormalStream::draw(std::span<double> row) {
    if (row.size() != dim_)
        throw std::invalid_argument("sampling::NormalStream: bad row size");
    if (kind_ == StreamKind::pseudo) {
        for (auto& z : row) z = gauss::quantile(rng_.next_uniform());
        return;
    }
    sobol_.next_uniforms(row);
    for (auto& z : row) z = gauss::quantile(z);
}

NormalStream NormalStream::substream(std::uint64_t worker) const {
    if (kind_ != StreamKind::pseudo)
        throw std::logic_error(
            "sampling::NormalStream: Sobol consumers partition the index "
            "range instead of jumping");
    NormalStream out(StreamKind::pseudo, dim_, seed_, 0);
    for (std::uint64_t w = 0; w <= worker; ++w) out.rng_.jump();
    return out;
}

std::vector<double> draw_normals(NormalStream& stream, std::size_t n) {
    std::vector<double> out(n * stream.dim());
    for (std::size_t i = 0; i < n; ++i)
        stream.draw(std::span<double>(out.data() + i * stream.dim(),
                                      stream.dim()));
    return out;
}

}  // namespace ccr::sampling
