#include <catch2/catch_amalgamated.hpp>

#include <ccr/gaussian.hpp>
#include <ccr/sampling.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

using Catch::Approx;
using namespace ccr;

TEST_CASE("the generator is deterministic per seed") {
    sampling::Xoshiro256 a(42), b(42), c(43);
    bool all_equal = true, any_diff = false;
    for (int i = 0; i < 64; ++i) {
        const std::uint64_t x = a.next();
        all_equal = all_equal && (x == b.next());
        any_diff = any_diff || (x != c.next());
    }
    CHECK(all_equal);
    CHECK(any_diff);

    // Zero seed must not collapse the state.
    sampling::Xoshiro256 z(0);
    std::uint64_t acc = 0;
    for (int i = 0; i < 8; ++i) acc |= z.next();
    CHECK(acc != 0);
}

TEST_CASE("uniforms stay strictly inside the unit interval") {
    sampling::Xoshiro256 rng(123);
    double lo = 1.0, hi = 0.0, sum = 0.0;
    const std::size_t n = 1000000;
    for (std::size_t i = 0; i < n; ++i) {
        const double u = rng.next_uniform();
        lo = std::min(lo, u);
        hi = std::max(hi, u);
        sum += u;
    }
    CHECK(lo > 0.0);
    CHECK(hi < 1.0);
    // 4 sigma band around 1/2, sigma = 1/sqrt(12 n).
    CHECK(sum / static_cast<double>(n) ==
          Approx(0.5).margin(4.0 / std::sqrt(12.0 * static_cast<double>(n))));
}

TEST_CASE("jump separates the sequence into disjoint blocks") {
    sampling::Xoshiro256 base(9);
    sampling::Xoshiro256 jumped(9);
    jumped.jump();
    bool differs = false;
    for (int i = 0; i < 16; ++i) differs = differs || (base.next() != jumped.next());
    CHECK(differs);
}

TEST_CASE("pseudo uniforms pass a Kolmogorov Smirnov check") {
    sampling::Xoshiro256 rng(2024);
    const std::size_t n = 100000;
    std::vector<double> u(n);
    for (double& x : u) x = rng.next_uniform();
    std::sort(u.begin(), u.end());
    double d = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double e0 = static_cast<double>(i) / n;
        const double e1 = static_cast<double>(i + 1) / n;
        d = std::max(d, std::max(u[i] - e0, e1 - u[i]));
    }
    CHECK(d < 1.63 / std::sqrt(static_cast<double>(n)));  // alpha ~ 0.01
}

TEST_CASE("normal draws have standard moments and law") {
    auto stream = sampling::NormalStream::pseudo(77, 1);
    const std::size_t n = 100000;
    std::vector<double> z(n);
    double sum = 0.0, sumsq = 0.0;
    for (double& x : z) {
        stream.draw({&x, 1});
        sum += x;
        sumsq += x * x;
    }
    const double nn = static_cast<double>(n);
    CHECK(sum / nn == Approx(0.0).margin(4.0 / std::sqrt(nn)));
    CHECK(sumsq / nn == Approx(1.0).margin(4.0 * std::sqrt(2.0 / nn)));

    // Map through the distribution function and KS against uniform.
    for (double& x : z) x = gauss::cdf(x);
    std::sort(z.begin(), z.end());
    double d = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double e0 = static_cast<double>(i) / n;
        const double e1 = static_cast<double>(i + 1) / n;
        d = std::max(d, std::max(z[i] - e0, e1 - z[i]));
    }
    CHECK(d < 1.63 / std::sqrt(nn));
}

TEST_CASE("sobol construction validates its arguments") {
    CHECK_THROWS_AS(sampling::SobolSequence(0), std::invalid_argument);
    CHECK_NOTHROW(sampling::SobolSequence(sampling::sobol_max_dimension()));
    CHECK_THROWS_AS(sampling::SobolSequence(sampling::sobol_max_dimension() + 1),
                    std::invalid_argument);
    CHECK_THROWS_AS(sampling::SobolSequence(2, std::uint64_t(1) << 52),
                    std::invalid_argument);
    CHECK(sampling::sobol_max_dimension() == 40);
}

TEST_CASE("sobol coordinates are dyadically equidistributed") {
    const std::size_t dim = 8, m = 10, n = std::size_t(1) << m;
    sampling::SobolSequence seq(dim);
    std::vector<double> pts(n * dim), row(dim);
    for (std::size_t i = 0; i < n; ++i) {
        seq.next_uniforms(row);
        std::copy(row.begin(), row.end(), pts.begin() + i * dim);
    }

    // Every 1-D projection of the first 2^m points puts exactly 2^(m-k)
    // points into each dyadic bin at level k.
    for (std::size_t j = 0; j < dim; ++j) {
        for (std::size_t k = 1; k <= 6; ++k) {
            std::vector<std::size_t> bins(std::size_t(1) << k, 0);
            for (std::size_t i = 0; i < n; ++i) {
                const double u = pts[i * dim + j];
                ++bins[static_cast<std::size_t>(u * static_cast<double>(bins.size()))];
            }
            for (std::size_t c : bins) CHECK(c == (n >> k));
        }
    }

    // The first two coordinates form a two dimensional net: 8x8 boxes each
    // catch 16 of the 1024 points.
    std::vector<std::size_t> boxes(64, 0);
    for (std::size_t i = 0; i < n; ++i) {
        const auto bx = static_cast<std::size_t>(pts[i * dim] * 8.0);
        const auto by = static_cast<std::size_t>(pts[i * dim + 1] * 8.0);
        ++boxes[bx * 8 + by];
    }
    for (std::size_t c : boxes) CHECK(c == 16);
}

TEST_CASE("sobol skipping is consistent with sequential reads") {
    sampling::SobolSequence seq(3);
    CHECK(seq.dim() == 3);
    std::vector<double> row(3), expect(3);
    for (int i = 0; i < 5; ++i) seq.next_uniforms(expect);
    CHECK(seq.next_index() == 5);
    seq.next_uniforms(expect);  // row at index 5

    sampling::SobolSequence skip(3, 5);
    CHECK(skip.next_index() == 5);
    skip.next_uniforms(row);
    for (int j = 0; j < 3; ++j) CHECK(row[j] == expect[j]);

    CHECK_THROWS_AS(seq.next_uniforms({row.data(), 2}), std::invalid_argument);
}

TEST_CASE("normal streams skip the degenerate zero point") {
    auto s = sampling::NormalStream::sobol(4);
    CHECK(s.kind() == sampling::StreamKind::sobol);
    CHECK(s.dim() == 4);
    std::vector<double> z(4);
    s.draw(z);
    // First emitted point is (1/2, ..., 1/2), the origin in normal space.
    for (double x : z) CHECK(std::abs(x) < 1e-12);
    s.draw(z);
    bool nonzero = false;
    for (double x : z) nonzero = nonzero || std::abs(x) > 0.1;
    CHECK(nonzero);

    CHECK_THROWS_AS(s.substream(0), std::logic_error);
}

TEST_CASE("pseudo substreams are disjoint and reproducible") {
    const auto base = sampling::NormalStream::pseudo(31, 2);
    auto w0 = base.substream(0);
    auto w0b = base.substream(0);
    auto w1 = base.substream(1);

    std::vector<double> a(2), b(2), c(2);
    bool same = true, differs = false;
    for (int i = 0; i < 32; ++i) {
        w0.draw(a);
        w0b.draw(b);
        w1.draw(c);
        same = same && a == b;
        differs = differs || a != c;
    }
    CHECK(same);
    CHECK(differs);

    // The parent stream is untouched by carving substreams.
    auto fresh = sampling::NormalStream::pseudo(31, 2);
    auto parent = sampling::NormalStream::pseudo(31, 2);
    (void)parent.substream(5);
    parent.draw(a);
    fresh.draw(b);
    CHECK(a == b);
}

TEST_CASE("batch draws match element wise draws") {
    auto s1 = sampling::NormalStream::pseudo(5, 3);
    auto s2 = sampling::NormalStream::pseudo(5, 3);
    const auto batch = sampling::draw_normals(s1, 4);
    REQUIRE(batch.size() == 12);
    std::vector<double> row(3);
    for (std::size_t i = 0; i < 4; ++i) {
        s2.draw(row);
        for (std::size_t j = 0; j < 3; ++j) CHECK(batch[i * 3 + j] == row[j]);
    }
    CHECK_THROWS_AS(s2.draw({row.data(), 2}), std::invalid_argument);
}
