#include <catch2/catch_amalgamated.hpp>

#include <ccr/gaussian.hpp>
#include <ccr/quantizer.hpp>
#include <ccr/sampling.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

using Catch::Approx;
using namespace ccr;
namespace fs = std::filesystem;

namespace {

fs::path tmp_file(const std::string& name) {
    return fs::temp_directory_path() / name;
}

void write_text(const fs::path& p, const std::string& text) {
    std::ofstream out(p);
    out << text;
}

}  // namespace

TEST_CASE("degenerate grids have closed forms") {
    CHECK_THROWS_AS(quant::build_grid(0), std::invalid_argument);

    const auto g1 = quant::build_grid(1);
    REQUIRE(g1.size() == 1);
    CHECK(g1.points[0] == Approx(0.0).margin(1e-14));
    CHECK(g1.probs[0] == Approx(1.0).margin(1e-14));
    CHECK(g1.distortion == Approx(1.0).margin(1e-12));

    // Two points sit at +-E[X | X > 0] = +-sqrt(2/pi).
    const auto g2 = quant::build_grid(2);
    REQUIRE(g2.size() == 2);
    CHECK(g2.points[1] == Approx(0.7978845608028654).margin(1e-12));
    CHECK(g2.points[0] == -g2.points[1]);
    CHECK(g2.probs[0] == Approx(0.5).margin(1e-13));
    CHECK(g2.distortion == Approx(0.36338022763241865).margin(1e-12));
}

TEST_CASE("ten point grid is stationary and optimal") {
    quant::BuildReport report;
    const auto g = quant::build_grid(10, 1e-10, 100000, &report);
    REQUIRE(g.size() == 10);
    CHECK(report.iterations >= 1);
    CHECK(report.movement < 1e-10);
    CHECK(report.residual <= 1e-10);
    CHECK(report.residual == quant::stationarity_residual(g.points));

    for (std::size_t i = 1; i < 10; ++i) CHECK(g.points[i - 1] < g.points[i]);
    // Antisymmetry is enforced exactly during the iteration.
    for (std::size_t i = 0; i < 10; ++i)
        CHECK(g.points[i] == -g.points[9 - i]);

    double psum = 0.0;
    for (double p : g.probs) psum += p;
    CHECK(psum == Approx(1.0).margin(1e-13));

    CHECK(g.distortion == Approx(0.0229370529045).epsilon(1e-9));
    CHECK(g.distortion == quant::grid_distortion(g.points));

    // Stationarity makes D = 1 - sum p_i x_i^2.
    double sx2 = 0.0;
    for (std::size_t i = 0; i < 10; ++i) sx2 += g.probs[i] * g.points[i] * g.points[i];
    CHECK(g.distortion == Approx(1.0 - sx2).margin(1e-9));

    // Each point is its cell's conditional mean.
    const auto b = quant::boundaries(g.points);
    REQUIRE(b.size() == 11);
    CHECK(b.front() == -gauss::inf);
    CHECK(b.back() == gauss::inf);
    for (std::size_t i = 0; i < 10; ++i) {
        CHECK(g.points[i] ==
              Approx(gauss::truncated_mean({b[i], b[i + 1]})).margin(1e-9));
        CHECK(g.probs[i] == Approx(gauss::mass({b[i], b[i + 1]})).margin(1e-14));
    }

    // Any perturbation of a stationary grid increases the distortion.
    for (std::size_t i : {0u, 3u, 7u}) {
        auto x = g.points;
        x[i] += 1e-3;
        CHECK(quant::grid_distortion(x) > g.distortion);
    }
}

TEST_CASE("distortion agrees with a Monte Carlo estimate") {
    const auto g = quant::build_grid(10);
    auto stream = sampling::NormalStream::pseudo(7, 1);
    const std::size_t n = 200000;
    double sum = 0.0, sumsq = 0.0, z = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        stream.draw({&z, 1});
        double best = gauss::inf;
        for (double x : g.points)
            best = std::min(best, (z - x) * (z - x));
        sum += best;
        sumsq += best * best;
    }
    const double mean = sum / static_cast<double>(n);
    const double var = (sumsq - sum * mean) / static_cast<double>(n - 1);
    const double se = std::sqrt(var / static_cast<double>(n));
    CHECK(std::abs(mean - g.distortion) < 4.0 * se);
}

TEST_CASE("build reports non convergence with the residual") {
    try {
        quant::build_grid(200, 1e-10, 3);
        FAIL("expected ConvergenceError");
    } catch (const quant::ConvergenceError& e) {
        CHECK(e.residual() > 1e-10);
        CHECK(std::string(e.what()).find("no convergence") != std::string::npos);
    }
}

TEST_CASE("grids survive a save and load round trip") {
    const auto g = quant::build_grid(17);
    const fs::path p = tmp_file("ccr_grid_roundtrip.txt");
    quant::save_grid(g, p);
    const auto h = quant::load_grid(p);
    REQUIRE(h.size() == g.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
        // 17 significant digits reproduce the doubles exactly.
        CHECK(h.points[i] == g.points[i]);
        CHECK(h.probs[i] == g.probs[i]);
    }
    CHECK(h.distortion == Approx(g.distortion).margin(1e-15));
    fs::remove(p);
}

TEST_CASE("grid loader reports the offending line") {
    auto expect_error = [](const std::string& text, const std::string& needle) {
        const fs::path p = tmp_file("ccr_grid_bad.txt");
        write_text(p, text);
        try {
            quant::load_grid(p);
            FAIL("expected failure for: " + text);
        } catch (const std::runtime_error& e) {
            const std::string msg = e.what();
            INFO(msg);
            CHECK(msg.find(needle) != std::string::npos);
        }
        fs::remove(p);
    };

    expect_error("M=1\n0\t1\n", "line 1");
    expect_error("N=zap\n", "line 1");
    expect_error("N=2\n-1\t0.5\n", "line 3");
    expect_error("N=1\nabc\t0.5\n", "line 2");
    expect_error("N=1\n0.5 0.5\n", "x<TAB>p");
    expect_error("N=2\n1\t0.5\n0\t0.5\n", "increasing");
    expect_error("N=2\n-1\t0.5\n1\t-0.5\n", "positive");
    expect_error("N=1\n0\t1\nextra\n", "trailing");
    expect_error("N=1\n0\t0.5\n", "sum");
    CHECK_THROWS_AS(quant::load_grid(tmp_file("ccr_no_such_grid.txt")),
                    std::runtime_error);
}

TEST_CASE("transition matrices are stochastic and consistent") {
    CHECK_THROWS_AS(
        quant::transition_matrix(quant::build_grid(2), 0.0, quant::build_grid(2), 1.0),
        std::invalid_argument);
    CHECK_THROWS_AS(
        quant::transition_matrix(quant::build_grid(2), 1.0, quant::build_grid(2), 1.0),
        std::invalid_argument);
    CHECK_THROWS_AS(
        quant::transition_matrix(quant::QuantizerGrid{}, 1.0, quant::build_grid(2), 2.0),
        std::invalid_argument);

    const auto g = quant::build_grid(10);
    const double t0 = 1.0 / 52.0, t1 = 2.0 / 52.0;
    const auto tm = quant::transition_matrix(g, t0, g, t1);
    REQUIRE(tm.rows == 10);
    REQUIRE(tm.cols == 10);
    CHECK(tm.pi.size() == 100);
    CHECK(tm(3, 4) == tm.pi[3 * 10 + 4]);

    for (std::size_t i = 0; i < 10; ++i) {
        double rs = 0.0;
        for (std::size_t j = 0; j < 10; ++j) {
            CHECK(tm(i, j) >= 0.0);
            CHECK(tm.pruned[i * 10 + j] == 0);
            rs += tm(i, j);
        }
        CHECK(rs == Approx(1.0).margin(1e-10));
    }

    // The kernel marginalizes exactly: sum_i p_i pi_ij = p_j up to quadrature.
    CHECK(quant::chapman_check(g.probs, tm, g.probs) < 1e-12);

    // Persistence at this correlation, sqrt(t0/t1) ~ 0.71: staying in the
    // edge cell beats any single move, and crossing the domain is negligible.
    CHECK(tm(0, 0) > 0.25);
    CHECK(tm(0, 9) < 1e-4);

    // Equal standardized grids make the joint law exchangeable.
    for (std::size_t i = 0; i < 10; ++i)
        for (std::size_t j = 0; j < 10; ++j)
            CHECK(g.probs[i] * tm(i, j) ==
                  Approx(g.probs[j] * tm(j, i)).margin(1e-12));
}

TEST_CASE("pruned transitions renormalize and stay close") {
    const auto g = quant::build_grid(10);
    const double t0 = 1.0 / 52.0, t1 = 2.0 / 52.0;
    const auto tm = quant::transition_matrix(g, t0, g, t1, 3.0);

    std::size_t pruned = 0;
    for (std::size_t i = 0; i < 10; ++i) {
        double rs = 0.0;
        for (std::size_t j = 0; j < 10; ++j) {
            if (tm.pruned[i * 10 + j]) {
                ++pruned;
                CHECK(tm(i, j) == 0.0);
            }
            rs += tm(i, j);
        }
        CHECK(rs == Approx(1.0).margin(1e-12));
    }
    CHECK(pruned > 0);
    // Pruning at z = 3 discards real tail mass, so marginalization only
    // holds loosely.
    CHECK(quant::chapman_check(g.probs, tm, g.probs) < 5e-3);

    CHECK_THROWS_AS(quant::transition_matrix(g, t0, g, t1, 1e-6),
                    std::runtime_error);
}

TEST_CASE("transition chains cover consecutive bucket pairs") {
    const auto g = quant::build_grid(10);
    const std::vector<double> times = {1.0 / 52.0, 2.0 / 52.0, 3.0 / 52.0,
                                       4.0 / 52.0, 0.25, 1.0};
    const std::vector<quant::QuantizerGrid> grids(times.size(), g);
    const auto chain = quant::transition_chain(grids, times);
    REQUIRE(chain.size() == times.size() - 1);
    for (std::size_t k = 0; k < chain.size(); ++k) {
        CHECK(chain[k].step == k);
        CHECK(chain[k].rows == 10);
        CHECK(chain[k].cols == 10);
        CHECK(quant::chapman_check(g.probs, chain[k], g.probs) < 1e-12);
    }

    CHECK(quant::transition_chain({g}, {1.0}).empty());
    CHECK_THROWS_AS(quant::transition_chain(grids, {1.0, 2.0}),
                    std::invalid_argument);
}
