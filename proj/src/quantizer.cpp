#include "ccr/quantizer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace ccr::quant {

namespace {

using gauss::inf;

// Truncation for the outer quadrature variable; the omitted tail mass is
// below 1.6e-23.
constexpr double z_cut = 10.0;

struct CellMoments {
    std::vector<double> mass;    // P_i
    std::vector<double> first;   // E[X 1_cell]
};

CellMoments cell_moments(const std::vector<double>& x,
                         const std::vector<double>& b) {
    const std::size_t n = x.size();
    CellMoments cm;
    cm.mass.resize(n);
    cm.first.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const gauss::Interval cell(b[i], b[i + 1]);
        cm.mass[i] = gauss::mass(cell);
        cm.first[i] = gauss::partial_first_moment(cell);
    }
    return cm;
}

// One Newton step on the stationarity system G_i = x_i P_i - m_i, whose
// Jacobian is tridiagonal. Returns false when the solve is not usable
// (caller falls back to a plain Lloyd step).
bool newton_step(const std::vector<double>& x, std::vector<double>& out) {
    const std::size_t n = x.size();
    const std::vector<double> b = boundaries(x);
    const CellMoments cm = cell_moments(x, b);

    std::vector<double> g(n), diag(n), lo(n, 0.0), up(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        g[i] = x[i] * cm.mass[i] - cm.first[i];
        const double bl = b[i], bu = b[i + 1];
        const double pl = gauss::pdf(bl), pu = gauss::pdf(bu);
        const double dl = std::isinf(bl) ? 0.0 : pl * (x[i] - bl);
        const double du = std::isinf(bu) ? 0.0 : pu * (bu - x[i]);
        diag[i] = cm.mass[i] - 0.5 * (du + dl);
        if (i + 1 < n) up[i] = -0.5 * (std::isinf(bu) ? 0.0 : pu * (bu - x[i]));
        if (i > 0) lo[i] = -0.5 * (std::isinf(bl) ? 0.0 : pl * (x[i] - bl));
    }

    // Thomas solve of J dx = -g.
    std::vector<double> c(n, 0.0), d(n, 0.0);
    if (diag[0] == 0.0) return false;
    c[0] = (n > 1) ? up[0] / diag[0] : 0.0;
    d[0] = -g[0] / diag[0];
    for (std::size_t i = 1; i < n; ++i) {
        const double den = diag[i] - lo[i] * c[i - 1];
        if (den == 0.0) return false;
        if (i + 1 < n) c[i] = up[i] / den;
        d[i] = (-g[i] - lo[i] * d[i - 1]) / den;
    }
    out.resize(n);
    out[n - 1] = d[n - 1];
    for (std::size_t i = n - 1; i-- > 0;) out[i] = d[i] - c[i] * out[i + 1];
    for (std::size_t i = 0; i < n; ++i) out[i] += x[i];
    for (std::size_t i = 0; i + 1 < n; ++i)
        if (!(out[i] < out[i + 1])) return false;
    return true;
}

// Adaptive Gauss-Kronrod 7-15 on [a, b] to the given absolute tolerance.
// QUADPACK node and weight constants.
constexpr double gk_nodes[8] = {
    0.9914553711208126, 0.9491079123427585, 0.8648644233597691,
    0.7415311855993944, 0.5860872354676911, 0.4058451513773972,
    0.2077849550078985, 0.0};
constexpr double gk_wk[8] = {
    0.02293532201052922, 0.06309209262997855, 0.1047900103222502,
    0.1406532597155259,  0.1690047266392679,  0.1903505780647854,
    0.2044329400752989,  0.2094821410847278};
constexpr double gk_wg[4] = {
    0.1294849661688697, 0.2797053914892767, 0.3818300505051189,
    0.4179591836734694};

template <class F>
void gk15(const F& f, double a, double b, double& kronrod, double& err) {
    const double c = 0.5 * (a + b), h = 0.5 * (b - a);
    double resk = 0.0, resg = 0.0;
    for (int i = 0; i < 8; ++i) {
        const double dx = h * gk_nodes[i];
        const double fv = (i == 7) ? f(c) : f(c - dx) + f(c + dx);
        resk += gk_wk[i] * fv;
        // Odd indices are the embedded Gauss nodes; i == 7 is the center.
        if (i % 2 == 1) resg += gk_wg[i / 2] * fv;
    }
    kronrod = resk * h;
    err = std::abs((resk - resg) * h);
}

template <class F>
double adaptive_gk(const F& f, double a, double b, double tol, int depth = 0) {
    double v, err;
    gk15(f, a, b, v, err);
    if (err <= tol || b - a < 1e-14) return v;
    if (depth > 48) {
        std::ostringstream os;
        os << "quant: quadrature failed to converge on [" << a << ", " << b
           << "] (error estimate " << err << ")";
        throw std::runtime_error(os.str());
    }
    const double c = 0.5 * (a + b);
    return adaptive_gk(f, a, c, 0.5 * tol, depth + 1) +
           adaptive_gk(f, c, b, 0.5 * tol, depth + 1);
}

}  // namespace

std::vector<double> boundaries(const std::vector<double>& points) {
    const std::size_t n = points.size();
    std::vector<double> b(n + 1);
    b[0] = -inf;
    b[n] = inf;
    for (std::size_t i = 1; i < n; ++i)
        b[i] = 0.5 * (points[i - 1] + points[i]);
    return b;
}

std::vector<double> cell_probabilities(const std::vector<double>& points) {
    const std::vector<double> b = boundaries(points);
    std::vector<double> p(points.size());
    for (std::size_t i = 0; i < points.size(); ++i)
        p[i] = gauss::mass(gauss::Interval(b[i], b[i + 1]));
    return p;
}

double grid_distortion(const std::vector<double>& points) {
    const std::vector<double> b = boundaries(points);
    double d = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
        const gauss::Interval cell(b[i], b[i + 1]);
        const double p = gauss::mass(cell);
        const double m1 = gauss::partial_first_moment(cell);
        const double m2 = gauss::truncated_second_moment(cell);
        d += m2 - 2.0 * points[i] * m1 + points[i] * points[i] * p;
    }
    return d;
}

double stationarity_residual(const std::vector<double>& points) {
    const std::vector<double> b = boundaries(points);
    double r = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
        const gauss::Interval cell(b[i], b[i + 1]);
        r = std::max(r, std::abs(points[i] - gauss::truncated_mean(cell)));
    }
    return r;
}

QuantizerGrid build_grid(std::size_t n, double tol, std::size_t max_iter,
                         BuildReport* report) {
    if (n == 0)
        throw std::invalid_argument("quant::build_grid: n must be positive");

    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i)
        x[i] = gauss::quantile((2.0 * static_cast<double>(i) + 1.0) /
                               (2.0 * static_cast<double>(n)));

    double movement = inf, residual = inf;
    std::size_t it = 0;
    std::vector<double> xn;
    for (; it < max_iter; ++it) {
        if (!newton_step(x, xn)) {
            // Lloyd step: move every point to its cell centroid.
            const std::vector<double> b = boundaries(x);
            const CellMoments cm = cell_moments(x, b);
            xn.resize(n);
            for (std::size_t i = 0; i < n; ++i)
                xn[i] = cm.first[i] / cm.mass[i];
        }
        // The optimal grid is antisymmetric; enforcing that kills drift.
        for (std::size_t i = 0; i < n; ++i) {
            const double s = 0.5 * (xn[i] - xn[n - 1 - i]);
            if (i <= n - 1 - i) {
                xn[i] = s;
                xn[n - 1 - i] = -s;
            }
        }
        movement = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            movement = std::max(movement, std::abs(xn[i] - x[i]));
        x.swap(xn);
        if (movement < tol) {
            residual = stationarity_residual(x);
            if (residual <= tol) break;
        }
    }
    if (it == max_iter) {
        residual = stationarity_residual(x);
        std::ostringstream os;
        os << "quant::build_grid: no convergence in " << max_iter
           << " iterations (stationarity residual " << residual << ")";
        throw ConvergenceError(os.str(), residual);
    }

    QuantizerGrid grid;
    grid.points = std::move(x);
    grid.probs = cell_probabilities(grid.points);
    grid.distortion = grid_distortion(grid.points);
    if (report) {
        report->iterations = it + 1;
        report->movement = movement;
        report->residual = residual;
    }
    return grid;
}

void save_grid(const QuantizerGrid& grid, const std::filesystem::path& path) {
    std::FILE* f = std::fopen(path.string().c_str(), "w");
    if (!f)
        throw std::runtime_error("quant::save_grid: cannot open " +
                                 path.string());
    std::fprintf(f, "N=%zu\n", grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i)
        std::fprintf(f, "%.17g\t%.17g\n", grid.points[i], grid.probs[i]);
    std::fclose(f);
}

QuantizerGrid load_grid(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("quant::load_grid: cannot open " +
                                 path.string());
    const std::string name = path.string();
    auto fail = [&](std::size_t line, const std::string& what) {
        std::ostringstream os;
        os << "quant::load_grid: " << name << " line " << line << ": " << what;
        throw std::runtime_error(os.str());
    };

    std::string line;
    if (!std::getline(in, line) || line.rfind("N=", 0) != 0)
        fail(1, "expected header \"N=<count>\"");
    std::size_t n = 0;
    try {
        std::size_t pos = 0;
        n = std::stoul(line.substr(2), &pos);
        if (pos != line.size() - 2 || n == 0) throw std::invalid_argument("");
    } catch (const std::exception&) {
        fail(1, "malformed point count");
    }

    QuantizerGrid grid;
    grid.points.reserve(n);
    grid.probs.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (!std::getline(in, line)) fail(i + 2, "unexpected end of file");
        const auto tab = line.find('\t');
        if (tab == std::string::npos) fail(i + 2, "expected \"x<TAB>p\"");
        try {
            std::size_t px = 0, pp = 0;
            const std::string xs = line.substr(0, tab);
            const std::string ps = line.substr(tab + 1);
            const double x = std::stod(xs, &px);
            const double p = std::stod(ps, &pp);
            if (px != xs.size() || pp != ps.size())
                throw std::invalid_argument("");
            grid.points.push_back(x);
            grid.probs.push_back(p);
        } catch (const std::exception&) {
            fail(i + 2, "malformed number");
        }
        if (i > 0 && !(grid.points[i - 1] < grid.points[i]))
            fail(i + 2, "points are not strictly increasing");
        if (!(grid.probs[i] > 0.0))
            fail(i + 2, "cell probability must be positive");
    }
    while (std::getline(in, line))
        if (!line.empty()) fail(n + 2, "trailing content after last point");

    double sum = 0.0;
    for (double p : grid.probs) sum += p;
    if (std::abs(sum - 1.0) > 1e-9)
        throw std::runtime_error("quant::load_grid: " + name +
                                 ": probabilities do not sum to 1");
    grid.distortion = grid_distortion(grid.points);
    return grid;
}

TransitionMatrix transition_matrix(const QuantizerGrid& from, double t0,
                                   const QuantizerGrid& to, double t1,
                                   double prune_z) {
    if (!(t0 > 0.0))
        throw std::invalid_argument(
            "quant::transition_matrix: t0 must be positive; the first bucket "
            "starts deterministically and uses the marginal probabilities");
    if (!(t1 > t0))
        throw std::invalid_argument("quant::transition_matrix: need t1 > t0");
    if (from.size() == 0 || to.size() == 0)
        throw std::invalid_argument("quant::transition_matrix: empty grid");

    const double st0 = std::sqrt(t0), st1 = std::sqrt(t1);
    const double sdt = std::sqrt(t1 - t0);
    const std::vector<double> bf = boundaries(from.points);
    const std::vector<double> bt = boundaries(to.points);

    TransitionMatrix tm;
    tm.rows = from.size();
    tm.cols = to.size();
    tm.pi.assign(tm.rows * tm.cols, 0.0);
    tm.pruned.assign(tm.rows * tm.cols, 0);

    for (std::size_t i = 0; i < tm.rows; ++i) {
        const double zl = std::max(bf[i], -z_cut);
        const double zu = std::min(bf[i + 1], z_cut);
        if (!(zl < zu)) continue;  // cell lies entirely beyond the cutoff
        const double pi_mass = from.probs[i];
        // Tolerance scaled by the cell mass keeps 1e-10 absolute accuracy on
        // the conditional probability itself.
        const double tol = 1e-10 * pi_mass;
        bool any_pruned = false;
        for (std::size_t j = 0; j < tm.cols; ++j) {
            if (std::abs(to.points[j] * st1 - from.points[i] * st0) / sdt >
                prune_z) {
                tm.pruned[i * tm.cols + j] = 1;
                any_pruned = true;
                continue;
            }
            const double lo = bt[j] * st1;
            const double hi = bt[j + 1] * st1;
            auto integrand = [&](double z) {
                const double y = st0 * z;
                const gauss::Interval img((std::isinf(lo) ? -inf : (lo - y) / sdt),
                                          (std::isinf(hi) ? inf : (hi - y) / sdt));
                return gauss::pdf(z) * gauss::mass(img);
            };
            tm.pi[i * tm.cols + j] =
                adaptive_gk(integrand, zl, zu, tol) / pi_mass;
        }
        if (any_pruned) {
            double sum = 0.0;
            for (std::size_t j = 0; j < tm.cols; ++j) sum += tm.pi[i * tm.cols + j];
            if (!(sum > 0.0))
                throw std::runtime_error(
                    "quant::transition_matrix: pruning removed a full row");
            for (std::size_t j = 0; j < tm.cols; ++j) tm.pi[i * tm.cols + j] /= sum;
        }
    }
    return tm;
}

std::vector<TransitionMatrix> transition_chain(
    const std::vector<QuantizerGrid>& grids, const std::vector<double>& times,
    double prune_z) {
    if (grids.size() != times.size())
        throw std::invalid_argument(
            "quant::transition_chain: one grid per bucket required");
    std::vector<TransitionMatrix> chain;
    if (grids.size() < 2) return chain;
    chain.reserve(grids.size() - 1);
    for (std::size_t k = 0; k + 1 < grids.size(); ++k) {
        chain.push_back(transition_matrix(grids[k], times[k], grids[k + 1],
                                          times[k + 1], prune_z));
        chain.back().step = k;
    }
    return chain;
}

double chapman_check(const std::vector<double>& p_from,
                     const TransitionMatrix& pi,
                     const std::vector<double>& p_to) {
    if (p_from.size() != pi.rows || p_to.size() != pi.cols)
        throw std::invalid_argument("quant::chapman_check: size mismatch");
    double worst = 0.0;
    for (std::size_t j = 0; j < pi.cols; ++j) {
        double q = 0.0;
        for (std::size_t i = 0; i < pi.rows; ++i) q += p_from[i] * pi(i, j);
        worst = std::max(worst, std::abs(q - p_to[j]));
    }
    return worst;
}

}  // namespace ccr::quant
