#include "ccr/exposure.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <utility>

#include "ccr/gaussian.hpp"

namespace ccr::exposure {

namespace {

constexpr double nan = std::numeric_limits<double>::quiet_NaN();

// Relative slack on the cumulative weight so that an atom sitting exactly at
// the target level is picked up despite summation roundoff.
constexpr double quantile_slack = 1e-12;

void check_alphas(const std::vector<double>& alphas) {
    for (double a : alphas)
        if (!(a > 0.0 && a < 1.0))
            throw std::invalid_argument(
                "exposure: confidence levels must lie in (0, 1)");
}

// Quantiles of a weighted sample; atoms are sorted in place.
std::vector<double> sorted_quantiles(
    std::vector<std::pair<double, double>>& atoms,
    const std::vector<double>& alphas) {
    std::sort(atoms.begin(), atoms.end());
    double total = 0.0;
    for (const auto& [x, w] : atoms) {
        if (!(w >= 0.0))
            throw std::invalid_argument("exposure: negative quantile weight");
        total += w;
    }
    if (!(total > 0.0))
        throw std::invalid_argument("exposure: quantile weights sum to zero");

    std::vector<double> out;
    out.reserve(alphas.size());
    for (double alpha : alphas) {
        const double target = alpha * total - quantile_slack * total;
        double cum = 0.0;
        double q = atoms.back().first;
        for (const auto& [x, w] : atoms) {
            cum += w;
            if (cum >= target) {
                q = x;
                break;
            }
        }
        out.push_back(q);
    }
    return out;
}

ExposureProfile make_profile(Method m, const market::BucketGrid& buckets,
                             std::vector<double> ee) {
    ExposureProfile p;
    p.method = m;
    p.ee = std::move(ee);
    p.eee.reserve(p.ee.size());
    const std::vector<double> dt = buckets.deltas();
    double running = 0.0, epe = 0.0, eepe = 0.0;
    for (std::size_t k = 0; k < p.ee.size(); ++k) {
        running = std::max(running, p.ee[k]);
        p.eee.push_back(running);
        epe += p.ee[k] * dt[k];
        eepe += running * dt[k];
    }
    p.epe = epe / buckets.horizon();
    p.eepe = eepe / buckets.horizon();
    return p;
}

// Deterministic estimators share this shape: per bucket, a set of standard
// normal atoms with weights. atoms_of(k) returns {z values, weights}.
template <typename AtomsOf>
ExposureProfile atom_profile(Method m, const ExposureTask& task,
                             const std::vector<double>& alphas,
                             AtomsOf&& atoms_of) {
    check_alphas(alphas);
    const auto& times = task.buckets.times();
    std::vector<double> ee(times.size(), 0.0);
    std::map<double, std::vector<double>> pfe;

    for (std::size_t k = 0; k < times.size(); ++k) {
        const auto [zs, ws] = atoms_of(k);
        std::vector<std::pair<double, double>> atoms;
        if (!alphas.empty()) atoms.reserve(zs->size());
        double acc = 0.0;
        for (std::size_t i = 0; i < zs->size(); ++i) {
            const double e = exposure_at(task, times[k], (*zs)[i]);
            acc += (*ws)[i] * e;
            if (!alphas.empty()) atoms.emplace_back(e, (*ws)[i]);
        }
        ee[k] = acc;
        if (!alphas.empty()) {
            const std::vector<double> qs = sorted_quantiles(atoms, alphas);
            for (std::size_t a = 0; a < alphas.size(); ++a)
                pfe[alphas[a]].push_back(qs[a]);
        }
    }

    ExposureProfile p = make_profile(m, task.buckets, std::move(ee));
    p.pfe = std::move(pfe);
    return p;
}

ExposureProfile simulate(Method m, const ExposureTask& task,
                         std::size_t n_paths, McMode mode,
                         sampling::NormalStream& stream, bool with_dispersion,
                         const std::vector<double>& alphas) {
    check_alphas(alphas);
    if (n_paths < 2)
        throw std::invalid_argument("exposure: need at least 2 paths");
    const auto& times = task.buckets.times();
    const std::size_t nk = times.size();
    if (stream.dim() != nk)
        throw std::invalid_argument(
            "exposure: stream dimension must equal the bucket count");

    const std::vector<double> dt = task.buckets.deltas();
    std::vector<double> sqrt_dt(nk), inv_sqrt_t(nk), w(nk);
    for (std::size_t k = 0; k < nk; ++k) {
        sqrt_dt[k] = std::sqrt(dt[k]);
        inv_sqrt_t[k] = 1.0 / std::sqrt(times[k]);
        w[k] = dt[k] / task.buckets.horizon();
    }

    std::vector<double> row(nk), e(nk);
    std::vector<double> sum(nk, 0.0), sumsq(nk, 0.0);
    double psum = 0.0, psumsq = 0.0;  // per-path EPE, pds dispersion
    std::vector<std::vector<double>> samples;
    if (!alphas.empty()) samples.assign(nk, {});
    for (auto& s : samples) s.reserve(n_paths);

    for (std::size_t p = 0; p < n_paths; ++p) {
        stream.draw(row);
        double path_epe = 0.0, wt = 0.0;
        for (std::size_t k = 0; k < nk; ++k) {
            double z;
            if (mode == McMode::djs) {
                z = row[k];
            } else {
                wt += sqrt_dt[k] * row[k];
                z = wt * inv_sqrt_t[k];
            }
            e[k] = exposure_at(task, times[k], z);
            sum[k] += e[k];
            sumsq[k] += e[k] * e[k];
            path_epe += w[k] * e[k];
            if (!alphas.empty()) samples[k].push_back(e[k]);
        }
        psum += path_epe;
        psumsq += path_epe * path_epe;
    }

    const double n = static_cast<double>(n_paths);
    std::vector<double> ee(nk);
    for (std::size_t k = 0; k < nk; ++k) ee[k] = sum[k] / n;

    ExposureProfile prof = make_profile(m, task.buckets, std::move(ee));
    if (with_dispersion) {
        prof.stderr_.resize(nk);
        for (std::size_t k = 0; k < nk; ++k) {
            const double var =
                std::max(0.0, (sumsq[k] - n * prof.ee[k] * prof.ee[k])) /
                (n - 1.0);
            prof.stderr_[k] = std::sqrt(var / n);
        }
        if (mode == McMode::pds) {
            const double mean = psum / n;
            const double var =
                std::max(0.0, (psumsq - n * mean * mean)) / (n - 1.0);
            prof.epe_stderr = std::sqrt(var / n);
        } else {
            double acc = 0.0;
            for (std::size_t k = 0; k < nk; ++k) {
                const double c = w[k] * prof.stderr_[k];
                acc += c * c;
            }
            prof.epe_stderr = std::sqrt(acc);
        }
    }

    for (std::size_t a = 0; a < alphas.size(); ++a) {
        auto& col = prof.pfe[alphas[a]];
        for (std::size_t k = 0; k < nk; ++k) {
            std::vector<std::pair<double, double>> atoms;
            atoms.reserve(n_paths);
            for (double x : samples[k]) atoms.emplace_back(x, 1.0);
            col.push_back(sorted_quantiles(atoms, {alphas[a]})[0]);
        }
    }
    return prof;
}

}  // namespace

const char* method_name(Method m) {
    switch (m) {
        case Method::analytic: return "analytic";
        case Method::numerical: return "numerical";
        case Method::quantization: return "quantization";
        case Method::quantization_tree: return "quantization_tree";
        case Method::mc: return "mc";
        case Method::sobol: return "sobol";
    }
    return "unknown";
}

double exposure_at(const ExposureTask& task, double t, double z) {
    const double spot_t = market::underlying_at(task.market, t, z);
    double mtm;
    if (const auto* spec = std::get_if<market::OptionSpec>(&task.target))
        mtm = market::position_mtm(*spec, task.market, t, spot_t);
    else
        mtm = market::portfolio_mtm(std::get<market::Portfolio>(task.target),
                                    task.market, t, spot_t);
    return std::max(mtm - task.collateral, 0.0);
}

double weighted_quantile(std::span<const double> values,
                         std::span<const double> weights, double alpha) {
    if (values.size() != weights.size() || values.empty())
        throw std::invalid_argument(
            "exposure::weighted_quantile: values and weights must be "
            "non-empty and of equal size");
    if (!(alpha > 0.0 && alpha < 1.0))
        throw std::invalid_argument(
            "exposure::weighted_quantile: alpha must lie in (0, 1)");
    std::vector<std::pair<double, double>> atoms;
    atoms.reserve(values.size());
    for (std::size_t i = 0; i < values.size(); ++i)
        atoms.emplace_back(values[i], weights[i]);
    return sorted_quantiles(atoms, {alpha})[0];
}

ExposureProfile ee_analytic(const ExposureTask& task) {
    const auto* spec = std::get_if<market::OptionSpec>(&task.target);
    if (!spec || spec->side != market::Side::buy || task.collateral != 0.0)
        throw std::invalid_argument(
            "exposure::ee_analytic: closed form holds only for a single "
            "bought option without collateral, where exposure equals the "
            "option value");
    if (task.buckets.horizon() > spec->maturity)
        throw std::invalid_argument(
            "exposure::ee_analytic: buckets reach past the option's expiry, "
            "where the settled position has no exposure");
    const double price0 =
        spec->quantity * market::bs_price(spec->kind, task.market.spot,
                                          spec->strike, task.market.rate,
                                          task.market.vol, spec->maturity);
    const auto& times = task.buckets.times();
    std::vector<double> ee(times.size());
    for (std::size_t k = 0; k < times.size(); ++k)
        ee[k] = price0 * std::exp(task.market.rate * times[k]);
    return make_profile(Method::analytic, task.buckets, std::move(ee));
}

ExposureProfile ee_numerical(const ExposureTask& task, std::size_t n,
                             const std::vector<double>& alphas) {
    if (n == 0)
        throw std::invalid_argument("exposure::ee_numerical: n must be >= 1");
    const double h = 12.0 / static_cast<double>(n);
    std::vector<double> zs(n), ws(n);
    for (std::size_t i = 0; i < n; ++i) {
        zs[i] = -6.0 + (static_cast<double>(i) + 0.5) * h;
        ws[i] = gauss::pdf(zs[i]) * h;
    }
    return atom_profile(Method::numerical, task, alphas,
                        [&](std::size_t) { return std::pair(&zs, &ws); });
}

ExposureProfile ee_quantized_djs(const ExposureTask& task,
                                 const quant::QuantizerGrid& grid,
                                 const std::vector<double>& alphas) {
    if (grid.size() == 0)
        throw std::invalid_argument("exposure::ee_quantized_djs: empty grid");
    return atom_profile(
        Method::quantization, task, alphas,
        [&](std::size_t) { return std::pair(&grid.points, &grid.probs); });
}

ExposureProfile ee_quantized_djs(const ExposureTask& task,
                                 const std::vector<quant::QuantizerGrid>& grids,
                                 const std::vector<double>& alphas) {
    if (grids.size() != task.buckets.size())
        throw std::invalid_argument(
            "exposure::ee_quantized_djs: one grid per bucket required");
    return atom_profile(Method::quantization, task, alphas,
                        [&](std::size_t k) {
                            return std::pair(&grids[k].points, &grids[k].probs);
                        });
}

ExposureProfile ee_quantized_tree(const ExposureTask& task,
                                  const std::vector<quant::QuantizerGrid>& grids,
                                  double prune_z,
                                  const std::vector<double>& alphas) {
    if (grids.size() != task.buckets.size())
        throw std::invalid_argument(
            "exposure::ee_quantized_tree: one grid per bucket required");
    const std::vector<quant::TransitionMatrix> chain =
        quant::transition_chain(grids, task.buckets.times(), prune_z);

    // Marginal weights along the chain; exact Chapman-Kolmogorov would give
    // back the grid probabilities, so any drift here is quadrature noise.
    std::vector<std::vector<double>> q(grids.size());
    q[0] = grids[0].probs;
    for (std::size_t k = 1; k < grids.size(); ++k) {
        const quant::TransitionMatrix& pi = chain[k - 1];
        q[k].assign(grids[k].size(), 0.0);
        for (std::size_t i = 0; i < pi.rows; ++i) {
            const double qi = q[k - 1][i];
            if (qi == 0.0) continue;
            for (std::size_t j = 0; j < pi.cols; ++j)
                q[k][j] += qi * pi(i, j);
        }
    }
    return atom_profile(Method::quantization_tree, task, alphas,
                        [&](std::size_t k) {
                            return std::pair(&grids[k].points, &q[k]);
                        });
}

ExposureProfile ee_mc(const ExposureTask& task, std::size_t n_paths,
                      McMode mode, sampling::NormalStream& stream,
                      const std::vector<double>& alphas) {
    return simulate(Method::mc, task, n_paths, mode, stream, true, alphas);
}

ExposureProfile ee_sobol(const ExposureTask& task, std::size_t n,
                         std::uint64_t skip, bool with_dispersion,
                         const std::vector<double>& alphas) {
    sampling::NormalStream stream =
        sampling::NormalStream::sobol(task.buckets.size(), skip);
    return simulate(Method::sobol, task, n, McMode::djs, stream,
                    with_dispersion, alphas);
}

ErrorMetrics error_metrics(const ExposureProfile& prof,
                           const ExposureProfile& bench) {
    if (prof.ee.size() != bench.ee.size())
        throw std::invalid_argument(
            "exposure::error_metrics: profiles cover different buckets");
    ErrorMetrics m;
    m.eps.resize(prof.ee.size(), nan);
    m.rsd.resize(prof.ee.size(), nan);
    for (std::size_t k = 0; k < prof.ee.size(); ++k) {
        if (bench.ee[k] != 0.0) m.eps[k] = prof.ee[k] / bench.ee[k] - 1.0;
        if (!prof.stderr_.empty() && prof.ee[k] != 0.0)
            m.rsd[k] = prof.stderr_[k] / prof.ee[k];
    }
    m.epe_eps = bench.epe != 0.0 ? prof.epe / bench.epe - 1.0 : nan;
    m.epe_rsd = !prof.stderr_.empty() && prof.epe != 0.0
                    ? prof.epe_stderr / prof.epe
                    : nan;
    return m;
}

ExposureProfile discounted(const ExposureProfile& profile,
                           const ExposureTask& task) {
    if (profile.ee.size() != task.buckets.size())
        throw std::invalid_argument(
            "exposure::discounted: profile does not match the task's buckets");
    const auto& times = task.buckets.times();
    std::vector<double> df(times.size());
    for (std::size_t k = 0; k < times.size(); ++k)
        df[k] = std::exp(-task.market.rate * times[k]);

    std::vector<double> ee(profile.ee);
    for (std::size_t k = 0; k < ee.size(); ++k) ee[k] *= df[k];
    ExposureProfile out = make_profile(profile.method, task.buckets,
                                       std::move(ee));
    if (!profile.stderr_.empty()) {
        out.stderr_.resize(profile.stderr_.size());
        for (std::size_t k = 0; k < out.stderr_.size(); ++k)
            out.stderr_[k] = profile.stderr_[k] * df[k];
        // Recombined as if buckets were independent; pds dispersions are
        // only approximate after discounting.
        const std::vector<double> dt = task.buckets.deltas();
        double acc = 0.0;
        for (std::size_t k = 0; k < out.stderr_.size(); ++k) {
            const double c = dt[k] / task.buckets.horizon() * out.stderr_[k];
            acc += c * c;
        }
        out.epe_stderr = std::sqrt(acc);
    }
    for (const auto& [alpha, col] : profile.pfe) {
        auto& dst = out.pfe[alpha];
        dst.resize(col.size());
        for (std::size_t k = 0; k < col.size(); ++k) dst[k] = col[k] * df[k];
    }
    return out;
}

}  // namespace ccr::exposure
