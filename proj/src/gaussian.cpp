#include "ccr/gaussian.hpp"

#include <cmath>
#include <stdexcept>

namespace ccr::gauss {

namespace {

constexpr double inv_sqrt_2pi = 0.3989422804014326779;
constexpr double sqrt_2 = 1.4142135623730950488;
constexpr double sqrt_2pi = 2.5066282746310005024;

// x pdf(x), with the limit value 0 at infinite x.
double x_pdf(double x) {
    if (std::isinf(x)) return 0.0;
    return x * pdf(x);
}

// Rational approximation for the normal quantile (relative error ~1e-9),
// used only as the starting point for the Halley refinement below.
double quantile_guess(double p) {
    static constexpr double a[6] = {
        -3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
        1.383577518672690e+02,  -3.066479806614716e+01, 2.506628277459239e+00};
    static constexpr double b[5] = {
        -5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
        6.680131188771972e+01,  -1.328068155288572e+01};
    static constexpr double c[6] = {
        -7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
        -2.549732539343734e+00, 4.374664141464968e+00,  2.938163982698783e+00};
    static constexpr double d[4] = {
        7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
        3.754408661907416e+00};
    constexpr double p_low = 0.02425;

    if (p < p_low) {
        const double q = std::sqrt(-2.0 * std::log(p));
        return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    if (p > 1.0 - p_low) {
        const double q = std::sqrt(-2.0 * std::log(1.0 - p));
        return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    const double q = p - 0.5;
    const double s = q * q;
    return (((((a[0] * s + a[1]) * s + a[2]) * s + a[3]) * s + a[4]) * s + a[5]) * q /
           (((((b[0] * s + b[1]) * s + b[2]) * s + b[3]) * s + b[4]) * s + 1.0);
}

}  // namespace

double pdf(double x) {
    return inv_sqrt_2pi * std::exp(-0.5 * x * x);
}

double cdf(double x) {
    return 0.5 * std::erfc(-x / sqrt_2);
}

double upper_tail(double x) {
    return 0.5 * std::erfc(x / sqrt_2);
}

double quantile(double p) {
    if (!(p > 0.0 && p < 1.0))
        throw std::domain_error("gauss::quantile: p must lie in (0, 1)");
    double x = quantile_guess(p);
    // One Halley step on cdf(x) - p pushes the error to machine level.
    const double e = cdf(x) - p;
    const double u = e * sqrt_2pi * std::exp(0.5 * x * x);
    x -= u / (1.0 + 0.5 * x * u);
    return x;
}

Interval::Interval(double lo, double hi) : lower(lo), upper(hi) {
    if (!(lo < hi))
        throw std::invalid_argument("gauss::Interval: lower must be < upper");
}

double mass(const Interval& iv) {
    if (iv.lower >= 0.0) return upper_tail(iv.lower) - upper_tail(iv.upper);
    if (iv.upper <= 0.0) return cdf(iv.upper) - cdf(iv.lower);
    return cdf(iv.upper) - cdf(iv.lower);
}

double partial_first_moment(const Interval& iv) {
    return pdf(iv.lower) - pdf(iv.upper);
}

double truncated_mean(const Interval& iv) {
    const double m = mass(iv);
    if (m <= 0.0)
        throw std::domain_error("gauss::truncated_mean: interval carries no mass");
    return partial_first_moment(iv) / m;
}

double truncated_second_moment(const Interval& iv) {
    return mass(iv) + x_pdf(iv.lower) - x_pdf(iv.upper);
}

}  // namespace ccr::gauss
