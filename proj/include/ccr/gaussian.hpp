#pragma once

#include <limits>

namespace ccr::gauss {

inline constexpr double inf = std::numeric_limits<double>::infinity();

// Standard normal density. pdf(+-inf) = 0.
double pdf(double x);

// Standard normal distribution function, evaluated through erfc so the
// absolute error stays below 1e-12 everywhere.
double cdf(double x);

// P(X > x) with full relative precision in the right tail.
double upper_tail(double x);

// Inverse of cdf on (0, 1). Rational initial guess refined by one Halley
// step; round-trip error |cdf(quantile(p)) - p| <= 1e-9. Throws
// std::domain_error outside (0, 1).
double quantile(double p);

// Interval on the extended real line. Endpoints may be +-inf; lower < upper
// is enforced at construction.
struct Interval {
    double lower;
    double upper;
    Interval(double lo, double hi);
};

// P(X in I). Uses the tail of the distribution on whichever side avoids
// cancellation, so small masses far from zero keep relative precision.
double mass(const Interval& iv);

// E[X 1_I] = pdf(lower) - pdf(upper).
double partial_first_moment(const Interval& iv);

// E[X | X in I]. Throws std::domain_error if the interval carries no mass.
double truncated_mean(const Interval& iv);

// E[X^2 1_I] = mass + lower pdf(lower) - upper pdf(upper), with the
// convention x pdf(x) -> 0 as x -> +-inf.
double truncated_second_moment(const Interval& iv);

}  // namespace ccr::gauss
