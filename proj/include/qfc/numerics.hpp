#pragma once

#include <cstddef>
#include <functional>

namespace qfc::numerics {

struct QuadratureResult {
  double value = 0.0;
  double error_estimate = 0.0;
  std::size_t panels = 0;
};

// Adaptive Gauss-Kronrod (7/15) quadrature with panel bisection. Panels are
// split until each one's Kronrod-Gauss difference is below its share of
// `abs_tol`. Throws NumericError when `max_panels` is exhausted.
QuadratureResult integrate(const std::function<double(double)>& f, double a,
                           double b, double abs_tol = 1e-9,
                           std::size_t max_panels = 1u << 14);

struct Extremum {
  double x = 0.0;
  double value = 0.0;
  int iterations = 0;
};

// Golden-section search for the maximum of a unimodal function on [lo, hi].
Extremum golden_section_maximize(const std::function<double(double)>& f,
                                 double lo, double hi, double x_tol,
                                 int max_iterations = 200);

// Global-then-local maximization: a uniform scan of `grid_points` locates the
// best cell, golden section refines it. The upper bound is doubled while the
// best grid point sits on it, up to `max_expansions` times.
Extremum bracketed_maximize(const std::function<double(double)>& f, double lo,
                            double hi, double x_tol, int grid_points = 61,
                            int max_expansions = 6);

// Bisection root of f on [lo, hi]; f(lo) and f(hi) must differ in sign.
double bisect_root(const std::function<double(double)>& f, double lo, double hi,
                   double x_tol, int max_iterations = 400);

}  // namespace qfc::numerics
