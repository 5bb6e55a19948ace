#include "qfc/numerics.hpp"

#include <array>
#include <cmath>
#include <sstream>
#include <utility>
#include <vector>

#include "qfc/errors.hpp"

namespace qfc::numerics {
namespace {

// Kronrod 15-point abscissae (positive half, descending) and weights; every
// other node is a Gauss 7-point node.
constexpr std::array<double, 8> kNodes = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
constexpr std::array<double, 8> kKronrodWeights = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr std::array<double, 4> kGaussWeights = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Panel {
  double a, b, value, error;
};

Panel gauss_kronrod(const std::function<double(double)>& f, double a,
                    double b) {
  const double center = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  const double fc = f(center);
  double kronrod = fc * kKronrodWeights[7];
  double gauss = fc * kGaussWeights[3];
  for (int i = 0; i < 7; ++i) {
    const double dx = half * kNodes[i];
    const double pair = f(center - dx) + f(center + dx);
    kronrod += kKronrodWeights[i] * pair;
    if (i % 2 == 1) gauss += kGaussWeights[i / 2] * pair;
  }
  return {a, b, kronrod * half, std::abs((kronrod - gauss) * half)};
}

}  // namespace

QuadratureResult integrate(const std::function<double(double)>& f, double a,
                           double b, double abs_tol, std::size_t max_panels) {
  if (a == b) return {};
  const double sign = b > a ? 1.0 : -1.0;
  if (sign < 0) std::swap(a, b);
  const double width = b - a;

  QuadratureResult result;
  std::vector<Panel> pending{gauss_kronrod(f, a, b)};
  while (!pending.empty()) {
    Panel p = pending.back();
    pending.pop_back();
    const double budget = abs_tol * (p.b - p.a) / width;
    if (p.error <= budget || p.b - p.a <= 1e-14 * width) {
      result.value += p.value;
      result.error_estimate += p.error;
      ++result.panels;
      continue;
    }
    if (result.panels + pending.size() + 2 > max_panels) {
      std::ostringstream msg;
      msg << "quadrature did not converge on [" << a << ", " << b
          << "]: panel cap " << max_panels << " reached, worst panel ["
          << p.a << ", " << p.b << "] error " << p.error << " > budget "
          << budget;
      throw NumericError(msg.str());
    }
    const double mid = 0.5 * (p.a + p.b);
    pending.push_back(gauss_kronrod(f, p.a, mid));
    pending.push_back(gauss_kronrod(f, mid, p.b));
  }
  result.value *= sign;
  return result;
}

Extremum golden_section_maximize(const std::function<double(double)>& f,
                                 double lo, double hi, double x_tol,
                                 int max_iterations) {
  constexpr double inv_phi = 0.618033988749894848204586834365638;
  double x1 = hi - inv_phi * (hi - lo);
  double x2 = lo + inv_phi * (hi - lo);
  double f1 = f(x1);
  double f2 = f(x2);
  int it = 0;
  for (; it < max_iterations && hi - lo > x_tol; ++it) {
    if (f1 < f2) {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + inv_phi * (hi - lo);
      f2 = f(x2);
    } else {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - inv_phi * (hi - lo);
      f1 = f(x1);
    }
  }
  if (hi - lo > x_tol) {
    std::ostringstream msg;
    msg << "golden-section search stalled after " << it
        << " iterations with bracket width " << hi - lo << " > " << x_tol;
    throw NumericError(msg.str());
  }
  const double x = 0.5 * (lo + hi);
  return {x, f(x), it};
}

Extremum bracketed_maximize(const std::function<double(double)>& f, double lo,
                            double hi, double x_tol, int grid_points,
                            int max_expansions) {
  for (int expansion = 0;; ++expansion) {
    const double step = (hi - lo) / (grid_points - 1);
    int best = 0;
    double best_value = f(lo);
    for (int i = 1; i < grid_points; ++i) {
      const double v = f(lo + i * step);
      if (v > best_value) {
        best_value = v;
        best = i;
      }
    }
    if (best == grid_points - 1 && expansion < max_expansions) {
      hi = lo + 2.0 * (hi - lo);
      continue;
    }
    if (best == grid_points - 1) {
      std::ostringstream msg;
      msg << "maximum not bracketed: still increasing at " << hi << " after "
          << max_expansions << " expansions";
      throw NumericError(msg.str());
    }
    const double a = best == 0 ? lo : lo + (best - 1) * step;
    const double b = lo + (best + 1) * step;
    Extremum e = golden_section_maximize(f, a, b, x_tol);
    if (best == 0 && best_value > e.value) return {lo, best_value, e.iterations};
    return e;
  }
}

double bisect_root(const std::function<double(double)>& f, double lo, double hi,
                   double x_tol, int max_iterations) {
  double f_lo = f(lo);
  const double f_hi = f(hi);
  if (f_lo == 0.0) return lo;
  if (f_hi == 0.0) return hi;
  if ((f_lo > 0) == (f_hi > 0)) {
    std::ostringstream msg;
    msg << "root not bracketed: f(" << lo << ")=" << f_lo << ", f(" << hi
        << ")=" << f_hi;
    throw NumericError(msg.str());
  }
  for (int it = 0; it < max_iterations; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (hi - lo <= x_tol || mid == lo || mid == hi) return mid;
    const double f_mid = f(mid);
    if (f_mid == 0.0) return mid;
    if ((f_mid > 0) == (f_lo > 0)) {
      lo = mid;
      f_lo = f_mid;
    } else {
      hi = mid;
    }
  }
  std::ostringstream msg;
  msg << "bisection did not reach tolerance " << x_tol << " in "
      << max_iterations << " iterations";
  throw NumericError(msg.str());
}

}  // namespace qfc::numerics
