#pragma once

// Quasi-phase-matched difference/sum-frequency conversion: the sin^2
// efficiency law, the maximum-efficiency pump power, Boyd-Kleinman focusing
// and fits of pump-depletion data.

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "qfc/constants.hpp"
#include "qfc/errors.hpp"

namespace qfc::conversion {

// Three-wave mixing red <-> pump + target, all SI units.
struct ConversionProcess {
  double lambda_red = 0.0;     // m
  double lambda_pump = 0.0;    // m
  double lambda_target = 0.0;  // m
  double n_red = 0.0;
  double n_pump = 0.0;
  double n_target = 0.0;
  double d_eff = 0.0;          // m/V
  double crystal_length = 0.0; // m
  double domain_length = 0.0;  // m, poling period is twice this

  double poling_period() const { return 2.0 * domain_length; }

  // Throws DomainError if any field is non-positive or if
  // 1/lambda_red = 1/lambda_pump + 1/lambda_target fails by more than 1e-4
  // relative.
  void validate() const;
};

enum class KnownPair { RedPump, RedTarget, PumpTarget };

// Returns the missing wavelength of the energy-conserving triple.
double complete_wavelength_triple(double lambda_a, double lambda_b,
                                  KnownPair known);

// Boyd-Kleinman focusing function
//   h(sigma, xi) = |int_{-xi}^{xi} exp(i sigma t) / (1 + i t) dt|^2 / (4 xi)
// for matched confocal parameters, no walk-off and no absorption.
double bk_integrand_factor(double sigma, double xi);

struct FocusingOptimum {
  double sigma = 0.0;  // optimal phase-mismatch offset
  double h = 0.0;      // h_m
};

// Maximizes bk_integrand_factor over sigma for fixed xi.
FocusingOptimum optimize_focusing_offset(double xi);

inline double h_m(double xi) { return optimize_focusing_offset(xi).h; }

struct OptimalFocusing {
  double xi = 0.0;
  double sigma = 0.0;
  double h = 0.0;
};

// Maximizes h_m over xi in [xi_lo, xi_hi] (searched in log xi).
OptimalFocusing optimal_focusing(double xi_lo = 0.1, double xi_hi = 10.0);

// Pump power of full conversion,
//   P_max = c eps0 n_t n_r lambda_t lambda_r lambda_p / (128 d_eff^2 L h).
double p_max(const ConversionProcess& process, double h);

template <typename Scalar>
Scalar conversion_efficiency(Scalar p_pump, Scalar p_max) {
  using std::sin;
  using std::sqrt;
  if (!(p_pump >= Scalar(0)) || !(p_max > Scalar(0)))
    throw DomainError("conversion_efficiency: need p_pump >= 0, p_max > 0");
  const Scalar s = sin(Scalar(constants::pi / 2) * sqrt(p_pump / p_max));
  return s * s;
}

// Coefficient-wise form for power grids; returns an Eigen expression that
// applies the scalar form, so results do not depend on SIMD code paths.
template <typename Derived>
auto conversion_efficiency(const Eigen::ArrayBase<Derived>& p_pump,
                           typename Derived::Scalar p_max) {
  using Scalar = typename Derived::Scalar;
  return p_pump.unaryExpr(
      [p_max](Scalar p) { return conversion_efficiency(p, p_max); });
}

// First-lobe inverse of conversion_efficiency.
double pump_for_target_efficiency(double eta, double p_max);

// sinc^2(delta_k L / 2), equal to 1 at delta_k = 0.
template <typename Scalar>
Scalar phase_matching_response(Scalar delta_k, Scalar length) {
  using std::sin;
  if (!(length > Scalar(0)))
    throw DomainError("phase_matching_response: length must be positive");
  const Scalar x = delta_k * length / Scalar(2);
  if (x == Scalar(0)) return Scalar(1);
  const Scalar s = sin(x) / x;
  return s * s;
}

template <typename Derived>
auto phase_matching_response(const Eigen::ArrayBase<Derived>& delta_k,
                             typename Derived::Scalar length) {
  using Scalar = typename Derived::Scalar;
  return delta_k.unaryExpr([length](Scalar dk) {
    return phase_matching_response(dk, length);
  });
}

// Delta_lambda = lambda^2 Delta_nu / c.
double bandwidth_wavelength_from_frequency(double delta_nu, double lambda);

struct DepletionSample {
  double circulating_power = 0.0;       // W
  double measured_efficiency = 0.0;     // 0..1
  double efficiency_uncertainty = 0.0;  // 0 when not provided
};

// Clamps an efficiency that lies outside [0, 1] by no more than its
// uncertainty and appends a warning; rejects anything further out.
DepletionSample ingest_depletion_sample(double power, double efficiency,
                                        double uncertainty,
                                        std::vector<std::string>* warnings);

struct PmaxFit {
  double p_max = 0.0;
  double uncertainty = 0.0;
  double residual_norm = 0.0;  // sqrt of the weighted sum of squares
  int iterations = 0;
  std::vector<std::string> warnings;
};

// Weighted least-squares fit of the one-parameter sin^2 law by damped
// Gauss-Newton. Samples without an uncertainty get unit weight and the
// reported uncertainty is rescaled by the reduced chi^2.
PmaxFit fit_pmax(std::span<const DepletionSample> samples,
                 int max_iterations = 100);

// Forward-model depletion data with additive Gaussian noise (sd in absolute
// efficiency units). Draws are deterministic in `seed`.
std::vector<DepletionSample> simulate_depletion(double p_max,
                                                std::span<const double> powers,
                                                double noise_sd,
                                                std::uint64_t seed);

}  // namespace qfc::conversion
