#pragma once

// Noise-spectral-density accounting and the fiber-link signal-to-noise model
//   SNR(x) = eta_ext R_src T(x) / (N_C T(x) + N_D),  T(x) = 10^(-a x / 10).

#include <cmath>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "qfc/errors.hpp"

namespace qfc::noise {

struct TransmissionFactor {
  std::string label;
  double transmission = 1.0;  // (0, 1]
};

using EfficiencyChain = std::vector<TransmissionFactor>;

// Product of the factors; 1 for an empty chain. Throws DomainError if any
// factor lies outside (0, 1].
double chain_product(std::span<const TransmissionFactor> chain);

struct NoiseMeasurement {
  double circulating_power = 0.0;      // W
  double measured_rate = 0.0;          // Hz, detected
  double collection_bandwidth = 0.0;   // nm
};

// NSD_gen = N_meas / (d_lambda eta_col eta_det), in Hz/nm.
double nsd_generated(const NoiseMeasurement& meas, double eta_col,
                     double eta_det);

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
};

// Ordinary least-squares line through (power, NSD) points.
LineFit fit_noise_slope(std::span<const std::pair<double, double>> points);

struct LinkBudget {
  std::string name;
  double eta_ext = 1.0;                // distance-independent efficiency
  double source_rate = 0.0;            // Hz
  double converter_noise = 0.0;        // Hz, detected at x = 0
  double dark_rate = 0.0;              // Hz
  double attenuation_db_per_km = 0.0;  // positive
  double narrowband_filter_width = 0.0;         // nm
  double narrowband_filter_transmission = 1.0;
  double detection_efficiency = 0.9;

  void validate() const;
};

// N_C = NSD_ext * filter width * filter transmission * detection efficiency.
double converter_noise_rate(double nsd_ext, const LinkBudget& budget);

// Fiber power transmittance exp(-alpha x) with alpha = a ln(10) / 10.
template <typename Scalar>
Scalar fiber_transmittance(Scalar distance_km, double attenuation_db_per_km) {
  using std::exp;
  return exp(-Scalar(attenuation_db_per_km * std::log(10.0) / 10.0) *
             distance_km);
}

double snr_at_distance(const LinkBudget& budget, double distance_km);

// Coefficient-wise SNR over a distance grid. Evaluated through the scalar
// form so that grid and point values agree bit for bit.
template <typename Derived>
Eigen::ArrayXd snr_at_distance(const LinkBudget& budget,
                               const Eigen::ArrayBase<Derived>& distance_km) {
  budget.validate();
  return distance_km.template cast<double>().unaryExpr(
      [&budget](double x) { return snr_at_distance(budget, x); });
}

// Distance at which SNR falls to `threshold`, by bisection to 1e-6 km.
double distance_for_snr(const LinkBudget& budget, double threshold);

// Closed form of distance_for_snr, for cross-checking:
//   x = (10 / a) log10((eta R - s N_C) / (s N_D)).
double distance_for_snr_closed_form(const LinkBudget& budget, double threshold);

struct SnrTable {
  Eigen::VectorXd distance_km;
  std::vector<std::string> names;
  Eigen::MatrixXd snr;  // rows: distances, columns: budgets in input order
};

SnrTable snr_comparison_sweep(std::span<const LinkBudget> budgets,
                              std::span<const double> distance_km);

}  // namespace qfc::noise
