#include "qfc/noise_link.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "qfc/numerics.hpp"

namespace qfc::noise {

double chain_product(std::span<const TransmissionFactor> chain) {
  double product = 1.0;
  for (const auto& f : chain) {
    if (!(f.transmission > 0.0 && f.transmission <= 1.0)) {
      std::ostringstream msg;
      msg << "efficiency chain factor '" << f.label << "' = " << f.transmission
          << " outside (0, 1]";
      throw DomainError(msg.str());
    }
    product *= f.transmission;
  }
  return product;
}

double nsd_generated(const NoiseMeasurement& meas, double eta_col,
                     double eta_det) {
  if (!(eta_col > 0.0 && eta_col <= 1.0) || !(eta_det > 0.0 && eta_det <= 1.0))
    throw DomainError("nsd_generated: efficiencies must lie in (0, 1]");
  if (!(meas.collection_bandwidth > 0.0))
    throw DomainError("nsd_generated: collection bandwidth must be positive");
  if (!(meas.measured_rate >= 0.0) || !(meas.circulating_power >= 0.0))
    throw DomainError("nsd_generated: rates and powers must be nonnegative");
  return meas.measured_rate / (meas.collection_bandwidth * eta_col * eta_det);
}

LineFit fit_noise_slope(std::span<const std::pair<double, double>> points) {
  if (points.size() < 2)
    throw DomainError("fit_noise_slope: at least two points are required");
  const double n = static_cast<double>(points.size());
  double mean_x = 0.0, mean_y = 0.0;
  for (const auto& [x, y] : points) {
    mean_x += x;
    mean_y += y;
  }
  mean_x /= n;
  mean_y /= n;
  double sxx = 0.0, sxy = 0.0;
  for (const auto& [x, y] : points) {
    sxx += (x - mean_x) * (x - mean_x);
    sxy += (x - mean_x) * (y - mean_y);
  }
  if (!(sxx > 0.0))
    throw DomainError("fit_noise_slope: all powers are identical");
  const double slope = sxy / sxx;
  return {slope, mean_y - slope * mean_x};
}

void LinkBudget::validate() const {
  auto fail = [this](const char* what) {
    std::ostringstream msg;
    msg << "link budget '" << name << "': " << what;
    throw DomainError(msg.str());
  };
  if (!(eta_ext > 0.0 && eta_ext <= 1.0)) fail("eta_ext must lie in (0, 1]");
  if (!(source_rate >= 0.0) || !(converter_noise >= 0.0) ||
      !(dark_rate >= 0.0))
    fail("rates must be nonnegative");
  if (!(converter_noise + dark_rate > 0.0))
    fail("converter noise and dark rate cannot both be zero");
  if (!(attenuation_db_per_km > 0.0)) fail("attenuation must be positive");
  if (!(narrowband_filter_width >= 0.0)) fail("filter width must be >= 0");
  if (!(narrowband_filter_transmission > 0.0 &&
        narrowband_filter_transmission <= 1.0))
    fail("filter transmission must lie in (0, 1]");
  if (!(detection_efficiency > 0.0 && detection_efficiency <= 1.0))
    fail("detection efficiency must lie in (0, 1]");
}

double converter_noise_rate(double nsd_ext, const LinkBudget& budget) {
  if (!(nsd_ext >= 0.0))
    throw DomainError("converter_noise_rate: NSD must be nonnegative");
  return nsd_ext * budget.narrowband_filter_width *
         budget.narrowband_filter_transmission * budget.detection_efficiency;
}

double snr_at_distance(const LinkBudget& budget, double distance_km) {
  budget.validate();
  if (!(distance_km >= 0.0))
    throw DomainError("snr_at_distance: distance must be nonnegative");
  const double t = fiber_transmittance(distance_km, budget.attenuation_db_per_km);
  return budget.eta_ext * budget.source_rate * t /
         (budget.converter_noise * t + budget.dark_rate);
}

double distance_for_snr(const LinkBudget& budget, double threshold) {
  if (!(threshold > 0.0))
    throw DomainError("distance_for_snr: threshold must be positive");
  const double at_zero = snr_at_distance(budget, 0.0);
  if (threshold > at_zero) {
    std::ostringstream msg;
    msg << "SNR threshold " << threshold << " not attainable: SNR(0) = "
        << at_zero;
    throw DomainError(msg.str());
  }
  if (threshold == at_zero) return 0.0;
  if (budget.dark_rate == 0.0)
    throw DomainError("distance_for_snr: SNR is distance-independent without "
                      "dark counts and never reaches the threshold");

  auto excess = [&](double x) { return snr_at_distance(budget, x) - threshold; };
  double hi = 1.0;
  while (excess(hi) > 0.0) {
    hi *= 2.0;
    if (hi > 1e9) throw NumericError("distance_for_snr: no bracket found");
  }
  return numerics::bisect_root(excess, 0.0, hi, 1e-7);
}

double distance_for_snr_closed_form(const LinkBudget& budget,
                                    double threshold) {
  budget.validate();
  const double signal = budget.eta_ext * budget.source_rate;
  const double arg = (signal - threshold * budget.converter_noise) /
                     (threshold * budget.dark_rate);
  return std::max(0.0, 10.0 / budget.attenuation_db_per_km * std::log10(arg));
}

SnrTable snr_comparison_sweep(std::span<const LinkBudget> budgets,
                              std::span<const double> distance_km) {
  if (distance_km.empty())
    throw DomainError("snr_comparison_sweep: distance grid is empty");
  for (double x : distance_km)
    if (!(x >= 0.0)) throw DomainError("snr_comparison_sweep: negative distance");
  SnrTable table;
  table.distance_km =
      Eigen::Map<const Eigen::VectorXd>(distance_km.data(), distance_km.size());
  table.snr.resize(table.distance_km.size(), budgets.size());
  for (std::size_t j = 0; j < budgets.size(); ++j) {
    table.names.push_back(budgets[j].name);
    table.snr.col(j) = snr_at_distance(budgets[j], table.distance_km.array());
  }
  return table;
}

}  // namespace qfc::noise
