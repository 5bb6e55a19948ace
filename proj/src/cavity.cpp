#include "qfc/cavity.hpp"

#include <cmath>
#include <sstream>

#include "qfc/constants.hpp"
#include "qfc/errors.hpp"
#include "qfc/numerics.hpp"

namespace qfc::cavity {

using constants::pi;

double CavitySpec::round_trip_survival() const {
  return std::sqrt(reflectivity_in * reflectivity_out) *
         (1.0 - round_trip_extra_loss);
}

void CavitySpec::validate() const {
  auto in_unit = [](double r) { return r > 0.0 && r <= 1.0; };
  if (!in_unit(reflectivity_in) || !in_unit(reflectivity_out))
    throw DomainError("cavity: facet reflectivities must lie in (0, 1]");
  if (!(round_trip_extra_loss >= 0.0 && round_trip_extra_loss < 1.0))
    throw DomainError("cavity: round-trip extra loss must lie in [0, 1)");
  if (!(geometric_length > 0.0) || !(facet_curvature_radius > 0.0) ||
      !(index_at_pump > 0.0))
    throw DomainError("cavity: length, curvature radius and index must be "
                      "positive");
  if (!(2.0 * facet_curvature_radius - geometric_length > 0.0)) {
    std::ostringstream msg;
    msg << "cavity is unstable: 2 R_curv - L = "
        << 2.0 * facet_curvature_radius - geometric_length
        << " m must be positive";
    throw DomainError(msg.str());
  }
  if (!(round_trip_survival() < 1.0))
    throw DomainError("cavity: lossless unit-reflectivity cavity has no "
                      "finite finesse");
}

namespace {

double finesse_of_survival(double rho) {
  return pi * std::sqrt(rho) / (1.0 - rho);
}

}  // namespace

double finesse(const CavitySpec& spec) {
  spec.validate();
  return finesse_of_survival(spec.round_trip_survival());
}

double infer_round_trip_loss(double measured_finesse, double reflectivity_in,
                             double reflectivity_out) {
  if (!(reflectivity_in > 0.0 && reflectivity_in <= 1.0) ||
      !(reflectivity_out > 0.0 && reflectivity_out <= 1.0))
    throw DomainError("infer_round_trip_loss: reflectivities must lie in "
                      "(0, 1]");
  if (!(measured_finesse > 0.0))
    throw DomainError("infer_round_trip_loss: finesse must be positive");
  const double rho_max = std::sqrt(reflectivity_in * reflectivity_out);
  if (rho_max >= 1.0)
    throw DomainError("infer_round_trip_loss: lossless bound is infinite");
  const double lossless = finesse_of_survival(rho_max);
  if (measured_finesse > lossless * (1.0 + 1e-12)) {
    std::ostringstream msg;
    msg << "measured finesse " << measured_finesse
        << " exceeds the lossless bound " << lossless;
    throw DomainError(msg.str());
  }
  if (measured_finesse >= lossless) return 0.0;

  // finesse_of_survival is increasing in rho on (0, 1).
  const double rho = numerics::bisect_root(
      [measured_finesse](double r) {
        return finesse_of_survival(r) - measured_finesse;
      },
      0.0, rho_max, 1e-15);
  return 1.0 - rho / rho_max;
}

double enhancement(const CavitySpec& spec) {
  spec.validate();
  const double rho = spec.round_trip_survival();
  return (1.0 - spec.reflectivity_in) / ((1.0 - rho) * (1.0 - rho));
}

double circulating_power(double p_in, double mode_coupling,
                         double enhancement) {
  if (!(p_in >= 0.0))
    throw DomainError("circulating_power: input power must be nonnegative");
  if (!(mode_coupling >= 0.0 && mode_coupling <= 1.0))
    throw DomainError("circulating_power: mode coupling must lie in [0, 1]");
  if (!(enhancement >= 0.0))
    throw DomainError("circulating_power: enhancement must be nonnegative");
  return p_in * mode_coupling * enhancement;
}

ResonatorMode resonator_mode(const CavitySpec& spec, double lambda_pump) {
  spec.validate();
  if (!(lambda_pump > 0.0))
    throw DomainError("resonator_mode: pump wavelength must be positive");
  const double half = 0.5 * spec.geometric_length;
  const double z_r = half * std::sqrt(2.0 * spec.facet_curvature_radius /
                                          spec.geometric_length -
                                      1.0);
  return {z_r, spec.geometric_length / (2.0 * z_r)};
}

CavityFigures cavity_figures(const CavitySpec& spec, double lambda_pump,
                             double p_in, double mode_coupling) {
  const auto mode = resonator_mode(spec, lambda_pump);
  CavityFigures f;
  f.finesse = finesse(spec);
  f.enhancement = enhancement(spec);
  f.circulating_power = circulating_power(p_in, mode_coupling, f.enhancement);
  f.mode_rayleigh_range = mode.rayleigh_range;
  f.focusing_parameter = mode.focusing_parameter;
  return f;
}

}  // namespace qfc::cavity
