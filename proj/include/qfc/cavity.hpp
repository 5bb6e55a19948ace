#pragma once

// Monolithic pump-enhancement cavity: Airy finesse, resonant power
// enhancement, loss inference and the Gaussian eigenmode of a crystal with
// two identical convex facets.

namespace qfc::cavity {

struct CavitySpec {
  double reflectivity_in = 0.0;        // power reflectivity at the pump
  double reflectivity_out = 0.0;
  double round_trip_extra_loss = 0.0;  // excludes facet transmission
  double geometric_length = 0.0;       // m
  double facet_curvature_radius = 0.0; // m
  double index_at_pump = 1.0;

  // Round-trip power survival rho = sqrt(R_in R_out) (1 - loss).
  double round_trip_survival() const;

  // Throws DomainError unless reflectivities lie in (0, 1], the loss in
  // [0, 1), lengths are positive, 2 R_curv > L and rho < 1.
  void validate() const;
};

struct CavityFigures {
  double finesse = 0.0;
  double enhancement = 0.0;
  double circulating_power = 0.0;    // W
  double mode_rayleigh_range = 0.0;  // m
  double focusing_parameter = 0.0;
};

// F = pi sqrt(rho) / (1 - rho).
double finesse(const CavitySpec& spec);

// Extra round-trip loss reproducing a measured finesse, by bisection on rho.
double infer_round_trip_loss(double measured_finesse, double reflectivity_in,
                             double reflectivity_out);

// E = (1 - R_in) / (1 - rho)^2 at exact resonance.
double enhancement(const CavitySpec& spec);

double circulating_power(double p_in, double mode_coupling, double enhancement);

struct ResonatorMode {
  double rayleigh_range = 0.0;       // m
  double focusing_parameter = 0.0;   // xi = L / (2 z_R)
};

// Eigenmode whose wavefront curvature matches both facets:
// z_R = (L/2) sqrt(2 R_curv / L - 1). The index cancels at normal incidence,
// so `lambda_pump` only enters through the precondition check.
ResonatorMode resonator_mode(const CavitySpec& spec, double lambda_pump);

CavityFigures cavity_figures(const CavitySpec& spec, double lambda_pump,
                             double p_in, double mode_coupling);

}  // namespace qfc::cavity
