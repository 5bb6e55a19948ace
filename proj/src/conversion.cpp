#include "qfc/conversion.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "qfc/numerics.hpp"
#include "qfc/random.hpp"

namespace qfc::conversion {

using constants::pi;

void ConversionProcess::validate() const {
  const double fields[] = {lambda_red, lambda_pump, lambda_target,
                           n_red,      n_pump,      n_target,
                           d_eff,      crystal_length, domain_length};
  for (double v : fields)
    if (!(v > 0.0) || !std::isfinite(v))
      throw DomainError("conversion process: all wavelengths, indices, d_eff "
                        "and lengths must be positive and finite");
  const double inv_red = 1.0 / lambda_red;
  const double mismatch = inv_red - 1.0 / lambda_pump - 1.0 / lambda_target;
  if (std::abs(mismatch) > 1e-4 * inv_red) {
    std::ostringstream msg;
    msg << "conversion process violates energy conservation: relative "
           "mismatch "
        << mismatch / inv_red << " exceeds 1e-4";
    throw DomainError(msg.str());
  }
}

double complete_wavelength_triple(double lambda_a, double lambda_b,
                                  KnownPair known) {
  if (!(lambda_a > 0.0) || !(lambda_b > 0.0))
    throw DomainError("wavelengths must be positive");
  double inverse = 0.0;
  switch (known) {
    case KnownPair::RedPump:  // the other long wavelength is 1/(1/red - 1/b)
    case KnownPair::RedTarget:
      inverse = 1.0 / lambda_a - 1.0 / lambda_b;
      break;
    case KnownPair::PumpTarget:  // red = 1/(1/pump + 1/target)
      inverse = 1.0 / lambda_a + 1.0 / lambda_b;
      break;
  }
  if (!(inverse > 0.0))
    throw DomainError(
        "no physical third wavelength: the red field must be the shortest");
  return 1.0 / inverse;
}

double bk_integrand_factor(double sigma, double xi) {
  if (!(xi > 0.0) || !std::isfinite(xi))
    throw DomainError("bk_integrand_factor: xi must be positive");
  // exp(i s t)/(1 + i t) = [cos(st) + t sin(st) + i (sin(st) - t cos(st))]
  //                        / (1 + t^2)
  auto real_part = [sigma](double t) {
    return (std::cos(sigma * t) + t * std::sin(sigma * t)) / (1.0 + t * t);
  };
  auto imag_part = [sigma](double t) {
    return (std::sin(sigma * t) - t * std::cos(sigma * t)) / (1.0 + t * t);
  };
  const double re = numerics::integrate(real_part, -xi, xi, 1e-9).value;
  const double im = numerics::integrate(imag_part, -xi, xi, 1e-9).value;
  return (re * re + im * im) / (4.0 * xi);
}

FocusingOptimum optimize_focusing_offset(double xi) {
  if (!(xi > 0.0) || !std::isfinite(xi))
    throw DomainError("h_m: xi must be positive");
  auto h = [xi](double sigma) { return bk_integrand_factor(sigma, xi); };
  const auto best = numerics::bracketed_maximize(h, 0.0, 6.0, 1e-6);
  return {best.x, best.value};
}

OptimalFocusing optimal_focusing(double xi_lo, double xi_hi) {
  if (!(xi_lo > 0.0) || !(xi_hi > xi_lo))
    throw DomainError("optimal_focusing: need 0 < xi_lo < xi_hi");
  auto objective = [](double log_xi) { return h_m(std::exp(log_xi)); };
  const auto best = numerics::bracketed_maximize(
      objective, std::log(xi_lo), std::log(xi_hi), 1e-7, 41, 0);
  const double xi = std::exp(best.x);
  const auto inner = optimize_focusing_offset(xi);
  return {xi, inner.sigma, inner.h};
}

double p_max(const ConversionProcess& process, double h) {
  process.validate();
  if (!(h > 0.0)) throw DomainError("p_max: focusing factor must be positive");
  const auto& p = process;
  return constants::speed_of_light * constants::vacuum_permittivity *
         p.n_target * p.n_red * p.lambda_target * p.lambda_red *
         p.lambda_pump / (128.0 * p.d_eff * p.d_eff * p.crystal_length * h);
}

double pump_for_target_efficiency(double eta, double p_max) {
  if (!(eta >= 0.0 && eta <= 1.0))
    throw DomainError("pump_for_target_efficiency: eta must lie in [0, 1]");
  if (!(p_max > 0.0))
    throw DomainError("pump_for_target_efficiency: p_max must be positive");
  const double u = (2.0 / pi) * std::asin(std::sqrt(eta));
  return p_max * u * u;
}

double bandwidth_wavelength_from_frequency(double delta_nu, double lambda) {
  if (!(delta_nu >= 0.0) || !(lambda > 0.0))
    throw DomainError("bandwidth conversion: need delta_nu >= 0, lambda > 0");
  return lambda * lambda * delta_nu / constants::speed_of_light;
}

DepletionSample ingest_depletion_sample(double power, double efficiency,
                                        double uncertainty,
                                        std::vector<std::string>* warnings) {
  if (!(power >= 0.0) || !std::isfinite(power))
    throw DomainError("depletion sample: power must be nonnegative");
  if (!(uncertainty >= 0.0) || !std::isfinite(uncertainty))
    throw DomainError("depletion sample: uncertainty must be nonnegative");
  if (!std::isfinite(efficiency))
    throw DomainError("depletion sample: efficiency must be finite");
  DepletionSample s{power, efficiency, uncertainty};
  if (efficiency >= 0.0 && efficiency <= 1.0) return s;

  const double excess = efficiency < 0.0 ? -efficiency : efficiency - 1.0;
  if (excess > uncertainty) {
    std::ostringstream msg;
    msg << "depletion sample at " << power << " W: efficiency " << efficiency
        << " lies outside [0, 1] by more than its uncertainty";
    throw DomainError(msg.str());
  }
  s.measured_efficiency = std::clamp(efficiency, 0.0, 1.0);
  if (warnings) {
    std::ostringstream msg;
    msg << "efficiency " << efficiency << " at " << power
        << " W clamped to " << s.measured_efficiency;
    warnings->push_back(msg.str());
  }
  return s;
}

namespace {

struct Evaluation {
  double cost = 0.0;       // weighted sum of squared residuals
  double gradient = 0.0;   // sum w J r
  double curvature = 0.0;  // sum w J^2
};

Evaluation evaluate(std::span<const DepletionSample> samples, bool weighted,
                    double pm) {
  Evaluation e;
  for (const auto& s : samples) {
    const double w = weighted ? 1.0 / (s.efficiency_uncertainty *
                                       s.efficiency_uncertainty)
                              : 1.0;
    const double u = (pi / 2) * std::sqrt(s.circulating_power / pm);
    const double model = std::sin(u) * std::sin(u);
    const double jac = -std::sin(2.0 * u) * u / (2.0 * pm);
    const double r = s.measured_efficiency - model;
    e.cost += w * r * r;
    e.gradient += w * jac * r;
    e.curvature += w * jac * jac;
  }
  return e;
}

double initial_pmax(std::span<const DepletionSample> samples) {
  std::vector<double> guesses;
  for (const auto& s : samples) {
    if (s.circulating_power <= 0.0) continue;
    if (s.measured_efficiency <= 0.0 || s.measured_efficiency >= 1.0) continue;
    guesses.push_back(s.circulating_power /
                      pump_for_target_efficiency(s.measured_efficiency, 1.0));
  }
  if (guesses.empty()) {
    double top = 0.0;
    for (const auto& s : samples) top = std::max(top, s.circulating_power);
    return top > 0.0 ? 2.0 * top : 1.0;
  }
  auto mid = guesses.begin() + guesses.size() / 2;
  std::nth_element(guesses.begin(), mid, guesses.end());
  return *mid;
}

}  // namespace

PmaxFit fit_pmax(std::span<const DepletionSample> samples, int max_iterations) {
  if (samples.size() < 3)
    throw DomainError("fit_pmax: at least 3 samples are required");
  const auto [lo, hi] = std::minmax_element(
      samples.begin(), samples.end(), [](const auto& a, const auto& b) {
        return a.circulating_power < b.circulating_power;
      });
  if (lo->circulating_power == hi->circulating_power)
    throw DomainError("fit_pmax: all samples share the same pump power");
  const bool weighted = std::all_of(samples.begin(), samples.end(), [](auto& s) {
    return s.efficiency_uncertainty > 0.0;
  });

  PmaxFit fit;
  double pm = initial_pmax(samples);
  Evaluation current = evaluate(samples, weighted, pm);
  bool converged = false;
  for (int it = 1; it <= max_iterations; ++it) {
    fit.iterations = it;
    if (current.curvature <= 0.0) break;
    double step = current.gradient / current.curvature;
    Evaluation trial;
    double candidate = pm;
    for (int halving = 0; halving < 60; ++halving) {
      candidate = pm + step;
      if (candidate > 0.0) {
        trial = evaluate(samples, weighted, candidate);
        if (trial.cost <= current.cost) break;
      }
      step *= 0.5;
    }
    if (!(candidate > 0.0) || trial.cost > current.cost) {
      // No descent direction left: we are at the optimum to rounding.
      converged = true;
      break;
    }
    pm = candidate;
    current = trial;
    if (std::abs(step) < 1e-10 * pm) {
      converged = true;
      break;
    }
  }
  if (!converged) {
    std::ostringstream msg;
    msg << "fit_pmax did not converge in " << max_iterations
        << " iterations; last P_max " << pm << " W";
    throw FitError(msg.str(), pm);
  }

  fit.p_max = pm;
  fit.residual_norm = std::sqrt(current.cost);
  double variance = current.curvature > 0.0 ? 1.0 / current.curvature : 0.0;
  if (!weighted) variance *= current.cost / static_cast<double>(samples.size() - 1);
  fit.uncertainty = std::sqrt(variance);
  return fit;
}

std::vector<DepletionSample> simulate_depletion(double p_max,
                                                std::span<const double> powers,
                                                double noise_sd,
                                                std::uint64_t seed) {
  if (!(noise_sd >= 0.0)) throw DomainError("noise_sd must be nonnegative");
  Rng rng(seed);
  std::vector<DepletionSample> out;
  out.reserve(powers.size());
  for (double p : powers) {
    const double eta = conversion_efficiency(p, p_max);
    out.push_back({p, eta + (noise_sd > 0.0 ? rng.normal(0.0, noise_sd) : 0.0),
                   noise_sd});
  }
  return out;
}

}  // namespace qfc::conversion
