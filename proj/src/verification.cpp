#include "qfc/verification.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include <Eigen/Dense>

#include "qfc/constants.hpp"
#include "qfc/random.hpp"

namespace qfc::verify {

using constants::pi;

// ---------------------------------------------------------------------------
// g2

void CoincidenceHistogram::validate() const {
  if (!(bin_width > 0.0)) throw DomainError("histogram: bin width must be > 0");
  if (!(integration_time > 0.0))
    throw DomainError("histogram: integration time must be > 0");
  if (counts.empty()) throw DomainError("histogram: no bins");
  if (center_bin >= counts.size())
    throw DomainError("histogram: center bin outside the histogram");
  for (auto c : counts)
    if (c < 0) throw DomainError("histogram: negative counts");
}

Estimate g2_normalize(const CoincidenceHistogram& hist, const G2Options& opts) {
  hist.validate();
  if (opts.peak_window_bins < 1)
    throw DomainError("g2: peak window must hold at least one bin");
  if (opts.exclusion_half_width < 0 || opts.sidelobe_half_width < 0)
    throw DomainError("g2: exclusion widths must be nonnegative");

  const auto size = static_cast<long>(hist.counts.size());
  const auto center = static_cast<long>(hist.center_bin);
  auto excluded = [&](long i) {
    if (std::abs(i - center) <= opts.exclusion_half_width) return true;
    for (int off : opts.sidelobe_offsets)
      if (std::abs(i - (center + off)) <= opts.sidelobe_half_width) return true;
    return false;
  };

  double background = 0.0;
  long background_bins = 0;
  for (long i = 0; i < size; ++i) {
    if (excluded(i)) continue;
    background += static_cast<double>(hist.counts[i]);
    ++background_bins;
  }
  const long needed = std::max(1, 10 * opts.exclusion_half_width);
  if (background_bins < needed) {
    std::ostringstream msg;
    msg << "g2: only " << background_bins << " accidental bins outside the "
        << "exclusion zone, need " << needed;
    throw DomainError(msg.str());
  }
  if (background == 0.0)
    throw DomainError("g2: zero accidental level, cannot normalize");

  const long first = std::max(0L, center - (opts.peak_window_bins - 1) / 2);
  const long last = std::min(size - 1, first + opts.peak_window_bins - 1);
  double peak = 0.0;
  for (long i = first; i <= last; ++i)
    peak += static_cast<double>(hist.counts[i]);
  const double window = static_cast<double>(last - first + 1);

  const double accidental = background / static_cast<double>(background_bins);
  const double g2 = (peak / window) / accidental;
  const double rel_var =
      (peak > 0.0 ? 1.0 / peak : 0.0) + 1.0 / background;
  return {g2, g2 * std::sqrt(rel_var)};
}

double cauchy_schwarz_significance(double g2_si, double sigma,
                                   double classical_bound) {
  if (!(sigma > 0.0))
    throw DomainError("cauchy_schwarz_significance: sigma must be positive");
  return (g2_si - classical_bound) / sigma;
}

// ---------------------------------------------------------------------------
// Franson

std::string_view port_name(Port port) {
  switch (port) {
    case Port::PlusPlus: return "++";
    case Port::PlusMinus: return "+-";
    case Port::MinusPlus: return "-+";
    case Port::MinusMinus: return "--";
  }
  return "??";
}

Port parse_port(std::string_view text) {
  for (Port p : kAllPorts)
    if (port_name(p) == text) return p;
  throw DomainError("unknown port '" + std::string(text) +
                    "', expected one of ++ +- -+ --");
}

void FransonScan::validate() const {
  for (const auto& p : points) {
    if (!(p.time > 0.0))
      throw DomainError("franson scan: integration time must be positive");
    if (!(p.counts >= 0.0) || !std::isfinite(p.counts))
      throw DomainError("franson scan: counts must be nonnegative");
    if (!std::isfinite(p.phase_sum))
      throw DomainError("franson scan: phase must be finite");
  }
}

VisibilityFit fit_visibility(const FransonScan& scan, Port port) {
  scan.validate();
  std::vector<const FransonPoint*> sel;
  for (const auto& p : scan.points)
    if (p.port == port) sel.push_back(&p);

  std::vector<double> phases;
  for (auto* p : sel) phases.push_back(p->phase_sum);
  std::sort(phases.begin(), phases.end());
  phases.erase(std::unique(phases.begin(), phases.end()), phases.end());
  if (phases.size() < 4 || phases.back() - phases.front() <= pi) {
    std::ostringstream msg;
    msg << "fit_visibility: port " << port_name(port) << " needs >= 4 distinct "
        << "phases spanning more than pi, got " << phases.size();
    throw DomainError(msg.str());
  }

  const auto m = static_cast<Eigen::Index>(sel.size());
  Eigen::MatrixXd design(m, 3);
  Eigen::VectorXd rate(m), weight(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const auto& p = *sel[i];
    design(i, 0) = 1.0;
    design(i, 1) = std::cos(p.phase_sum);
    design(i, 2) = std::sin(p.phase_sum);
    rate(i) = p.counts / p.time;
    // Poisson variance of the rate; a single count floors empty bins.
    weight(i) = p.time * p.time / std::max(p.counts, 1.0);
  }
  const Eigen::Matrix3d normal = design.transpose() * weight.asDiagonal() * design;
  const Eigen::Vector3d rhs = design.transpose() * (weight.array() * rate.array()).matrix();
  const Eigen::LDLT<Eigen::Matrix3d> ldlt(normal);
  if (ldlt.info() != Eigen::Success || ldlt.rcond() < 1e-14)
    throw NumericError("fit_visibility: normal equations are singular");
  const Eigen::Vector3d coef = ldlt.solve(rhs);
  const Eigen::Matrix3d cov = ldlt.solve(Eigen::Matrix3d::Identity());

  const double c0 = coef(0), c1 = coef(1), c2 = coef(2);
  if (!(c0 > 0.0))
    throw NumericError("fit_visibility: fitted mean rate is not positive");
  const double r = std::hypot(c1, c2);

  VisibilityFit fit;
  fit.mean_rate = c0;
  fit.amplitude = 2.0 * c0;
  fit.amplitude_sigma = 2.0 * std::sqrt(cov(0, 0));
  fit.visibility = r / c0;
  if (r > 0.0) {
    fit.phase_offset = std::atan2(-c2, c1);
    Eigen::Vector3d dv(-fit.visibility / c0, c1 / (c0 * r), c2 / (c0 * r));
    Eigen::Vector3d dphi(0.0, c2 / (r * r), -c1 / (r * r));
    fit.visibility_sigma = std::sqrt(dv.dot(cov * dv));
    fit.phase_offset_sigma = std::sqrt(dphi.dot(cov * dphi));
  } else {
    fit.phase_offset = 0.0;
    fit.visibility_sigma = std::sqrt(0.5 * (cov(1, 1) + cov(2, 2))) / c0;
    fit.phase_offset_sigma = std::numeric_limits<double>::infinity();
  }
  const Eigen::VectorXd resid = rate - design * coef;
  fit.chi2 = (weight.array() * resid.array().square()).sum();
  fit.dof = static_cast<int>(m) - 3;
  return fit;
}

double correct_visibility(double raw_visibility, double mean_rate,
                          double accidental_rate) {
  if (!(accidental_rate >= 0.0))
    throw DomainError("correct_visibility: accidental rate must be >= 0");
  if (!(accidental_rate < mean_rate))
    throw DomainError("correct_visibility: accidental rate must be below the "
                      "mean rate");
  return raw_visibility * mean_rate / (mean_rate - accidental_rate);
}

// ---------------------------------------------------------------------------
// Bell

PortRates PortRates::from_counts(const Eigen::Array4d& counts, double time) {
  if (!(time > 0.0)) throw DomainError("port counts: time must be positive");
  if ((counts < 0.0).any()) throw DomainError("port counts must be >= 0");
  return {counts / time, counts.sqrt() / time};
}

Estimate bell_expectation(const PortRates& rates) {
  if ((rates.rate < 0.0).any())
    throw DomainError("bell_expectation: rates must be nonnegative");
  const double total = rates.rate.sum();
  if (!(total > 0.0))
    throw DomainError("bell_expectation: all port rates are zero");
  const Eigen::Array4d sign(1.0, -1.0, -1.0, 1.0);
  const double e = (sign * rates.rate).sum() / total;
  // dE/dR_i = (sign_i - E) / total
  const Eigen::Array4d grad = (sign - e) / total;
  return {e, std::sqrt((grad.square() * rates.sigma.square()).sum())};
}

PortRates two_detector_completion(const Estimate& r_pp_at_phase,
                                  const Estimate& r_pp_at_phase_plus_pi) {
  if (!(r_pp_at_phase.value >= 0.0) || !(r_pp_at_phase_plus_pi.value >= 0.0))
    throw DomainError("two_detector_completion: rates must be nonnegative");
  const double s = std::sqrt(2.0);
  PortRates out;
  out.rate << r_pp_at_phase.value, r_pp_at_phase_plus_pi.value,
      r_pp_at_phase_plus_pi.value, r_pp_at_phase.value;
  out.sigma << s * r_pp_at_phase.sigma, s * r_pp_at_phase_plus_pi.sigma,
      s * r_pp_at_phase_plus_pi.sigma, s * r_pp_at_phase.sigma;
  return out;
}

ChainedBounds chained_bounds(int n) {
  if (n < 2) throw DomainError("chained inequality needs N >= 2 settings");
  ChainedBounds b;
  b.s_lhv = 2.0 * n - 1.0;
  b.s_qm = 2.0 * n * std::cos(pi / (2.0 * n));
  b.v_crit = b.s_lhv / b.s_qm;
  return b;
}

std::vector<BellTerm> chained_terms(int n) {
  if (n < 2) throw DomainError("chained inequality needs N >= 2 settings");
  std::vector<BellTerm> terms;
  terms.reserve(2 * n);
  terms.push_back({n - 1, n - 1, +1});
  for (int k = 1; k < n; ++k) {
    terms.push_back({k, k - 1, +1});
    terms.push_back({k - 1, k, +1});
  }
  terms.push_back({0, 0, -1});
  return terms;
}

BellSchedule::BellSchedule(int settings)
    : n(settings),
      a(Eigen::VectorXd::Zero(settings)),
      b(Eigen::VectorXd::Zero(settings)),
      terms(chained_terms(settings)),
      expectations(terms.size()) {}

double BellSchedule::term_phase(std::size_t i) const {
  return a(terms.at(i).a) + b(terms.at(i).b);
}

void BellSchedule::set_expectation(int a_index, int b_index,
                                   const Estimate& e) {
  for (std::size_t i = 0; i < terms.size(); ++i) {
    if (terms[i].a == a_index && terms[i].b == b_index) {
      expectations[i] = e;
      return;
    }
  }
  std::ostringstream msg;
  msg << "chained inequality with N=" << n << " has no term <A_"
      << a_index + 1 << " B_" << b_index + 1 << ">";
  throw DomainError(msg.str());
}

bool BellSchedule::complete() const {
  return std::all_of(expectations.begin(), expectations.end(),
                     [](const auto& e) { return e.has_value(); });
}

BellSchedule optimal_schedule(int n) {
  BellSchedule s(n);
  const double step = pi / (2.0 * n);
  // The 2N settings form one cycle B1 A2 B3 ... | ... B2 A1 (back to B1)
  // through the correlators. Walking it in steps of pi/2N in the
  // difference convention puts the closing pair A1 B1 at (2N-1) pi/2N.
  for (int j = 1; j <= n; ++j) {
    const double near = (j - 1) * step;
    const double far = (2 * n - j) * step;
    const double pos_a = (j % 2 == 0) ? near : far;
    const double pos_b = (j % 2 == 1) ? near : far;
    s.a(j - 1) = pos_a;
    s.b(j - 1) = -pos_b;
  }
  const double shift = s.a(0);
  s.a.array() -= shift;
  s.b.array() += shift;
  return s;
}

void fill_model_expectations(BellSchedule& schedule, double visibility) {
  for (std::size_t i = 0; i < schedule.terms.size(); ++i)
    schedule.expectations[i] =
        Estimate{visibility * std::cos(schedule.term_phase(i)), 0.0};
}

Estimate chained_s(const BellSchedule& schedule) {
  if (schedule.expectations.size() != schedule.terms.size() ||
      !schedule.complete()) {
    std::ostringstream msg;
    msg << "chained_s: schedule with N=" << schedule.n
        << " is missing expectation values";
    throw DomainError(msg.str());
  }
  double s = 0.0, var = 0.0;
  for (std::size_t i = 0; i < schedule.terms.size(); ++i) {
    const auto& e = *schedule.expectations[i];
    s += schedule.terms[i].sign * e.value;
    var += e.sigma * e.sigma;
  }
  return {s, std::sqrt(var)};
}

Estimate average_trials(std::span<const Estimate> trials) {
  if (trials.empty()) throw DomainError("average_trials: no trials");
  const double n = static_cast<double>(trials.size());
  double mean = 0.0;
  for (const auto& t : trials) mean += t.value;
  mean /= n;
  double var = 0.0;
  if (trials.size() >= 3) {
    for (const auto& t : trials) var += (t.value - mean) * (t.value - mean);
    var /= (n - 1.0) * n;
  } else {
    for (const auto& t : trials) var += t.sigma * t.sigma;
    var /= n * n;
  }
  return {mean, std::sqrt(var)};
}

// ---------------------------------------------------------------------------
// Simulation

namespace {

void check_params(const SimulationParams& p) {
  if (!(p.visibility >= 0.0 && p.visibility <= 1.0))
    throw DomainError("simulation: visibility must lie in [0, 1]");
  if (!(p.amplitude >= 0.0) || !(p.accidental_rate >= 0.0))
    throw DomainError("simulation: rates must be nonnegative");
  if (!(p.integration_time > 0.0))
    throw DomainError("simulation: integration time must be positive");
  if (p.trials < 1) throw DomainError("simulation: need at least one trial");
}

double draw(Rng& rng, double mean, bool exact) {
  return exact ? mean : static_cast<double>(rng.poisson(mean));
}

}  // namespace

BellSimulation simulate_bell(const BellSchedule& settings,
                             const SimulationParams& params) {
  check_params(params);
  BellSimulation sim;
  const double t = params.integration_time;
  for (int trial = 0; trial < params.trials; ++trial) {
    Rng rng(derive_seed(params.seed, static_cast<std::uint64_t>(trial)));
    BellSchedule measured = settings;
    for (std::size_t i = 0; i < measured.terms.size(); ++i) {
      const double theta = measured.term_phase(i);
      const double mean_0 =
          (franson_model(theta, params.amplitude, params.visibility, 0.0) +
           params.accidental_rate) * t;
      const double mean_pi =
          (franson_model(theta + pi, params.amplitude, params.visibility, 0.0) +
           params.accidental_rate) * t;
      const double n0 = draw(rng, mean_0, params.exact);
      const double npi = draw(rng, mean_pi, params.exact);
      const auto rates = two_detector_completion(
          Estimate{n0 / t, std::sqrt(n0) / t}, Estimate{npi / t, std::sqrt(npi) / t});
      measured.expectations[i] = bell_expectation(rates);
    }
    sim.s.push_back(chained_s(measured));
    sim.trials.push_back(std::move(measured));
  }
  sim.mean = average_trials(sim.s);
  return sim;
}

FransonScan simulate_franson_scan(std::span<const double> phases,
                                  const std::array<double, 4>& port_visibility,
                                  const SimulationParams& params, int trial) {
  check_params(params);
  for (double v : port_visibility)
    if (!(v >= 0.0 && v <= 1.0))
      throw DomainError("simulation: port visibility must lie in [0, 1]");
  Rng rng(derive_seed(params.seed, static_cast<std::uint64_t>(trial)));
  FransonScan scan;
  const double t = params.integration_time;
  for (double phase : phases) {
    for (std::size_t k = 0; k < kAllPorts.size(); ++k) {
      const Port port = kAllPorts[k];
      const bool anti = port == Port::PlusMinus || port == Port::MinusPlus;
      const double mean =
          (franson_model(phase, params.amplitude, port_visibility[k],
                         anti ? pi : 0.0) +
           params.accidental_rate) * t;
      scan.points.push_back({phase, port, draw(rng, mean, params.exact), t});
    }
  }
  return scan;
}

}  // namespace qfc::verify
