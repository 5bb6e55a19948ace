#pragma once

// Photon-statistics estimators for converted pairs: g2 cross-correlation,
// Franson fringe visibility and chained CHSH Bell inequalities, plus a
// Poissonian count simulator for all of them.

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include <Eigen/Core>

#include "qfc/errors.hpp"

namespace qfc::verify {

struct Estimate {
  double value = 0.0;
  double sigma = 0.0;
};

// ---------------------------------------------------------------------------
// g2 cross-correlation

struct CoincidenceHistogram {
  double bin_width = 0.0;          // s
  std::vector<std::int64_t> counts;
  double integration_time = 0.0;   // s
  std::size_t center_bin = 0;

  void validate() const;
};

struct G2Options {
  int peak_window_bins = 1;
  // Bins with |i - center| <= this are excluded from the accidental level.
  int exclusion_half_width = 10;
  // Optional extra exclusions, e.g. electronic-reflection sidelobes, given as
  // signed bin offsets from the center, each masked +-sidelobe_half_width.
  std::vector<int> sidelobe_offsets;
  int sidelobe_half_width = 0;
};

// g2(0) = (mean counts in the peak window) / (mean accidental counts per
// bin), with Poisson errors on both. The window holds `peak_window_bins`
// bins starting (peak_window_bins - 1) / 2 bins before the center, clipped
// to the histogram.
Estimate g2_normalize(const CoincidenceHistogram& hist, const G2Options& opts);

inline Estimate g2_normalize(const CoincidenceHistogram& hist,
                             int peak_window_bins, int exclusion_half_width) {
  G2Options opts;
  opts.peak_window_bins = peak_window_bins;
  opts.exclusion_half_width = exclusion_half_width;
  return g2_normalize(hist, opts);
}

// Number of standard deviations by which g2 exceeds the classical bound
// (2 for thermal marginals).
double cauchy_schwarz_significance(double g2_si, double sigma,
                                   double classical_bound = 2.0);

// ---------------------------------------------------------------------------
// Franson interference

// (A/2) (1 + V cos(phase + offset)).
template <typename Scalar>
  requires(!std::is_base_of_v<Eigen::ArrayBase<Scalar>, Scalar>)
Scalar franson_model(Scalar phase_sum, double amplitude, double visibility,
                     double phase_offset) {
  using std::cos;
  return Scalar(amplitude / 2) *
         (Scalar(1) + Scalar(visibility) * cos(phase_sum + Scalar(phase_offset)));
}

template <typename Derived>
Eigen::ArrayXd franson_model(const Eigen::ArrayBase<Derived>& phase_sum,
                             double amplitude, double visibility,
                             double phase_offset) {
  return (amplitude / 2) *
         (1.0 + visibility * (phase_sum.template cast<double>() + phase_offset).cos());
}

enum class Port { PlusPlus, PlusMinus, MinusPlus, MinusMinus };

inline constexpr std::array<Port, 4> kAllPorts = {
    Port::PlusPlus, Port::PlusMinus, Port::MinusPlus, Port::MinusMinus};

std::string_view port_name(Port port);
// Parses "++", "+-", "-+" or "--"; throws DomainError otherwise.
Port parse_port(std::string_view text);

struct FransonPoint {
  double phase_sum = 0.0;  // rad
  Port port = Port::PlusPlus;
  double counts = 0.0;     // measured counts, or expected counts from a model
  double time = 0.0;       // s
};

struct FransonScan {
  std::vector<FransonPoint> points;

  void validate() const;
};

struct VisibilityFit {
  double visibility = 0.0;
  double visibility_sigma = 0.0;
  double phase_offset = 0.0;
  double phase_offset_sigma = 0.0;
  double amplitude = 0.0;        // Hz, A in franson_model
  double amplitude_sigma = 0.0;
  double mean_rate = 0.0;        // Hz, A / 2
  double chi2 = 0.0;
  int dof = 0;
};

// Weighted least squares of franson_model to the rates of one port. The fit
// is solved in the linear parameterization r = c0 + c1 cos + c2 sin, which
// has the same minimizer, and uncertainties follow from the covariance by
// first-order propagation.
VisibilityFit fit_visibility(const FransonScan& scan, Port port);

// Subtracts a flat accidental pedestal: V_corr = V_raw m / (m - a).
double correct_visibility(double raw_visibility, double mean_rate,
                          double accidental_rate);

// ---------------------------------------------------------------------------
// Chained Bell inequality

// Rates in the order ++, +-, -+, --.
struct PortRates {
  Eigen::Array4d rate = Eigen::Array4d::Zero();   // Hz
  Eigen::Array4d sigma = Eigen::Array4d::Zero();  // Hz

  static PortRates from_counts(const Eigen::Array4d& counts, double time);
};

// E = (R++ - R+- - R-+ + R--) / (R++ + R+- + R-+ + R--).
Estimate bell_expectation(const PortRates& rates);

// Two-detector completion: R-- = R++ and R+- = R-+ = R++ measured at
// phase + pi. The duplicated ports carry sqrt(2)-inflated uncertainties so
// that first-order propagation in bell_expectation, which treats the four
// ports as independent, yields the correct variance.
PortRates two_detector_completion(const Estimate& r_pp_at_phase,
                                  const Estimate& r_pp_at_phase_plus_pi);

inline PortRates two_detector_completion(double r_pp_at_phase,
                                         double r_pp_at_phase_plus_pi) {
  return two_detector_completion(Estimate{r_pp_at_phase, 0.0},
                                 Estimate{r_pp_at_phase_plus_pi, 0.0});
}

struct ChainedBounds {
  double s_lhv = 0.0;   // 2N - 1
  double s_qm = 0.0;    // 2N cos(pi / 2N)
  double v_crit = 0.0;  // s_lhv / s_qm
};

ChainedBounds chained_bounds(int n);

// One correlator of the 2N-term sum; indices are zero-based.
struct BellTerm {
  int a = 0;
  int b = 0;
  int sign = 1;
};

// Terms in the order <A_N B_N>, then for k = 2..N <A_k B_k-1>, <A_k-1 B_k>,
// and finally -<A_1 B_1>.
std::vector<BellTerm> chained_terms(int n);

struct BellSchedule {
  int n = 0;
  Eigen::VectorXd a;  // phase settings of interferometer 1, rad
  Eigen::VectorXd b;  // phase settings of interferometer 2, rad
  std::vector<BellTerm> terms;
  std::vector<std::optional<Estimate>> expectations;  // one per term

  explicit BellSchedule(int settings);

  // Phase sum a + b seen by term i.
  double term_phase(std::size_t i) const;
  // Stores an expectation for the term pairing A_a with B_b (zero-based);
  // throws DomainError if no such term exists.
  void set_expectation(int a_index, int b_index, const Estimate& e);
  bool complete() const;
};

// Settings with relative angle pi/2N on every added term and (2N-1) pi/2N on
// the subtracted one, with a_1 = 0. Expectations are left empty.
BellSchedule optimal_schedule(int n);

// Fills expectations with the noiseless model value V cos(a + b).
void fill_model_expectations(BellSchedule& schedule, double visibility);

// Signed sum of the 2N expectations, sigma summed in quadrature. Throws
// DomainError on an incomplete schedule.
Estimate chained_s(const BellSchedule& schedule);

// Mean over repeated trials. With >= 3 trials the uncertainty is the
// standard error of the trial spread, otherwise the propagated one.
Estimate average_trials(std::span<const Estimate> trials);

// ---------------------------------------------------------------------------
// Count simulation

struct SimulationParams {
  double visibility = 1.0;
  double amplitude = 0.0;        // Hz, A in franson_model
  double accidental_rate = 0.0;  // Hz, added flat to every port
  double integration_time = 1.0; // s, per setting and phase
  int trials = 1;
  std::uint64_t seed = 0;
  // Use expected counts instead of Poisson draws (infinite-time limit).
  bool exact = false;
};

struct BellSimulation {
  std::vector<BellSchedule> trials;  // schedules with measured expectations
  std::vector<Estimate> s;           // chained_s per trial
  Estimate mean;                     // average_trials(s)
};

// Per trial and term, draws R++ counts at the term phase and at phase + pi
// and completes the four ports with two_detector_completion. Trial i uses
// the generator seeded with derive_seed(seed, i).
BellSimulation simulate_bell(const BellSchedule& settings,
                             const SimulationParams& params);

// Four-port scan, each port drawn independently: ++ and -- follow
// franson_model at offset 0, +- and -+ at offset pi. `port_visibility` is in
// kAllPorts order.
FransonScan simulate_franson_scan(std::span<const double> phases,
                                  const std::array<double, 4>& port_visibility,
                                  const SimulationParams& params, int trial = 0);

}  // namespace qfc::verify
