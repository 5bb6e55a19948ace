#pragma once

// Run configuration for the qfc-link command line tool. A single JSON
// document; units are SI except wavelengths (nm), distances (km) and noise
// spectral densities (kHz/nm), with the unit in each key name. Unknown keys
// are rejected. See docs/config.schema.json.

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "qfc/cavity.hpp"
#include "qfc/conversion.hpp"
#include "qfc/noise_link.hpp"

namespace qfc::cli {

// Bad configuration or malformed input file: exit code 2.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct EfficiencySection {
  std::optional<double> p_max;                // W
  std::optional<std::filesystem::path> depletion_csv;
  std::vector<double> power_grid;             // W
  std::optional<double> operating_point;      // W
};

struct CavitySection {
  cavity::CavitySpec spec;
  double lambda_pump = 0.0;  // m
  double input_power = 0.0;  // W
  double mode_coupling = 1.0;
  std::optional<double> measured_finesse;
};

struct BudgetEntry {
  noise::LinkBudget budget;
  std::string noise_source;  // "converter_noise_Hz", "nsd_ext_kHz_per_nm", ...
  double noise_input = 0.0;  // value of that key as given
};

struct RatioPair {
  std::string numerator;
  std::string denominator;
};

struct LinkSection {
  std::vector<double> distance_grid;  // km
  std::vector<BudgetEntry> budgets;
  std::vector<RatioPair> ratios;
  std::vector<double> snr_thresholds;
};

struct NoiseSection {
  double collection_bandwidth = 0.0;  // nm
  double detection_efficiency = 0.9;
  std::optional<double> internal_efficiency;
  std::optional<double> measured_rate;  // Hz
  std::optional<double> slope;          // Hz/(nm W)
  std::optional<double> power;          // W, evaluate slope * power
};

struct BellSection {
  std::string mode = "table";
  int settings = 5;
  int table_min = 2;
  int table_max = 12;
  double visibility = 1.0;
  double amplitude = 0.0;         // Hz
  double accidental_rate = 0.0;   // Hz
  double integration_time = 1.0;  // s
  int trials = 10;
  bool exact = false;
  std::optional<std::filesystem::path> expectations_csv;
};

struct G2Section {
  std::filesystem::path histogram_csv;
  double integration_time = 1.0;  // s
  int peak_window_bins = 1;
  int exclusion_half_width = 10;
  std::vector<int> sidelobe_offsets;
  int sidelobe_half_width = 0;
  double classical_bound = 2.0;
  std::optional<double> center_delay;  // s; default: bin with most counts
};

struct FransonSection {
  std::filesystem::path scan_csv;
  // Accidental rate per port in ++, +-, -+, -- order.
  std::array<double, 4> accidental_rate{};
};

struct RunConfig {
  std::optional<std::uint64_t> seed;
  std::filesystem::path output_dir = "qfc-out";
  std::filesystem::path base_dir;  // directory of the config file

  std::optional<conversion::ConversionProcess> process;
  std::optional<double> focusing_parameter;
  std::optional<EfficiencySection> efficiency;
  std::optional<CavitySection> cavity;
  std::optional<noise::EfficiencyChain> collection_chain;
  std::optional<NoiseSection> noise;
  std::optional<LinkSection> link;
  std::optional<BellSection> bell;
  std::optional<G2Section> g2;
  std::optional<FransonSection> franson;

  std::string canonical_json;  // normalized echo of the input document

  std::filesystem::path resolve(const std::filesystem::path& p) const;
};

// Parses and validates; every physical invariant of the embedded types is
// checked here. Throws InputError naming the offending field.
RunConfig parse_config(const std::string& text,
                       const std::filesystem::path& base_dir = {});
RunConfig load_config(const std::filesystem::path& path);

// Expands {"start", "stop", "step"} (inclusive of stop) or passes an explicit
// array through; exposed for tests.
std::vector<double> expand_grid(double start, double stop, double step);

}  // namespace qfc::cli
