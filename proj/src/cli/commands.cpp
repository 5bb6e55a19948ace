#include "qfc/cli/commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "qfc/cavity.hpp"
#include "qfc/cli/csv.hpp"
#include "qfc/constants.hpp"
#include "qfc/conversion.hpp"
#include "qfc/errors.hpp"
#include "qfc/noise_link.hpp"
#include "qfc/verification.hpp"

namespace qfc::cli {
namespace {

using nlohmann::json;
using constants::nm;

json estimate_json(const verify::Estimate& e) {
  return {{"estimate", e.value}, {"sigma", e.sigma}};
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

template <typename Section>
const Section& require(const std::optional<Section>& s, const char* name) {
  if (!s) throw InputError(std::string("config: section '") + name +
                           "' is required for this command");
  return *s;
}

}  // namespace

// ---------------------------------------------------------------------------

ReportBundle build_efficiency(const RunConfig& cfg) {
  const auto& sec = require(cfg.efficiency, "efficiency");

  std::vector<conversion::DepletionSample> samples;
  std::vector<std::string> warnings;
  if (sec.depletion_csv) {
    const auto table = read_csv(cfg.resolve(*sec.depletion_csv));
    const auto pc = table.column("power_W");
    const auto ec = table.column("efficiency");
    const bool has_sigma = table.has_column("sigma");
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
      const double sigma = has_sigma ? table.number(r, table.column("sigma")) : 0.0;
      try {
        samples.push_back(conversion::ingest_depletion_sample(
            table.number(r, pc), table.number(r, ec), sigma, &warnings));
      } catch (const DomainError& e) {
        throw InputError(table.source + ": row " + std::to_string(r + 2) +
                         ": " + e.what());
      }
    }
    if (samples.size() < 3)
      throw InputError(table.source + ": at least 3 depletion samples needed");
  }

  json report;
  double p_max = sec.p_max.value_or(0.0);
  report["p_max_source"] = "config";
  if (sec.p_max) report["p_max_config_W"] = *sec.p_max;
  if (!samples.empty()) {
    auto fit = conversion::fit_pmax(samples);
    fit.warnings.insert(fit.warnings.begin(), warnings.begin(), warnings.end());
    report["fit"] = {{"p_max_W", fit.p_max},
                     {"uncertainty_W", fit.uncertainty},
                     {"residual_norm", fit.residual_norm},
                     {"iterations", fit.iterations},
                     {"samples", samples.size()},
                     {"warnings", fit.warnings}};
    p_max = fit.p_max;
    report["p_max_source"] = "fit";
  }
  report["p_max_W"] = p_max;

  const Eigen::ArrayXd power = Eigen::Map<const Eigen::ArrayXd>(
      sec.power_grid.data(), static_cast<Eigen::Index>(sec.power_grid.size()));
  const Eigen::ArrayXd eta = conversion::conversion_efficiency(power, p_max);
  CsvWriter curve({"power_W", "efficiency"});
  for (Eigen::Index i = 0; i < power.size(); ++i) curve.add_row({power(i), eta(i)});

  if (sec.operating_point) {
    report["operating_point"] = {
        {"power_W", *sec.operating_point},
        {"efficiency", conversion::conversion_efficiency(*sec.operating_point, p_max)}};
  }

  std::optional<double> xi = cfg.focusing_parameter;
  std::string xi_source = "process";
  if (!xi && cfg.cavity) {
    xi = cavity::resonator_mode(cfg.cavity->spec, cfg.cavity->lambda_pump)
             .focusing_parameter;
    xi_source = "cavity mode";
  }
  if (cfg.process) {
    const auto& p = *cfg.process;
    json diag = {{"lambda_red_nm", p.lambda_red / nm},
                 {"lambda_pump_nm", p.lambda_pump / nm},
                 {"lambda_target_nm", p.lambda_target / nm},
                 {"poling_period_m", p.poling_period()}};
    if (xi) {
      const auto focus = conversion::optimize_focusing_offset(*xi);
      const double predicted = conversion::p_max(p, focus.h);
      diag["focusing_parameter"] = *xi;
      diag["focusing_parameter_source"] = xi_source;
      diag["h_m"] = focus.h;
      diag["optimal_sigma"] = focus.sigma;
      diag["predicted_p_max_W"] = predicted;
      diag["p_max_over_predicted"] = p_max / predicted;
    }
    report["diagnostics"] = diag;
  }

  ReportBundle bundle("efficiency", cfg.canonical_json);
  bundle.add("efficiency_curve.csv", curve.str());
  bundle.add("efficiency.json", dump(report));
  return bundle;
}

// ---------------------------------------------------------------------------

ReportBundle build_cavity(const RunConfig& cfg) {
  const auto& sec = require(cfg.cavity, "cavity");
  const auto figures = cavity::cavity_figures(sec.spec, sec.lambda_pump,
                                              sec.input_power, sec.mode_coupling);
  auto lossless = sec.spec;
  lossless.round_trip_extra_loss = 0.0;

  json report = {
      {"finesse", figures.finesse},
      {"finesse_lossless", cavity::finesse(lossless)},
      {"enhancement", figures.enhancement},
      {"enhancement_lossless", cavity::enhancement(lossless)},
      {"round_trip_survival", sec.spec.round_trip_survival()},
      {"input_power_W", sec.input_power},
      {"mode_coupling", sec.mode_coupling},
      {"circulating_power_W", figures.circulating_power},
      {"mode_rayleigh_range_m", figures.mode_rayleigh_range},
      {"focusing_parameter", figures.focusing_parameter},
      {"h_m", conversion::h_m(figures.focusing_parameter)}};

  if (sec.measured_finesse) {
    const double loss = cavity::infer_round_trip_loss(
        *sec.measured_finesse, sec.spec.reflectivity_in, sec.spec.reflectivity_out);
    auto inferred = sec.spec;
    inferred.round_trip_extra_loss = loss;
    const double e = cavity::enhancement(inferred);
    report["measured"] = {
        {"finesse", *sec.measured_finesse},
        {"inferred_round_trip_loss", loss},
        {"enhancement", e},
        {"circulating_power_W",
         cavity::circulating_power(sec.input_power, sec.mode_coupling, e)}};
  }

  ReportBundle bundle("cavity", cfg.canonical_json);
  bundle.add("cavity.json", dump(report));
  return bundle;
}

// ---------------------------------------------------------------------------

ReportBundle build_link(const RunConfig& cfg) {
  const auto& sec = require(cfg.link, "link");
  std::vector<noise::LinkBudget> budgets;
  for (const auto& e : sec.budgets) budgets.push_back(e.budget);
  const auto table = noise::snr_comparison_sweep(budgets, sec.distance_grid);

  std::vector<std::string> header{"distance_km"};
  for (const auto& name : table.names) header.push_back("snr_" + name);
  std::vector<std::pair<Eigen::Index, Eigen::Index>> ratio_cols;
  auto index_of = [&](const std::string& name) {
    return static_cast<Eigen::Index>(
        std::find(table.names.begin(), table.names.end(), name) - table.names.begin());
  };
  for (const auto& r : sec.ratios) {
    header.push_back("ratio_" + r.numerator + "_over_" + r.denominator);
    ratio_cols.emplace_back(index_of(r.numerator), index_of(r.denominator));
  }
  CsvWriter csv(header);
  for (Eigen::Index i = 0; i < table.distance_km.size(); ++i) {
    std::vector<double> row{table.distance_km(i)};
    for (Eigen::Index j = 0; j < table.snr.cols(); ++j) row.push_back(table.snr(i, j));
    for (auto [num, den] : ratio_cols) row.push_back(table.snr(i, num) / table.snr(i, den));
    csv.add_row(row);
  }

  json report;
  report["columns"] = header;
  json budget_list = json::array();
  for (const auto& e : sec.budgets) {
    const auto& b = e.budget;
    json entry = {{"name", b.name},
                  {"eta_ext", b.eta_ext},
                  {"source_rate_Hz", b.source_rate},
                  {"converter_noise_Hz", b.converter_noise},
                  {"noise_input", {{"key", e.noise_source}, {"value", e.noise_input}}},
                  {"dark_rate_Hz", b.dark_rate},
                  {"attenuation_dB_per_km", b.attenuation_db_per_km},
                  {"narrowband_filter_width_nm", b.narrowband_filter_width},
                  {"narrowband_filter_transmission", b.narrowband_filter_transmission},
                  {"detection_efficiency", b.detection_efficiency},
                  {"snr_at_0_km", noise::snr_at_distance(b, 0.0)}};
    json reach = json::array();
    for (double threshold : sec.snr_thresholds) {
      json item = {{"threshold", threshold}};
      try {
        item["distance_km"] = noise::distance_for_snr(b, threshold);
        item["closed_form_km"] = noise::distance_for_snr_closed_form(b, threshold);
      } catch (const DomainError& err) {
        item["unreachable"] = err.what();
      }
      reach.push_back(item);
    }
    entry["distance_for_snr"] = reach;
    budget_list.push_back(entry);
  }
  report["budgets"] = budget_list;

  if (cfg.collection_chain) {
    const double eta_col = noise::chain_product(*cfg.collection_chain);
    json chain = {{"product", eta_col}};
    json factors = json::array();
    for (const auto& f : *cfg.collection_chain)
      factors.push_back({{"label", f.label}, {"transmission", f.transmission}});
    chain["factors"] = factors;
    report["collection_chain"] = chain;
    if (cfg.noise) {
      const auto& n = *cfg.noise;
      json nsd;
      if (n.internal_efficiency)
        nsd["external_efficiency"] = *n.internal_efficiency * eta_col;
      if (n.measured_rate)
        nsd["nsd_generated_kHz_per_nm"] =
            noise::nsd_generated({0.0, *n.measured_rate, n.collection_bandwidth},
                                 eta_col, n.detection_efficiency) / 1e3;
      if (n.slope && n.power) {
        const double generated = *n.slope * *n.power;
        nsd["nsd_from_slope_kHz_per_nm"] = generated / 1e3;
        nsd["nsd_from_slope_external_kHz_per_nm"] = generated * eta_col / 1e3;
      }
      report["noise"] = nsd;
    }
  }

  ReportBundle bundle("link", cfg.canonical_json);
  bundle.add("snr_sweep.csv", csv.str());
  bundle.add("link.json", dump(report));
  return bundle;
}

// ---------------------------------------------------------------------------

namespace {

json bounds_json(int n) {
  const auto b = verify::chained_bounds(n);
  return {{"N", n}, {"S_LHV", b.s_lhv}, {"S_QM", b.s_qm}, {"V_crit", b.v_crit}};
}

json summary_json(int n, const verify::Estimate& s) {
  const auto b = verify::chained_bounds(n);
  json j = {{"S", estimate_json(s)}, {"bounds", bounds_json(n)},
            {"violation", s.value > b.s_lhv}};
  if (s.sigma > 0.0) j["significance_sigma"] = (s.value - b.s_lhv) / s.sigma;
  return j;
}

ReportBundle bell_table(const RunConfig& cfg, const BellSection& sec) {
  CsvWriter csv({"N", "S_LHV", "S_QM", "V_crit"});
  json rows = json::array();
  for (int n = sec.table_min; n <= sec.table_max; ++n) {
    const auto b = verify::chained_bounds(n);
    csv.add_row({static_cast<double>(n), b.s_lhv, b.s_qm, b.v_crit});
    rows.push_back(bounds_json(n));
  }
  ReportBundle bundle("bell-table", cfg.canonical_json);
  bundle.add("bell_table.csv", csv.str());
  bundle.add("bell_table.json", dump({{"mode", "table"}, {"rows", rows}}));
  return bundle;
}

ReportBundle bell_analyze(const RunConfig& cfg, const BellSection& sec) {
  if (!sec.expectations_csv)
    throw InputError("config: bell.expectations_csv is required in analyze mode");
  const auto table = read_csv(cfg.resolve(*sec.expectations_csv));
  const auto ac = table.column("a_index");
  const auto bc = table.column("b_index");
  const auto ec = table.column("expectation");
  const auto sc = table.column("sigma");
  const bool has_trial = table.has_column("trial");

  std::map<long, verify::BellSchedule> trials;
  std::map<long, std::set<std::pair<long, long>>> seen;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const std::string where = table.source + ": row " + std::to_string(r + 2);
    auto as_index = [&](std::size_t c) {
      const double v = table.number(r, c);
      if (v != std::floor(v)) throw InputError(where + ": index must be an integer");
      return static_cast<long>(v);
    };
    const long trial = has_trial ? as_index(table.column("trial")) : 0;
    const long a = as_index(ac);
    const long b = as_index(bc);
    const double e = table.number(r, ec);
    const double s = table.number(r, sc);
    if (e < -1.0 || e > 1.0) throw InputError(where + ": expectation outside [-1, 1]");
    if (s < 0.0) throw InputError(where + ": negative sigma");
    if (!seen[trial].insert({a, b}).second)
      throw InputError(where + ": duplicate term");
    auto it = trials.try_emplace(trial, sec.settings).first;
    try {
      it->second.set_expectation(static_cast<int>(a - 1), static_cast<int>(b - 1),
                                 {e, s});
    } catch (const DomainError& err) {
      throw InputError(where + ": " + err.what());
    }
  }
  if (trials.empty()) throw IncompleteData(table.source + ": no expectation values");

  std::vector<verify::Estimate> per_trial;
  json trial_list = json::array();
  for (const auto& [id, schedule] : trials) {
    if (!schedule.complete()) {
      std::ostringstream msg;
      msg << table.source << ": trial " << id << " has "
          << std::count_if(schedule.expectations.begin(), schedule.expectations.end(),
                           [](const auto& x) { return x.has_value(); })
          << " of " << schedule.terms.size() << " expectation values";
      throw IncompleteData(msg.str());
    }
    const auto s = verify::chained_s(schedule);
    per_trial.push_back(s);
    trial_list.push_back({{"trial", id}, {"S", estimate_json(s)}});
  }
  const auto mean = verify::average_trials(per_trial);
  json report = summary_json(sec.settings, mean);
  report["mode"] = "analyze";
  report["trials"] = trial_list;
  ReportBundle bundle("bell-analyze", cfg.canonical_json);
  bundle.add("bell_analysis.json", dump(report));
  return bundle;
}

ReportBundle bell_simulate(const RunConfig& cfg, const BellSection& sec) {
  if (!cfg.seed) throw InputError("config: seed is required in simulate mode");
  verify::SimulationParams params;
  params.visibility = sec.visibility;
  params.amplitude = sec.amplitude;
  params.accidental_rate = sec.accidental_rate;
  params.integration_time = sec.integration_time;
  params.trials = sec.trials;
  params.seed = *cfg.seed;
  params.exact = sec.exact;
  const auto settings = verify::optimal_schedule(sec.settings);
  const auto sim = verify::simulate_bell(settings, params);

  CsvWriter csv({"trial", "S", "sigma"});
  for (std::size_t i = 0; i < sim.s.size(); ++i)
    csv.add_row({static_cast<double>(i), sim.s[i].value, sim.s[i].sigma});

  const auto b = verify::chained_bounds(sec.settings);
  // Visibility seen through a flat accidental pedestal.
  const double half = sec.amplitude / 2.0;
  const double effective_v =
      half + sec.accidental_rate > 0.0
          ? sec.visibility * half / (half + sec.accidental_rate) : 0.0;
  json report = summary_json(sec.settings, sim.mean);
  report["mode"] = "simulate";
  report["seed"] = *cfg.seed;
  report["trials"] = sec.trials;
  report["model"] = {{"visibility", sec.visibility},
                     {"effective_visibility", effective_v},
                     {"expected_S", effective_v * b.s_qm},
                     {"amplitude_Hz", sec.amplitude},
                     {"accidental_rate_Hz", sec.accidental_rate},
                     {"integration_time_s", sec.integration_time},
                     {"exact", sec.exact}};
  json settings_json = {{"a_rad", std::vector<double>(settings.a.data(),
                                                      settings.a.data() + settings.n)},
                        {"b_rad", std::vector<double>(settings.b.data(),
                                                      settings.b.data() + settings.n)}};
  report["settings"] = settings_json;

  ReportBundle bundle("bell-simulate", cfg.canonical_json);
  bundle.add("bell_trials.csv", csv.str());
  bundle.add("bell_simulation.json", dump(report));
  return bundle;
}

}  // namespace

ReportBundle build_bell(const RunConfig& cfg, const std::string& mode) {
  BellSection sec = cfg.bell.value_or(BellSection{});
  if (mode == "table") return bell_table(cfg, sec);
  if (mode == "analyze") return bell_analyze(cfg, require(cfg.bell, "bell"));
  if (mode == "simulate") return bell_simulate(cfg, require(cfg.bell, "bell"));
  throw InputError("bell: unknown mode '" + mode + "', expected table, analyze or simulate");
}

// ---------------------------------------------------------------------------

namespace {

verify::CoincidenceHistogram read_histogram(const RunConfig& cfg,
                                            const G2Section& sec) {
  const auto table = read_csv(cfg.resolve(sec.histogram_csv));
  const auto dc = table.column("delay_s");
  const auto cc = table.column("counts");
  if (table.rows.size() < 2) throw InputError(table.source + ": need at least 2 bins");
  verify::CoincidenceHistogram hist;
  hist.integration_time = sec.integration_time;
  std::vector<double> delay;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    delay.push_back(table.number(r, dc));
    const double c = table.number(r, cc);
    if (c < 0.0 || c != std::floor(c))
      throw InputError(table.source + ": row " + std::to_string(r + 2) +
                       ": counts must be a nonnegative integer");
    hist.counts.push_back(static_cast<std::int64_t>(c));
  }
  hist.bin_width = delay[1] - delay[0];
  for (std::size_t i = 1; i < delay.size(); ++i) {
    const double w = delay[i] - delay[i - 1];
    if (!(w > 0.0) || std::abs(w - hist.bin_width) > 1e-6 * hist.bin_width)
      throw InputError(table.source + ": row " + std::to_string(i + 2) +
                       ": delays must be increasing on a uniform grid");
  }
  if (sec.center_delay) {
    const double idx = std::round((*sec.center_delay - delay.front()) / hist.bin_width);
    if (idx < 0 || idx >= static_cast<double>(delay.size()))
      throw InputError("config: g2.center_delay_s lies outside the histogram");
    hist.center_bin = static_cast<std::size_t>(idx);
  } else {
    hist.center_bin = static_cast<std::size_t>(
        std::max_element(hist.counts.begin(), hist.counts.end()) - hist.counts.begin());
  }
  return hist;
}

verify::FransonScan read_scan(const RunConfig& cfg, const FransonSection& sec) {
  const auto table = read_csv(cfg.resolve(sec.scan_csv));
  const auto phc = table.column("phase_rad");
  const auto poc = table.column("port");
  const auto cc = table.column("counts");
  const auto tc = table.column("time_s");
  verify::FransonScan scan;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const std::string where = table.source + ": row " + std::to_string(r + 2);
    verify::FransonPoint p;
    p.phase_sum = table.number(r, phc);
    try {
      p.port = verify::parse_port(table.text(r, poc));
    } catch (const DomainError& e) {
      throw InputError(where + ": " + e.what());
    }
    p.counts = table.number(r, cc);
    p.time = table.number(r, tc);
    if (p.counts < 0.0) throw InputError(where + ": counts must be nonnegative");
    if (!(p.time > 0.0)) throw InputError(where + ": time must be positive");
    scan.points.push_back(p);
  }
  return scan;
}

}  // namespace

ReportBundle build_g2(const RunConfig& cfg) {
  if (!cfg.g2 && !cfg.franson)
    throw InputError("config: the g2 command needs a 'g2' and/or 'franson' section");

  std::optional<verify::CoincidenceHistogram> hist;
  std::optional<verify::FransonScan> scan;
  if (cfg.g2) hist = read_histogram(cfg, *cfg.g2);
  if (cfg.franson) scan = read_scan(cfg, *cfg.franson);

  json report;
  if (hist) {
    const auto& sec = *cfg.g2;
    verify::G2Options opts;
    opts.peak_window_bins = sec.peak_window_bins;
    opts.exclusion_half_width = sec.exclusion_half_width;
    opts.sidelobe_offsets = sec.sidelobe_offsets;
    opts.sidelobe_half_width = sec.sidelobe_half_width;
    const auto g2 = verify::g2_normalize(*hist, opts);
    report["g2"] = {
        {"g2_peak", estimate_json(g2)},
        {"classical_bound", sec.classical_bound},
        {"cauchy_schwarz_significance",
         g2.sigma > 0.0 ? json(verify::cauchy_schwarz_significance(
                              g2.value, g2.sigma, sec.classical_bound))
                        : json(nullptr)},
        {"center_bin", hist->center_bin},
        {"bin_width_s", hist->bin_width},
        {"bins", hist->counts.size()}};
  }
  if (scan) {
    json ports;
    for (auto port : verify::kAllPorts) {
      const bool present = std::any_of(scan->points.begin(), scan->points.end(),
                                       [port](const auto& p) { return p.port == port; });
      if (!present) continue;
      const auto fit = verify::fit_visibility(*scan, port);
      const double acc = cfg.franson->accidental_rate[static_cast<int>(port)];
      const double corrected = verify::correct_visibility(fit.visibility, fit.mean_rate, acc);
      const double scale = corrected / (fit.visibility > 0.0 ? fit.visibility : 1.0);
      ports[std::string(verify::port_name(port))] = {
          {"raw_visibility", {{"estimate", fit.visibility}, {"sigma", fit.visibility_sigma}}},
          {"corrected_visibility",
           {{"estimate", corrected}, {"sigma", fit.visibility_sigma * scale}}},
          {"accidental_rate_Hz", acc},
          {"phase_offset_rad", {{"estimate", fit.phase_offset}, {"sigma", fit.phase_offset_sigma}}},
          {"amplitude_Hz", {{"estimate", fit.amplitude}, {"sigma", fit.amplitude_sigma}}},
          {"mean_rate_Hz", fit.mean_rate},
          {"chi2", fit.chi2},
          {"dof", fit.dof}};
    }
    report["franson"] = ports;
  }

  ReportBundle bundle("g2", cfg.canonical_json);
  bundle.add("g2_franson.json", dump(report));
  return bundle;
}

// ---------------------------------------------------------------------------

int run_command(const CommandOptions& opts, std::ostream& out, std::ostream& err) {
  try {
    std::optional<std::filesystem::path> path = opts.config;
    if (!path) {
      if (const char* env = std::getenv(kConfigEnv); env && *env) path = env;
    }
    RunConfig cfg;
    if (path) {
      cfg = load_config(*path);
    } else if (opts.command == "bell") {
      cfg = parse_config("{}");
    } else {
      throw InputError(std::string("no config: pass --config or set ") + kConfigEnv);
    }

    auto canonical = json::parse(cfg.canonical_json);
    if (opts.seed) {
      cfg.seed = opts.seed;
      canonical["seed"] = *opts.seed;
    }
    if (opts.out) cfg.output_dir = *opts.out;

    std::string mode = opts.mode.value_or(cfg.bell ? cfg.bell->mode : "table");
    if (opts.command == "bell") canonical["$mode"] = mode;
    cfg.canonical_json = canonical.dump(2);
    if (opts.mode && opts.command != "bell")
      throw InputError("--mode only applies to the bell command");

    ReportBundle bundle = [&] {
      if (opts.command == "efficiency") return build_efficiency(cfg);
      if (opts.command == "cavity") return build_cavity(cfg);
      if (opts.command == "link") return build_link(cfg);
      if (opts.command == "bell") return build_bell(cfg, mode);
      if (opts.command == "g2") return build_g2(cfg);
      throw InputError("unknown command '" + opts.command + "'");
    }();

    for (const auto& p : bundle.write(cfg.output_dir)) out << p.string() << "\n";
    return kExitOk;
  } catch (const InputError& e) {
    err << "qfc-link: " << e.what() << "\n";
    return kExitInput;
  } catch (const IncompleteData& e) {
    err << "qfc-link: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const FitError& e) {
    err << "qfc-link: fit failed: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::exception& e) {
    err << "qfc-link: " << e.what() << "\n";
    return kExitNumeric;
  }
}

}  // namespace qfc::cli
