#include "qfc/cli/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "qfc/constants.hpp"
#include "qfc/errors.hpp"

namespace qfc::cli {
namespace {

using nlohmann::json;
using constants::nm;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw InputError("config: " + path + ": " + what);
}

// Typed access to one JSON object that remembers which keys were read, so
// that leftovers can be reported as unknown.
class Object {
 public:
  Object(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail(path_, "expected an object");
  }

  std::string at(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  const json& raw(const std::string& key) {
    seen_.insert(key);
    if (!j_.contains(key)) fail(at(key), "required key is missing");
    return j_.at(key);
  }

  double number(const std::string& key) {
    const json& v = raw(key);
    if (!v.is_number()) fail(at(key), "expected a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) fail(at(key), "must be finite");
    return d;
  }
  double number(const std::string& key, double fallback) {
    return has(key) ? number(key) : (seen_.insert(key), fallback);
  }
  std::optional<double> opt_number(const std::string& key) {
    if (!has(key)) return std::nullopt;
    return number(key);
  }
  double positive(const std::string& key) {
    const double d = number(key);
    if (!(d > 0.0)) fail(at(key), "must be positive");
    return d;
  }
  double nonnegative(const std::string& key,
                     std::optional<double> fallback = std::nullopt) {
    const double d = fallback ? number(key, *fallback) : number(key);
    if (!(d >= 0.0)) fail(at(key), "must be nonnegative");
    return d;
  }
  double unit_interval(const std::string& key, std::optional<double> fallback,
                       bool allow_zero) {
    const double d = fallback ? number(key, *fallback) : number(key);
    if (!(d <= 1.0) || !(allow_zero ? d >= 0.0 : d > 0.0))
      fail(at(key), allow_zero ? "must lie in [0, 1]" : "must lie in (0, 1]");
    return d;
  }
  std::int64_t integer(const std::string& key) {
    const json& v = raw(key);
    if (!v.is_number_integer()) fail(at(key), "expected an integer");
    return v.get<std::int64_t>();
  }
  std::int64_t integer(const std::string& key, std::int64_t fallback) {
    return has(key) ? integer(key) : (seen_.insert(key), fallback);
  }
  bool boolean(const std::string& key, bool fallback) {
    if (!has(key)) return fallback;
    const json& v = raw(key);
    if (!v.is_boolean()) fail(at(key), "expected true or false");
    return v.get<bool>();
  }
  std::string string(const std::string& key) {
    const json& v = raw(key);
    if (!v.is_string()) fail(at(key), "expected a string");
    return v.get<std::string>();
  }
  std::optional<std::string> opt_string(const std::string& key) {
    if (!has(key)) return std::nullopt;
    return string(key);
  }

  // Ignores a free-text annotation key.
  void note(const std::string& key) {
    if (has(key) && !raw(key).is_string()) fail(at(key), "expected a string");
    seen_.insert(key);
  }

  void finish() const {
    for (const auto& item : j_.items())
      if (!seen_.count(item.key())) fail(at(item.key()), "unknown key");
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

std::vector<double> grid(Object& parent, const std::string& key) {
  const json& v = parent.raw(key);
  const std::string path = parent.at(key);
  std::vector<double> out;
  if (v.is_array()) {
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number())
        fail(path + "[" + std::to_string(i) + "]", "expected a number");
      out.push_back(v[i].get<double>());
    }
  } else {
    Object g(v, path);
    const double start = g.number("start");
    const double stop = g.number("stop");
    const double step = g.positive("step");
    g.finish();
    if (stop < start) fail(path, "stop lies below start");
    out = expand_grid(start, stop, step);
  }
  if (out.empty()) fail(path, "grid is empty");
  for (double x : out)
    if (!(x >= 0.0) || !std::isfinite(x))
      fail(path, "grid values must be finite and nonnegative");
  return out;
}

conversion::ConversionProcess parse_process(Object& o,
                                            std::optional<double>* xi) {
  conversion::ConversionProcess p;
  o.note("note");
  p.lambda_red = o.positive("lambda_red_nm") * nm;
  p.lambda_pump = o.positive("lambda_pump_nm") * nm;
  if (o.has("lambda_target_nm")) {
    p.lambda_target = o.positive("lambda_target_nm") * nm;
  } else {
    try {
      p.lambda_target = conversion::complete_wavelength_triple(
          p.lambda_red, p.lambda_pump, conversion::KnownPair::RedPump);
    } catch (const DomainError& e) {
      fail(o.at("lambda_pump_nm"), e.what());
    }
  }
  p.n_red = o.positive("n_red");
  p.n_pump = o.positive("n_pump");
  p.n_target = o.positive("n_target");
  p.d_eff = o.positive("d_eff_pm_per_V") * constants::pm_per_V;
  p.crystal_length = o.positive("crystal_length_m");
  p.domain_length = o.positive("domain_length_m");
  if (o.has("focusing_parameter")) *xi = o.positive("focusing_parameter");
  o.finish();
  try {
    p.validate();
  } catch (const DomainError& e) {
    fail(o.at("lambda_target_nm"), e.what());
  }
  return p;
}

}  // namespace

std::vector<double> expand_grid(double start, double stop, double step) {
  if (!(step > 0.0) || stop < start) return {};
  const auto count =
      static_cast<std::size_t>(std::floor((stop - start) / step + 1e-9)) + 1;
  std::vector<double> out(count);
  for (std::size_t i = 0; i < count; ++i) out[i] = start + step * i;
  return out;
}

std::filesystem::path RunConfig::resolve(const std::filesystem::path& p) const {
  return p.is_absolute() ? p : base_dir / p;
}

RunConfig parse_config(const std::string& text,
                       const std::filesystem::path& base_dir) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw InputError(std::string("config: invalid JSON: ") + e.what());
  }
  RunConfig cfg;
  cfg.base_dir = base_dir;
  cfg.canonical_json = doc.dump(2);
  Object root(doc, "");
  root.note("$schema");
  root.note("description");

  if (root.has("seed")) {
    const auto s = root.integer("seed");
    if (s < 0) fail("seed", "must be nonnegative");
    cfg.seed = static_cast<std::uint64_t>(s);
  }
  if (auto dir = root.opt_string("output_dir")) cfg.output_dir = *dir;

  if (root.has("process")) {
    Object o(root.raw("process"), "process");
    cfg.process = parse_process(o, &cfg.focusing_parameter);
  }

  if (root.has("efficiency")) {
    Object o(root.raw("efficiency"), "efficiency");
    EfficiencySection s;
    if (o.has("p_max_W")) s.p_max = o.positive("p_max_W");
    if (auto csv = o.opt_string("depletion_csv")) s.depletion_csv = *csv;
    s.power_grid = grid(o, "power_grid_W");
    if (o.has("operating_point_W")) {
      s.operating_point = o.nonnegative("operating_point_W");
    }
    o.finish();
    if (!s.p_max && !s.depletion_csv)
      fail("efficiency", "give p_max_W or depletion_csv");
    cfg.efficiency = std::move(s);
  }

  if (root.has("cavity")) {
    Object o(root.raw("cavity"), "cavity");
    CavitySection s;
    o.note("note");
    s.spec.reflectivity_in = o.unit_interval("reflectivity_in", std::nullopt, false);
    s.spec.reflectivity_out = o.unit_interval("reflectivity_out", std::nullopt, false);
    s.spec.round_trip_extra_loss = o.nonnegative("round_trip_extra_loss", 0.0);
    s.spec.geometric_length = o.positive("geometric_length_m");
    s.spec.facet_curvature_radius = o.positive("facet_curvature_radius_m");
    s.spec.index_at_pump = o.positive("index_at_pump");
    s.input_power = o.nonnegative("input_power_W");
    s.mode_coupling = o.unit_interval("mode_coupling", 1.0, true);
    if (o.has("measured_finesse")) s.measured_finesse = o.positive("measured_finesse");
    if (o.has("lambda_pump_nm"))
      s.lambda_pump = o.positive("lambda_pump_nm") * nm;
    else if (cfg.process)
      s.lambda_pump = cfg.process->lambda_pump;
    else
      fail("cavity.lambda_pump_nm", "required when no process is given");
    o.finish();
    try {
      s.spec.validate();
    } catch (const DomainError& e) {
      fail("cavity", e.what());
    }
    cfg.cavity = s;
  }

  if (root.has("collection_chain")) {
    const json& arr = root.raw("collection_chain");
    if (!arr.is_array()) fail("collection_chain", "expected an array");
    noise::EfficiencyChain chain;
    for (std::size_t i = 0; i < arr.size(); ++i) {
      Object f(arr[i], "collection_chain[" + std::to_string(i) + "]");
      noise::TransmissionFactor t;
      t.label = f.string("label");
      t.transmission = f.unit_interval("transmission", std::nullopt, false);
      f.finish();
      chain.push_back(std::move(t));
    }
    cfg.collection_chain = std::move(chain);
  }

  if (root.has("noise")) {
    Object o(root.raw("noise"), "noise");
    NoiseSection s;
    s.collection_bandwidth = o.positive("collection_bandwidth_nm");
    s.detection_efficiency = o.unit_interval("detection_efficiency", 0.9, false);
    if (o.has("internal_efficiency"))
      s.internal_efficiency = o.unit_interval("internal_efficiency", std::nullopt, true);
    if (o.has("measured_rate_Hz"))
      s.measured_rate = o.nonnegative("measured_rate_Hz");
    if (o.has("slope_kHz_per_nm_W"))
      s.slope = o.number("slope_kHz_per_nm_W") * 1e3;
    if (o.has("power_W")) s.power = o.nonnegative("power_W");
    o.finish();
    cfg.noise = s;
  }

  if (root.has("link")) {
    Object o(root.raw("link"), "link");
    LinkSection s;
    s.distance_grid = grid(o, "distance_grid_km");
    const json& arr = o.raw("budgets");
    if (!arr.is_array() || arr.empty())
      fail("link.budgets", "expected a nonempty array");
    std::set<std::string> names;
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const std::string path = "link.budgets[" + std::to_string(i) + "]";
      Object b(arr[i], path);
      BudgetEntry e;
      auto& lb = e.budget;
      lb.name = b.string("name");
      if (!names.insert(lb.name).second) fail(path, "duplicate budget name");
      b.note("note");
      lb.eta_ext = b.unit_interval("eta_ext", std::nullopt, false);
      lb.source_rate = b.nonnegative("source_rate_Hz");
      lb.dark_rate = b.nonnegative("dark_rate_Hz");
      lb.attenuation_db_per_km = b.positive("attenuation_dB_per_km");
      lb.narrowband_filter_width = b.nonnegative("narrowband_filter_width_nm", 0.0);
      lb.narrowband_filter_transmission =
          b.unit_interval("narrowband_filter_transmission", 1.0, false);
      lb.detection_efficiency = b.unit_interval("detection_efficiency", 0.9, false);
      const char* sources[] = {"converter_noise_Hz", "nsd_ext_kHz_per_nm",
                               "nsd_internal_kHz_per_nm"};
      int given = 0;
      for (const char* key : sources) {
        if (!b.has(key)) continue;
        ++given;
        e.noise_source = key;
        e.noise_input = b.nonnegative(key);
      }
      if (given != 1)
        fail(path, "give exactly one of converter_noise_Hz, "
                   "nsd_ext_kHz_per_nm, nsd_internal_kHz_per_nm");
      b.finish();
      if (e.noise_source == "converter_noise_Hz") {
        lb.converter_noise = e.noise_input;
      } else {
        double nsd_ext = e.noise_input * 1e3;  // Hz/nm
        if (e.noise_source == "nsd_internal_kHz_per_nm") {
          if (!cfg.collection_chain)
            fail(path, "nsd_internal_kHz_per_nm needs a collection_chain");
          nsd_ext *= noise::chain_product(*cfg.collection_chain);
        }
        lb.converter_noise = noise::converter_noise_rate(nsd_ext, lb);
      }
      try {
        lb.validate();
      } catch (const DomainError& err) {
        fail(path, err.what());
      }
      s.budgets.push_back(std::move(e));
    }
    if (o.has("ratios")) {
      const json& r = o.raw("ratios");
      if (!r.is_array()) fail("link.ratios", "expected an array");
      for (std::size_t i = 0; i < r.size(); ++i) {
        Object p(r[i], "link.ratios[" + std::to_string(i) + "]");
        RatioPair pair{p.string("numerator"), p.string("denominator")};
        p.finish();
        if (!names.count(pair.numerator) || !names.count(pair.denominator))
          fail(p.at("numerator"), "ratio refers to an unknown budget");
        s.ratios.push_back(std::move(pair));
      }
    }
    if (o.has("snr_thresholds")) {
      const json& t = o.raw("snr_thresholds");
      if (!t.is_array()) fail("link.snr_thresholds", "expected an array");
      for (const auto& v : t) {
        if (!v.is_number() || !(v.get<double>() > 0.0))
          fail("link.snr_thresholds", "thresholds must be positive numbers");
        s.snr_thresholds.push_back(v.get<double>());
      }
    }
    o.finish();
    cfg.link = std::move(s);
  }

  if (root.has("bell")) {
    Object o(root.raw("bell"), "bell");
    BellSection s;
    if (auto m = o.opt_string("mode")) s.mode = *m;
    if (s.mode != "table" && s.mode != "analyze" && s.mode != "simulate")
      fail("bell.mode", "must be table, analyze or simulate");
    s.settings = static_cast<int>(o.integer("settings_N", 5));
    if (s.settings < 2 || s.settings > 64) fail("bell.settings_N", "must lie in [2, 64]");
    s.table_min = static_cast<int>(o.integer("table_min_N", 2));
    s.table_max = static_cast<int>(o.integer("table_max_N", 12));
    if (s.table_min < 2 || s.table_max < s.table_min || s.table_max > 64)
      fail("bell.table_max_N", "need 2 <= table_min_N <= table_max_N <= 64");
    s.visibility = o.unit_interval("visibility", 1.0, true);
    s.amplitude = o.nonnegative("amplitude_Hz", 0.0);
    s.accidental_rate = o.nonnegative("accidental_rate_Hz", 0.0);
    s.integration_time = o.number("integration_time_s", 1.0);
    if (!(s.integration_time > 0.0))
      fail("bell.integration_time_s", "must be positive");
    s.trials = static_cast<int>(o.integer("trials", 10));
    if (s.trials < 1) fail("bell.trials", "must be at least 1");
    s.exact = o.boolean("exact", false);
    if (auto csv = o.opt_string("expectations_csv")) s.expectations_csv = *csv;
    o.finish();
    cfg.bell = std::move(s);
  }

  if (root.has("g2")) {
    Object o(root.raw("g2"), "g2");
    G2Section s;
    s.histogram_csv = o.string("histogram_csv");
    s.integration_time = o.number("integration_time_s", 1.0);
    if (!(s.integration_time > 0.0)) fail("g2.integration_time_s", "must be positive");
    s.peak_window_bins = static_cast<int>(o.integer("peak_window_bins", 1));
    if (s.peak_window_bins < 1) fail("g2.peak_window_bins", "must be >= 1");
    s.exclusion_half_width =
        static_cast<int>(o.integer("exclusion_half_width_bins", 10));
    if (s.exclusion_half_width < 0)
      fail("g2.exclusion_half_width_bins", "must be >= 0");
    if (o.has("sidelobe_offsets_bins")) {
      const json& arr = o.raw("sidelobe_offsets_bins");
      if (!arr.is_array()) fail("g2.sidelobe_offsets_bins", "expected an array");
      for (const auto& v : arr) {
        if (!v.is_number_integer())
          fail("g2.sidelobe_offsets_bins", "expected integers");
        s.sidelobe_offsets.push_back(v.get<int>());
      }
    }
    s.sidelobe_half_width =
        static_cast<int>(o.integer("sidelobe_half_width_bins", 0));
    if (s.sidelobe_half_width < 0)
      fail("g2.sidelobe_half_width_bins", "must be >= 0");
    s.classical_bound = o.number("classical_bound", 2.0);
    s.center_delay = o.opt_number("center_delay_s");
    o.finish();
    cfg.g2 = std::move(s);
  }

  if (root.has("franson")) {
    Object o(root.raw("franson"), "franson");
    FransonSection s;
    s.scan_csv = o.string("scan_csv");
    if (o.has("accidental_rate_Hz")) {
      const json& a = o.raw("accidental_rate_Hz");
      if (a.is_number()) {
        const double v = a.get<double>();
        if (!(v >= 0.0)) fail("franson.accidental_rate_Hz", "must be >= 0");
        s.accidental_rate.fill(v);
      } else {
        Object per(a, "franson.accidental_rate_Hz");
        const char* ports[] = {"++", "+-", "-+", "--"};
        for (int k = 0; k < 4; ++k) s.accidental_rate[k] = per.nonnegative(ports[k]);
        per.finish();
      }
    }
    o.finish();
    cfg.franson = std::move(s);
  }

  if (root.has("focusing_parameter")) fail("focusing_parameter", "belongs in process");
  root.finish();
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("config: cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path.parent_path());
}

}  // namespace qfc::cli
