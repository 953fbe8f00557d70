#pragma once

// JSON-configured Monte Carlo sweeps and beam-pattern tables.
//
// Sweep config keys (all optional except sweep.axis and its values):
//   geometry        {n_active, n_parasitic, dx_over_lambda, dy_over_lambda}
//   dipole          {carrier_frequency_hz, length_over_lambda, radius_over_lambda}
//   link            {range_m, bandwidth_hz, antenna_temperature_k, radiation_resistance_ohm, boltzmann}
//   power           {p_rfc_w, p_ps_w, p_var_w, insertion_loss_db}
//   fixed_resistance_ohm, pmax_dbm
//   sweep           {axis: pmax_dbm|n_parasitic|n_active|dx_over_lambda, values: [...] | start, stop, step}
//   trials, seed, threads
//   architectures   subset of hrp-upa, fd-ula, fd-upa, hps-upa, random-baseline
//   channel         {paths, distribution: "geometric"}
//   random_baseline {budget}
//   impedance_file  Z matrix replacing the analytic model (pmax_dbm axis only)
//
// Trial t draws its paths from derive_seed(seed, t), so every architecture and
// every axis value sees the same realizations.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "parasim/benchmarks.hpp"
#include "parasim/zmatrix_io.hpp"

namespace parasim {

using json = nlohmann::json;

namespace detail {

inline std::size_t line_at(const std::string& text, std::size_t offset) {
  offset = std::min(offset, text.size());
  return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(offset), '\n'));
}

/// Line of the last key in `path`, searching each key after its parent.
inline std::size_t key_line(const std::string& text, const std::vector<std::string>& path) {
  std::size_t pos = 0;
  for (const auto& key : path) {
    const auto hit = text.find("\"" + key + "\"", pos);
    if (hit == std::string::npos) break;
    pos = hit;
  }
  return line_at(text, pos);
}

/// Typed access into a parsed JSON document with line-numbered errors.
class ConfigReader {
 public:
  explicit ConfigReader(std::string text) : text_(std::move(text)) {
    try {
      root_ = json::parse(text_);
    } catch (const json::parse_error& e) {
      throw ConfigError(std::string("invalid JSON: ") + e.what(), line_at(text_, e.byte > 0 ? e.byte - 1 : 0));
    }
    if (!root_.is_object()) throw ConfigError("top level must be a JSON object", 1);
  }

  const json& root() const { return root_; }
  const std::string& text() const { return text_; }

  [[noreturn]] void fail(const std::vector<std::string>& path, const std::string& msg) const {
    std::string name;
    for (const auto& p : path) name += (name.empty() ? "" : ".") + p;
    throw ConfigError(name + ": " + msg, key_line(text_, path));
  }

  const json* find(const std::vector<std::string>& path) const {
    const json* node = &root_;
    for (const auto& key : path) {
      if (!node->is_object()) fail(path, "parent is not an object");
      auto it = node->find(key);
      if (it == node->end()) return nullptr;
      node = &*it;
    }
    return node;
  }

  void allow_keys(const std::vector<std::string>& path, const std::vector<std::string>& keys) const {
    const json* node = path.empty() ? &root_ : find(path);
    if (!node) return;
    if (!node->is_object()) fail(path, "must be an object");
    for (const auto& [k, v] : node->items()) {
      if (std::find(keys.begin(), keys.end(), k) == keys.end()) {
        auto full = path;
        full.push_back(k);
        fail(full, "unknown key");
      }
    }
  }

  double number(const std::vector<std::string>& path, double fallback) const {
    const json* n = find(path);
    if (!n) return fallback;
    if (!n->is_number()) fail(path, "must be a number");
    const double v = n->get<double>();
    if (!std::isfinite(v)) fail(path, "must be finite");
    return v;
  }

  double positive(const std::vector<std::string>& path, double fallback) const {
    const double v = number(path, fallback);
    if (!(v > 0.0)) fail(path, "must be positive");
    return v;
  }

  double nonnegative(const std::vector<std::string>& path, double fallback) const {
    const double v = number(path, fallback);
    if (!(v >= 0.0)) fail(path, "must be nonnegative");
    return v;
  }

  std::uint64_t count(const std::vector<std::string>& path, std::uint64_t fallback, std::uint64_t min = 0) const {
    const json* n = find(path);
    if (!n) return fallback;
    if (!n->is_number_integer() || (n->is_number_integer() && !n->is_number_unsigned() && n->get<std::int64_t>() < 0))
      fail(path, "must be a nonnegative integer");
    const auto v = n->get<std::uint64_t>();
    if (v < min) fail(path, "must be at least " + std::to_string(min));
    return v;
  }

  std::string string(const std::vector<std::string>& path, const std::string& fallback) const {
    const json* n = find(path);
    if (!n) return fallback;
    if (!n->is_string()) fail(path, "must be a string");
    return n->get<std::string>();
  }

  /// Either an explicit list or start/stop/step under `path`.
  std::vector<double> grid(const std::vector<std::string>& path) const {
    auto sub = [&](const std::string& k) {
      auto p = path;
      p.push_back(k);
      return p;
    };
    std::vector<double> out;
    if (const json* v = find(sub("values"))) {
      if (!v->is_array() || v->empty()) fail(sub("values"), "must be a nonempty array of numbers");
      for (const auto& e : *v) {
        if (!e.is_number()) fail(sub("values"), "must be a nonempty array of numbers");
        out.push_back(e.get<double>());
      }
    } else if (find(sub("start"))) {
      const double start = number(sub("start"), 0.0);
      const double stop = number(sub("stop"), start);
      const double step = positive(sub("step"), 1.0);
      if (stop < start) fail(sub("stop"), "must not be below start");
      const auto n = static_cast<std::size_t>(std::floor((stop - start) / step + 1e-9));
      for (std::size_t k = 0; k <= n; ++k) out.push_back(start + static_cast<double>(k) * step);
    } else {
      fail(path, "needs either values or start/stop/step");
    }
    for (std::size_t k = 1; k < out.size(); ++k)
      if (!(out[k] > out[k - 1])) fail(sub("values"), "must be strictly increasing");
    return out;
  }

 private:
  std::string text_;
  json root_;
};

inline std::string read_text_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open " + path);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

inline std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

}  // namespace detail

struct ArrayConfig {
  std::size_t n_active = 6;
  std::size_t n_parasitic = 2;
  double dx_over_lambda = 0.4;
  double dy_over_lambda = 0.5;
  double carrier_frequency = 7e9;
  double length_over_lambda = 0.5;
  double radius_over_lambda = 1.0 / 500.0;
  double fixed_resistance = kDefaultLoadResistance;

  DipoleSpec dipole() const {
    const double lambda = kSpeedOfLight / carrier_frequency;
    return {length_over_lambda * lambda, radius_over_lambda * lambda, carrier_frequency};
  }

  ArrayGeometry geometry() const {
    return ArrayGeometry::from_wavelengths(n_active, n_parasitic, dx_over_lambda, dy_over_lambda, dipole());
  }
};

namespace detail {

inline ArrayConfig read_array_config(const ConfigReader& r) {
  r.allow_keys({"geometry"}, {"n_active", "n_parasitic", "dx_over_lambda", "dy_over_lambda"});
  r.allow_keys({"dipole"}, {"carrier_frequency_hz", "length_over_lambda", "radius_over_lambda"});
  ArrayConfig a;
  a.n_active = r.count({"geometry", "n_active"}, a.n_active, 1);
  a.n_parasitic = r.count({"geometry", "n_parasitic"}, a.n_parasitic);
  a.dx_over_lambda = r.positive({"geometry", "dx_over_lambda"}, a.dx_over_lambda);
  a.dy_over_lambda = r.positive({"geometry", "dy_over_lambda"}, a.dy_over_lambda);
  a.carrier_frequency = r.positive({"dipole", "carrier_frequency_hz"}, a.carrier_frequency);
  a.length_over_lambda = r.positive({"dipole", "length_over_lambda"}, a.length_over_lambda);
  a.radius_over_lambda = r.positive({"dipole", "radius_over_lambda"}, a.radius_over_lambda);
  a.fixed_resistance = r.nonnegative({"fixed_resistance_ohm"}, a.fixed_resistance);
  try {
    a.dipole().validate();
  } catch (const Error& e) {
    r.fail({"dipole"}, e.what());
  }
  return a;
}

inline json array_config_json(const ArrayConfig& a) {
  return {{"geometry",
           {{"n_active", a.n_active},
            {"n_parasitic", a.n_parasitic},
            {"dx_over_lambda", a.dx_over_lambda},
            {"dy_over_lambda", a.dy_over_lambda}}},
          {"dipole",
           {{"carrier_frequency_hz", a.carrier_frequency},
            {"length_over_lambda", a.length_over_lambda},
            {"radius_over_lambda", a.radius_over_lambda}}},
          {"fixed_resistance_ohm", a.fixed_resistance}};
}

}  // namespace detail

inline const std::vector<std::string>& known_architectures() {
  static const std::vector<std::string> names{"hrp-upa", "fd-ula", "fd-upa", "hps-upa", "random-baseline"};
  return names;
}

inline const std::vector<std::string>& known_axes() {
  static const std::vector<std::string> names{"pmax_dbm", "n_parasitic", "n_active", "dx_over_lambda"};
  return names;
}

struct SweepConfig {
  ArrayConfig array;
  LinkBudget link;
  PowerModel power;
  double pmax_dbm = 10.0;
  std::string axis = "pmax_dbm";
  std::vector<double> values;
  std::size_t trials = 500;
  std::uint64_t seed = 1;
  std::size_t threads = 0;  // 0: hardware concurrency
  std::vector<std::string> architectures{"hrp-upa", "fd-ula", "fd-upa", "hps-upa"};
  std::size_t paths = 4;
  std::size_t baseline_budget = 32;
  std::optional<std::string> impedance_file;

  /// Resolved configuration without the thread count, which never affects results.
  json to_json() const {
    json j = detail::array_config_json(array);
    j["link"] = {{"range_m", link.range},
                 {"bandwidth_hz", link.bandwidth},
                 {"antenna_temperature_k", link.antenna_temperature},
                 {"radiation_resistance_ohm", link.radiation_resistance},
                 {"boltzmann", link.boltzmann}};
    j["power"] = {{"p_rfc_w", power.p_rfc},
                  {"p_ps_w", power.p_ps},
                  {"p_var_w", power.p_var},
                  {"insertion_loss_db", power.insertion_loss_db}};
    j["pmax_dbm"] = pmax_dbm;
    j["sweep"] = {{"axis", axis}, {"values", values}};
    j["trials"] = trials;
    j["seed"] = seed;
    j["architectures"] = architectures;
    j["channel"] = {{"paths", paths}, {"distribution", "geometric"}};
    j["random_baseline"] = {{"budget", baseline_budget}};
    if (impedance_file) j["impedance_file"] = *impedance_file;
    return j;
  }
};

inline SweepConfig parse_sweep_config(const std::string& text) {
  const detail::ConfigReader r(text);
  r.allow_keys({}, {"geometry", "dipole", "link", "power", "fixed_resistance_ohm", "pmax_dbm", "sweep", "trials",
                    "seed", "threads", "architectures", "channel", "random_baseline", "impedance_file"});
  r.allow_keys({"link"}, {"range_m", "bandwidth_hz", "antenna_temperature_k", "radiation_resistance_ohm", "boltzmann"});
  r.allow_keys({"power"}, {"p_rfc_w", "p_ps_w", "p_var_w", "insertion_loss_db"});
  r.allow_keys({"sweep"}, {"axis", "values", "start", "stop", "step"});
  r.allow_keys({"channel"}, {"paths", "distribution"});
  r.allow_keys({"random_baseline"}, {"budget"});

  SweepConfig c;
  c.array = detail::read_array_config(r);
  c.link.range = r.positive({"link", "range_m"}, c.link.range);
  c.link.bandwidth = r.positive({"link", "bandwidth_hz"}, c.link.bandwidth);
  c.link.antenna_temperature = r.positive({"link", "antenna_temperature_k"}, c.link.antenna_temperature);
  c.link.radiation_resistance = r.positive({"link", "radiation_resistance_ohm"}, c.link.radiation_resistance);
  c.link.boltzmann = r.positive({"link", "boltzmann"}, c.link.boltzmann);
  c.power.p_rfc = r.nonnegative({"power", "p_rfc_w"}, c.power.p_rfc);
  c.power.p_ps = r.nonnegative({"power", "p_ps_w"}, c.power.p_ps);
  c.power.p_var = r.nonnegative({"power", "p_var_w"}, c.power.p_var);
  c.power.insertion_loss_db = r.nonnegative({"power", "insertion_loss_db"}, c.power.insertion_loss_db);
  c.pmax_dbm = r.number({"pmax_dbm"}, c.pmax_dbm);

  if (!r.find({"sweep"})) r.fail({"sweep"}, "missing");
  c.axis = r.string({"sweep", "axis"}, "");
  if (std::find(known_axes().begin(), known_axes().end(), c.axis) == known_axes().end())
    r.fail({"sweep", "axis"}, "must be one of pmax_dbm, n_parasitic, n_active, dx_over_lambda");
  c.values = r.grid({"sweep"});
  if (c.axis == "n_parasitic" || c.axis == "n_active") {
    for (double v : c.values)
      if (v != std::floor(v) || v < (c.axis == "n_active" ? 1.0 : 0.0))
        r.fail({"sweep", "values"}, "must hold whole element counts for axis " + c.axis);
  }
  if (c.axis == "dx_over_lambda")
    for (double v : c.values)
      if (!(v > 0.0)) r.fail({"sweep", "values"}, "spacings must be positive");

  c.trials = r.count({"trials"}, c.trials, 1);
  c.seed = r.count({"seed"}, c.seed);
  c.threads = r.count({"threads"}, c.threads);
  if (const json* a = r.find({"architectures"})) {
    if (!a->is_array() || a->empty()) r.fail({"architectures"}, "must be a nonempty array");
    c.architectures.clear();
    for (const auto& e : *a) {
      if (!e.is_string()) r.fail({"architectures"}, "entries must be strings");
      const auto name = e.get<std::string>();
      if (std::find(known_architectures().begin(), known_architectures().end(), name) == known_architectures().end())
        r.fail({"architectures"}, "unknown architecture '" + name + "'");
      if (std::find(c.architectures.begin(), c.architectures.end(), name) != c.architectures.end())
        r.fail({"architectures"}, "duplicate architecture '" + name + "'");
      c.architectures.push_back(name);
    }
  }
  c.paths = r.count({"channel", "paths"}, c.paths, 1);
  if (r.string({"channel", "distribution"}, "geometric") != "geometric")
    r.fail({"channel", "distribution"}, "only \"geometric\" is supported");
  c.baseline_budget = r.count({"random_baseline", "budget"}, c.baseline_budget, 1);
  if (r.find({"impedance_file"})) {
    c.impedance_file = r.string({"impedance_file"}, "");
    if (c.axis != "pmax_dbm") r.fail({"impedance_file"}, "an imported matrix fixes the geometry; use axis pmax_dbm");
  }
  return c;
}

inline SweepConfig load_sweep_config(const std::string& path) {
  return parse_sweep_config(detail::read_text_file(path));
}

struct SweepRow {
  std::string axis;
  double axis_value = 0.0;
  std::string architecture;
  double mean_se = 0.0;
  double mean_ee = 0.0;
  double mean_snr_db = 0.0;  // 10 log10 of the mean linear SNR
  std::size_t trials = 0;    // successful trials
  std::size_t failures = 0;
};

struct SweepResult {
  std::vector<SweepRow> rows;

  std::size_t total_failures() const {
    std::size_t n = 0;
    for (const auto& r : rows) n += r.failures;
    return n;
  }
  std::size_t total_evaluations() const {
    std::size_t n = 0;
    for (const auto& r : rows) n += r.trials + r.failures;
    return n;
  }
  double failure_rate() const {
    const auto n = total_evaluations();
    return n == 0 ? 0.0 : static_cast<double>(total_failures()) / static_cast<double>(n);
  }

  const SweepRow* find(const std::string& arch, double axis_value) const {
    for (const auto& r : rows)
      if (r.architecture == arch && r.axis_value == axis_value) return &r;
    return nullptr;
  }
};

namespace detail {

struct TrialOutcome {
  bool ok = false;
  ArchitectureResult result;
};

/// Runs fn(t) for t in [0, n) on `threads` workers; output order is by index.
template <typename T, typename F>
std::vector<T> parallel_map(std::size_t n, std::size_t threads, const F& fn) {
  std::vector<T> out(n);
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, std::max<std::size_t>(n, 1));
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t t = next++; t < n; t = next++) out[t] = fn(t);
  };
  if (threads <= 1) {
    worker();
    return out;
  }
  std::vector<std::jthread> pool;
  for (std::size_t k = 0; k < threads; ++k) pool.emplace_back(worker);
  pool.clear();
  return out;
}

}  // namespace detail

inline SweepResult run_sweep(const SweepConfig& cfg) {
  const auto& archs = cfg.architectures;
  const bool only_ula = archs.size() == 1 && archs.front() == "fd-ula";
  std::optional<ImpedanceFile> imported;
  if (cfg.impedance_file) {
    try {
      imported = import_impedance(*cfg.impedance_file);
    } catch (const FormatError& e) {
      throw ConfigError("impedance_file: " + std::string(e.what()));
    }
    if (imported->z.n_active != cfg.array.n_active || imported->z.n_parasitic != cfg.array.n_parasitic)
      throw ConfigError("impedance_file: matrix layout does not match geometry n_active/n_parasitic");
  }

  SweepResult result;
  for (double value : cfg.values) {
    ArrayConfig ac = cfg.array;
    double pmax_dbm = cfg.pmax_dbm;
    if (cfg.axis == "pmax_dbm") pmax_dbm = value;
    if (cfg.axis == "n_parasitic") ac.n_parasitic = static_cast<std::size_t>(value);
    if (cfg.axis == "n_active") ac.n_active = static_cast<std::size_t>(value);
    if (cfg.axis == "dx_over_lambda") ac.dx_over_lambda = value;
    if (only_ula) ac.n_parasitic = 0;
    const ArrayGeometry geom = ac.geometry();
    const PartitionedImpedance z = imported ? imported->z : assemble_impedance(geom);
    const double link = link_constant(cfg.link, geom.dipole);
    const double p_max = dbm_to_watts(pmax_dbm);

    auto trial = [&](std::size_t t) {
      const std::uint64_t trial_seed = derive_seed(cfg.seed, t);
      const auto ch = multipath_channel(sample_paths(cfg.paths, trial_seed), geom);
      std::vector<detail::TrialOutcome> res(archs.size());
      for (std::size_t a = 0; a < archs.size(); ++a) {
        try {
          const auto& name = archs[a];
          if (name == "hrp-upa") res[a].result = eval_hrp_upa(z, ch, link, p_max, cfg.power, ac.fixed_resistance);
          if (name == "fd-ula") res[a].result = eval_fd_ula(z.z_a, ch.h_a, link, p_max, cfg.power);
          if (name == "fd-upa") res[a].result = eval_fd_upa(z, ch, link, p_max, cfg.power);
          if (name == "hps-upa") res[a].result = eval_hps_upa(z, ch, link, p_max, cfg.power);
          if (name == "random-baseline")
            res[a].result = eval_random_baseline(z, ch, link, p_max, cfg.power, cfg.baseline_budget,
                                                 derive_seed(trial_seed, 1), ac.fixed_resistance);
          res[a].ok = true;
        } catch (const Error&) {
          res[a].ok = false;
        }
      }
      return res;
    };
    const auto outcomes = detail::parallel_map<std::vector<detail::TrialOutcome>>(cfg.trials, cfg.threads, trial);

    for (std::size_t a = 0; a < archs.size(); ++a) {
      SweepRow row{cfg.axis, value, archs[a]};
      double se = 0.0, ee = 0.0, snr_sum = 0.0;
      for (const auto& o : outcomes) {
        if (!o[a].ok) {
          ++row.failures;
          continue;
        }
        ++row.trials;
        se += o[a].result.se;
        ee += o[a].result.ee;
        snr_sum += o[a].result.snr;
      }
      if (row.trials > 0) {
        const auto n = static_cast<double>(row.trials);
        row.mean_se = se / n;
        row.mean_ee = ee / n;
        row.mean_snr_db = 10.0 * std::log10(snr_sum / n);
      } else {
        row.mean_se = row.mean_ee = row.mean_snr_db = std::nan("");
      }
      result.rows.push_back(row);
    }
  }
  return result;
}

inline void write_sweep_csv(std::ostream& os, const SweepConfig& cfg, const SweepResult& res) {
  os << "# parasim sweep\n";
  os << "# seed=" << cfg.seed << "\n";
  os << "# config=" << cfg.to_json().dump() << "\n";
  os << "axis,axis_value,architecture,mean_se_bps_hz,mean_ee_bps_hz_w,mean_snr_db,trials,failures\n";
  for (const auto& r : res.rows) {
    os << r.axis << ',' << detail::format_number(r.axis_value) << ',' << r.architecture << ','
       << detail::format_number(r.mean_se) << ',' << detail::format_number(r.mean_ee) << ','
       << detail::format_number(r.mean_snr_db) << ',' << r.trials << ',' << r.failures << '\n';
  }
}

// ---------------------------------------------------------------------------
// Pattern tables.
//
// Pattern config keys: geometry, dipole, fixed_resistance_ohm (as above) and
//   pattern {mode: maxgain|fixedload, theta_deg: {values | start, stop, step},
//            n_parasitic_values: [...]       maxgain; defaults to geometry.n_parasitic
//            oracle: {starts, seed, box_ohm} maxgain
//            reactances_ohm: [...]           fixedload, canonical parasitic order
//            voltages: [[re, im], ...]       fixedload; defaults to all ones}

struct PatternConfig {
  ArrayConfig array;
  std::string mode = "maxgain";
  std::vector<double> theta_deg;
  std::vector<std::size_t> n_parasitic_values;
  OracleConfig oracle;
  std::vector<double> reactances;
  CVector voltages;

  json to_json() const {
    json j = detail::array_config_json(array);
    json p = {{"mode", mode}, {"theta_deg", {{"values", theta_deg}}}};
    if (mode == "maxgain") {
      p["n_parasitic_values"] = n_parasitic_values;
      p["oracle"] = {{"starts", oracle.starts}, {"seed", oracle.seed}, {"box_ohm", oracle.box}};
    } else {
      p["reactances_ohm"] = reactances;
      json v = json::array();
      for (Eigen::Index k = 0; k < voltages.size(); ++k) v.push_back({voltages(k).real(), voltages(k).imag()});
      p["voltages"] = v;
    }
    j["pattern"] = p;
    return j;
  }
};

inline PatternConfig parse_pattern_config(const std::string& text) {
  const detail::ConfigReader r(text);
  r.allow_keys({}, {"geometry", "dipole", "fixed_resistance_ohm", "pattern"});
  r.allow_keys({"pattern"}, {"mode", "theta_deg", "n_parasitic_values", "oracle", "reactances_ohm", "voltages"});
  r.allow_keys({"pattern", "theta_deg"}, {"values", "start", "stop", "step"});
  r.allow_keys({"pattern", "oracle"}, {"starts", "seed", "box_ohm"});
  PatternConfig c;
  c.array = detail::read_array_config(r);
  c.mode = r.string({"pattern", "mode"}, c.mode);
  if (c.mode != "maxgain" && c.mode != "fixedload") r.fail({"pattern", "mode"}, "must be maxgain or fixedload");
  if (r.find({"pattern", "theta_deg"})) {
    c.theta_deg = r.grid({"pattern", "theta_deg"});
  } else {
    for (int d = -90; d <= 90; ++d) c.theta_deg.push_back(d);
  }
  if (c.mode == "maxgain") {
    if (c.array.n_active != 1) r.fail({"geometry", "n_active"}, "maxgain mode needs a single active element");
    if (const json* n = r.find({"pattern", "n_parasitic_values"})) {
      if (!n->is_array() || n->empty()) r.fail({"pattern", "n_parasitic_values"}, "must be a nonempty array");
      for (const auto& e : *n) {
        if (!e.is_number_unsigned() || e.get<std::size_t>() > 6)
          r.fail({"pattern", "n_parasitic_values"}, "entries must be integers in [0, 6]");
        c.n_parasitic_values.push_back(e.get<std::size_t>());
      }
    } else {
      if (c.array.n_parasitic > 6) r.fail({"geometry", "n_parasitic"}, "maxgain mode supports at most 6 parasitics");
      c.n_parasitic_values.push_back(c.array.n_parasitic);
    }
    c.oracle.starts = r.count({"pattern", "oracle", "starts"}, c.oracle.starts, 1);
    c.oracle.seed = r.count({"pattern", "oracle", "seed"}, c.oracle.seed);
    c.oracle.box = r.positive({"pattern", "oracle", "box_ohm"}, c.oracle.box);
    c.oracle.fixed_resistance = c.array.fixed_resistance;
  } else {
    const std::size_t n_par = c.array.n_active * c.array.n_parasitic;
    if (const json* x = r.find({"pattern", "reactances_ohm"})) {
      if (!x->is_array()) r.fail({"pattern", "reactances_ohm"}, "must be an array of numbers");
      for (const auto& e : *x) {
        if (!e.is_number()) r.fail({"pattern", "reactances_ohm"}, "must be an array of numbers");
        c.reactances.push_back(e.get<double>());
      }
    } else {
      c.reactances.assign(n_par, kOpenCircuitReactance);
    }
    if (c.reactances.size() != n_par)
      r.fail({"pattern", "reactances_ohm"}, "has " + std::to_string(c.reactances.size()) + " entries, geometry needs " +
                                               std::to_string(n_par));
    c.voltages = CVector::Ones(static_cast<Eigen::Index>(c.array.n_active));
    if (const json* v = r.find({"pattern", "voltages"})) {
      if (!v->is_array() || v->size() != c.array.n_active)
        r.fail({"pattern", "voltages"}, "needs one [re, im] pair per active element");
      for (std::size_t k = 0; k < v->size(); ++k) {
        const auto& e = (*v)[k];
        if (!e.is_array() || e.size() != 2 || !e[0].is_number() || !e[1].is_number())
          r.fail({"pattern", "voltages"}, "needs one [re, im] pair per active element");
        c.voltages(static_cast<Eigen::Index>(k)) = cplx(e[0].get<double>(), e[1].get<double>());
      }
    }
  }
  return c;
}

inline PatternConfig load_pattern_config(const std::string& path) {
  return parse_pattern_config(detail::read_text_file(path));
}

struct PatternRow {
  std::size_t n_parasitic = 0;
  double theta_deg = 0.0;
  double closed_form_gain = 0.0;
  double oracle_gain = 0.0;
  bool flagged = false;
};

struct PatternTable {
  std::string mode;
  std::vector<PatternRow> rows;  // maxgain
  std::vector<double> theta_deg;  // fixedload
  std::vector<double> gain;       // fixedload, linear, normalized to max 1
};

/// Far-field gain |i_TX^T h(theta)|^2 of the whole array in the xy plane.
inline double array_pattern(double theta, const CVector& i_tx, const ArrayGeometry& geom) {
  return std::norm((i_tx.transpose() * los_channel(theta, geom).h()).value());
}

inline PatternTable run_pattern(const PatternConfig& cfg) {
  PatternTable out{cfg.mode, {}, {}, {}};
  if (cfg.mode == "maxgain") {
    for (std::size_t np : cfg.n_parasitic_values) {
      ArrayConfig ac = cfg.array;
      ac.n_parasitic = np;
      const ArrayGeometry geom = ac.geometry();
      const PartitionedImpedance z = assemble_impedance(geom);
      std::vector<PatternRow> rows = detail::parallel_map<PatternRow>(cfg.theta_deg.size(), 0, [&](std::size_t k) {
        const double th = cfg.theta_deg[k] * kPi / 180.0;
        PatternRow row{np, cfg.theta_deg[k]};
        const auto cf = closed_form_reactance_los(th, z, geom, ac.fixed_resistance);
        row.closed_form_gain = cf.true_gain;
        row.flagged = !cf.flagged.empty();
        row.oracle_gain = np == 0 ? 1.0 : numerical_oracle_los(th, z, geom, cfg.oracle).gain;
        return row;
      });
      out.rows.insert(out.rows.end(), rows.begin(), rows.end());
    }
    return out;
  }

  const ArrayGeometry geom = cfg.array.geometry();
  const PartitionedImpedance z = assemble_impedance(geom);
  RVector x(static_cast<Eigen::Index>(cfg.reactances.size()));
  for (std::size_t k = 0; k < cfg.reactances.size(); ++k) x(static_cast<Eigen::Index>(k)) = cfg.reactances[k];
  const auto loads = LoadConfig::from_canonical(x, geom.n_parasitic_per_active, geom.n_active, cfg.array.fixed_resistance);
  const ParasiticNetwork net(z, loads);
  const CVector i_a = currents_from_voltages(net, cfg.voltages);
  const CVector i_p = parasitic_currents(net, i_a);
  CVector i_tx(i_a.size() + i_p.size());
  i_tx << i_a, i_p;
  double peak = 0.0;
  for (double d : cfg.theta_deg) {
    out.theta_deg.push_back(d);
    out.gain.push_back(array_pattern(d * kPi / 180.0, i_tx, geom));
    peak = std::max(peak, out.gain.back());
  }
  if (peak > 0.0)
    for (auto& g : out.gain) g /= peak;
  return out;
}

inline double to_db(double linear) { return 10.0 * std::log10(linear); }

inline void write_pattern_csv(std::ostream& os, const PatternConfig& cfg, const PatternTable& t) {
  os << "# parasim pattern\n";
  os << "# config=" << cfg.to_json().dump() << "\n";
  if (t.mode == "maxgain") {
    os << "n_parasitic,theta_deg,closed_form_gain_db,oracle_gain_db,closed_form_gain,oracle_gain,flagged\n";
    for (const auto& r : t.rows)
      os << r.n_parasitic << ',' << detail::format_number(r.theta_deg) << ','
         << detail::format_number(to_db(r.closed_form_gain)) << ',' << detail::format_number(to_db(r.oracle_gain))
         << ',' << detail::format_number(r.closed_form_gain) << ',' << detail::format_number(r.oracle_gain) << ','
         << (r.flagged ? 1 : 0) << '\n';
  } else {
    os << "theta_deg,gain_db,gain\n";
    for (std::size_t k = 0; k < t.gain.size(); ++k)
      os << detail::format_number(t.theta_deg[k]) << ',' << detail::format_number(to_db(t.gain[k])) << ','
         << detail::format_number(t.gain[k]) << '\n';
  }
}

}  // namespace parasim
