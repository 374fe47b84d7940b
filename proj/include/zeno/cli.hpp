#pragma once

// Experiment configuration, figure presets, sweep output (CSV + manifest)
// and the bath self-check used by the zeno-opt tool.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "zeno/bath.hpp"
#include "zeno/core.hpp"
#include "zeno/dynamics.hpp"
#include "zeno/measurement.hpp"
#include "zeno/tolerances.hpp"

namespace zeno::cli {

inline constexpr const char* kVersion = "1.0.0";
inline constexpr const char* kCsvHeader = "tau,s_unopt,s_opt,gamma_unopt,gamma_opt,theta_opt,phi_opt";

/// Invalid or incomplete configuration; the message names the key.
class ConfigError : public std::invalid_argument {
 public:
  ConfigError(const std::string& key, const std::string& rule)
      : std::invalid_argument(key + ": " + rule), key_(key) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

struct ExperimentConfig {
  ModelSpec model;
  InitialState initial;
  bool initial_from_bloch = false;
  double tau_min = 0.0;
  double tau_max = 0.0;
  int tau_steps = 100;
  double dt = 0.0;
  int grid = 64;
  ProjectorKind projector = ProjectorKind::OptimalQubit;
  std::string output = "zeno_sweep.csv";

  std::vector<double> taus() const { return linear_grid(tau_min, tau_max, tau_steps); }

  ProjectorChoice projector_choice() const {
    ProjectorChoice c;
    c.kind = projector;
    c.coherent.grid = grid;
    return c;
  }
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline bool parse_plain(const std::string& text, double& out) {
  if (text.empty()) return false;
  char* end = nullptr;
  out = std::strtod(text.c_str(), &end);
  return end == text.c_str() + text.size() && std::isfinite(out);
}

/// Accepts a plain number or a multiple of pi: "pi", "pi/2", "0.25*pi", "3*pi/4".
inline double parse_number(const std::string& key, const std::string& text) {
  double v = 0.0;
  if (parse_plain(text, v)) return v;
  const auto pos = text.find("pi");
  if (pos != std::string::npos) {
    double factor = 1.0;
    double divisor = 1.0;
    const std::string before = trim(text.substr(0, pos));
    const std::string after = trim(text.substr(pos + 2));
    bool ok = true;
    if (!before.empty()) {
      ok = before.back() == '*' && parse_plain(trim(before.substr(0, before.size() - 1)), factor);
    }
    if (ok && !after.empty()) {
      ok = after.front() == '/' && parse_plain(trim(after.substr(1)), divisor) && divisor != 0.0;
    }
    if (ok) return factor * std::numbers::pi / divisor;
  }
  throw ConfigError(key, "expected a number, got '" + text + "'");
}

inline int parse_int(const std::string& key, const std::string& text) {
  const double v = parse_number(key, text);
  if (v != std::floor(v) || std::abs(v) > 1e9) throw ConfigError(key, "expected an integer");
  return static_cast<int>(v);
}

inline std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

}  // namespace detail

inline const std::vector<std::string>& known_keys() {
  static const std::vector<std::string> keys = {
      "model", "epsilon", "delta",   "J",       "G",        "s_ohmic",   "omega_c",
      "beta",  "theta",   "phi",     "bloch_x", "bloch_y",  "bloch_z",   "tau_min",
      "tau_max", "tau_steps", "dt",  "grid",    "output",   "projector"};
  return keys;
}

/// Builds a validated config from key/value pairs, filling defaults.
inline ExperimentConfig config_from_map(const std::map<std::string, std::string>& kv) {
  for (const auto& [k, v] : kv) {
    if (std::find(known_keys().begin(), known_keys().end(), k) == known_keys().end()) {
      throw ConfigError(k, "unknown key");
    }
  }
  auto has = [&](const char* k) { return kv.count(k) > 0; };
  auto num = [&](const char* k) { return detail::parse_number(k, kv.at(k)); };
  auto require = [&](const char* k) {
    if (!has(k)) throw ConfigError(k, "missing required key");
  };

  ExperimentConfig cfg;
  require("model");
  const auto kind = model_kind_from_string(kv.at("model"));
  if (!kind) throw ConfigError("model", "unknown model '" + kv.at("model") + "'");
  ModelSpec& m = cfg.model;
  m.kind = *kind;

  const bool needs_energy = !m.has_exact_dephasing();
  if (needs_energy) require("epsilon");
  if (has("epsilon")) m.epsilon = num("epsilon");
  if (has("delta")) m.delta = num("delta");
  if (m.kind == ModelKind::SpinBoson || m.kind == ModelKind::LargeSpin) {
    if (needs_energy && std::max(std::abs(m.epsilon), std::abs(m.delta)) == 0.0) {
      throw ConfigError("epsilon", "epsilon and delta cannot both be zero");
    }
  } else if (m.delta != 0.0) {
    throw ConfigError("delta", "must be 0 for model " + std::string(to_string(m.kind)));
  }
  if (needs_energy && m.epsilon == 0.0 && m.delta == 0.0) {
    throw ConfigError("epsilon", "must be nonzero for model " + std::string(to_string(m.kind)));
  }

  if (m.is_qubit_model()) {
    if (has("J") && num("J") != 0.5) throw ConfigError("J", "qubit models require J = 1/2");
  } else {
    require("J");
    try {
      m.J = Spin::from_value(num("J"));
    } catch (const ConfigError&) {
      throw;
    } catch (const std::invalid_argument& e) {
      throw ConfigError("J", e.what());
    }
  }

  require("G");
  require("omega_c");
  m.bath.spectral.G = num("G");
  m.bath.spectral.omega_c = num("omega_c");
  m.bath.spectral.s = has("s_ohmic") ? num("s_ohmic") : 1.0;
  if (!(m.bath.spectral.G >= 0.0)) throw ConfigError("G", "must be >= 0");
  if (!(m.bath.spectral.omega_c > 0.0)) throw ConfigError("omega_c", "must be > 0");
  if (!(m.bath.spectral.s > 0.0)) throw ConfigError("s_ohmic", "must be > 0");
  const double energy = std::max(std::abs(m.epsilon), std::abs(m.delta));
  if (has("beta")) {
    m.bath.beta = num("beta");
  } else if (energy > 0.0) {
    m.bath.beta = 100.0 / energy;  // low-temperature convention
  } else {
    throw ConfigError("beta", "missing required key (no system energy to default from)");
  }
  if (!(m.bath.beta > 0.0)) throw ConfigError("beta", "must be > 0");

  const bool angles = has("theta") || has("phi");
  const bool bloch = has("bloch_x") || has("bloch_y") || has("bloch_z");
  if (angles && bloch) {
    throw ConfigError("theta", "ambiguous initial state: give either (theta, phi) or bloch_x/y/z, not both");
  }
  if (angles) {
    const double theta = has("theta") ? num("theta") : 0.0;
    const double phi = has("phi") ? num("phi") : 0.0;
    if (theta < 0.0 || theta > std::numbers::pi + 1e-12) throw ConfigError("theta", "must lie in [0, pi]");
    cfg.initial = InitialState::from_angles(theta, phi);
  } else if (bloch) {
    const BlochVector n{has("bloch_x") ? num("bloch_x") : 0.0, has("bloch_y") ? num("bloch_y") : 0.0,
                        has("bloch_z") ? num("bloch_z") : 0.0};
    if (std::abs(n.norm() - 1.0) > 1e-9) throw ConfigError("bloch_x", "Bloch vector must have unit norm");
    cfg.initial = InitialState::from_bloch(n.normalized());
    cfg.initial_from_bloch = true;
  }

  require("tau_min");
  require("tau_max");
  cfg.tau_min = num("tau_min");
  cfg.tau_max = num("tau_max");
  if (!(cfg.tau_min > 0.0)) throw ConfigError("tau_min", "must be > 0");
  if (!(cfg.tau_max > cfg.tau_min)) throw ConfigError("tau_max", "must be > tau_min");
  if (has("tau_steps")) cfg.tau_steps = detail::parse_int("tau_steps", kv.at("tau_steps"));
  if (cfg.tau_steps < 2) throw ConfigError("tau_steps", "must be >= 2");

  cfg.dt = has("dt") ? num("dt") : 0.1 / m.fastest_rate();
  if (!(cfg.dt > 0.0)) throw ConfigError("dt", "must be > 0");
  if (!m.has_exact_dephasing()) {
    try {
      check_step_size(m, cfg.dt);
    } catch (const std::invalid_argument& e) {
      throw ConfigError("dt", e.what());
    }
  }

  if (has("grid")) cfg.grid = detail::parse_int("grid", kv.at("grid"));
  if (cfg.grid < 2) throw ConfigError("grid", "must be >= 2");
  if (has("output")) cfg.output = kv.at("output");

  cfg.projector = m.is_qubit_model() ? ProjectorKind::OptimalQubit : ProjectorKind::OptimalCoherent;
  if (has("projector")) {
    const std::string p = kv.at("projector");
    if (p == "initial") {
      cfg.projector = ProjectorKind::InitialState;
    } else if (p != "optimal") {
      throw ConfigError("projector", "expected 'optimal' or 'initial'");
    }
  }
  try {
    m.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError("model", e.what());
  }
  return cfg;
}

/// Flat `key = value` lines; `#` starts a comment.
inline ExperimentConfig parse_config(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(lineno), "expected 'key = value'");
    }
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError("line " + std::to_string(lineno), "empty key");
    if (value.empty()) throw ConfigError(key, "empty value");
    if (!kv.emplace(key, value).second) throw ConfigError(key, "duplicate key");
  }
  return config_from_map(kv);
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config", "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

/// Resolved parameters as `key = value` lines (the manifest's config echo).
inline std::string echo(const ExperimentConfig& cfg) {
  using detail::fmt;
  const ModelSpec& m = cfg.model;
  std::ostringstream out;
  out << "model = " << to_string(m.kind) << '\n'
      << "epsilon = " << fmt(m.epsilon) << '\n'
      << "delta = " << fmt(m.delta) << '\n'
      << "J = " << fmt(m.J.value()) << '\n'
      << "G = " << fmt(m.bath.spectral.G) << '\n'
      << "s_ohmic = " << fmt(m.bath.spectral.s) << '\n'
      << "omega_c = " << fmt(m.bath.spectral.omega_c) << '\n'
      << "beta = " << fmt(m.bath.beta) << '\n';
  // Components at rounding level (e.g. cos(pi/2)) are echoed as 0.
  auto snap = [](double v) { return std::abs(v) < 1e-15 ? 0.0 : v; };
  const BlochVector& n = cfg.initial.direction;
  out << "bloch_x = " << fmt(snap(n.x)) << '\n'
      << "bloch_y = " << fmt(snap(n.y)) << '\n'
      << "bloch_z = " << fmt(snap(n.z)) << '\n'
      << "theta = " << fmt(cfg.initial.theta()) << '\n'
      << "phi = " << fmt(cfg.initial.phi()) << '\n'
      << "tau_min = " << fmt(cfg.tau_min) << '\n'
      << "tau_max = " << fmt(cfg.tau_max) << '\n'
      << "tau_steps = " << cfg.tau_steps << '\n'
      << "dt = " << fmt(cfg.dt) << '\n'
      << "grid = " << cfg.grid << '\n'
      << "projector = " << to_string(cfg.projector) << '\n';
  return out.str();
}

// ---------------------------------------------------------------------------
// Presets

struct Preset {
  std::string name;
  std::string description;
  std::map<std::string, std::string> values;
};

inline const std::vector<Preset>& presets() {
  static const std::vector<Preset> table = [] {
    const std::map<std::string, std::string> dephasing = {
        {"model", "pure_dephasing"}, {"G", "0.1"},        {"omega_c", "10"},   {"beta", "0.5"},
        {"tau_min", "0.05"},         {"tau_max", "5"},    {"tau_steps", "100"}};
    const std::map<std::string, std::string> spin_boson = {
        {"model", "spin_boson"}, {"G", "0.01"},      {"omega_c", "10"},   {"s_ohmic", "1"},
        {"epsilon", "2"},        {"delta", "2"},     {"theta", "pi/2"},   {"phi", "0"},
        {"tau_min", "0.05"},     {"tau_max", "30"},  {"tau_steps", "300"}};
    const std::map<std::string, std::string> large_spin = {
        {"J", "1"},          {"G", "0.01"},    {"omega_c", "50"},     {"beta", "1"},
        {"epsilon", "2"},    {"theta", "pi/2"}, {"phi", "0"},         {"tau_min", "0.05"},
        {"tau_max", "5"},    {"tau_steps", "100"}};
    auto with = [](std::map<std::string, std::string> base,
                   const std::map<std::string, std::string>& over) {
      for (const auto& [k, v] : over) base[k] = v;
      return base;
    };
    return std::vector<Preset>{
        {"fig1", "population decay, weak coupling",
         {{"model", "population_decay"}, {"G", "0.01"}, {"omega_c", "50"}, {"epsilon", "1"},
          {"beta", "100"}, {"bloch_z", "1"}, {"tau_min", "0.05"}, {"tau_max", "25"}, {"tau_steps", "500"}}},
        {"fig2a", "pure dephasing, equatorial initial state",
         with(dephasing, {{"bloch_x", "1"}})},
        {"fig2b", "pure dephasing, initial Bloch (1,1,1)/sqrt(3)",
         with(dephasing, {{"bloch_x", "0.57735026918962573"}, {"bloch_y", "0.57735026918962573"},
                          {"bloch_z", "0.57735026918962573"}})},
        {"fig3a", "pure dephasing, initial Bloch (1/sqrt(10), 0, sqrt(9/10)): rates",
         with(dephasing, {{"bloch_x", "0.31622776601683794"}, {"bloch_z", "0.94868329805051377"}})},
        {"fig3b", "pure dephasing, initial Bloch (1/sqrt(10), 0, sqrt(9/10)): optimal angles",
         with(dephasing, {{"bloch_x", "0.31622776601683794"}, {"bloch_z", "0.94868329805051377"},
                          {"tau_max", "20"}, {"tau_steps", "400"}})},
        {"fig4a", "spin-boson, epsilon = delta = 2, short intervals",
         with(spin_boson, {{"tau_max", "5"}, {"tau_steps", "100"}})},
        {"fig4b", "spin-boson, epsilon = delta = 2, long intervals",
         with(spin_boson, {{"tau_max", "50"}, {"tau_steps", "500"}})},
        {"fig5a", "spin-boson, sub-Ohmic s = 0.8", with(spin_boson, {{"s_ohmic", "0.8"}})},
        {"fig5b", "spin-boson, super-Ohmic s = 2", with(spin_boson, {{"s_ohmic", "2"}})},
        {"fig5c", "spin-boson, epsilon >> delta",
         with(spin_boson, {{"G", "0.025"}, {"epsilon", "6"}, {"delta", "2"}})},
        {"fig5d", "spin-boson, delta >> epsilon",
         with(spin_boson, {{"G", "0.025"}, {"epsilon", "2"}, {"delta", "6"}})},
        {"fig6a", "large spin J = 1, pure dephasing",
         with(large_spin, {{"model", "large_spin_dephasing"}})},
        {"fig6b", "large spin J = 1 with tunnelling, epsilon = delta = 2",
         with(large_spin, {{"model", "large_spin"}, {"delta", "2"}})},
    };
  }();
  return table;
}

inline const Preset& find_preset(const std::string& name) {
  for (const auto& p : presets()) {
    if (p.name == name) return p;
  }
  std::string known;
  for (const auto& p : presets()) known += (known.empty() ? "" : ", ") + p.name;
  throw ConfigError("preset", "unknown preset '" + name + "' (known: " + known + ")");
}

inline ExperimentConfig preset_config(const std::string& name) {
  auto values = find_preset(name).values;
  values["output"] = name + ".csv";
  return config_from_map(values);
}

// ---------------------------------------------------------------------------
// Sweep output

struct RunReport {
  DecaySweep sweep;
  std::optional<FlipTime> flip;
  std::optional<double> survival_gap_n3_tau1;
  std::vector<double> transitions_unopt;
  std::vector<double> transitions_opt;
  double wall_seconds = 0.0;
};

inline unsigned thread_limit() {
  unsigned n = std::max(1u, std::thread::hardware_concurrency());
  if (const unsigned env = sweep_threads_from_env(); env > 0) n = std::min(n, env);
  return n;
}

inline RunReport run(const ExperimentConfig& cfg) {
  const auto start = std::chrono::steady_clock::now();
  RunReport report;
  SweepOptions opts;
  opts.dt = cfg.dt;
  opts.threads = thread_limit();
  const auto taus = cfg.taus();
  report.sweep = sweep(cfg.model, cfg.initial, taus, cfg.projector_choice(), opts);

  if (cfg.model.kind == ModelKind::PopulationDecay) {
    const auto rho0 = DensityMatrix::pure(cfg.initial.state_vector(cfg.model.J));
    const auto traj = redfield_integrate(cfg.model, rho0, cfg.tau_max, cfg.dt);
    report.flip = flip_time(cfg.model, traj);
  }
  if (cfg.model.kind == ModelKind::PureDephasingQubit) {
    const double g = gamma(cfg.model.bath, 1.0);
    const BlochVector& n0 = cfg.initial.direction;
    const double s_opt = cfg.projector == ProjectorKind::InitialState ? dephasing_survival_unopt(n0, g)
                                                                      : dephasing_survival_opt(n0, g);
    report.survival_gap_n3_tau1 =
        survival_after_n(s_opt, 3) - survival_after_n(dephasing_survival_unopt(n0, g), 3);
  }
  std::vector<double> g_unopt, g_opt;
  for (const auto& o : report.sweep.outcomes) {
    g_unopt.push_back(o.gamma_unopt);
    g_opt.push_back(o.gamma_opt);
  }
  report.transitions_unopt = transition_candidates(taus, g_unopt);
  report.transitions_opt = transition_candidates(taus, g_opt);
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

inline std::string csv_text(const DecaySweep& sweep) {
  using detail::fmt;
  std::ostringstream out;
  out << kCsvHeader << '\n';
  for (const auto& o : sweep.outcomes) {
    out << fmt(o.tau) << ',' << fmt(o.s_unopt) << ',' << fmt(o.s_opt) << ',' << fmt(o.gamma_unopt)
        << ',' << fmt(o.gamma_opt) << ',' << fmt(o.opt_theta) << ',' << fmt(o.opt_phi) << '\n';
  }
  return out.str();
}

inline std::string manifest_text(const ExperimentConfig& cfg, const RunReport& r,
                                 const std::string& preset = {}) {
  using detail::fmt;
  auto list = [](const std::vector<double>& v) {
    std::string s;
    for (double x : v) s += (s.empty() ? "" : " ") + fmt(x);
    return s.empty() ? std::string("none") : s;
  };
  std::ostringstream out;
  out << "# zeno-opt run manifest\n"
      << "version = " << kVersion << '\n';
  if (!preset.empty()) out << "preset = " << preset << '\n';
  out << echo(cfg);
  out << "wall_time_s = " << fmt(r.wall_seconds) << '\n'
      << "tol_structural = " << fmt(kStructuralTol) << '\n'
      << "tol_quadrature_rel = " << fmt(quad::kRelTarget) << '\n'
      << "tol_positivity_warn = " << fmt(kPositivityWarnTol) << '\n'
      << "min_eigenvalue = " << fmt(r.sweep.min_eigenvalue) << '\n'
      << "max_trace_drift = " << fmt(r.sweep.max_trace_drift) << '\n';
  if (r.flip) {
    if (r.flip->found) {
      out << "flip_time = " << fmt(r.flip->time) << '\n';
    } else {
      out << "flip_time = not_found\nfinal_nz = " << fmt(r.flip->final_nz) << '\n';
    }
  }
  if (r.survival_gap_n3_tau1) out << "survival_gap_N3_tau1 = " << fmt(*r.survival_gap_n3_tau1) << '\n';
  out << "transition_candidates_unopt = " << list(r.transitions_unopt) << '\n'
      << "transition_candidates_opt = " << list(r.transitions_opt) << '\n'
      << "warnings = " << r.sweep.warnings.size() << '\n';
  for (std::size_t i = 0; i < r.sweep.warnings.size(); ++i) {
    out << "warning_" << i << " = " << r.sweep.warnings[i] << '\n';
  }
  return out.str();
}

inline void write_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + tmp);
    out << text;
    if (!out) throw std::runtime_error("write failed for " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

/// Runs the sweep and writes `<csv>` plus `<csv>.manifest`. Nothing is
/// written if the sweep fails.
inline RunReport run_sweep(const ExperimentConfig& cfg, const std::filesystem::path& csv,
                           const std::string& preset = {}) {
  RunReport r = run(cfg);
  write_file(csv, csv_text(r.sweep));
  write_file(csv.string() + ".manifest", manifest_text(cfg, r, preset));
  return r;
}

// ---------------------------------------------------------------------------
// Bath self-check

struct BathCheckRow {
  double t = 0.0;
  double err_gamma = 0.0;
  double err_delta = 0.0;
  double err_corr = 0.0;
};

inline double relative_error(double got, double want) {
  if (want == 0.0) return std::abs(got);
  return std::abs(got - want) / std::abs(want);
}

/// Quadrature vs the Ohmic zero-temperature closed forms.
inline std::vector<BathCheckRow> bath_check(const BathParams& bath,
                                            const std::vector<double>& times = {0.01, 0.1, 1.0, 10.0}) {
  bath.validate();
  if (bath.spectral.s != 1.0) {
    throw ConfigError("s_ohmic", "bath check needs an Ohmic bath (s = 1); closed forms exist only there");
  }
  const double G = bath.spectral.G;
  const double wc = bath.spectral.omega_c;
  std::vector<BathCheckRow> rows;
  for (double t : times) {
    BathCheckRow row;
    row.t = t;
    row.err_gamma = relative_error(gamma(bath, t), ohmic::gamma_zero_temperature(G, wc, t));
    row.err_delta = relative_error(delta_phase(bath.spectral, t), ohmic::delta_phase(G, wc, t));
    const Complex c = correlation(bath, t);
    const Complex c0 = ohmic::correlation_zero_temperature(G, wc, t);
    row.err_corr = c0 == Complex(0.0) ? std::abs(c) : std::abs(c - c0) / std::abs(c0);
    rows.push_back(row);
  }
  return rows;
}

}  // namespace zeno::cli
