// zeno-opt: optimal repeated-measurement sweeps for open two-level and
// large-spin systems.
//
//   zeno-opt sweep --config <path> [--out <csv>]
//   zeno-opt preset <name> --out <dir>
//   zeno-opt flip-time --config <path>
//   zeno-opt bath-check --config <path>
//
// Exit status: 0 success, 1 configuration error, 2 numerical failure.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>

#include "zeno/cli.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitNumerical = 2;

void print_summary(const zeno::cli::RunReport& r, const std::filesystem::path& csv) {
  std::cout << "wrote " << csv.string() << " (" << r.sweep.outcomes.size() << " rows) and "
            << csv.string() << ".manifest\n";
  if (r.flip) {
    if (r.flip->found) {
      std::printf("flip_time = %.6g\n", r.flip->time);
    } else {
      std::printf("flip_time = not_found (final n_z = %.6g)\n", r.flip->final_nz);
    }
  }
  if (r.survival_gap_n3_tau1) std::printf("survival_gap_N3_tau1 = %.6g\n", *r.survival_gap_n3_tau1);
  for (const auto& w : r.sweep.warnings) std::cerr << "warning: " << w << '\n';
}

int cmd_sweep(const std::string& config_path, const std::string& out) {
  const auto cfg = zeno::cli::load_config(config_path);
  const std::filesystem::path csv = std::filesystem::path(out.empty() ? cfg.output : out);
  print_summary(zeno::cli::run_sweep(cfg, csv), csv);
  return kExitOk;
}

int cmd_preset(const std::string& name, const std::string& dir) {
  const auto cfg = zeno::cli::preset_config(name);
  const auto csv = std::filesystem::path(dir) / cfg.output;
  print_summary(zeno::cli::run_sweep(cfg, csv, name), csv);
  return kExitOk;
}

int cmd_flip_time(const std::string& config_path) {
  const auto cfg = zeno::cli::load_config(config_path);
  if (cfg.model.kind != zeno::ModelKind::PopulationDecay) {
    throw zeno::cli::ConfigError("model", "flip-time requires model = population_decay");
  }
  const auto rho0 = zeno::DensityMatrix::pure(cfg.initial.state_vector(cfg.model.J));
  const auto traj = zeno::redfield_integrate(cfg.model, rho0, cfg.tau_max, cfg.dt);
  const auto flip = zeno::flip_time(cfg.model, traj);
  if (flip.found) {
    std::printf("flip_time = %.6g\n", flip.time);
  } else {
    std::printf("flip_time = not_found\nfinal_nz = %.6g\n", flip.final_nz);
  }
  for (const auto& w : traj.warnings) std::cerr << "warning: " << w << '\n';
  return kExitOk;
}

int cmd_bath_check(const std::string& config_path) {
  const auto cfg = zeno::cli::load_config(config_path);
  const auto rows = zeno::cli::bath_check(cfg.model.bath);
  constexpr double kLimit = 1e-6;
  bool ok = true;
  std::printf("%-8s %-14s %-14s %-14s\n", "t", "rel_err_gamma", "rel_err_delta", "rel_err_C");
  for (const auto& r : rows) {
    std::printf("%-8g %-14.3e %-14.3e %-14.3e\n", r.t, r.err_gamma, r.err_delta, r.err_corr);
    ok = ok && r.err_gamma < kLimit && r.err_delta < kLimit && r.err_corr < kLimit;
  }
  std::printf("%s (limit %g)\n", ok ? "ok" : "FAILED", kLimit);
  return ok ? kExitOk : kExitNumerical;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Optimal repeated-measurement sweeps (quantum Zeno / anti-Zeno)", "zeno-opt"};
  app.set_version_flag("--version", zeno::cli::kVersion);
  app.require_subcommand(1);

  std::string config_path;
  std::string out;
  std::string preset_name;

  auto* sweep = app.add_subcommand("sweep", "Run a decay-rate sweep from a config file");
  sweep->add_option("--config", config_path, "Config file (key = value)")->required();
  sweep->add_option("--out", out, "CSV path (overrides the config's output key)");

  auto* preset = app.add_subcommand("preset", "Run a frozen figure preset");
  preset->add_option("name", preset_name, "Preset name (fig1, fig2a, ..., fig6b)")->required();
  preset->add_option("--out", out, "Output directory")->required();

  auto* flip = app.add_subcommand("flip-time", "Report the Bloch-vector flip time (population decay)");
  flip->add_option("--config", config_path, "Config file")->required();

  auto* bath = app.add_subcommand("bath-check", "Compare bath quadrature against Ohmic closed forms");
  bath->add_option("--config", config_path, "Config file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*sweep) return cmd_sweep(config_path, out);
    if (*preset) return cmd_preset(preset_name, out);
    if (*flip) return cmd_flip_time(config_path);
    if (*bath) return cmd_bath_check(config_path);
  } catch (const zeno::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitNumerical;
  }
  return kExitConfig;
}
