#pragma once

// Survival probabilities under repeated re-preparation, optimal projectors,
// and effective decay rates Gamma(tau) = -ln s(tau) / tau.

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <numbers>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "zeno/bath.hpp"
#include "zeno/core.hpp"
#include "zeno/dynamics.hpp"
#include "zeno/optimize.hpp"

namespace zeno {

inline constexpr double kSurvivalSlack = 1e-12;

// ---------------------------------------------------------------------------
// Survival and rates

/// s = <chi| rho |chi>, clamped to [0, 1].
inline double survival(const DensityMatrix& rho, const ComplexVector& chi) {
  if (chi.size() != rho.dim()) throw std::invalid_argument("projector dimension mismatch");
  if (std::abs(chi.norm() - 1.0) > kStructuralTol) {
    throw std::invalid_argument("projector state is not normalised");
  }
  const double s = (chi.adjoint() * rho.matrix() * chi)(0, 0).real();
  return std::clamp(s, 0.0, 1.0);
}

/// -ln(s)/tau; s = 0 gives +infinity.
inline double decay_rate(double s, double tau) {
  if (!(tau > 0.0)) throw std::invalid_argument("decay rate needs tau > 0");
  if (!(s >= 0.0 && s <= 1.0)) throw std::invalid_argument("survival probability outside [0, 1]");
  if (s == 0.0) return std::numeric_limits<double>::infinity();
  if (s == 1.0) return 0.0;
  return -std::log(s) / tau;
}

inline double survival_after_n(double s, int n) {
  if (!(s >= 0.0 && s <= 1.0)) throw std::invalid_argument("survival probability outside [0, 1]");
  if (n < 1) throw std::invalid_argument("number of measurements must be >= 1");
  return std::pow(s, n);
}

struct QubitOptimum {
  BlochVector projector;
  double s_star = 0.5;
};

/// Projector along the Bloch vector maximises 1/2 (1 + n . n'). A maximally
/// mixed state has no preferred direction, so `tie_break` is returned.
inline QubitOptimum optimal_qubit(const DensityMatrix& rho, const BlochVector& tie_break) {
  const BlochVector n = bloch_from_density(rho);
  const double len = n.norm();
  if (len < kDegenerateBlochNorm) return {tie_break, 0.5};
  return {n.scaled(1.0 / len), std::min(1.0, 0.5 * (1.0 + len))};
}

// Pure dephasing, closed forms in terms of the initial Bloch vector.
inline void require_pure_bloch(const BlochVector& n0) {
  if (std::abs(n0.norm() - 1.0) > kStructuralTol) {
    throw std::invalid_argument("initial Bloch vector must have unit norm");
  }
}

/// 1/2 (1 + n_z^2 + e^{-gamma} (n_x^2 + n_y^2))
inline double dephasing_survival_unopt(const BlochVector& n0, double gamma_t) {
  require_pure_bloch(n0);
  const double transverse = n0.x * n0.x + n0.y * n0.y;
  return 0.5 * (1.0 + n0.z * n0.z + std::exp(-gamma_t) * transverse);
}

/// 1/2 (1 + sqrt(n_z^2 + e^{-2 gamma} (n_x^2 + n_y^2)))
inline double dephasing_survival_opt(const BlochVector& n0, double gamma_t) {
  require_pure_bloch(n0);
  const double transverse = n0.x * n0.x + n0.y * n0.y;
  return 0.5 * (1.0 + std::sqrt(n0.z * n0.z + std::exp(-2.0 * gamma_t) * transverse));
}

// ---------------------------------------------------------------------------
// Coherent-state projectors

inline double coherent_survival(const DensityMatrix& rho, const CoherentStateSpec& zeta) {
  return survival(rho, coherent_state(zeta));
}

/// <zeta| rho(t) |zeta> with rho(0) = |eta><eta| under exact large-spin dephasing.
inline double coherent_survival(const CoherentStateSpec& eta, const CoherentStateSpec& zeta,
                                double gamma_t, double delta_t) {
  if (!(eta.J == zeta.J)) throw std::invalid_argument("coherent states have different J");
  const auto rho0 = DensityMatrix::pure(coherent_state(eta));
  return coherent_survival(dephasing_propagate_large_spin(rho0, eta.J, gamma_t, delta_t), zeta);
}

inline double coherent_survival(const CoherentStateSpec& eta, const CoherentStateSpec& zeta,
                                double t, const BathParams& bath) {
  if (!(eta.J == zeta.J)) throw std::invalid_argument("coherent states have different J");
  return coherent_survival(eta, zeta, gamma(bath, t), delta_phase(bath.spectral, t));
}

struct CoherentOptimizerSettings {
  int grid = 64;
  bool refine = true;
  SimplexSettings simplex;
};

struct CoherentOptimum {
  double theta = 0.0;
  double phi = 0.0;
  double s = 0.0;
  double grid_best = 0.0;
};

namespace detail {

// Fold arbitrary (theta, phi) onto theta in [0, pi], phi in [0, 2 pi).
inline std::pair<double, double> fold_angles(double theta, double phi) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  theta = std::fmod(theta, two_pi);
  if (theta < 0.0) theta += two_pi;
  if (theta > std::numbers::pi) {
    theta = two_pi - theta;
    phi += std::numbers::pi;
  }
  phi = std::fmod(phi, two_pi);
  if (phi < 0.0) phi += two_pi;
  if (phi >= two_pi) phi = 0.0;
  return {theta, phi};
}

}  // namespace detail

/// Maximises <zeta| rho |zeta> over coherent states: full (theta, phi) grid,
/// the initial direction as an extra candidate, then simplex refinement
/// from the best candidate.
inline CoherentOptimum optimize_coherent(const DensityMatrix& rho, const CoherentStateSpec& initial,
                                         const CoherentOptimizerSettings& settings = {}) {
  if (rho.dim() != initial.J.dim()) throw std::invalid_argument("state dimension does not match 2J+1");
  if (settings.grid < 2) throw std::invalid_argument("optimizer grid must be >= 2");
  const Spin J = initial.J;
  auto value = [&](double theta, double phi) {
    const auto [t, p] = detail::fold_angles(theta, phi);
    return coherent_survival(rho, CoherentStateSpec{J, t, p});
  };

  CoherentOptimum best;
  best.theta = initial.theta;
  best.phi = detail::fold_angles(initial.theta, initial.phi).second;
  best.s = value(initial.theta, initial.phi);
  const int n = settings.grid;
  const double d_theta = std::numbers::pi / (n - 1);
  const double d_phi = 2.0 * std::numbers::pi / n;
  for (int i = 0; i < n; ++i) {
    const double theta = d_theta * i;
    // A pole is one point regardless of phi.
    const int phi_count = (i == 0 || i == n - 1) ? 1 : n;
    for (int j = 0; j < phi_count; ++j) {
      const double phi = d_phi * j;
      const double s = value(theta, phi);
      if (s > best.s) best = {theta, phi, s, 0.0};
    }
  }
  best.grid_best = best.s;
  if (!settings.refine) return best;

  auto objective = [&](const std::array<double, 2>& x) { return -value(x[0], x[1]); };
  const auto res =
      nelder_mead_2d(objective, {best.theta, best.phi}, {0.5 * d_theta, 0.5 * d_phi}, settings.simplex);
  if (-res.value > best.s) {
    const auto [t, p] = detail::fold_angles(res.x[0], res.x[1]);
    best.theta = t;
    best.phi = p;
    best.s = -res.value;
  }
  return best;
}

/// Dephasing case: optimise against the exactly propagated initial coherent state.
inline CoherentOptimum optimize_coherent(const CoherentStateSpec& eta, double t, const BathParams& bath,
                                         const CoherentOptimizerSettings& settings = {}) {
  if (!(t > 0.0)) throw std::invalid_argument("optimize_coherent needs t > 0");
  const auto rho0 = DensityMatrix::pure(coherent_state(eta));
  return optimize_coherent(dephasing_propagate_large_spin(rho0, t, bath, eta.J), eta, settings);
}

// ---------------------------------------------------------------------------
// Flip time

struct FlipTime {
  bool found = false;
  double time = 0.0;
  double final_nz = 0.0;
};

/// First zero of n_z(tau) for the population-decay model: sign-change scan
/// over the stored states, then bisection on the interpolated state.
inline FlipTime flip_time(const ModelSpec& model, const Trajectory& traj, double resolution = 1e-3) {
  if (model.kind != ModelKind::PopulationDecay) {
    throw std::invalid_argument("flip time is defined for the population decay model");
  }
  if (traj.states.empty()) throw std::invalid_argument("empty trajectory");
  auto nz = [&](double tau) { return bloch_from_density(frame_removed_state(model, traj, tau)).z; };
  FlipTime out;
  out.final_nz = bloch_from_density(traj.states.back()).z;
  for (std::size_t k = 1; k < traj.states.size(); ++k) {
    const double prev = bloch_from_density(traj.states[k - 1]).z;
    const double cur = bloch_from_density(traj.states[k]).z;
    if (prev > 0.0 && cur <= 0.0) {
      double lo = traj.times[k - 1];
      double hi = traj.times[k];
      while (hi - lo > 0.25 * resolution) {
        const double mid = 0.5 * (lo + hi);
        (nz(mid) > 0.0 ? lo : hi) = mid;
      }
      out.found = true;
      out.time = 0.5 * (lo + hi);
      return out;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Sweeps

enum class ProjectorKind { InitialState, OptimalQubit, OptimalCoherent };

inline std::string_view to_string(ProjectorKind k) {
  switch (k) {
    case ProjectorKind::InitialState: return "initial";
    case ProjectorKind::OptimalQubit: return "optimal_qubit";
    case ProjectorKind::OptimalCoherent: return "optimal_coherent";
  }
  return "unknown";
}

struct ProjectorChoice {
  ProjectorKind kind = ProjectorKind::OptimalQubit;
  CoherentOptimizerSettings coherent;

  static ProjectorChoice default_for(const ModelSpec& model) {
    ProjectorChoice c;
    c.kind = model.is_qubit_model() ? ProjectorKind::OptimalQubit : ProjectorKind::OptimalCoherent;
    return c;
  }

  void validate_for(const ModelSpec& model) const {
    if (kind == ProjectorKind::OptimalQubit && model.dim() != 2) {
      throw std::invalid_argument("optimal qubit projector requires a two-level system");
    }
    if (kind == ProjectorKind::OptimalCoherent && model.is_qubit_model()) {
      throw std::invalid_argument("coherent-state optimisation applies to large-spin models");
    }
  }
};

/// Initial pure state, stored as its Bloch direction.
struct InitialState {
  BlochVector direction{0.0, 0.0, 1.0};

  static InitialState from_angles(double theta, double phi) {
    return {BlochVector::from_angles(theta, phi)};
  }
  static InitialState from_bloch(const BlochVector& n) {
    require_pure_bloch(n);
    return {n.normalized()};
  }

  double theta() const { return direction.angles().first; }
  double phi() const { return direction.angles().second; }
  CoherentStateSpec coherent(Spin J) const { return {J, theta(), phi()}; }

  ComplexVector state_vector(Spin J) const {
    if (J.twice() == 1) {
      // Exact for the qubit: avoids round trips through angles.
      const double c = std::sqrt(0.5 * (1.0 + direction.z));
      ComplexVector psi(2);
      if (c < 1e-300) {
        psi << 0.0, 1.0;
      } else {
        psi << c, Complex(direction.x, direction.y) / (2.0 * c);
      }
      return psi / psi.norm();
    }
    return coherent_state(coherent(J));
  }
};

struct MeasurementOutcome {
  double tau = 0.0;
  double s_unopt = 1.0;
  double s_opt = 1.0;
  double gamma_unopt = 0.0;
  double gamma_opt = 0.0;
  double opt_theta = 0.0;
  double opt_phi = 0.0;
};

struct DecaySweep {
  ModelSpec model;
  InitialState initial;
  ProjectorChoice choice;
  std::vector<MeasurementOutcome> outcomes;
  std::vector<std::string> warnings;
  double min_eigenvalue = 1.0;
  double max_trace_drift = 0.0;
};

struct SweepOptions {
  double dt = 0.0;       // integrator step; 0 picks 0.1 / fastest rate
  unsigned threads = 0;  // 0 -> hardware concurrency
};

inline std::vector<double> linear_grid(double lo, double hi, int count) {
  if (count < 2) throw std::invalid_argument("tau grid needs at least 2 points");
  std::vector<double> g(count);
  for (int i = 0; i < count; ++i) g[i] = lo + (hi - lo) * i / (count - 1);
  return g;
}

inline unsigned sweep_threads_from_env() {
  if (const char* env = std::getenv("ZENO_OPT_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v > 0) return static_cast<unsigned>(v);
  }
  return 0;
}

namespace detail {

inline MeasurementOutcome finish_outcome(double tau, double s_unopt, double s_opt, double theta,
                                         double phi, const InitialState& initial) {
  MeasurementOutcome o;
  o.tau = tau;
  o.s_unopt = std::clamp(s_unopt, 0.0, 1.0);
  o.s_opt = std::clamp(s_opt, 0.0, 1.0);
  o.opt_theta = theta;
  o.opt_phi = phi;
  // The initial-state projector is always a candidate.
  if (o.s_opt < o.s_unopt) {
    o.s_opt = o.s_unopt;
    o.opt_theta = initial.theta();
    o.opt_phi = initial.phi();
  }
  o.gamma_unopt = decay_rate(o.s_unopt, tau);
  o.gamma_opt = decay_rate(o.s_opt, tau);
  return o;
}

}  // namespace detail

/// Survival of the initial state and of the chosen optimal projector for one
/// frame-removed state at interval tau.
inline MeasurementOutcome measure(const DensityMatrix& rho_tau, double tau, const ModelSpec& model,
                                  const InitialState& initial, const ProjectorChoice& choice) {
  const ComplexVector psi0 = initial.state_vector(model.J);
  const double s_unopt = survival(rho_tau, psi0);
  switch (choice.kind) {
    case ProjectorKind::InitialState:
      return detail::finish_outcome(tau, s_unopt, s_unopt, initial.theta(), initial.phi(), initial);
    case ProjectorKind::OptimalQubit: {
      const auto opt = optimal_qubit(rho_tau, initial.direction);
      const auto [theta, phi] = opt.projector.angles();
      return detail::finish_outcome(tau, s_unopt, opt.s_star, theta, phi, initial);
    }
    case ProjectorKind::OptimalCoherent: {
      const auto opt = optimize_coherent(rho_tau, initial.coherent(model.J), choice.coherent);
      return detail::finish_outcome(tau, s_unopt, opt.s, opt.theta, opt.phi, initial);
    }
  }
  throw std::logic_error("unhandled projector kind");
}

/// Gamma(tau) over a grid. Each interval restarts from the initial state,
/// so a single trajectory up to max(tau) serves every grid point.
inline DecaySweep sweep(const ModelSpec& model, const InitialState& initial,
                        const std::vector<double>& taus, const ProjectorChoice& choice,
                        const SweepOptions& options = {}) {
  model.validate();
  choice.validate_for(model);
  if (taus.empty()) throw std::invalid_argument("empty tau grid");
  for (std::size_t i = 0; i < taus.size(); ++i) {
    if (!(taus[i] > 0.0)) throw std::invalid_argument("tau grid must be positive");
    if (i > 0 && !(taus[i] > taus[i - 1])) throw std::invalid_argument("tau grid must be increasing");
  }

  DecaySweep out;
  out.model = model;
  out.initial = initial;
  out.choice = choice;
  out.outcomes.resize(taus.size());

  const ComplexVector psi0 = initial.state_vector(model.J);
  const DensityMatrix rho0 = DensityMatrix::pure(psi0);
  std::optional<Trajectory> traj;
  if (!model.has_exact_dephasing()) {
    const double dt = options.dt > 0.0 ? options.dt : 0.1 / model.fastest_rate();
    traj = redfield_integrate(model, rho0, taus.back(), dt);
    out.warnings = traj->warnings;
    out.min_eigenvalue = traj->min_eigenvalue;
    out.max_trace_drift = traj->max_trace_drift;
  }

  auto point = [&](std::size_t i) {
    const double tau = taus[i];
    try {
      if (model.kind == ModelKind::PureDephasingQubit) {
        // Closed forms for the survivals; optimal direction from the Bloch map.
        const double g = gamma(model.bath, tau);
        const BlochVector& n0 = initial.direction;
        const BlochVector n{std::exp(-g) * n0.x, std::exp(-g) * n0.y, n0.z};
        const double s_unopt = dephasing_survival_unopt(n0, g);
        if (choice.kind == ProjectorKind::InitialState) {
          return detail::finish_outcome(tau, s_unopt, s_unopt, initial.theta(), initial.phi(), initial);
        }
        const auto [theta, phi] = n.norm() < kDegenerateBlochNorm ? n0.angles() : n.angles();
        return detail::finish_outcome(tau, s_unopt, dephasing_survival_opt(n0, g), theta, phi, initial);
      }
      if (model.kind == ModelKind::LargeSpinDephasing) {
        const auto rho = dephasing_propagate_large_spin(rho0, tau, model.bath, model.J);
        return measure(rho, tau, model, initial, choice);
      }
      return measure(frame_removed_state(model, *traj, tau), tau, model, initial, choice);
    } catch (const NumericalError& e) {
      std::ostringstream msg;
      msg << e.what() << " (sweep point tau = " << tau << ")";
      throw NumericalError(msg.str());
    }
  };

  unsigned threads = options.threads;
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, static_cast<unsigned>(taus.size()));
  if (threads <= 1) {
    for (std::size_t i = 0; i < taus.size(); ++i) out.outcomes[i] = point(i);
    return out;
  }
  std::vector<std::exception_ptr> errors(threads);
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < threads; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < taus.size(); i += threads) out.outcomes[i] = point(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

/// Grid points where the centred difference of Gamma changes sign, i.e.
/// candidate crossovers between Zeno (Gamma rising) and anti-Zeno regimes.
inline std::vector<double> transition_candidates(const std::vector<double>& taus,
                                                 const std::vector<double>& rates) {
  std::vector<double> out;
  if (taus.size() < 4) return out;
  auto slope = [&](std::size_t i) { return (rates[i + 1] - rates[i - 1]) / (taus[i + 1] - taus[i - 1]); };
  double prev = slope(1);
  for (std::size_t i = 2; i + 1 < taus.size(); ++i) {
    const double cur = slope(i);
    if (std::isfinite(prev) && std::isfinite(cur) && ((prev > 0.0) != (cur > 0.0)) && prev != 0.0 &&
        cur != 0.0) {
      out.push_back(taus[i]);
    }
    prev = cur;
  }
  return out;
}

}  // namespace zeno
