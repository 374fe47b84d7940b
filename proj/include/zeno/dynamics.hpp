#pragma once

// Reduced dynamics of a qubit or large spin coupled to a bosonic bath
// through F (x) B with B = sum_k (g_k^* b_k + g_k b_k^dag).
//
// Exact pure-dephasing propagators, plus a time-local second-order
// (Redfield) integrator for the general case:
//
//   d rho/dt = -i [H_S, rho] + [K(t) rho, F] + [F, rho K(t)^dag]
//   K(t)     = int_0^t du C(u) e^{-i H_S u} F e^{i H_S u}

#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "zeno/bath.hpp"
#include "zeno/core.hpp"

namespace zeno {

enum class ModelKind { PopulationDecay, PureDephasingQubit, SpinBoson, LargeSpinDephasing, LargeSpin };

inline std::string_view to_string(ModelKind k) {
  switch (k) {
    case ModelKind::PopulationDecay: return "population_decay";
    case ModelKind::PureDephasingQubit: return "pure_dephasing";
    case ModelKind::SpinBoson: return "spin_boson";
    case ModelKind::LargeSpinDephasing: return "large_spin_dephasing";
    case ModelKind::LargeSpin: return "large_spin";
  }
  return "unknown";
}

inline std::optional<ModelKind> model_kind_from_string(std::string_view s) {
  for (auto k : {ModelKind::PopulationDecay, ModelKind::PureDephasingQubit, ModelKind::SpinBoson,
                 ModelKind::LargeSpinDephasing, ModelKind::LargeSpin}) {
    if (to_string(k) == s) return k;
  }
  return std::nullopt;
}

struct ModelSpec {
  ModelKind kind = ModelKind::PopulationDecay;
  double epsilon = 0.0;
  double delta = 0.0;
  Spin J = Spin::half();
  BathParams bath;

  bool is_qubit_model() const {
    return kind == ModelKind::PopulationDecay || kind == ModelKind::PureDephasingQubit ||
           kind == ModelKind::SpinBoson;
  }
  bool has_exact_dephasing() const {
    return kind == ModelKind::PureDephasingQubit || kind == ModelKind::LargeSpinDephasing;
  }
  int dim() const { return J.dim(); }

  void validate() const {
    bath.validate();
    if (!std::isfinite(epsilon) || !std::isfinite(delta)) {
      throw std::invalid_argument("epsilon and delta must be finite");
    }
    if (is_qubit_model() && J.twice() != 1) {
      throw std::invalid_argument(std::string(to_string(kind)) + " requires J = 1/2");
    }
    const bool tunnelling_allowed = kind == ModelKind::SpinBoson || kind == ModelKind::LargeSpin;
    if (!tunnelling_allowed && delta != 0.0) {
      throw std::invalid_argument(std::string(to_string(kind)) + " requires delta = 0");
    }
  }

  ComplexMatrix hamiltonian() const {
    if (is_qubit_model()) {
      auto [sx, sy, sz] = pauli();
      return 0.5 * epsilon * sz + 0.5 * delta * sx;
    }
    auto [jx, jy, jz] = angular_momentum(J);
    return epsilon * jz + delta * jx;
  }

  ComplexMatrix coupling() const {
    switch (kind) {
      case ModelKind::PopulationDecay: return std::get<0>(pauli());
      case ModelKind::PureDephasingQubit:
      case ModelKind::SpinBoson: return std::get<2>(pauli());
      case ModelKind::LargeSpinDephasing:
      case ModelKind::LargeSpin: return 2.0 * std::get<2>(angular_momentum(J));
    }
    throw std::logic_error("unhandled model kind");
  }

  /// Largest rate the time step has to resolve.
  double fastest_rate() const {
    return std::max({std::abs(epsilon), std::abs(delta), bath.spectral.omega_c});
  }
};

struct Trajectory {
  std::vector<double> times;
  std::vector<DensityMatrix> states;
  bool frame_removed = false;
  double dt = 0.0;
  // diagnostics
  double min_eigenvalue = 1.0;
  double max_trace_drift = 0.0;
  std::vector<std::string> warnings;

  double t_max() const { return times.empty() ? 0.0 : times.back(); }
};

// ---------------------------------------------------------------------------
// Exact pure dephasing

/// Off-diagonals scaled by e^{-gamma}; frame already removed.
inline DensityMatrix dephasing_propagate_qubit(const DensityMatrix& rho0, double gamma_t) {
  if (rho0.dim() != 2) throw std::invalid_argument("qubit propagator needs a 2x2 state");
  ComplexMatrix m = rho0.matrix();
  const double f = std::exp(-gamma_t);
  m(0, 1) *= f;
  m(1, 0) *= f;
  return DensityMatrix::from_dynamics(m);
}

inline DensityMatrix dephasing_propagate_qubit(const DensityMatrix& rho0, double t,
                                               const BathParams& bath) {
  return dephasing_propagate_qubit(rho0, gamma(bath, t));
}

/// [rho]_{mn} -> [rho]_{mn} e^{-i Delta (m^2 - n^2)} e^{-gamma (m - n)^2}.
inline DensityMatrix dephasing_propagate_large_spin(const DensityMatrix& rho0, Spin J,
                                                    double gamma_t, double delta_t) {
  if (rho0.dim() != J.dim()) {
    std::ostringstream msg;
    msg << "large-spin propagator: state dim " << rho0.dim() << " does not match 2J+1 = " << J.dim();
    throw std::invalid_argument(msg.str());
  }
  ComplexMatrix m = rho0.matrix();
  for (int r = 0; r < J.dim(); ++r) {
    const double mr = J.m_of_index(r);
    for (int c = 0; c < J.dim(); ++c) {
      if (r == c) continue;
      const double mc = J.m_of_index(c);
      const double d = mr - mc;
      m(r, c) *= std::polar(std::exp(-gamma_t * d * d), -delta_t * (mr * mr - mc * mc));
    }
  }
  return DensityMatrix::from_dynamics(m);
}

inline DensityMatrix dephasing_propagate_large_spin(const DensityMatrix& rho0, double t,
                                                    const BathParams& bath, Spin J) {
  return dephasing_propagate_large_spin(rho0, J, gamma(bath, t), delta_phase(bath.spectral, t));
}

// ---------------------------------------------------------------------------
// Redfield kernel

/// Cumulative integral of samples g_k = g(k h), fourth order: interior panels
/// use the cubic through the two neighbouring samples on each side.
inline std::vector<Complex> cumulative_integral(const std::vector<Complex>& g, double h) {
  const std::size_t n = g.size();
  std::vector<Complex> out(n, Complex(0.0));
  if (n < 2) return out;
  if (n < 4) {
    for (std::size_t k = 1; k < n; ++k) out[k] = out[k - 1] + 0.5 * h * (g[k - 1] + g[k]);
    return out;
  }
  const double w = h / 24.0;
  for (std::size_t k = 0; k + 1 < n; ++k) {
    Complex panel;
    if (k == 0) {
      panel = w * (9.0 * g[0] + 19.0 * g[1] - 5.0 * g[2] + g[3]);
    } else if (k + 2 == n) {
      panel = w * (g[k - 2] - 5.0 * g[k - 1] + 19.0 * g[k] + 9.0 * g[k + 1]);
    } else {
      panel = w * (-g[k - 1] + 13.0 * g[k] + 13.0 * g[k + 1] - g[k + 2]);
    }
    out[k + 1] = out[k] + panel;
  }
  return out;
}

/// K(t) on the correlation-table grid, built in the eigenbasis of H_S where
/// e^{-iHu} F e^{iHu} has entries F_ab e^{-i (E_a - E_b) u}.
class RedfieldKernel {
 public:
  RedfieldKernel(const ModelSpec& model, const CorrelationTable& table)
      : h_(table.dt()), coupling_(model.coupling()), table_(table) {
    model.validate();
    const HermitianPropagator prop(model.hamiltonian());
    const ComplexMatrix& v = prop.vectors();
    const Eigen::VectorXd& e = prop.energies();
    const ComplexMatrix f_eig = v.adjoint() * coupling_ * v;
    const int d = static_cast<int>(f_eig.rows());
    const std::size_t n = table.size();

    std::vector<ComplexMatrix> eig_kernel(n, ComplexMatrix::Zero(d, d));
    std::vector<Complex> samples(n);
    for (int a = 0; a < d; ++a) {
      for (int b = 0; b < d; ++b) {
        if (std::abs(f_eig(a, b)) < 1e-14) continue;
        const double nu = e(a) - e(b);
        for (std::size_t k = 0; k < n; ++k) {
          samples[k] = table[k] * std::polar(1.0, -nu * table.time(k));
        }
        const auto cum = cumulative_integral(samples, h_);
        for (std::size_t k = 0; k < n; ++k) eig_kernel[k](a, b) = f_eig(a, b) * cum[k];
      }
    }
    kernel_.reserve(n);
    for (std::size_t k = 0; k < n; ++k) kernel_.push_back(v * eig_kernel[k] * v.adjoint());
    eigvals_ = e;
    eigvecs_ = v;
    f_eig_ = f_eig;
  }

  double spacing() const { return h_; }
  std::size_t size() const { return kernel_.size(); }
  double t_max() const { return h_ * static_cast<double>(kernel_.size() - 1); }
  const ComplexMatrix& at_index(std::size_t k) const { return kernel_.at(k); }
  const ComplexMatrix& coupling() const { return coupling_; }

  /// K at an arbitrary time inside the table: grid value plus the partial
  /// panel integrated with 3-point Gauss-Legendre on the local cubic.
  ComplexMatrix at(double t) const {
    if (!(t >= 0.0) || t > t_max() * (1.0 + 1e-12)) {
      std::ostringstream msg;
      msg << "kernel time " << t << " outside table range [0, " << t_max() << "]";
      throw std::out_of_range(msg.str());
    }
    const double pos = t / h_;
    auto k = static_cast<std::size_t>(std::floor(pos + 1e-9));
    if (k >= kernel_.size() - 1 || std::abs(pos - std::round(pos)) < 1e-9) {
      return kernel_[std::min<std::size_t>(static_cast<std::size_t>(std::llround(pos)),
                                           kernel_.size() - 1)];
    }
    const std::size_t n = table_.size();
    // Four interpolation nodes around [k, k+1], clamped to the table.
    std::size_t first = k == 0 ? 0 : k - 1;
    if (first + 3 >= n) first = n >= 4 ? n - 4 : 0;
    const double lo = table_.time(k);
    const double len = t - lo;
    static constexpr double kNodes[] = {-0.7745966692414834, 0.0, 0.7745966692414834};
    static constexpr double kWeights[] = {5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};
    const int d = static_cast<int>(f_eig_.rows());
    ComplexMatrix partial = ComplexMatrix::Zero(d, d);
    for (int q = 0; q < 3; ++q) {
      const double u = lo + 0.5 * len * (kNodes[q] + 1.0);
      const Complex c = lagrange(first, std::min<std::size_t>(4, n - first), u);
      for (int a = 0; a < d; ++a) {
        for (int b = 0; b < d; ++b) {
          const double nu = eigvals_(a) - eigvals_(b);
          partial(a, b) += 0.5 * len * kWeights[q] * c * std::polar(1.0, -nu * u) * f_eig_(a, b);
        }
      }
    }
    return kernel_[k] + eigvecs_ * partial * eigvecs_.adjoint();
  }

 private:
  Complex lagrange(std::size_t first, std::size_t count, double u) const {
    Complex acc(0.0);
    for (std::size_t i = 0; i < count; ++i) {
      double w = 1.0;
      const double ti = table_.time(first + i);
      for (std::size_t j = 0; j < count; ++j) {
        if (j == i) continue;
        const double tj = table_.time(first + j);
        w *= (u - tj) / (ti - tj);
      }
      acc += w * table_[first + i];
    }
    return acc;
  }

  double h_;
  ComplexMatrix coupling_;
  CorrelationTable table_;
  std::vector<ComplexMatrix> kernel_;
  Eigen::VectorXd eigvals_;
  ComplexMatrix eigvecs_;
  ComplexMatrix f_eig_;
};

inline ComplexMatrix redfield_kernel(const ModelSpec& model, const CorrelationTable& table, double t) {
  return RedfieldKernel(model, table).at(t);
}

// ---------------------------------------------------------------------------
// Integrator

inline void check_step_size(const ModelSpec& model, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("time step dt must be > 0");
  const double rate = model.fastest_rate();
  if (dt * rate >= 0.5) {
    std::ostringstream msg;
    msg << "time step dt = " << dt << " does not resolve max(epsilon, delta, omega_c) = " << rate
        << "; need dt * rate < 0.5, e.g. dt = " << 0.1 / rate;
    throw std::invalid_argument(msg.str());
  }
}

namespace detail {

inline ComplexMatrix redfield_rhs(const ComplexMatrix& h, const ComplexMatrix& f,
                                  const ComplexMatrix& k, const ComplexMatrix& rho) {
  const ComplexMatrix k_rho = k * rho;
  const ComplexMatrix rho_kdag = rho * k.adjoint();
  return -kI * (h * rho - rho * h) + (k_rho * f - f * k_rho) + (f * rho_kdag - rho_kdag * f);
}

}  // namespace detail

/// Fixed-step RK4 in the lab frame; states stored at every step.
inline Trajectory redfield_integrate(const ModelSpec& model, const DensityMatrix& rho0, double t_max,
                                     double dt) {
  model.validate();
  check_step_size(model, dt);
  if (rho0.dim() != model.dim()) throw std::invalid_argument("initial state dimension mismatch");
  if (!(t_max >= dt)) throw std::invalid_argument("integration span t_max must be >= dt");

  const auto steps = static_cast<std::size_t>(std::ceil(t_max / dt - 1e-9));
  const CorrelationTable table = tabulate_correlation(model.bath, dt * static_cast<double>(steps), 0.5 * dt);
  const RedfieldKernel kernel(model, table);
  const ComplexMatrix h = model.hamiltonian();
  const ComplexMatrix& f = kernel.coupling();

  Trajectory traj;
  traj.dt = dt;
  traj.times.reserve(steps + 1);
  traj.states.reserve(steps + 1);
  traj.times.push_back(0.0);
  traj.states.push_back(rho0);
  traj.min_eigenvalue = rho0.min_eigenvalue();

  ComplexMatrix rho = rho0.matrix();
  for (std::size_t n = 0; n < steps; ++n) {
    const ComplexMatrix& k0 = kernel.at_index(2 * n);
    const ComplexMatrix& k_half = kernel.at_index(2 * n + 1);
    const ComplexMatrix& k1 = kernel.at_index(2 * n + 2);
    const ComplexMatrix r1 = detail::redfield_rhs(h, f, k0, rho);
    const ComplexMatrix r2 = detail::redfield_rhs(h, f, k_half, rho + 0.5 * dt * r1);
    const ComplexMatrix r3 = detail::redfield_rhs(h, f, k_half, rho + 0.5 * dt * r2);
    const ComplexMatrix r4 = detail::redfield_rhs(h, f, k1, rho + dt * r3);
    rho += (dt / 6.0) * (r1 + 2.0 * r2 + 2.0 * r3 + r4);
    rho = hermitian_part(rho);

    const double drift = std::abs(rho.trace() - Complex(1.0));
    traj.max_trace_drift = std::max(traj.max_trace_drift, drift);
    if (!std::isfinite(drift) || drift > kStructuralTol) {
      std::ostringstream msg;
      msg << "Redfield integration lost trace normalisation at t = " << dt * (n + 1)
          << " (drift " << drift << ")";
      throw NumericalError(msg.str());
    }
    traj.times.push_back(dt * static_cast<double>(n + 1));
    traj.states.push_back(DensityMatrix::from_dynamics(rho));
    traj.min_eigenvalue = std::min(traj.min_eigenvalue, traj.states.back().min_eigenvalue());
  }
  if (traj.min_eigenvalue < -kPositivityWarnTol) {
    std::ostringstream msg;
    msg << "positivity breach: min eigenvalue " << traj.min_eigenvalue << " (model "
        << to_string(model.kind) << ", G = " << model.bath.spectral.G << ", dt = " << dt << ")";
    traj.warnings.push_back(msg.str());
  }
  return traj;
}

/// State at tau with the free evolution removed: e^{iH tau} rho(tau) e^{-iH tau}.
/// Off-grid times interpolate linearly between the frame-removed neighbours,
/// which vary only on the dissipative time scale.
inline DensityMatrix frame_removed_state(const ModelSpec& model, const Trajectory& traj, double tau) {
  if (traj.times.empty()) throw std::invalid_argument("empty trajectory");
  if (!(tau >= 0.0) || tau > traj.t_max() * (1.0 + 1e-12)) {
    std::ostringstream msg;
    msg << "tau = " << tau << " outside trajectory range [0, " << traj.t_max() << "]";
    throw std::out_of_range(msg.str());
  }
  const auto it = std::upper_bound(traj.times.begin(), traj.times.end(), tau);
  std::size_t hi = static_cast<std::size_t>(it - traj.times.begin());
  if (hi >= traj.times.size()) hi = traj.times.size() - 1;
  const std::size_t lo = hi == 0 ? 0 : hi - 1;

  const HermitianPropagator prop(model.hamiltonian());
  const auto removed = [&](std::size_t k) -> ComplexMatrix {
    if (traj.frame_removed) return traj.states[k].matrix();
    return prop.conjugate(traj.states[k].matrix(), -traj.times[k]);
  };

  ComplexMatrix m;
  if (lo == hi || traj.times[hi] == traj.times[lo]) {
    m = removed(lo);
  } else {
    const double w = (tau - traj.times[lo]) / (traj.times[hi] - traj.times[lo]);
    m = (1.0 - w) * removed(lo) + w * removed(hi);
  }
  return DensityMatrix::from_dynamics(hermitian_part(m));
}

}  // namespace zeno
