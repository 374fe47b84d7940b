#pragma once

// Dense complex linear algebra for small systems: Pauli and spin
// operators, qubit Bloch vectors, SU(2) coherent states, unitary
// conjugation.
//
// Basis conventions:
//   qubit       (|up_z>, |down_z>)
//   spin J      m = J, J-1, ..., -J   (index i <-> m = J - i)

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <tuple>
#include <utility>

#include "zeno/tolerances.hpp"

namespace zeno {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;

inline constexpr Complex kI{0.0, 1.0};

/// Spin quantum number stored as 2J so half-integers are exact.
class Spin {
 public:
  static Spin from_value(double j) {
    const double twice = 2.0 * j;
    const double rounded = std::round(twice);
    if (!(j > 0.0) || std::abs(twice - rounded) > 1e-12) {
      std::ostringstream msg;
      msg << "spin J must be a positive half-integer, got " << j;
      throw std::invalid_argument(msg.str());
    }
    return Spin(static_cast<int>(rounded));
  }
  static Spin half() { return Spin(1); }

  int twice() const { return twice_; }
  double value() const { return 0.5 * twice_; }
  int dim() const { return twice_ + 1; }
  double m_of_index(int i) const { return value() - i; }

  friend bool operator==(Spin, Spin) = default;

 private:
  explicit Spin(int twice) : twice_(twice) {}
  int twice_;
};

inline double hermiticity_residual(const ComplexMatrix& m) {
  return (m - m.adjoint()).cwiseAbs().maxCoeff();
}

inline ComplexMatrix hermitian_part(const ComplexMatrix& m) {
  return 0.5 * (m + m.adjoint());
}

inline double max_abs_diff(const ComplexMatrix& a, const ComplexMatrix& b) {
  return (a - b).cwiseAbs().maxCoeff();
}

/// Hermitian, unit-trace matrix. The public constructor also enforces
/// positivity; `from_dynamics` skips that check for integrator output,
/// whose positivity is tracked as a diagnostic.
class DensityMatrix {
 public:
  explicit DensityMatrix(ComplexMatrix m) : m_(std::move(m)) {
    check_structure();
    if (min_eigenvalue() < -kStructuralTol) {
      throw std::invalid_argument("density matrix has a negative eigenvalue");
    }
  }

  static DensityMatrix from_dynamics(ComplexMatrix m) {
    DensityMatrix rho;
    rho.m_ = std::move(m);
    rho.check_structure();
    return rho;
  }

  static DensityMatrix pure(const ComplexVector& psi) {
    const double norm = psi.norm();
    if (std::abs(norm - 1.0) > kStructuralTol) {
      throw std::invalid_argument("pure state vector must have unit norm");
    }
    return DensityMatrix(psi * psi.adjoint());
  }

  static DensityMatrix maximally_mixed(int dim) {
    return DensityMatrix(ComplexMatrix::Identity(dim, dim) / static_cast<double>(dim));
  }

  const ComplexMatrix& matrix() const { return m_; }
  int dim() const { return static_cast<int>(m_.rows()); }
  Complex operator()(int r, int c) const { return m_(r, c); }

  double min_eigenvalue() const {
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(hermitian_part(m_), Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
  }

  Eigen::VectorXd eigenvalues() const {
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(hermitian_part(m_), Eigen::EigenvaluesOnly);
    return es.eigenvalues();
  }

 private:
  DensityMatrix() = default;

  void check_structure() const {
    if (m_.rows() < 1 || m_.rows() != m_.cols()) {
      throw std::invalid_argument("density matrix must be square with dim >= 1");
    }
    if (hermiticity_residual(m_) > kStructuralTol) {
      throw std::invalid_argument("density matrix is not Hermitian");
    }
    if (std::abs(m_.trace() - Complex(1.0)) > kStructuralTol) {
      throw std::invalid_argument("density matrix trace differs from 1");
    }
  }

  ComplexMatrix m_;
};

struct BlochVector {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  double norm() const { return std::sqrt(x * x + y * y + z * z); }
  double dot(const BlochVector& o) const { return x * o.x + y * o.y + z * o.z; }
  BlochVector scaled(double a) const { return {a * x, a * y, a * z}; }

  BlochVector normalized() const {
    const double n = norm();
    if (n < kDegenerateBlochNorm) {
      throw std::invalid_argument("cannot normalize a zero Bloch vector");
    }
    return scaled(1.0 / n);
  }

  static BlochVector from_angles(double theta, double phi) {
    return {std::sin(theta) * std::cos(phi), std::sin(theta) * std::sin(phi), std::cos(theta)};
  }

  /// Polar angle in [0, pi] and azimuth in [0, 2pi) of the direction.
  std::pair<double, double> angles() const {
    const double n = norm();
    if (n < kDegenerateBlochNorm) return {0.0, 0.0};
    const double theta = std::atan2(std::hypot(x, y), z);  // accurate near the poles
    double phi = std::atan2(y, x);
    if (phi < 0.0) phi += 2.0 * std::numbers::pi;
    if (phi >= 2.0 * std::numbers::pi) phi = 0.0;
    return {theta, phi};
  }
};

struct CoherentStateSpec {
  Spin J = Spin::half();
  double theta = 0.0;
  double phi = 0.0;

  void validate() const {
    if (!(theta >= 0.0 && theta <= std::numbers::pi)) {
      throw std::invalid_argument("coherent state theta must lie in [0, pi]");
    }
    if (!std::isfinite(phi)) {
      throw std::invalid_argument("coherent state phi must be finite");
    }
  }
};

/// sigma_x, sigma_y, sigma_z in the (|up_z>, |down_z>) basis.
inline std::tuple<ComplexMatrix, ComplexMatrix, ComplexMatrix> pauli() {
  ComplexMatrix sx(2, 2), sy(2, 2), sz(2, 2);
  sx << 0.0, 1.0, 1.0, 0.0;
  sy << 0.0, -kI, kI, 0.0;
  sz << 1.0, 0.0, 0.0, -1.0;
  return {sx, sy, sz};
}

/// (Jx, Jy, Jz) in the Jz eigenbasis ordered m = J ... -J.
inline std::tuple<ComplexMatrix, ComplexMatrix, ComplexMatrix> angular_momentum(Spin spin) {
  const int d = spin.dim();
  const double j = spin.value();
  ComplexMatrix jplus = ComplexMatrix::Zero(d, d);
  ComplexMatrix jz = ComplexMatrix::Zero(d, d);
  for (int i = 0; i < d; ++i) {
    const double m = spin.m_of_index(i);
    jz(i, i) = m;
    if (i > 0) {
      // J+ |m> = sqrt(j(j+1) - m(m+1)) |m+1>, and |m+1> sits at index i-1.
      jplus(i - 1, i) = std::sqrt(j * (j + 1.0) - m * (m + 1.0));
    }
  }
  const ComplexMatrix jminus = jplus.adjoint();
  ComplexMatrix jx = 0.5 * (jplus + jminus);
  ComplexMatrix jy = (jplus - jminus) / (2.0 * kI);
  return {jx, jy, jz};
}

inline std::tuple<ComplexMatrix, ComplexMatrix, ComplexMatrix> angular_momentum(double j) {
  return angular_momentum(Spin::from_value(j));
}

inline BlochVector bloch_from_density(const DensityMatrix& rho) {
  if (rho.dim() != 2) {
    throw std::invalid_argument("Bloch vector requires a 2x2 density matrix");
  }
  const auto& m = rho.matrix();
  // n_i = Tr(sigma_i rho)
  return {2.0 * m(1, 0).real(), 2.0 * m(1, 0).imag(), (m(0, 0) - m(1, 1)).real()};
}

inline DensityMatrix density_from_bloch(const BlochVector& n) {
  if (n.norm() > 1.0 + kStructuralTol) {
    throw std::invalid_argument("Bloch vector norm exceeds 1");
  }
  ComplexMatrix m(2, 2);
  m << 0.5 * (1.0 + n.z), 0.5 * Complex(n.x, -n.y), 0.5 * Complex(n.x, n.y), 0.5 * (1.0 - n.z);
  return DensityMatrix(m);
}

/// Spin coherent state pointing along (theta, phi). Amplitude on |J, m>:
///   sqrt(C(2J, J-m)) cos^{J+m}(theta/2) sin^{J-m}(theta/2) e^{i (J-m) phi}
/// which is the zeta = e^{i phi} tan(theta/2) expansion written in
/// half-angle form, so theta = pi needs no special branch.
inline ComplexVector coherent_state(const CoherentStateSpec& spec) {
  spec.validate();
  const int twice_j = spec.J.twice();
  const int d = spec.J.dim();
  const double c = std::cos(0.5 * spec.theta);
  const double s = std::sin(0.5 * spec.theta);
  ComplexVector psi(d);
  for (int i = 0; i < d; ++i) {
    // i = J - m, so J + m = 2J - i.
    const int down = i;
    const int up = twice_j - i;
    const double log_binom =
        std::lgamma(twice_j + 1.0) - std::lgamma(up + 1.0) - std::lgamma(down + 1.0);
    const double mag = std::exp(0.5 * log_binom) * std::pow(c, up) * std::pow(s, down);
    psi(i) = mag * std::polar(1.0, down * spec.phi);
  }
  return psi / psi.norm();
}

/// Eigendecomposition of a Hermitian generator, reused for repeated
/// propagation at different times.
class HermitianPropagator {
 public:
  explicit HermitianPropagator(const ComplexMatrix& h) {
    if (h.rows() != h.cols()) throw std::invalid_argument("Hamiltonian must be square");
    if (hermiticity_residual(h) > kStructuralTol) {
      throw std::invalid_argument("Hamiltonian is not Hermitian");
    }
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(hermitian_part(h));
    energies_ = es.eigenvalues();
    vectors_ = es.eigenvectors();
  }

  /// exp(-i H t)
  ComplexMatrix unitary(double t) const {
    ComplexVector phases(energies_.size());
    for (Eigen::Index k = 0; k < energies_.size(); ++k) {
      phases(k) = std::polar(1.0, -energies_(k) * t);
    }
    return vectors_ * phases.asDiagonal() * vectors_.adjoint();
  }

  /// exp(-iHt) rho exp(+iHt)
  ComplexMatrix conjugate(const ComplexMatrix& rho, double t) const {
    const ComplexMatrix u = unitary(t);
    return u * rho * u.adjoint();
  }

  const Eigen::VectorXd& energies() const { return energies_; }
  const ComplexMatrix& vectors() const { return vectors_; }

 private:
  Eigen::VectorXd energies_;
  ComplexMatrix vectors_;
};

/// rho -> exp(-iHt) rho exp(iHt). Passing -t removes free evolution over t.
inline DensityMatrix evolve_unitary(const DensityMatrix& rho, const ComplexMatrix& h, double t) {
  if (h.rows() != rho.dim()) throw std::invalid_argument("Hamiltonian dimension mismatch");
  const HermitianPropagator prop(h);
  return DensityMatrix::from_dynamics(hermitian_part(prop.conjugate(rho.matrix(), t)));
}

}  // namespace zeno
