#pragma once

// Bosonic bath with spectral density J(w) = G w^s wc^{1-s} e^{-w/wc}.
//
// Bath sums over modes are taken in the continuum limit,
//   sum_k |g_k|^2 f(w_k)  ->  int_0^inf dw J(w) f(w),
// giving
//   C(t)     = int J(w) [coth(beta w/2) cos(wt) - i sin(wt)] dw
//   gamma(t) = 4 int J(w) (1 - cos wt)/w^2 coth(beta w/2) dw
//   Delta(t) = 4 int J(w) (sin wt - wt)/w^2 dw

#include <boost/math/special_functions/gamma.hpp>

#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "zeno/quadrature.hpp"
#include "zeno/tolerances.hpp"

namespace zeno {

using Complex = std::complex<double>;

struct SpectralDensity {
  double G = 0.0;
  double s = 1.0;
  double omega_c = 1.0;

  void validate() const {
    if (!(G >= 0.0) || !std::isfinite(G)) throw std::invalid_argument("G must be >= 0");
    if (!(s > 0.0) || !std::isfinite(s)) throw std::invalid_argument("ohmicity s must be > 0");
    if (!(omega_c > 0.0) || !std::isfinite(omega_c)) {
      throw std::invalid_argument("omega_c must be > 0");
    }
  }

  // G wc^{1-s}
  double prefactor() const { return G * std::pow(omega_c, 1.0 - s); }
};

struct BathParams {
  SpectralDensity spectral;
  double beta = 1.0;

  void validate() const {
    spectral.validate();
    if (!(beta > 0.0) || !std::isfinite(beta)) throw std::invalid_argument("beta must be > 0");
  }
};

inline double spectral_density(const SpectralDensity& sd, double omega) {
  sd.validate();
  if (omega < 0.0) throw std::invalid_argument("spectral density needs omega >= 0");
  if (omega == 0.0) return 0.0;
  return sd.prefactor() * std::pow(omega, sd.s) * std::exp(-omega / sd.omega_c);
}

namespace detail {

inline constexpr int kSeriesOrder = 14;
inline constexpr double kUpperCutoffFactor = 50.0;

inline quad::Series exp_series(double rate) {
  quad::Series c(kSeriesOrder + 1);
  double term = 1.0;
  for (int k = 0; k <= kSeriesOrder; ++k) {
    c[k] = term;
    term *= -rate / (k + 1);
  }
  return c;
}

// x coth x with x = beta w / 2, expanded in w.
inline quad::Series xcoth_series(double beta) {
  // 2^{2n} B_{2n} / (2n)!
  static constexpr double kCoeff[] = {1.0,
                                      1.0 / 3.0,
                                      -1.0 / 45.0,
                                      2.0 / 945.0,
                                      -1.0 / 4725.0,
                                      2.0 / 93555.0,
                                      -1382.0 / 638512875.0,
                                      4.0 / 18243225.0};
  quad::Series c(kSeriesOrder + 1, 0.0);
  const double half_beta_sq = 0.25 * beta * beta;
  double scale = 1.0;
  for (int n = 0; 2 * n <= kSeriesOrder; ++n) {
    c[2 * n] = kCoeff[n] * scale;
    scale *= half_beta_sq;
  }
  return c;
}

inline quad::Series cos_series(double t) {
  quad::Series c(kSeriesOrder + 1, 0.0);
  double term = 1.0;
  for (int j = 0; 2 * j <= kSeriesOrder; ++j) {
    c[2 * j] = term;
    term *= -t * t / ((2 * j + 1) * (2 * j + 2));
  }
  return c;
}

// (1 - cos wt) / w^2
inline quad::Series one_minus_cos_over_sq_series(double t) {
  quad::Series c(kSeriesOrder + 1, 0.0);
  double term = t * t / 2.0;
  for (int j = 1; 2 * j - 2 <= kSeriesOrder; ++j) {
    c[2 * j - 2] = term;
    term *= -t * t / ((2 * j + 1) * (2 * j + 2));
  }
  return c;
}

inline double coth(double x) { return 1.0 / std::tanh(x); }

inline quad::Layout layout_for(const SpectralDensity& sd, double t, double start) {
  const double wc = sd.omega_c;
  const double width = t > 0.0 ? std::min(std::numbers::pi / t, wc) : wc;
  return {start, width, width, kUpperCutoffFactor * wc, t};
}

// Bound on the discarded tail int_U^inf J(w) |w(w)| dw given max |weight| beyond U.
inline double tail_bound(const SpectralDensity& sd, double weight_max) {
  const double wc = sd.omega_c;
  return sd.G * wc * wc * boost::math::tgamma(sd.s + 1.0, kUpperCutoffFactor) * weight_max;
}

inline double origin_eps(const SpectralDensity& sd, double beta, double t) {
  double eps = std::min(0.05 * sd.omega_c, 0.1 / beta);
  if (t > 0.0) eps = std::min(eps, 0.1 / t);
  return eps;
}

// Integrals whose weight carries coth(beta w / 2): split off [0, eps].
template <class Weight>
quad::Result coth_weighted(const BathParams& bath, double t, double amplitude,
                           const quad::Series& weight_over_coth_series, Weight&& weight,
                           double tail_weight_max) {
  const auto& sd = bath.spectral;
  const double eps = origin_eps(sd, bath.beta, t);
  quad::OriginSeries origin;
  origin.eps = eps;
  origin.power = sd.s - 1.0;
  origin.scale = amplitude * sd.prefactor() * 2.0 / bath.beta;
  origin.coeffs = quad::series_multiply(
      quad::series_multiply(exp_series(1.0 / sd.omega_c), xcoth_series(bath.beta), kSeriesOrder),
      weight_over_coth_series, kSeriesOrder);

  auto f = [&](double w) {
    return amplitude * sd.prefactor() * std::pow(w, sd.s) * std::exp(-w / sd.omega_c) *
           coth(0.5 * bath.beta * w) * weight(w);
  };
  auto r = quad::integrate_panels(f, layout_for(sd, t, eps));
  r.value += origin.integral();
  r.error += tail_bound(sd, amplitude * tail_weight_max);
  return r;
}

template <class Weight>
quad::Result plain_weighted(const SpectralDensity& sd, double t, double amplitude, Weight&& weight,
                            double tail_weight_max) {
  auto f = [&](double w) {
    return amplitude * sd.prefactor() * std::pow(w, sd.s) * std::exp(-w / sd.omega_c) * weight(w);
  };
  auto r = quad::integrate_panels(f, layout_for(sd, t, 0.0));
  r.error += tail_bound(sd, amplitude * tail_weight_max);
  return r;
}

inline void require_time(double t, const char* what) {
  if (!(t >= 0.0) || !std::isfinite(t)) {
    std::ostringstream msg;
    msg << what << " requires t >= 0, got " << t;
    throw std::invalid_argument(msg.str());
  }
}

}  // namespace detail

/// Bath correlation function C(t) = <B(t) B(0)> by adaptive quadrature.
inline Complex correlation(const BathParams& bath, double t) {
  bath.validate();
  detail::require_time(t, "correlation");
  if (bath.spectral.G == 0.0) return {0.0, 0.0};
  const double upper = detail::kUpperCutoffFactor * bath.spectral.omega_c;
  const double coth_upper = detail::coth(0.5 * bath.beta * upper);
  auto re = detail::coth_weighted(bath, t, 1.0, detail::cos_series(t),
                                  [t](double w) { return std::cos(w * t); }, coth_upper);
  quad::require_converged(re, "Re C", t);
  if (t == 0.0) return {re.value, 0.0};
  auto im = detail::plain_weighted(bath.spectral, t, -1.0,
                                   [t](double w) { return std::sin(w * t); }, 1.0);
  quad::require_converged(im, "Im C", t);
  return {re.value, im.value};
}

/// Dephasing exponent gamma(t).
inline double gamma(const BathParams& bath, double t) {
  bath.validate();
  detail::require_time(t, "gamma");
  if (t == 0.0 || bath.spectral.G == 0.0) return 0.0;
  const double upper = detail::kUpperCutoffFactor * bath.spectral.omega_c;
  const double tail_w = 2.0 / (upper * upper) * detail::coth(0.5 * bath.beta * upper);
  auto r = detail::coth_weighted(
      bath, t, 4.0, detail::one_minus_cos_over_sq_series(t),
      [t](double w) {
        // 1 - cos(wt) = 2 sin^2(wt/2) avoids cancellation at small wt.
        const double h = std::sin(0.5 * w * t);
        return 2.0 * h * h / (w * w);
      },
      tail_w);
  quad::require_converged(r, "gamma", t);
  return r.value;
}

/// Bath-induced phase Delta(t); temperature independent.
inline double delta_phase(const SpectralDensity& sd, double t) {
  sd.validate();
  detail::require_time(t, "delta_phase");
  if (t == 0.0 || sd.G == 0.0) return 0.0;
  const double upper = detail::kUpperCutoffFactor * sd.omega_c;
  auto r = detail::plain_weighted(
      sd, t, 4.0,
      [t](double w) {
        const double x = w * t;
        // sin x - x, via series where the subtraction would cancel.
        double num;
        if (x < 1e-2) {
          const double x2 = x * x;
          num = -x * x2 / 6.0 * (1.0 - x2 / 20.0 * (1.0 - x2 / 42.0 * (1.0 - x2 / 72.0)));
        } else {
          num = std::sin(x) - x;
        }
        return num / (w * w);
      },
      (1.0 + upper * t) / (upper * upper));
  quad::require_converged(r, "Delta", t);
  return r.value;
}

/// C(t) from the expansion coth(x) = 1 + 2 sum_n e^{-2nx}, summed exactly
/// for n < N with an Euler-Maclaurin tail:
///   C(t) = G wc^{1-s} Gamma(s+1) [ (a+it)^{-(s+1)}
///          + sum_{n>=1} 2 Re (a + n beta + it)^{-(s+1)} ],   a = 1/wc.
/// Used to fill correlation tables; agrees with `correlation` to quadrature
/// accuracy.
inline Complex correlation_series(const BathParams& bath, double t) {
  bath.validate();
  detail::require_time(t, "correlation_series");
  const auto& sd = bath.spectral;
  if (sd.G == 0.0) return {0.0, 0.0};
  const double s1 = sd.s + 1.0;
  const double beta = bath.beta;
  const Complex c(1.0 / sd.omega_c, t);
  const Complex vacuum = std::pow(c, -s1);

  constexpr int kDirect = 40;
  double thermal = 0.0;
  for (int n = 1; n < kDirect; ++n) {
    thermal += 2.0 * std::pow(c + static_cast<double>(n) * beta, -s1).real();
  }
  // Euler-Maclaurin for sum_{n >= N} f(n), f(n) = 2 Re (c + n beta)^{-(s+1)}.
  const Complex zN = c + static_cast<double>(kDirect) * beta;
  const Complex p0 = std::pow(zN, -s1);
  const Complex integral = std::pow(zN, -sd.s) / (sd.s * beta);
  const Complex d1 = -s1 * beta * p0 / zN;
  const Complex d3 = -s1 * (s1 + 1.0) * (s1 + 2.0) * beta * beta * beta * p0 / (zN * zN * zN);
  const Complex d5 = -s1 * (s1 + 1.0) * (s1 + 2.0) * (s1 + 3.0) * (s1 + 4.0) * std::pow(beta, 5) *
                     p0 / std::pow(zN, 5);
  const Complex tail = integral + 0.5 * p0 - d1 / 12.0 + d3 / 720.0 - d5 / 30240.0;
  thermal += 2.0 * tail.real();

  const double amp = sd.prefactor() * std::tgamma(s1);
  const Complex value = amp * (vacuum + thermal);
  if (!std::isfinite(value.real()) || !std::isfinite(value.imag())) {
    std::ostringstream msg;
    msg << "correlation series produced a non-finite value at t = " << t;
    throw NumericalError(msg.str());
  }
  return value;
}

/// C(t) sampled on t_k = k dt, k = 0..N with N dt >= t_max.
class CorrelationTable {
 public:
  CorrelationTable(double dt, std::vector<Complex> values) : dt_(dt), values_(std::move(values)) {
    if (!(dt_ > 0.0) || values_.size() < 2) {
      throw std::invalid_argument("correlation table needs dt > 0 and at least 2 points");
    }
  }

  double dt() const { return dt_; }
  std::size_t size() const { return values_.size(); }
  double t_max() const { return dt_ * static_cast<double>(values_.size() - 1); }
  double time(std::size_t k) const { return dt_ * static_cast<double>(k); }
  const Complex& operator[](std::size_t k) const { return values_[k]; }
  const std::vector<Complex>& values() const { return values_; }

 private:
  double dt_;
  std::vector<Complex> values_;
};

inline CorrelationTable tabulate_correlation(const BathParams& bath, double t_max, double dt) {
  bath.validate();
  if (!(dt > 0.0)) throw std::invalid_argument("table spacing dt must be > 0");
  if (!(t_max >= dt)) throw std::invalid_argument("table t_max must be >= dt");
  const auto steps = static_cast<std::size_t>(std::ceil(t_max / dt - 1e-9));
  std::vector<Complex> values(steps + 1);
  for (std::size_t k = 0; k <= steps; ++k) {
    values[k] = correlation_series(bath, dt * static_cast<double>(k));
  }
  return CorrelationTable(dt, std::move(values));
}

/// Closed forms for the Ohmic (s = 1) bath at zero temperature. Delta(t)
/// carries no temperature dependence, so its form is exact at any beta.
namespace ohmic {

inline double gamma_zero_temperature(double G, double omega_c, double t) {
  return 2.0 * G * std::log1p(omega_c * omega_c * t * t);
}

inline double delta_phase(double G, double omega_c, double t) {
  return 4.0 * G * (std::atan(omega_c * t) - omega_c * t);
}

inline Complex correlation_zero_temperature(double G, double omega_c, double t) {
  const Complex d(1.0 / omega_c, t);
  return G / (d * d);
}

}  // namespace ohmic

}  // namespace zeno
