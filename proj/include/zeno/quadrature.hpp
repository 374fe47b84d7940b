#pragma once

// Piecewise adaptive integration over [0, omega_max] for bath integrands.
//
// The range is split into
//   [0, eps]          integrated term by term from a power series
//                     omega^p * sum_k c_k omega^k  (handles the coth pole),
//   [eps, w1]         geometric breakpoints (integrable omega^{s-1} shapes),
//   [w1, omega_max]   uniform panels no wider than half an oscillation period.
// Each panel is integrated by adaptive 31-point Gauss-Kronrod.

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <vector>

#include "zeno/tolerances.hpp"

namespace zeno::quad {

inline constexpr double kRelTarget = 1e-9;
inline constexpr double kAbsFloor = 1e-12;

struct Result {
  double value = 0.0;
  double error = 0.0;  // estimated absolute error, including truncation bound
  double l1 = 0.0;     // integral of |f|, the cancellation scale
  double floor = 0.0;  // attainable accuracy given rounding in f
  int panels = 0;
};

/// Coefficients of a truncated power series in omega.
using Series = std::vector<double>;

inline Series series_multiply(const Series& a, const Series& b, std::size_t order) {
  Series out(order + 1, 0.0);
  for (std::size_t i = 0; i < a.size() && i <= order; ++i) {
    for (std::size_t j = 0; j < b.size() && i + j <= order; ++j) {
      out[i + j] += a[i] * b[j];
    }
  }
  return out;
}

/// Near-origin description: f(omega) = scale * omega^power * sum_k coeffs[k] omega^k
/// for omega in [0, eps].
struct OriginSeries {
  double eps = 0.0;
  double power = 0.0;
  double scale = 1.0;
  Series coeffs;

  double integral() const {
    double acc = 0.0;
    for (std::size_t k = 0; k < coeffs.size(); ++k) {
      const double q = power + static_cast<double>(k) + 1.0;
      acc += coeffs[k] * std::pow(eps, q) / q;
    }
    return scale * acc;
  }
};

struct Layout {
  double start = 0.0;       // lower limit of the numerical part
  double geometric_end = 0.0;
  double panel_width = 0.0;
  double upper = 0.0;
  // Oscillation rate t in cos(w t): evaluating the phase at w loses
  // about w t ulps, which bounds the attainable accuracy.
  double phase_rate = 0.0;
};

/// Recursive bisection on one panel. Stops when the Kronrod-Gauss
/// difference is below the panel tolerance or at rounding level of |f|.
template <class F>
double adaptive_gk(F& f, double a, double b, double phase_rate, int depth, Result* acc) {
  using GK = boost::math::quadrature::gauss_kronrod<double, 31>;
  double e = 0.0;
  double l = 0.0;
  const double v = GK::integrate(f, a, b, 0, 0.0, &e, &l);
  const double rounding =
      256.0 * std::numeric_limits<double>::epsilon() * l * (1.0 + std::abs(b) * phase_rate);
  if (e <= std::max(1e-12 * l, rounding) || depth == 0) {
    acc->error += e;
    acc->l1 += l;
    acc->floor += rounding;
    return v;
  }
  const double mid = 0.5 * (a + b);
  return adaptive_gk(f, a, mid, phase_rate, depth - 1, acc) +
         adaptive_gk(f, mid, b, phase_rate, depth - 1, acc);
}

template <class F>
Result integrate_panels(F&& f, const Layout& layout) {
  std::vector<double> cuts;
  cuts.push_back(layout.start);
  if (layout.start > 0.0) {
    for (double b = layout.start * 4.0; b < layout.geometric_end; b *= 4.0) cuts.push_back(b);
  } else if (layout.geometric_end > 0.0) {
    // Start at zero: still refine toward the origin geometrically.
    std::vector<double> inner;
    for (double b = layout.geometric_end / 4.0; b > layout.geometric_end * 1e-8; b /= 4.0) {
      inner.push_back(b);
    }
    cuts.insert(cuts.end(), inner.rbegin(), inner.rend());
  }
  for (double b = layout.geometric_end; b < layout.upper; b += layout.panel_width) {
    if (b > cuts.back()) cuts.push_back(b);
  }
  if (layout.upper > cuts.back()) cuts.push_back(layout.upper);

  Result r;
  double comp = 0.0;  // Neumaier compensation
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double v = adaptive_gk(f, cuts[i], cuts[i + 1], layout.phase_rate, 10, &r);
    const double t = r.value + v;
    if (std::abs(r.value) >= std::abs(v)) {
      comp += (r.value - t) + v;
    } else {
      comp += (v - t) + r.value;
    }
    r.value = t;
    ++r.panels;
  }
  r.value += comp;
  return r;
}

/// Checks the accumulated error against the relative target, falling back
/// to an absolute floor near zeros and to the rounding floor when the
/// integrand cancels heavily.
inline void require_converged(const Result& r, const char* what, double t) {
  const double allowed = std::max({kRelTarget * std::abs(r.value), kAbsFloor, r.floor});
  if (!(r.error <= allowed) || !std::isfinite(r.value)) {
    std::ostringstream msg;
    msg << what << " quadrature did not converge at t = " << t << " (estimated error "
        << r.error << ", allowed " << allowed << ")";
    throw NumericalError(msg.str());
  }
}

}  // namespace zeno::quad
