#pragma once

#include <stdexcept>
#include <string>

namespace zeno {

// Structural checks: Hermiticity residual, unit trace, eigenvalue floor.
inline constexpr double kStructuralTol = 1e-9;
// Value comparisons between two routes to the same quantity.
inline constexpr double kComparisonTol = 1e-10;
// Redfield is not positivity preserving; eigenvalues below this are
// reported as diagnostics rather than rejected.
inline constexpr double kPositivityWarnTol = 1e-6;
// Bloch norms below this are treated as the maximally mixed state.
inline constexpr double kDegenerateBlochNorm = 1e-12;

// Raised when a numerical routine cannot meet its accuracy target.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace zeno
