#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>

namespace zeno {

struct SimplexSettings {
  double f_tol = 1e-15;
  double x_tol = 1e-10;
  int max_evaluations = 4000;
};

struct SimplexResult {
  std::array<double, 2> x{};
  double value = 0.0;
  int evaluations = 0;
};

/// Nelder-Mead minimisation in two variables, axis-aligned start simplex.
template <class F>
SimplexResult nelder_mead_2d(F&& f, std::array<double, 2> start, std::array<double, 2> step,
                             const SimplexSettings& settings = {}) {
  using Point = std::array<double, 2>;
  std::array<Point, 3> p = {start, Point{start[0] + step[0], start[1]},
                            Point{start[0], start[1] + step[1]}};
  std::array<double, 3> v{};
  int evals = 0;
  auto eval = [&](const Point& x) {
    ++evals;
    return f(x);
  };
  for (int i = 0; i < 3; ++i) v[i] = eval(p[i]);

  auto lerp = [](const Point& a, const Point& b, double t) {
    return Point{a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])};
  };

  while (evals < settings.max_evaluations) {
    std::array<int, 3> idx = {0, 1, 2};
    std::sort(idx.begin(), idx.end(), [&](int a, int b) { return v[a] < v[b]; });
    const int best = idx[0], mid = idx[1], worst = idx[2];

    double size = 0.0;
    for (int i = 1; i < 3; ++i) {
      size = std::max({size, std::abs(p[idx[i]][0] - p[best][0]), std::abs(p[idx[i]][1] - p[best][1])});
    }
    if (std::abs(v[worst] - v[best]) <= settings.f_tol && size <= settings.x_tol) break;
    if (size <= settings.x_tol * 1e-3) break;

    const Point centroid = lerp(p[best], p[mid], 0.5);
    const Point reflected = lerp(centroid, p[worst], -1.0);
    const double fr = eval(reflected);
    if (fr < v[best]) {
      const Point expanded = lerp(centroid, p[worst], -2.0);
      const double fe = eval(expanded);
      if (fe < fr) {
        p[worst] = expanded;
        v[worst] = fe;
      } else {
        p[worst] = reflected;
        v[worst] = fr;
      }
    } else if (fr < v[mid]) {
      p[worst] = reflected;
      v[worst] = fr;
    } else {
      const bool outside = fr < v[worst];
      const Point contracted = lerp(centroid, outside ? reflected : p[worst], 0.5);
      const double fc = eval(contracted);
      if (fc < (outside ? fr : v[worst])) {
        p[worst] = contracted;
        v[worst] = fc;
      } else {
        for (int i : {mid, worst}) {
          p[i] = lerp(p[best], p[i], 0.5);
          v[i] = eval(p[i]);
        }
      }
    }
  }
  const int best = static_cast<int>(std::min_element(v.begin(), v.end()) - v.begin());
  return {p[best], v[best], evals};
}

}  // namespace zeno
