#pragma once

// Brute-force six-dimensional quadrature of \iint |Gamma(x,y)|^2/|x-y| for a real rank-two kernel
// Gamma(x,y) = h1(x) h1(y) + h2(x) h2(y), on a cell-centred cube. The diagonal cell uses the exact
// self-interaction integral of a cube; two resolutions are combined by Richardson extrapolation.

#include <cmath>
#include <functional>
#include <vector>

namespace oracle {

// \iint_{[0,1]^6} 1/|x-y| dx dy
inline constexpr double kUnitCubeSelfCoulomb = 1.8823126444613;

inline double exchange_point_sum(const std::function<double(double, double, double)>& h1,
                                 const std::function<double(double, double, double)>& h2, double half_box, int n) {
  const double dx = 2.0 * half_box / n;
  const std::size_t N = static_cast<std::size_t>(n) * n * n;
  std::vector<double> a(N), b(N), X(N), Y(N), Z(N);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        const std::size_t id = (static_cast<std::size_t>(i) * n + j) * n + k;
        X[id] = -half_box + (i + 0.5) * dx;
        Y[id] = -half_box + (j + 0.5) * dx;
        Z[id] = -half_box + (k + 0.5) * dx;
        a[id] = h1(X[id], Y[id], Z[id]);
        b[id] = h2(X[id], Y[id], Z[id]);
      }
  const double dV = dx * dx * dx;
  double s = 0.0;
  for (std::size_t p = 0; p < N; ++p) {
    double row = 0.0;
    for (std::size_t q = 0; q < N; ++q) {
      if (q == p) continue;
      const double g = a[p] * a[q] + b[p] * b[q];
      const double dxp = X[p] - X[q], dyp = Y[p] - Y[q], dzp = Z[p] - Z[q];
      row += g * g / std::sqrt(dxp * dxp + dyp * dyp + dzp * dzp);
    }
    const double g0 = a[p] * a[p] + b[p] * b[p];
    s += row * dV * dV + g0 * g0 * kUnitCubeSelfCoulomb * std::pow(dx, 5);
  }
  return s;
}

// Second-order Richardson extrapolation from resolutions n and m > n.
inline double exchange_6d(const std::function<double(double, double, double)>& h1,
                          const std::function<double(double, double, double)>& h2, double half_box, int n, int m) {
  const double sn = exchange_point_sum(h1, h2, half_box, n);
  const double sm = exchange_point_sum(h1, h2, half_box, m);
  const double r2 = static_cast<double>(m) * m / (static_cast<double>(n) * n);
  return (r2 * sm - sn) / (r2 - 1.0);
}

}  // namespace oracle
