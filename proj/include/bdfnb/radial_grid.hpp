#pragma once

#include <string>
#include <vector>

namespace bdfnb {

// Radial quadrature: weights already include the 4 pi r^2 Jacobian.
struct RadialGrid {
  enum class Kind { uniform, log_spaced };
  Kind kind = Kind::uniform;
  std::vector<double> r;
  std::vector<double> w;
  double r_max = 0.0;
  double h = 0.0;  // spacing in r (uniform) or in ln r (log_spaced)

  // r_i = i h for i = 1..n with h = r_max/(n+1); the sine-transform nodes of [0, r_max].
  static RadialGrid uniform(int n, double r_max);
  // Geometric nodes with trapezoidal weights in t = ln r.
  static RadialGrid log_spaced(int n, double r_min, double r_max);

  std::size_t size() const { return r.size(); }
  double integrate(const std::vector<double>& f) const;
  std::string spec_json() const;
};

}  // namespace bdfnb
