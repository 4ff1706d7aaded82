#pragma once

// Independent radial references for Gaussian densities: the potential of a normalised Gaussian
// is erf(r/(sqrt2 s))/r, and pairings reduce to one-dimensional quadratures.

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>

namespace oracle {

inline double gaussian_density(double r, double s) {
  return std::pow(2.0 * M_PI * s * s, -1.5) * std::exp(-0.5 * r * r / (s * s));
}

inline double gaussian_potential(double r, double s) {
  if (r < 1e-12) return std::sqrt(2.0 / M_PI) / s;
  return std::erf(r / (std::sqrt(2.0) * s)) / r;
}

// D(rho_s, rho_s) by adaptive quadrature of 4 pi r^2 rho(r) v(r).
inline double gaussian_self_pairing(double s) {
  auto f = [s](double r) { return 4.0 * M_PI * r * r * gaussian_density(r, s) * gaussian_potential(r, s); };
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, 0.0, 40.0 * s, 15, 1e-14);
}

// D(rho_s, rho_t) for concentric Gaussians of widths s and t.
inline double gaussian_cross_pairing(double s, double t) {
  auto f = [s, t](double r) { return 4.0 * M_PI * r * r * gaussian_density(r, s) * gaussian_potential(r, t); };
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, 0.0, 40.0 * std::max(s, t), 15, 1e-14);
}

}  // namespace oracle
