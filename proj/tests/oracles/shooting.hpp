#pragma once

// Shooting reference for the radial Choquard equation
//   phi'' + 2 phi'/r = -w phi,   w'' + 2 w'/r = -8 pi phi^2,   phi(0) = 1,
// where w = 2 v + mu. Bisection on w(0) separates trajectories that cross zero from those that
// turn upward; the bound state is rescaled to unit mass afterwards.

#include <array>
#include <boost/numeric/odeint.hpp>
#include <cmath>

namespace oracle {

struct ShootingResult {
  double w0 = 0.0;
  double energy = 0.0;
  double kinetic = 0.0;
  double coulomb = 0.0;
  double multiplier = 0.0;
  double phi0 = 0.0;  // value at the origin after normalisation
  double r_stop = 0.0;
};

namespace detail {

// state: phi, phi', w, w', mass, kinetic, \int 4 pi r^2 phi^2 w
using State = std::array<double, 7>;

struct Rhs {
  void operator()(const State& y, State& dy, double r) const {
    const double r2 = 4.0 * M_PI * r * r;
    dy[0] = y[1];
    dy[1] = -2.0 * y[1] / r - y[2] * y[0];
    dy[2] = y[3];
    dy[3] = -2.0 * y[3] / r - 8.0 * M_PI * y[0] * y[0];
    dy[4] = r2 * y[0] * y[0];
    dy[5] = r2 * y[1] * y[1];
    dy[6] = r2 * y[0] * y[0] * y[2];
  }
};

// +1: phi crossed zero (w0 too large); -1: phi turned upward (w0 too small).
inline int shoot(double w0, State* at_min, double* r_min, double r_end = 60.0) {
  namespace ode = boost::numeric::odeint;
  const double r0 = 1e-5;
  State y{1.0 - w0 * r0 * r0 / 6.0, -w0 * r0 / 3.0, w0 - 8.0 * M_PI * r0 * r0 / 6.0, -8.0 * M_PI * r0 / 3.0,
          0.0, 0.0, 0.0};
  auto stepper = ode::make_dense_output(1e-14, 1e-14, ode::runge_kutta_dopri5<State>());
  stepper.initialize(y, r0, 1e-4);
  State best = y;
  double rbest = r0;
  while (stepper.current_time() < r_end) {
    stepper.do_step(Rhs{});
    const State& s = stepper.current_state();
    if (s[0] <= 0.0) {
      if (at_min) *at_min = best;
      if (r_min) *r_min = rbest;
      return +1;
    }
    if (s[1] > 0.0) {
      if (at_min) *at_min = best;
      if (r_min) *r_min = rbest;
      return -1;
    }
    best = s;
    rbest = stepper.current_time();
  }
  if (at_min) *at_min = best;
  if (r_min) *r_min = rbest;
  return -1;
}

}  // namespace detail

inline ShootingResult choquard_shooting() {
  double lo = 1.0, hi = 10.0;
  for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
    const double m = 0.5 * (lo + hi);
    if (detail::shoot(m, nullptr, nullptr) > 0)
      hi = m;
    else
      lo = m;
  }
  detail::State y;
  double r = 0.0;
  detail::shoot(lo, &y, &r);
  const double mass = y[4];
  const double mu = y[2] - 2.0 * mass / r;
  const double kinetic = y[5];
  const double coulomb = 0.5 * (y[6] - mu * mass);
  // psi(x) = s^2 phi(s x) with s = 1/mass has unit mass; T, D scale as s^3 and mu as s^2.
  const double s = 1.0 / mass;
  ShootingResult out;
  out.w0 = lo;
  out.kinetic = kinetic * s * s * s;
  out.coulomb = coulomb * s * s * s;
  out.energy = out.kinetic - out.coulomb;
  out.multiplier = mu * s * s;
  out.phi0 = s * s;
  out.r_stop = r;
  return out;
}

}  // namespace oracle
