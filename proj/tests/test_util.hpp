#pragma once

#include <random>

#include "bdfnb/fields.hpp"

namespace testutil {

// Smooth random field: a few Gaussians with random centres, widths and phases.
inline bdfnb::CVec random_smooth(const bdfnb::GridPtr& g, std::mt19937_64& rng, double width = 1.2,
                                 double spread = 2.0, int blobs = 3) {
  std::normal_distribution<double> nd(0.0, 1.0);
  bdfnb::CVec f(g->size(), 0.0);
  for (int b = 0; b < blobs; ++b) {
    const bdfnb::Vec3 c{spread * nd(rng), spread * nd(rng), spread * nd(rng)};
    const bdfnb::cplx amp(nd(rng), nd(rng));
    const double s = width * (0.8 + 0.4 * std::abs(nd(rng)) / 3.0);
    for (std::size_t i = 0; i < f.size(); ++i) {
      const auto x = g->position(i);
      const double r2 = (x[0] - c[0]) * (x[0] - c[0]) + (x[1] - c[1]) * (x[1] - c[1]) + (x[2] - c[2]) * (x[2] - c[2]);
      f[i] += amp * std::exp(-0.5 * r2 / (s * s));
    }
  }
  return f;
}

inline bdfnb::SpinorField random_spinor(const bdfnb::GridPtr& g, std::mt19937_64& rng, double width = 1.2,
                                        double spread = 2.0) {
  bdfnb::SpinorField s(g);
  for (int a = 0; a < 4; ++a) s[a] = random_smooth(g, rng, width, spread);
  s *= 1.0 / s.l2_norm();
  return s;
}

inline bdfnb::RVec real_part(const bdfnb::CVec& f) {
  bdfnb::RVec r(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) r[i] = f[i].real();
  return r;
}

}  // namespace testutil
