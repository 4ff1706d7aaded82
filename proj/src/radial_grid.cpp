#include "bdfnb/radial_grid.hpp"

#include <cmath>
#include <sstream>

#include "bdfnb/errors.hpp"

namespace bdfnb {

RadialGrid RadialGrid::uniform(int n, double r_max) {
  if (n < 8 || !(r_max > 0.0)) throw ConfigError("uniform radial grid needs n >= 8 and r_max > 0");
  RadialGrid g;
  g.kind = Kind::uniform;
  g.r_max = r_max;
  g.h = r_max / (n + 1);
  g.r.resize(n);
  g.w.resize(n);
  for (int i = 0; i < n; ++i) {
    g.r[i] = (i + 1) * g.h;
    g.w[i] = 4.0 * M_PI * g.r[i] * g.r[i] * g.h;
  }
  return g;
}

RadialGrid RadialGrid::log_spaced(int n, double r_min, double r_max) {
  if (n < 8 || !(r_min > 0.0) || !(r_max > r_min)) throw ConfigError("invalid log radial grid");
  RadialGrid g;
  g.kind = Kind::log_spaced;
  g.r_max = r_max;
  g.h = std::log(r_max / r_min) / (n - 1);
  g.r.resize(n);
  g.w.resize(n);
  for (int i = 0; i < n; ++i) {
    g.r[i] = r_min * std::exp(i * g.h);
    const double end = (i == 0 || i == n - 1) ? 0.5 : 1.0;
    g.w[i] = end * 4.0 * M_PI * std::pow(g.r[i], 3) * g.h;
  }
  return g;
}

double RadialGrid::integrate(const std::vector<double>& f) const {
  if (f.size() != r.size()) throw ConfigError("radial field size mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i) s += w[i] * f[i];
  return s;
}

std::string RadialGrid::spec_json() const {
  std::ostringstream os;
  os.precision(17);
  os << "{\"kind\":\"" << (kind == Kind::uniform ? "uniform" : "log_spaced") << "\",\"n\":" << r.size()
     << ",\"r_max\":" << r_max << ",\"h\":" << h << "}";
  return os.str();
}

}  // namespace bdfnb
