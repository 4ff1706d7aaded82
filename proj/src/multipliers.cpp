#include "bdfnb/multipliers.hpp"

#include <cmath>

#include "bdfnb/dirac.hpp"
#include "bdfnb/errors.hpp"

namespace bdfnb {

double multiplier_value(MultiplierSymbol sym, double s, double p2, const ModelParams& params) {
  switch (sym) {
    case MultiplierSymbol::grad_abs:
      if (s == 0.0) return 1.0;
      if (p2 == 0.0) return 0.0;
      return std::pow(p2, 0.5 * s);
    case MultiplierSymbol::free_dirac_abs:
      return std::pow(1.0 + p2, 0.5 * s);
    case MultiplierSymbol::cut_dirac_half:
      return std::sqrt(energy_cut(p2, params.lambda_uv));
    case MultiplierSymbol::cut_dirac_abs:
      return std::pow(energy_cut(p2, params.lambda_uv), s);
    case MultiplierSymbol::free_energy_inv:
      return 1.0 / energy_free(p2);
  }
  return 1.0;
}

static void check_power(double s) {
  if (!(s >= -2.0 && s <= 2.0)) throw ConfigError("multiplier power must lie in [-2, 2]");
}

CVec fractional_multiplier(const GridPtr& g, const CVec& f, MultiplierSymbol sym, double s, const ModelParams& params) {
  check_power(s);
  CVec h = g->forward(f);
  const RVec& k2 = g->k2();
  for (std::size_t i = 0; i < h.size(); ++i) h[i] *= multiplier_value(sym, s, k2[i], params);
  return g->inverse(h);
}

SpinorField fractional_multiplier(const SpinorField& psi, MultiplierSymbol sym, double s, const ModelParams& params) {
  check_power(s);
  SpinorField out(psi.grid());
  for (int a = 0; a < 4; ++a) out[a] = fractional_multiplier(psi.grid(), psi[a], sym, s, params);
  return out;
}

double multiplier_expectation(const SpinorField& psi, MultiplierSymbol sym, double s, const ModelParams& params) {
  check_power(s);
  const auto& g = psi.grid();
  const RVec& k2 = g->k2();
  double acc = 0.0;
  for (int a = 0; a < 4; ++a) {
    const CVec h = g->forward(psi[a]);
    for (std::size_t i = 0; i < h.size(); ++i) acc += multiplier_value(sym, s, k2[i], params) * std::norm(h[i]);
  }
  return acc * std::pow(2.0 * M_PI, 3) / g->volume();
}

}  // namespace bdfnb
