#include "bdfnb/params.hpp"

#include <cmath>
#include <string>

#include "bdfnb/errors.hpp"

namespace bdfnb {

ModelParams ModelParams::close(double alpha, double lambda_uv, double f0) {
  if (!(alpha > 0.0)) throw ConfigError("alpha must be positive");
  if (!(lambda_uv > std::exp(1.0))) throw ConfigError("lambda_uv must exceed e");
  if (!(f0 > 0.0) || !std::isfinite(f0)) throw ConfigError("f0 must be positive and finite");
  ModelParams p;
  p.alpha = alpha;
  p.lambda_uv = lambda_uv;
  const double lg = std::log(lambda_uv);
  p.L = alpha * lg;
  p.eps_lambda = 1.0 / lg;
  p.a_lambda = 0.5 * (1.0 + p.eps_lambda);
  p.f0 = f0;
  p.z3 = 1.0 / (1.0 + f0);
  // 1 - z3 = f0/(1+f0) evaluated without cancellation
  const double F0 = f0 / (1.0 + f0);
  p.u0 = 1.0 / F0;
  p.c_scale = 1.0 / (alpha * F0);
  if (!(p.c_scale > 1.0)) throw ConfigError("c = 1/(alpha (1 - z3)) must exceed 1");
  return p;
}

ModelParams ModelParams::kinematic(double lambda_uv) {
  if (!(lambda_uv > std::exp(1.0))) throw ConfigError("lambda_uv must exceed e");
  ModelParams p;
  p.lambda_uv = lambda_uv;
  const double lg = std::log(lambda_uv);
  p.eps_lambda = 1.0 / lg;
  p.a_lambda = 0.5 * (1.0 + p.eps_lambda);
  return p;
}

}  // namespace bdfnb
