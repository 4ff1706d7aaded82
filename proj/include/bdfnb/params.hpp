#pragma once

namespace bdfnb {

// Physical and cutoff constants. Every derived field is closed from (alpha, lambda_uv, f0).
struct ModelParams {
  double alpha = 0.0;
  double lambda_uv = 0.0;
  double L = 0.0;           // alpha * ln(lambda_uv)
  double eps_lambda = 0.0;  // 1 / ln(lambda_uv)
  double a_lambda = 0.0;    // (1 + eps_lambda) / 2
  double f0 = 0.0;          // f_Lambda(0)
  double z3 = 1.0;          // 1 / (1 + f0)
  double u0 = 0.0;          // 1 / (1 - z3)
  double c_scale = 0.0;     // 1 / (alpha (1 - z3))

  // Closes the derived constants; throws ConfigError when the regime is inadmissible.
  static ModelParams close(double alpha, double lambda_uv, double f0);

  // Kinematics-only parameters (no polarisation closure), for symbol level work.
  static ModelParams kinematic(double lambda_uv);

  double F0() const { return f0 / (1.0 + f0); }
  bool closed() const { return f0 > 0.0; }
};

}  // namespace bdfnb
