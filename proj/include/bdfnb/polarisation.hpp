#pragma once

#include <vector>

#include "bdfnb/dirac.hpp"
#include "bdfnb/fields.hpp"
#include "bdfnb/params.hpp"

namespace bdfnb {

// -(1/2pi) \int dw (D(p) + iw)^{-1} M (D(q) + iw)^{-1}: only the +- and -+ blocks survive,
// each divided by E(p) + E(q) (cut-off energies).
Mat4 resolvent_pair_kernel(const Vec3& p, const Vec3& q, const Mat4& M, const ModelParams& params);

// Linear vacuum response multiplier f_Lambda(k), linear in alpha.
double f_lambda(double k, double alpha, double lambda_uv);
inline double f_lambda(double k, const ModelParams& p) { return f_lambda(k, p.alpha, p.lambda_uv); }

// Hilbert-Schmidt companion of f: the same bubble with (E(p) + E(q))^{-2}. For gamma = -alpha K[v_rho],
// ||gamma||_{S2}^2 = alpha \int 4 pi h |rho^|^2 / k^2 and Tr(|D| gamma^2) = (alpha/2) \int 4 pi f |rho^|^2 / k^2.
double h_lambda(double k, double alpha, double lambda_uv);

// Closes ModelParams with f0 = f_Lambda(0).
ModelParams z3_u0(double alpha, double lambda_uv);

// f and F = f/(1+f) tabulated on [0, k_max] with a cubic spline.
class PolarisationTable {
 public:
  static PolarisationTable build(const ModelParams& params, double k_max, int n_points = 0, bool with_hs = false);

  const std::vector<double>& k_points() const { return k_; }
  const std::vector<double>& f_values() const { return f_; }
  const std::vector<double>& F_values() const { return F_; }
  const ModelParams& params() const { return params_; }
  double k_max() const { return k_.back(); }

  // Throws ConfigError beyond the tabulated range.
  double f(double k) const;
  double F(double k) const;
  double hs(double k) const;  // h_Lambda; needs with_hs
  bool has_hs() const { return static_cast<bool>(hs_spline_); }

 private:
  std::vector<double> k_, f_, F_, hs_;
  ModelParams params_;
  double h_ = 0.0;
  std::shared_ptr<const void> spline_, hs_spline_;
};

struct VacuumCorrection {
  DensityField gamma_density;  // rho_gamma
  int order = 1;
  DensityField source_n;
  double residual = 0.0;  // |charge(rho_gamma) + F(0) charge(n)|
  DensityField tau10;     // order-2 diagnostic: rho[Q_{1,0}[N]]
};

// Order 1: rho_gamma^ = -F(k) n^. Order 2 adds (1 - F) alpha tau_{1,0}[N] from the orbitals of N.
VacuumCorrection vacuum_density(const DensityField& n, int order, const PolarisationTable& table,
                                const std::vector<SpinorField>& orbitals = {});

// Density of kernel_res(R_N) with R_N the exchange operator of N = sum |psi_j><psi_j|.
// The cost is quadratic in the grid size; restricted to small grids.
RVec exchange_response_density(const std::vector<SpinorField>& orbitals, const ModelParams& params);

// Reciprocal-lattice expansion 1/|x-y| ~ sum_l w_l e^{il.(x-y)} on the grid's momentum lattice.
RVec coulomb_lattice_weights(const GridPtr& g);
// Fourier coefficients of e^{il.x} psi for the lattice vector with flat index li (periodic wrap).
SpinorHat modulate_hat(const GridPtr& g, const SpinorHat& h, std::size_t li);

// Radial inverse transform g(r) = (2 pi^2 r)^{-1} \int k m(k) sin(kr) dk of f (or of F when resummed).
struct RadialKernel {
  std::vector<double> r;
  std::vector<double> values;
  double tail = 0.0;  // r^3 |g(r)| at the outer edge
};
RadialKernel fcheck_kernel(const ModelParams& params, bool resummed);
// \int |x|^ell |g(x)| dx for ell in {0,1,2}.
double fcheck_moment(int ell, const ModelParams& params, bool resummed = false);
double kernel_moment(const RadialKernel& k, int ell);
double kernel_integral(const RadialKernel& k);  // signed \int g

// Laplace nodes for 1/(a+b) = \int_0^inf e^{-s a} e^{-s b} ds with a + b in [x_min, x_max].
struct LaplaceRule {
  std::vector<double> s, w;
};
LaplaceRule laplace_rule(double x_min, double x_max, double rel_tol = 1e-12);

}  // namespace bdfnb
