#pragma once

#include <Eigen/Dense>
#include <array>

#include "bdfnb/fields.hpp"
#include "bdfnb/params.hpp"

namespace bdfnb {

using Mat4 = Eigen::Matrix4cd;
using Vec4 = Eigen::Vector4cd;

// Standard (Dirac) representation.
const Mat4& dirac_beta();
const Mat4& dirac_alpha(int j);

inline double energy_free(double p2) { return std::sqrt(1.0 + p2); }
// E(p) - 1 without cancellation.
inline double energy_free_minus_one(double p2) { return p2 / (std::sqrt(1.0 + p2) + 1.0); }
// Bold E(p) = E(p)(1 + p^2/Lambda^2).
inline double energy_cut(double p2, double lambda) { return std::sqrt(1.0 + p2) * (1.0 + p2 / (lambda * lambda)); }
// Bold E(p) - 1 without cancellation.
inline double energy_cut_minus_one(double p2, double lambda) {
  const double l2 = p2 / (lambda * lambda);
  return energy_free_minus_one(p2) * (1.0 + l2) + l2;
}

Mat4 free_dirac_symbol(const Vec3& p);
// Cut-off symbol (alpha.p + beta)(1 + |p|^2/Lambda^2).
Mat4 dirac_symbol(const Vec3& p, const ModelParams& params);
Mat4 sign_symbol(const Vec3& p);  // s_p = D0(p)/E(p)

struct ProjectorPair {
  Mat4 plus;
  Mat4 minus;
};
ProjectorPair spectral_projectors(const Vec3& p, const ModelParams& params);

// D0(p) v for a 4-vector, without forming the matrix.
void apply_free_symbol(const Vec3& p, const cplx* v, cplx* out);

// Fourier-space projection of a spinor: sign = +1 keeps P+, -1 keeps P-.
SpinorHat project_hat(const GridPtr& g, const SpinorHat& h, int sign);
SpinorField project(const SpinorField& psi, int sign);

}  // namespace bdfnb
