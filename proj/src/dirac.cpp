#include "bdfnb/dirac.hpp"

namespace bdfnb {

namespace {

std::array<Mat4, 4> build_matrices() {
  using C = cplx;
  const C I(0.0, 1.0);
  Eigen::Matrix2cd s1, s2, s3, id;
  s1 << 0, 1, 1, 0;
  s2 << 0, -I, I, 0;
  s3 << 1, 0, 0, -1;
  id.setIdentity();
  std::array<Mat4, 4> m;
  m[0].setZero();
  m[0].topLeftCorner<2, 2>() = id;
  m[0].bottomRightCorner<2, 2>() = -id;
  const Eigen::Matrix2cd* sig[3] = {&s1, &s2, &s3};
  for (int j = 0; j < 3; ++j) {
    m[j + 1].setZero();
    m[j + 1].topRightCorner<2, 2>() = *sig[j];
    m[j + 1].bottomLeftCorner<2, 2>() = *sig[j];
  }
  return m;
}

const std::array<Mat4, 4>& matrices() {
  static const std::array<Mat4, 4> m = build_matrices();
  return m;
}

}  // namespace

const Mat4& dirac_beta() { return matrices()[0]; }
const Mat4& dirac_alpha(int j) { return matrices()[j + 1]; }

Mat4 free_dirac_symbol(const Vec3& p) {
  Mat4 d = dirac_beta();
  for (int j = 0; j < 3; ++j) d += p[j] * dirac_alpha(j);
  return d;
}

Mat4 dirac_symbol(const Vec3& p, const ModelParams& params) {
  const double p2 = p[0] * p[0] + p[1] * p[1] + p[2] * p[2];
  return free_dirac_symbol(p) * (1.0 + p2 / (params.lambda_uv * params.lambda_uv));
}

Mat4 sign_symbol(const Vec3& p) {
  const double p2 = p[0] * p[0] + p[1] * p[1] + p[2] * p[2];
  return free_dirac_symbol(p) / energy_free(p2);
}

ProjectorPair spectral_projectors(const Vec3& p, const ModelParams&) {
  const Mat4 s = sign_symbol(p);
  const Mat4 id = Mat4::Identity();
  return {0.5 * (id + s), 0.5 * (id - s)};
}

void apply_free_symbol(const Vec3& p, const cplx* v, cplx* out) {
  // sigma.p acting on a two-spinor
  const cplx pm(p[0], -p[1]), pp(p[0], p[1]);
  const cplx l0 = p[2] * v[2] + pm * v[3];
  const cplx l1 = pp * v[2] - p[2] * v[3];
  const cplx u0 = p[2] * v[0] + pm * v[1];
  const cplx u1 = pp * v[0] - p[2] * v[1];
  out[0] = v[0] + l0;
  out[1] = v[1] + l1;
  out[2] = u0 - v[2];
  out[3] = u1 - v[3];
}

SpinorHat project_hat(const GridPtr& g, const SpinorHat& h, int sign) {
  SpinorHat out;
  for (auto& c : out) c.assign(g->size(), cplx(0.0));
  const RVec& k2 = g->k2();
  for (std::size_t i = 0; i < g->size(); ++i) {
    const Vec3 p = g->kvec(i);
    const cplx v[4] = {h[0][i], h[1][i], h[2][i], h[3][i]};
    cplx d[4];
    apply_free_symbol(p, v, d);
    const double e = energy_free(k2[i]);
    for (int a = 0; a < 4; ++a) out[a][i] = 0.5 * (v[a] + static_cast<double>(sign) * d[a] / e);
  }
  return out;
}

SpinorField project(const SpinorField& psi, int sign) {
  return SpinorField::from_fourier(psi.grid(), project_hat(psi.grid(), psi.fourier(), sign));
}

}  // namespace bdfnb
