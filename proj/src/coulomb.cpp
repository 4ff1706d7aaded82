#include "bdfnb/coulomb.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>

#include "bdfnb/errors.hpp"

namespace bdfnb {

namespace {

double smooth_part(PairKernel kind, double a, double r) {
  if (kind == PairKernel::coulomb) {
    if (r < 1e-8 / a) return 2.0 * a / std::sqrt(M_PI);
    return std::erf(a * r) / r;
  }
  const double x = a * r;
  if (x < 1e-4) return a * a * (1.0 - 0.5 * x * x);
  return -std::expm1(-x * x) / (r * r);
}

// Analytic transform \int K_short(s) e^{-ik.s} ds of the short-range remainder.
double singular_transform(PairKernel kind, double a, double k) {
  if (kind == PairKernel::coulomb) {
    if (k < 1e-6 * a) return M_PI / (a * a);
    return 4.0 * M_PI * (-std::expm1(-k * k / (4.0 * a * a))) / (k * k);
  }
  if (k < 1e-6 * a) return 2.0 * std::pow(M_PI, 1.5) / a;
  return 2.0 * M_PI * M_PI * std::erf(k / (2.0 * a)) / k;
}

double full_transform(PairKernel kind, double k) {
  if (k == 0.0) return 0.0;
  return kind == PairKernel::coulomb ? 4.0 * M_PI / (k * k) : 2.0 * M_PI * M_PI / k;
}

}  // namespace

CoulombOperator::CoulombOperator(const FourierGrid& grid, PairKernel kind, CoulombBoundary boundary)
    : grid_(grid), kind_(kind), boundary_(boundary) {
  const auto& n = grid.n();
  for (int d = 0; d < 3; ++d) P_[d] = boundary == CoulombBoundary::isolated ? 2 * n[d] : n[d];
  npad_ = static_cast<std::size_t>(P_[0]) * P_[1] * P_[2];
  nhalf_ = static_cast<std::size_t>(P_[0]) * P_[1] * (P_[2] / 2 + 1);
  const double dV = grid.dV();
  a_ = grid.k_max() / 10.0;

  RVec real(npad_);
  CVec spec(nhalf_);
  {
    std::lock_guard<std::mutex> lock(fftw_planner_mutex());
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    plan_r2c_ = fftw_plan_dft_r2c_3d(P_[0], P_[1], P_[2], real.data(),
                                     reinterpret_cast<fftw_complex*>(spec.data()), flags);
    plan_c2r_ = fftw_plan_dft_c2r_3d(P_[0], P_[1], P_[2], reinterpret_cast<fftw_complex*>(spec.data()),
                                     real.data(), flags);
  }

  auto kc = [&](int d, int i) {
    const int m = i < P_[d] / 2 ? i : i - P_[d];
    return 2.0 * M_PI * m / (P_[d] * grid.dx(d));
  };

  khat_.assign(nhalf_, 0.0);
  if (boundary == CoulombBoundary::periodic_neutral) {
    for (int i = 0; i < P_[0]; ++i)
      for (int j = 0; j < P_[1]; ++j)
        for (int l = 0; l <= P_[2] / 2; ++l) {
          const double kx = kc(0, i), ky = kc(1, j), kz = kc(2, l);
          const double k = std::sqrt(kx * kx + ky * ky + kz * kz);
          khat_[(static_cast<std::size_t>(i) * P_[1] + j) * (P_[2] / 2 + 1) + l] = full_transform(kind, k) / dV;
        }
    return;
  }

  for (int i = 0; i < P_[0]; ++i) {
    const int mi = i < P_[0] / 2 ? i : i - P_[0];
    const double x = mi * grid.dx(0);
    for (int j = 0; j < P_[1]; ++j) {
      const int mj = j < P_[1] / 2 ? j : j - P_[1];
      const double y = mj * grid.dx(1);
      for (int l = 0; l < P_[2]; ++l) {
        const int ml = l < P_[2] / 2 ? l : l - P_[2];
        const double z = ml * grid.dx(2);
        real[(static_cast<std::size_t>(i) * P_[1] + j) * P_[2] + l] =
            smooth_part(kind, a_, std::sqrt(x * x + y * y + z * z));
      }
    }
  }
  fftw_execute_dft_r2c(static_cast<fftw_plan>(plan_r2c_), real.data(),
                       reinterpret_cast<fftw_complex*>(spec.data()));
  for (int i = 0; i < P_[0]; ++i)
    for (int j = 0; j < P_[1]; ++j)
      for (int l = 0; l <= P_[2] / 2; ++l) {
        const std::size_t id = (static_cast<std::size_t>(i) * P_[1] + j) * (P_[2] / 2 + 1) + l;
        const double kx = kc(0, i), ky = kc(1, j), kz = kc(2, l);
        const double k = std::sqrt(kx * kx + ky * ky + kz * kz);
        khat_[id] = spec[id].real() + singular_transform(kind, a_, k) / dV;
      }
}

CoulombOperator::~CoulombOperator() {
  std::lock_guard<std::mutex> lock(fftw_planner_mutex());
  if (plan_r2c_) fftw_destroy_plan(static_cast<fftw_plan>(plan_r2c_));
  if (plan_c2r_) fftw_destroy_plan(static_cast<fftw_plan>(plan_c2r_));
}

void CoulombOperator::embed(const RVec& a, RVec& pad) const {
  const auto& n = grid_.n();
  if (a.size() != grid_.size()) throw ConfigError("field size does not match grid");
  pad.assign(npad_, 0.0);
  for (int i = 0; i < n[0]; ++i)
    for (int j = 0; j < n[1]; ++j) {
      const double* src = &a[grid_.index(i, j, 0)];
      double* dst = &pad[(static_cast<std::size_t>(i) * P_[1] + j) * P_[2]];
      for (int l = 0; l < n[2]; ++l) dst[l] = src[l];
    }
}

double CoulombOperator::half_weight(std::size_t idx) const {
  const std::size_t l = idx % (P_[2] / 2 + 1);
  return (l == 0 || static_cast<int>(l) == P_[2] / 2) ? 1.0 : 2.0;
}

CVec CoulombOperator::transform(const RVec& a) const {
  for (double v : a)
    if (!std::isfinite(v)) throw DataError("NaN or infinity in density field");
  RVec pad;
  embed(a, pad);
  CVec out(nhalf_);
  fftw_execute_dft_r2c(static_cast<fftw_plan>(plan_r2c_), pad.data(), reinterpret_cast<fftw_complex*>(out.data()));
  return out;
}

double CoulombOperator::pairing_hat(const CVec& A, const CVec& B) const {
  double s = 0.0;
  for (std::size_t i = 0; i < nhalf_; ++i) s += half_weight(i) * khat_[i] * (std::conj(A[i]) * B[i]).real();
  const double dV = grid_.dV();
  return s * dV * dV / static_cast<double>(npad_);
}

double CoulombOperator::pairing(const RVec& a, const RVec& b) const {
  if (&a == &b) {
    CVec A = transform(a);
    return pairing_hat(A, A);
  }
  return pairing_hat(transform(a), transform(b));
}

cplx CoulombOperator::pairing(const CVec& a, const CVec& b) const {
  RVec ar(a.size()), ai(a.size()), br(b.size()), bi(b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    ar[i] = a[i].real();
    ai[i] = a[i].imag();
  }
  for (std::size_t i = 0; i < b.size(); ++i) {
    br[i] = b[i].real();
    bi[i] = b[i].imag();
  }
  const CVec Ar = transform(ar), Ai = transform(ai), Br = transform(br), Bi = transform(bi);
  const double rr = pairing_hat(Ar, Br), ii = pairing_hat(Ai, Bi);
  const double ri = pairing_hat(Ar, Bi), ir = pairing_hat(Ai, Br);
  return {rr + ii, ri - ir};
}

Eigen::MatrixXd CoulombOperator::gram(const std::vector<const RVec*>& fields) const {
  std::vector<CVec> hats;
  hats.reserve(fields.size());
  for (auto* f : fields) hats.push_back(transform(*f));
  const int m = static_cast<int>(fields.size());
  Eigen::MatrixXd G(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = i; j < m; ++j) G(i, j) = G(j, i) = pairing_hat(hats[i], hats[j]);
  return G;
}

RVec CoulombOperator::potential(const RVec& rho) const {
  CVec A = transform(rho);
  for (std::size_t i = 0; i < nhalf_; ++i) A[i] *= khat_[i];
  RVec pad(npad_);
  fftw_execute_dft_c2r(static_cast<fftw_plan>(plan_c2r_), reinterpret_cast<fftw_complex*>(A.data()), pad.data());
  const auto& n = grid_.n();
  RVec v(grid_.size());
  const double s = grid_.dV() / static_cast<double>(npad_);
  for (int i = 0; i < n[0]; ++i)
    for (int j = 0; j < n[1]; ++j) {
      const double* src = &pad[(static_cast<std::size_t>(i) * P_[1] + j) * P_[2]];
      double* dst = &v[grid_.index(i, j, 0)];
      for (int l = 0; l < n[2]; ++l) dst[l] = s * src[l];
    }
  return v;
}

CVec CoulombOperator::potential(const CVec& rho) const {
  RVec re(rho.size()), im(rho.size());
  for (std::size_t i = 0; i < rho.size(); ++i) {
    re[i] = rho[i].real();
    im[i] = rho[i].imag();
  }
  const RVec vr = potential(re), vi = potential(im);
  CVec v(rho.size());
  for (std::size_t i = 0; i < rho.size(); ++i) v[i] = {vr[i], vi[i]};
  return v;
}

double coulomb_pairing(const GridPtr& g, const RVec& a, const RVec& b) { return g->coulomb().pairing(a, b); }

RVec coulomb_potential(const GridPtr& g, const RVec& rho) { return g->coulomb().potential(rho); }

double coulomb_pairing(const DensityField& nu, const DensityField& rho) {
  require_same_grid(nu.grid(), rho.grid());
  return nu.grid()->coulomb().pairing(nu.values(), rho.values());
}

RVec coulomb_potential(const DensityField& rho) { return rho.grid()->coulomb().potential(rho.values()); }

RVec coulomb_potential(const GridPtr& g, const CVec& rho) {
  double scale = 0.0, imag = 0.0;
  for (const auto& v : rho) {
    scale = std::max(scale, std::abs(v));
    imag = std::max(imag, std::abs(v.imag()));
  }
  if (imag > 1e-12 * scale) throw DataError("coulomb_potential needs a real density");
  RVec re(rho.size());
  for (std::size_t i = 0; i < rho.size(); ++i) re[i] = rho[i].real();
  return g->coulomb().potential(re);
}

}  // namespace bdfnb
