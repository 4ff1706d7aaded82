#include "bdfnb/fourier_grid.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <sstream>
#include <thread>

#include "bdfnb/coulomb.hpp"
#include "bdfnb/errors.hpp"

namespace bdfnb {

std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

int worker_count() {
  const char* s = std::getenv("BDFNB_WORKERS");
  if (!s) return 1;
  int w = std::atoi(s);
  return std::clamp(w, 1, 256);
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
  const std::size_t w = std::min<std::size_t>(worker_count(), n);
  if (w <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errs(w);
  for (std::size_t t = 0; t < w; ++t) {
    pool.emplace_back([&, t] {
      try {
        for (std::size_t i = t; i < n; i += w) fn(i);
      } catch (...) {
        errs[t] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errs)
    if (e) std::rethrow_exception(e);
}

std::shared_ptr<const FourierGrid> FourierGrid::create(std::array<int, 3> n, Vec3 box) {
  for (int a = 0; a < 3; ++a) {
    if (n[a] < 2 || n[a] % 2 != 0) throw ConfigError("grid points per axis must be even and >= 2");
    if (!(box[a] > 0.0) || !std::isfinite(box[a])) throw ConfigError("box length must be positive");
  }
  return std::shared_ptr<const FourierGrid>(new FourierGrid(n, box));
}

std::shared_ptr<const FourierGrid> FourierGrid::cubic(int n, double box) {
  return create({n, n, n}, {box, box, box});
}

FourierGrid::FourierGrid(std::array<int, 3> n, Vec3 box) : n_(n), box_(box) {
  size_ = static_cast<std::size_t>(n[0]) * n[1] * n[2];
  dV_ = dx(0) * dx(1) * dx(2);
  k2_.resize(size_);
  phase_.resize(size_);
  for (int i = 0; i < n[0]; ++i)
    for (int j = 0; j < n[1]; ++j)
      for (int k = 0; k < n[2]; ++k) {
        const double kx = kcomp(0, i), ky = kcomp(1, j), kz = kcomp(2, k);
        const std::size_t id = index(i, j, k);
        k2_[id] = kx * kx + ky * ky + kz * kz;
        const int m = freq_index(0, i) + freq_index(1, j) + freq_index(2, k);
        phase_[id] = (m % 2 == 0) ? 1 : -1;
      }
  std::lock_guard<std::mutex> lock(fftw_planner_mutex());
  CVec a(size_), b(size_);
  auto* pa = reinterpret_cast<fftw_complex*>(a.data());
  auto* pb = reinterpret_cast<fftw_complex*>(b.data());
  const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
  plan_fwd_ = fftw_plan_dft_3d(n[0], n[1], n[2], pa, pb, FFTW_FORWARD, flags);
  plan_bwd_ = fftw_plan_dft_3d(n[0], n[1], n[2], pa, pb, FFTW_BACKWARD, flags);
}

FourierGrid::~FourierGrid() {
  std::lock_guard<std::mutex> lock(fftw_planner_mutex());
  if (plan_fwd_) fftw_destroy_plan(static_cast<fftw_plan>(plan_fwd_));
  if (plan_bwd_) fftw_destroy_plan(static_cast<fftw_plan>(plan_bwd_));
}

double FourierGrid::k_max() const {
  double m = 1e300;
  for (int a = 0; a < 3; ++a) m = std::min(m, M_PI / dx(a));
  return m;
}

double FourierGrid::k_spacing(int axis) const { return 2.0 * M_PI / box_[axis]; }

Vec3 FourierGrid::position(std::size_t idx) const {
  const int k = static_cast<int>(idx % n_[2]);
  const int j = static_cast<int>((idx / n_[2]) % n_[1]);
  const int i = static_cast<int>(idx / (static_cast<std::size_t>(n_[1]) * n_[2]));
  return {coord(0, i), coord(1, j), coord(2, k)};
}

double FourierGrid::kcomp(int axis, int i) const { return k_spacing(axis) * freq_index(axis, i); }

Vec3 FourierGrid::kvec(std::size_t idx) const {
  const int k = static_cast<int>(idx % n_[2]);
  const int j = static_cast<int>((idx / n_[2]) % n_[1]);
  const int i = static_cast<int>(idx / (static_cast<std::size_t>(n_[1]) * n_[2]));
  return {kcomp(0, i), kcomp(1, j), kcomp(2, k)};
}

void FourierGrid::transform(const cplx* in, cplx* out, int sign) const {
  auto plan = static_cast<fftw_plan>(sign < 0 ? plan_fwd_ : plan_bwd_);
  fftw_execute_dft(plan, reinterpret_cast<fftw_complex*>(const_cast<cplx*>(in)),
                   reinterpret_cast<fftw_complex*>(out));
}

CVec FourierGrid::forward(const CVec& f) const {
  if (f.size() != size_) throw ConfigError("field size does not match grid");
  CVec out(size_);
  transform(f.data(), out.data(), -1);
  const double s = dV_ * std::pow(2.0 * M_PI, -1.5);
  for (std::size_t i = 0; i < size_; ++i) out[i] *= s * phase_[i];
  return out;
}

CVec FourierGrid::forward(const RVec& f) const {
  CVec c(f.begin(), f.end());
  return forward(c);
}

CVec FourierGrid::inverse(const CVec& fhat) const {
  if (fhat.size() != size_) throw ConfigError("field size does not match grid");
  CVec tmp(size_);
  for (std::size_t i = 0; i < size_; ++i) tmp[i] = fhat[i] * static_cast<double>(phase_[i]);
  CVec out(size_);
  transform(tmp.data(), out.data(), +1);
  // dk^3 (2pi)^{-3/2} with dk^3 = (2pi)^3 / V
  const double s = std::pow(2.0 * M_PI, 1.5) / volume();
  for (auto& v : out) v *= s;
  return out;
}

RVec FourierGrid::inverse_real(const CVec& fhat) const {
  CVec c = inverse(fhat);
  RVec r(size_);
  for (std::size_t i = 0; i < size_; ++i) r[i] = c[i].real();
  return r;
}

double FourierGrid::spectral_tail_fraction(const CVec& fhat) const {
  const double kc2 = 0.25 * k_max() * k_max();
  double tot = 0.0, tail = 0.0;
  for (std::size_t i = 0; i < size_; ++i) {
    const double w = std::norm(fhat[i]);
    tot += w;
    if (k2_[i] > kc2) tail += w;
  }
  return tot > 0.0 ? tail / tot : 0.0;
}

void FourierGrid::check_aliasing(const CVec& fhat, const char* what, double threshold) const {
  const double t = spectral_tail_fraction(fhat);
  if (t > threshold) {
    std::ostringstream os;
    os << "aliasing guard: " << what << " has spectral mass fraction " << t << " above k_max/2 (limit "
       << threshold << ")";
    throw AccuracyError(os.str());
  }
}

std::string FourierGrid::spec_json() const {
  std::ostringstream os;
  os.precision(17);
  os << "{\"n\":[" << n_[0] << "," << n_[1] << "," << n_[2] << "],\"box\":[" << box_[0] << "," << box_[1]
     << "," << box_[2] << "]}";
  return os.str();
}

const CoulombOperator& FourierGrid::coulomb() const {
  std::call_once(coulomb_once_, [this] {
    coulomb_ = std::make_unique<CoulombOperator>(*this, PairKernel::coulomb, CoulombBoundary::isolated);
  });
  return *coulomb_;
}

}  // namespace bdfnb
