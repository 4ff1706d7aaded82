#pragma once

#include <array>
#include <functional>
#include <complex>
#include <cstddef>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

namespace bdfnb {

using cplx = std::complex<double>;
using RVec = std::vector<double>;
using CVec = std::vector<cplx>;
using Vec3 = std::array<double, 3>;

class CoulombOperator;

// Uniform periodic grid centred on the origin. Transforms follow the unitary continuum
// convention f^(k) = (2pi)^{-3/2} \int f(x) e^{-ik.x} dx, discretised on the grid points.
class FourierGrid {
 public:
  static std::shared_ptr<const FourierGrid> create(std::array<int, 3> n, Vec3 box);
  static std::shared_ptr<const FourierGrid> cubic(int n, double box);
  ~FourierGrid();
  FourierGrid(const FourierGrid&) = delete;
  FourierGrid& operator=(const FourierGrid&) = delete;

  const std::array<int, 3>& n() const { return n_; }
  const Vec3& box() const { return box_; }
  double dx(int axis) const { return box_[axis] / n_[axis]; }
  double dV() const { return dV_; }
  double volume() const { return box_[0] * box_[1] * box_[2]; }
  std::size_t size() const { return size_; }
  // Smallest Nyquist momentum over the three axes.
  double k_max() const;
  double k_spacing(int axis) const;

  std::size_t index(int i, int j, int k) const {
    return (static_cast<std::size_t>(i) * n_[1] + j) * n_[2] + k;
  }
  Vec3 position(std::size_t idx) const;
  double coord(int axis, int i) const { return -0.5 * box_[axis] + i * dx(axis); }
  int freq_index(int axis, int i) const { return i <= n_[axis] / 2 - (n_[axis] % 2 == 0 ? 1 : 0) ? i : i - n_[axis]; }
  double kcomp(int axis, int i) const;
  Vec3 kvec(std::size_t idx) const;
  const RVec& k2() const { return k2_; }

  CVec forward(const CVec& f) const;
  CVec forward(const RVec& f) const;
  CVec inverse(const CVec& fhat) const;
  RVec inverse_real(const CVec& fhat) const;

  // Fraction of spectral mass above k_max/2; the aliasing guard threshold is 1e-8.
  double spectral_tail_fraction(const CVec& fhat) const;
  void check_aliasing(const CVec& fhat, const char* what, double threshold = 1e-8) const;

  bool same_as(const FourierGrid& o) const { return n_ == o.n_ && box_ == o.box_; }
  std::string spec_json() const;

  // Lazily constructed free-space Coulomb operator shared by all users of this grid.
  const CoulombOperator& coulomb() const;

 private:
  FourierGrid(std::array<int, 3> n, Vec3 box);
  void transform(const cplx* in, cplx* out, int sign) const;

  std::array<int, 3> n_;
  Vec3 box_;
  double dV_;
  std::size_t size_;
  RVec k2_;
  std::vector<signed char> phase_;  // (-1)^(m_x+m_y+m_z), shifts the origin to the box centre
  void* plan_fwd_ = nullptr;
  void* plan_bwd_ = nullptr;
  mutable std::once_flag coulomb_once_;
  mutable std::unique_ptr<CoulombOperator> coulomb_;
};

using GridPtr = std::shared_ptr<const FourierGrid>;

// Serialises FFTW planner calls; execution on distinct arrays is thread safe.
std::mutex& fftw_planner_mutex();

// Worker count from BDFNB_WORKERS (default 1); loops run index-ordered so output is deterministic.
int worker_count();
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace bdfnb
