#include "bdfnb/fields.hpp"

#include <cmath>

#include "bdfnb/errors.hpp"

namespace bdfnb {

void require_same_grid(const GridPtr& a, const GridPtr& b) {
  if (!a || !b || !(a.get() == b.get() || a->same_as(*b))) throw ConfigError("grid mismatch");
}

DensityField::DensityField(GridPtr grid, RVec values) : grid_(std::move(grid)), values_(std::move(values)) {
  if (!grid_ || values_.size() != grid_->size()) throw ConfigError("density size does not match grid");
  for (double v : values_)
    if (!std::isfinite(v)) throw DataError("non-finite density value");
}

DensityField DensityField::zero(GridPtr grid) {
  const std::size_t n = grid->size();
  return DensityField(std::move(grid), RVec(n, 0.0));
}

RVec& DensityField::mutable_values() {
  cache_.reset();
  return values_;
}

const CVec& DensityField::fourier() const {
  if (!cache_) cache_ = grid_->forward(values_);
  return *cache_;
}

double DensityField::total_charge() const {
  double s = 0.0;
  for (double v : values_) s += v;
  return s * grid_->dV();
}

SpinorField::SpinorField(GridPtr grid) : grid_(std::move(grid)) {
  for (auto& c : c_) c.assign(grid_->size(), cplx(0.0));
}

SpinorField::SpinorField(GridPtr grid, std::array<CVec, 4> comps) : grid_(std::move(grid)), c_(std::move(comps)) {
  for (auto& c : c_)
    if (c.size() != grid_->size()) throw ConfigError("spinor component size does not match grid");
}

SpinorField SpinorField::from_scalar(GridPtr grid, const CVec& f, int slot) {
  SpinorField s(grid);
  if (slot < 0 || slot > 3) throw ConfigError("spinor slot must be 0..3");
  s.c_[slot] = f;
  if (f.size() != grid->size()) throw ConfigError("scalar profile size does not match grid");
  return s;
}

SpinorField SpinorField::from_fourier(GridPtr grid, const SpinorHat& h) {
  SpinorField s(grid);
  for (int a = 0; a < 4; ++a) s.c_[a] = grid->inverse(h[a]);
  return s;
}

double SpinorField::norm2() const {
  long double s = 0.0L;
  for (const auto& c : c_)
    for (const auto& v : c) s += std::norm(v);
  return static_cast<double>(s * grid_->dV());
}

double SpinorField::l2_norm() const { return std::sqrt(norm2()); }

RVec SpinorField::density() const {
  RVec d(grid_->size(), 0.0);
  for (const auto& c : c_)
    for (std::size_t i = 0; i < d.size(); ++i) d[i] += std::norm(c[i]);
  return d;
}

cplx SpinorField::inner(const SpinorField& o) const {
  require_same_grid(grid_, o.grid_);
  long double re = 0.0L, im = 0.0L;
  for (int a = 0; a < 4; ++a)
    for (std::size_t i = 0; i < c_[a].size(); ++i) {
      const cplx t = std::conj(c_[a][i]) * o.c_[a][i];
      re += t.real();
      im += t.imag();
    }
  return cplx(static_cast<double>(re), static_cast<double>(im)) * grid_->dV();
}

CVec SpinorField::pair_density(const SpinorField& phi) const {
  require_same_grid(grid_, phi.grid_);
  CVec q(grid_->size(), cplx(0.0));
  for (int a = 0; a < 4; ++a)
    for (std::size_t i = 0; i < q.size(); ++i) q[i] += std::conj(c_[a][i]) * phi.c_[a][i];
  return q;
}

SpinorHat SpinorField::fourier() const {
  SpinorHat h;
  for (int a = 0; a < 4; ++a) h[a] = grid_->forward(c_[a]);
  return h;
}

SpinorField& SpinorField::operator+=(const SpinorField& o) {
  require_same_grid(grid_, o.grid_);
  for (int a = 0; a < 4; ++a)
    for (std::size_t i = 0; i < c_[a].size(); ++i) c_[a][i] += o.c_[a][i];
  return *this;
}

SpinorField& SpinorField::operator-=(const SpinorField& o) {
  require_same_grid(grid_, o.grid_);
  for (int a = 0; a < 4; ++a)
    for (std::size_t i = 0; i < c_[a].size(); ++i) c_[a][i] -= o.c_[a][i];
  return *this;
}

SpinorField& SpinorField::operator*=(cplx s) {
  for (auto& c : c_)
    for (auto& v : c) v *= s;
  return *this;
}

SpinorField SpinorField::scaled(cplx s) const {
  SpinorField r = *this;
  r *= s;
  return r;
}

SpinorField SpinorField::multiplied(const RVec& w) const {
  SpinorField r = *this;
  for (auto& c : r.c_)
    for (std::size_t i = 0; i < c.size(); ++i) c[i] *= w[i];
  return r;
}

SpinorField operator+(SpinorField a, const SpinorField& b) { return a += b; }
SpinorField operator-(SpinorField a, const SpinorField& b) { return a -= b; }

cplx hat_inner(const GridPtr& g, const SpinorHat& a, const SpinorHat& b) {
  long double re = 0.0L, im = 0.0L;
  for (int c = 0; c < 4; ++c)
    for (std::size_t i = 0; i < a[c].size(); ++i) {
      const cplx t = std::conj(a[c][i]) * b[c][i];
      re += t.real();
      im += t.imag();
    }
  const double dk3 = std::pow(2.0 * M_PI, 3) / g->volume();
  return cplx(static_cast<double>(re), static_cast<double>(im)) * dk3;
}

}  // namespace bdfnb
