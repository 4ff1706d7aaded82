#pragma once

#include <array>
#include <optional>

#include "bdfnb/fourier_grid.hpp"

namespace bdfnb {

// Real charge density on a Fourier grid with a lazily filled transform cache.
class DensityField {
 public:
  DensityField() = default;
  DensityField(GridPtr grid, RVec values);
  static DensityField zero(GridPtr grid);

  const GridPtr& grid() const { return grid_; }
  const RVec& values() const { return values_; }
  // Mutable access drops the Fourier cache.
  RVec& mutable_values();
  const CVec& fourier() const;
  double total_charge() const;

 private:
  GridPtr grid_;
  RVec values_;
  mutable std::optional<CVec> cache_;
};

using SpinorHat = std::array<CVec, 4>;

// Four-component complex wavefunction on a Fourier grid.
class SpinorField {
 public:
  SpinorField() = default;
  explicit SpinorField(GridPtr grid);
  SpinorField(GridPtr grid, std::array<CVec, 4> comps);
  // Embeds a scalar profile into one spinor slot.
  static SpinorField from_scalar(GridPtr grid, const CVec& f, int slot = 0);
  static SpinorField from_fourier(GridPtr grid, const SpinorHat& h);

  const GridPtr& grid() const { return grid_; }
  CVec& operator[](int a) { return c_[a]; }
  const CVec& operator[](int a) const { return c_[a]; }

  double norm2() const;  // \int sum_a |psi_a|^2
  double l2_norm() const;
  RVec density() const;
  cplx inner(const SpinorField& o) const;  // <this, o>, antilinear in this
  // Pointwise psi^dagger(x) phi(x) for this = psi.
  CVec pair_density(const SpinorField& phi) const;
  SpinorHat fourier() const;

  SpinorField& operator+=(const SpinorField& o);
  SpinorField& operator-=(const SpinorField& o);
  SpinorField& operator*=(cplx s);
  SpinorField scaled(cplx s) const;
  SpinorField multiplied(const RVec& w) const;  // pointwise real weight

 private:
  GridPtr grid_;
  std::array<CVec, 4> c_;
};

SpinorField operator+(SpinorField a, const SpinorField& b);
SpinorField operator-(SpinorField a, const SpinorField& b);

// Inner product and norm in Fourier representation (grid quadrature dk^3).
cplx hat_inner(const GridPtr& g, const SpinorHat& a, const SpinorHat& b);
void require_same_grid(const GridPtr& a, const GridPtr& b);

}  // namespace bdfnb
