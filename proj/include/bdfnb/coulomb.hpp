#pragma once

#include <Eigen/Dense>
#include <vector>

#include "bdfnb/fields.hpp"

namespace bdfnb {

enum class PairKernel { coulomb, inverse_square };
enum class CoulombBoundary { isolated, periodic_neutral };

// Two-body radial kernel 1/|x-y| (or 1/|x-y|^2) acting on fields of one grid.
//
// Isolated boundary: fields are zero-padded to twice the box on every axis and the kernel is
// split a la Ewald. The long-range smooth part is sampled in real space on the minimum-image
// cell (exact for every separation that fits in the box); the short-range singular part enters
// through its analytic transform. Fields must be negligible outside the ball inscribed in the box.
class CoulombOperator {
 public:
  CoulombOperator(const FourierGrid& grid, PairKernel kind, CoulombBoundary boundary);
  ~CoulombOperator();
  CoulombOperator(const CoulombOperator&) = delete;
  CoulombOperator& operator=(const CoulombOperator&) = delete;

  // Padded transform of a real field, reusable across pairings.
  CVec transform(const RVec& a) const;
  double pairing_hat(const CVec& A, const CVec& B) const;

  // D(a,b) = \iint a(x) b(y) K(x-y) dx dy.
  double pairing(const RVec& a, const RVec& b) const;
  // Hermitian form \iint conj(a(x)) b(y) K(x-y) for complex fields.
  cplx pairing(const CVec& a, const CVec& b) const;
  // Gram matrix of pairings for a family of real fields (each transformed once).
  Eigen::MatrixXd gram(const std::vector<const RVec*>& fields) const;

  // v(x) = \int K(x-y) rho(y) dy on the original grid.
  RVec potential(const RVec& rho) const;
  CVec potential(const CVec& rho) const;

  PairKernel kind() const { return kind_; }
  CoulombBoundary boundary() const { return boundary_; }
  double split_parameter() const { return a_; }

 private:
  const FourierGrid& grid_;
  PairKernel kind_;
  CoulombBoundary boundary_;
  std::array<int, 3> P_;
  std::size_t npad_ = 0, nhalf_ = 0;
  double a_ = 0.0;
  RVec khat_;  // discrete kernel on the r2c half spectrum
  void* plan_r2c_ = nullptr;
  void* plan_c2r_ = nullptr;

  void embed(const RVec& a, RVec& pad) const;
  double half_weight(std::size_t idx) const;
};

// Convenience wrappers using the grid's shared isolated Coulomb operator.
double coulomb_pairing(const GridPtr& g, const RVec& a, const RVec& b);
RVec coulomb_potential(const GridPtr& g, const RVec& rho);
// Field-level entry points: grids must agree, complex input must be real to round-off.
double coulomb_pairing(const DensityField& nu, const DensityField& rho);
RVec coulomb_potential(const DensityField& rho);
RVec coulomb_potential(const GridPtr& g, const CVec& rho);

}  // namespace bdfnb
