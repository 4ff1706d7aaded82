#pragma once

#include <Eigen/Dense>
#include <memory>
#include <optional>
#include <vector>

#include "bdfnb/dirac.hpp"
#include "bdfnb/fields.hpp"
#include "bdfnb/radial_grid.hpp"

namespace bdfnb {

struct PekarOptions {
  double dt = 0.01;
  double initial_width = 1.0;   // Gaussian guess exp(-r^2/(2 w^2))
  int max_flow_steps = 4000;
  int max_polish_steps = 5000;
  double flow_stall = 1e-11;    // flow stage stops once the per-step energy change is below this
  std::optional<std::vector<double>> initial_profile;  // overrides the Gaussian guess
};

// Radial Choquard-Pekar minimiser, normalised so that 4 pi \int phi^2 r^2 dr = 1.
struct PekarState {
  RadialGrid grid;
  std::vector<double> phi;
  double energy = 0.0;
  double kinetic = 0.0;
  double coulomb = 0.0;
  double multiplier = 0.0;  // mu in -Lap phi - 2 v phi = mu phi
  double residual = 0.0;
  Vec3 center{0.0, 0.0, 0.0};
  int flow_steps = 0;
  int polish_steps = 0;
  double tail_rate = 0.0;   // fitted decay rate of phi at large r
  bool tail_ok = false;
  std::vector<double> energy_history;  // energies during the imaginary-time stage

  double value(double r) const;   // spline interpolant, zero beyond r_max
  double value_at_origin() const;
  double virial_lambda() const { return coulomb / (2.0 * kinetic); }

  // Profile sampled on a 3D grid, centred at c, embedded along a unit spinor direction.
  SpinorField on_grid(const GridPtr& g, const Vec3& c, const Vec4& direction) const;
  CVec scalar_on_grid(const GridPtr& g, const Vec3& c) const;

  std::shared_ptr<const void> spline;  // opaque interpolant
  void build_interpolant();
};

// Imaginary-time flow followed by a preconditioned-gradient polish on a uniform radial grid.
PekarState pekar_ground(const RadialGrid& grid, double tol, const PekarOptions& opts = {});

// Radial functional evaluations on a uniform grid (exposed for tests).
struct RadialPekarParts {
  double norm2 = 0.0, kinetic = 0.0, coulomb = 0.0, multiplier = 0.0, residual = 0.0;
  std::vector<double> potential;  // v = phi^2 * 1/|x|
};
RadialPekarParts radial_pekar_parts(const RadialGrid& grid, const std::vector<double>& phi);

struct PekarParts {
  double kinetic = 0.0;
  double coulomb = 0.0;
  double energy = 0.0;
};
// E_PT(psi) = ||grad psi||^2 - D(|psi|^2, |psi|^2) on a 3D grid.
PekarParts pekar_parts(const SpinorField& psi);
double pekar_energy(const SpinorField& psi);
double kinetic_energy_nr(const SpinorField& psi);  // ||grad psi||^2
double kinetic_energy_nr(const GridPtr& g, const SpinorHat& h);

// ---------------------------------------------------------------------------------------------
// Two-electron Pekar-Tomasevitch analysis.

struct SlaterPair {
  SpinorField h1, h2;
  cplx overlap = 0.0;
  double d_psi = 0.0;
  double r_g = 0.0;
  std::array<double, 2> delta_norms{0.0, 0.0};
  std::array<Vec3, 2> centers{};
};

struct PairEnergyParts {
  double kinetic = 0.0;
  double direct = 0.0;    // D(rho, rho)
  double exchange = 0.0;  // \iint |Gamma(x,y)|^2/|x-y|
  double d12 = 0.0;       // D(n1, n2)
  double dqq = 0.0;       // D(q, q), q = h1^dagger h2
  double m2 = 0.0;        // d12 - dqq
  double energy = 0.0;
};
PairEnergyParts pt2_parts(const SlaterPair& pair, double U);
double pt2_energy(const SlaterPair& pair, double U);

struct CharacteristicLength {
  double d_psi = 0.0;
  Eigen::Matrix2cd rotation = Eigen::Matrix2cd::Identity();
  bool degraded = false;
};
// Minimises D(|a h1 + b h2|^2, |-conj(b) h1 + conj(a) h2|^2) over SU(2).
CharacteristicLength characteristic_length(const SlaterPair& pair);
double rotated_cross_coulomb(const SlaterPair& pair, const Eigen::Matrix2cd& m);

struct ManifoldFit {
  SpinorField phi;
  double distance = 0.0;  // H^1 distance to the Pekar manifold
  Vec3 center{0.0, 0.0, 0.0};
  Vec4 direction = Vec4::Zero();
};
ManifoldFit manifold_distance(const SpinorField& h, const PekarState& reference);

struct ClusterRecipe {
  double tail_radius = 20.0;   // box margin around each cluster centre
  double dx = 0.5;             // target grid spacing
  bool opposite_spin = false;  // place the second cluster in spinor slot 2
  double cutoff_radius = 0.0;  // > 0 truncates each profile smoothly at this radius
  bool fit_centers = true;     // run the manifold fit for r_g and delta norms
};

// Two translated profiles at +-R/2 on the x axis, Loewdin-orthonormalised.
SlaterPair build_pair(const PekarState& pekar, double R, const ClusterRecipe& recipe);
GridPtr pair_grid(double R, const ClusterRecipe& recipe);
// Single profile energy on a cubic grid with the recipe's spacing (the reference for Delta_2 E).
double single_cluster_energy(const PekarState& pekar, const ClusterRecipe& recipe);
SpinorField cluster_orbital(const PekarState& pekar, const GridPtr& g, const Vec3& c, const Vec4& dir,
                            double cutoff_radius);

struct BindingRow {
  double R = 0.0;
  double delta_e = 0.0;
  double d_psi = 0.0;
  double m2 = 0.0;
  double delta_e_times_R = 0.0;
  double delta_e_over_d = 0.0;
  double m2_times_R = 0.0;
  double r_g = 0.0;
  double a_part = 0.0;  // U-independent part of Delta_2 E
  bool overlap_warning = false;
};
std::vector<BindingRow> binding_scan(const PekarState& pekar, double U, const std::vector<double>& separations,
                                     const ClusterRecipe& recipe);

struct CriticalU {
  double u_c = 0.0;
  double lo = 0.0, hi = 0.0;
  int iterations = 0;
  std::vector<BindingRow> rows;  // U-independent data used for the bisection
};
CriticalU critical_U(const PekarState& pekar, const std::vector<double>& separations, double tol,
                     const ClusterRecipe& recipe, double u_lo = 0.0, double u_hi = 16.0);

}  // namespace bdfnb
