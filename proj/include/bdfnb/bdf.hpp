#pragma once

#include <array>
#include <memory>
#include <optional>
#include <vector>

#include "bdfnb/pekar.hpp"
#include "bdfnb/polarisation.hpp"

namespace bdfnb {

// First-order vacuum response gamma = -alpha K[V] for a real potential V, applied matrix-free.
// 1/(E(p) + E(q)) is expanded with laplace_rule, so each node costs one multiplication by V per block.
class GammaOperator {
 public:
  GammaOperator(GridPtr grid, RVec potential, const ModelParams& params, double rel_tol = 1e-10);

  SpinorHat apply_hat(const SpinorHat& h) const;
  SpinorField apply(const SpinorField& psi) const;

  const GridPtr& grid() const { return grid_; }
  const RVec& potential() const { return V_; }
  std::size_t nodes() const { return rule_.s.size(); }

 private:
  GridPtr grid_;
  RVec V_;
  ModelParams params_;
  RVec E_;
  LaplaceRule rule_;
};

// Q = N + gamma with N = sum_j |psi_j><psi_j| and gamma the order-1 polarisation of the vacuum.
// The low-rank exchange correction Q_{1,0}[N] is kept only through its density (vacuum_density order 2).
struct RankStructuredState {
  GridPtr grid;
  ModelParams params;
  std::vector<SpinorField> orbitals;
  std::shared_ptr<const PolarisationTable> table;  // null without gamma
  std::optional<VacuumCorrection> gamma;
  std::shared_ptr<const GammaOperator> gamma_op;
  DensityField source_total;  // n0 + rho_gamma; gamma = -alpha K[v(source_total)]
  bool orthonormal = true;     // false for localised states, whose factors are only a low-rank square root

  std::size_t rank() const { return orbitals.size(); }
  bool has_gamma() const { return gamma.has_value(); }
  RVec orbital_density() const;
  RVec charge_density() const;  // rho_Q = n + rho_gamma
  // Common grid, and orthonormality to 1e-8 when flagged; throws PreconditionError / ConfigError.
  void validate() const;
};

// Wraps orbitals (taken as given) and, if requested, the order-1 gamma sourced by their density.
// orthonormal = false accepts fractional occupations sum_j |psi_j><psi_j| with ||psi_j|| <= 1.
RankStructuredState assemble_state(const ModelParams& params, std::vector<SpinorField> orbitals, bool with_gamma,
                                   GridPtr grid = nullptr, bool orthonormal = true);

struct ClusterStateOptions {
  int n = 64;
  double box_unit = 28.0;            // box edge in Pekar units, multiplied by the scale
  std::vector<Vec3> centres{{0.0, 0.0, 0.0}};  // Pekar units
  std::vector<Vec4> directions;      // defaults to spinor slot 0 for every orbital
  bool with_gamma = true;
  double scale = 0.0;                // length scale c; 0 uses params.c_scale
  std::array<int, 3> dims{0, 0, 0};  // non-cubic grid when all positive, with box_xyz in Pekar units
  Vec3 box_xyz{0.0, 0.0, 0.0};
  double cutoff_radius = 0.0;        // > 0 truncates each profile smoothly at this radius (Pekar units)
};

// Scaled Pekar orbitals c^{-3/2} phi(x/c - z_j), made orthogonal to the polarised vacuum by
// psi -> P+ psi - gamma psi and Loewdin-orthonormalised afterwards.
RankStructuredState build_cluster_state(const ModelParams& params, const PekarState& pekar,
                                        const ClusterStateOptions& opts);
RankStructuredState build_test_state(const ModelParams& params, const PekarState& pekar, int n = 64,
                                     double box_unit = 28.0);

struct ChargeTrace {
  double orbitals = 0.0;
  double gamma = 0.0;  // Tr(P+ gamma P+) + Tr(P- gamma P-)
  double total = 0.0;
};
ChargeTrace p0_trace(const RankStructuredState& state);

struct KineticParts {
  double rest = 0.0;            // number of orbitals
  double orbital_excess = 0.0;  // sum <D psi, psi> - rest
  double vacuum = 0.0;          // (alpha/2) D(rho, f rho) for the gamma source
  double total = 0.0;
  double excess() const { return orbital_excess + vacuum; }
};
KineticParts kinetic_energy(const RankStructuredState& state);

struct ExchangeParts {
  double orbital = 0.0;        // \iint |N(x,y)|^2 / |x-y|
  double orbital_gamma = 0.0;  // 2 Re \iint tr(N(x,y)^* gamma(x,y)) / |x-y|, small grids only
  bool gamma_included = false;
  double total = 0.0;
};
// include_gamma needs a gamma and a grid of at most 12^3 points.
ExchangeParts exchange_term(const RankStructuredState& state, bool include_gamma = false);

struct BdfEnergyParts {
  KineticParts kinetic;
  ExchangeParts exchange;
  double direct = 0.0;       // D(rho_Q, rho_Q)
  double nu_coupling = 0.0;  // D(nu, rho_Q)
  double energy = 0.0;
  double energy_minus_rest = 0.0;
};
// kinetic - alpha D(nu, rho_Q) + (alpha/2)(D(rho_Q, rho_Q) - exchange).
BdfEnergyParts bdf_energy(const RankStructuredState& state, const DensityField* nu = nullptr,
                          bool include_gamma_exchange = false);

struct MeanFieldEntry {
  double mu = 0.0;
  double mu_minus_one = 0.0;
  double residual = 0.0;
  double gap_product = 0.0;  // (1 - mu) c^2
};
struct MeanFieldReport {
  std::vector<double> mu_values, mu_minus_one, residuals, gap_products;
};
// D_Q = bold D + alpha (v[rho_Q] - R_N); the exchange with gamma is of higher order and dropped.
MeanFieldEntry mean_field_residual(const RankStructuredState& state, std::size_t j);
MeanFieldReport mean_field_report(const RankStructuredState& state);

// Factors of the bound ||D psi_j||^2 - 1 <= alpha ||rho_gamma||_C ||n_j||_C + alpha ||gamma||_S2 ||R_{N_j}||_S2
// + (alpha ||B |grad|^{-1/2}|| ||grad|^{1/2} psi_j||)^2 with B = v[rho_Q] - R_N.
struct ResdeltaReport {
  double lhs = 0.0;
  double lower = 0.0;  // \int p^2 (Lambda^{-2}(2 + p^2/Lambda^2) + 1 + p^2/Lambda^2) |psi^|^2
  double rho_gamma_c = 0.0, n_c = 0.0;
  double gamma_s2 = 0.0, exchange_s2 = 0.0;
  double b_norm = 0.0, grad_half = 0.0;
  double rhs = 0.0;
  double slack = 1.5;
  bool holds = false;
  bool lower_holds = false;
};
ResdeltaReport resdelta_check(const RankStructuredState& state, std::size_t j, double slack = 1.5,
                              int power_iterations = 60);

// ||gamma||_S2 from the Hilbert-Schmidt multiplier h_Lambda.
double gamma_hs_norm(const RankStructuredState& state);
// Tr(-Lap (1 - Lap/Lambda^2 + Lap^2/Lambda^4) N).
double kinetic_bridge(const RankStructuredState& state);

// bold D psi in Fourier space.
SpinorHat apply_dirac_hat(const GridPtr& g, const SpinorHat& h, const ModelParams& params);
// R_N psi (x) = sum_i psi_i(x) \int psi_i(y)^dagger psi(y) / |x-y| dy.
SpinorField exchange_apply(const std::vector<SpinorField>& orbitals, const SpinorField& psi);
void loewdin_orthonormalise(std::vector<SpinorField>& orbitals);

}  // namespace bdfnb
