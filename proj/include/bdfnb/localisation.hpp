#pragma once

#include <array>
#include <string>
#include <vector>

#include "bdfnb/bdf.hpp"

namespace bdfnb {

// Radial bump: 1 on [0, 1], quintic smoothstep down to 0 on [1, 2], 0 beyond. C^2 everywhere.
double base_bump(double t);
double base_bump_derivative(double t);

// lambda_0 = C0 / (L R_g).
double lambda_zero(double L, double r_g, double c0 = 4.0);

// Two-centre cutoffs. Centres, r_g and A are in cluster units; positions passed to the evaluators are
// physical, i.e. multiplied by scale_c.
class CutoffFamily {
 public:
  CutoffFamily(Vec3 z1, Vec3 z2, double lambda_loc, double A, double scale_c);

  const Vec3& z1() const { return z1_; }
  const Vec3& z2() const { return z2_; }
  double r_g() const { return r_g_; }
  double lambda() const { return lambda_; }
  double A() const { return A_; }
  double scale() const { return c_; }

  // xi_{lambda R_g}(x - c z_j), j in {1, 2}.
  double xi(int j, const Vec3& x) const { return xi(j, x, lambda_); }
  double xi(int j, const Vec3& x, double lambda) const;
  double eta(const Vec3& x) const { return eta(x, lambda_); }
  double eta(const Vec3& x, double lambda) const;
  // xi_A is centred at the midpoint of the two clusters.
  double xi_A(const Vec3& x) const;
  double theta_A(const Vec3& x) const;
  double d(const Vec3& x) const;  // physical distance to the nearer centre
  // Sup of |grad xi_j| (physical units).
  double xi_gradient_bound(double lambda) const;

  RVec xi_on(const GridPtr& g, int j) const { return xi_on(g, j, lambda_); }
  RVec xi_on(const GridPtr& g, int j, double lambda) const;
  RVec eta_on(const GridPtr& g, double lambda) const;
  RVec xi_A_on(const GridPtr& g) const;
  RVec d_on(const GridPtr& g) const;

 private:
  Vec3 z1_, z2_;
  double r_g_, lambda_, A_, c_;
  Vec3 centre(int j) const;
};

// Throws ConfigError when |z1 - z2| != r_g, when lambda_loc is outside (lambda0, 1/3], or when A < 2 r_g.
// Above 1/3 the supports of xi_1 and xi_2 overlap and xi_1^2 + xi_2^2 can exceed 1.
CutoffFamily make_cutoffs(const Vec3& z1, const Vec3& z2, double lambda_loc, double r_g, double A,
                          double scale_c = 1.0, double lambda0 = 0.0);

// \int d^power xi_A^2 eta^2 sum_j |M psi_j|^2 with M = |D0|^{1/2} when half_d0, else the identity.
// Throws AccuracyError if the orbitals are not resolved well enough to apply |D0|^{1/2}.
double decay_moment(const std::vector<SpinorField>& orbitals, const CutoffFamily& family, int power, bool half_d0);
double decay_moment(const SpinorField& psi, const CutoffFamily& family, int power, bool half_d0);

// X psi = P+ (zeta P+ psi) + P- (zeta P- psi) with the free projectors.
SpinorField localise(const SpinorField& psi, const RVec& zeta);

// Applies X to every factor. The vacuum part is localised through its density, rho_gamma -> zeta^2 rho_gamma,
// and the result no longer carries a gamma operator.
RankStructuredState localise_state(const RankStructuredState& state, const RVec& zeta);

// max over the trial spinors of ||P+ zeta P- phi|| / ||phi||.
double offdiagonal_norm(const RVec& zeta, const std::vector<SpinorField>& trials);
// max over the trial spinors of ||[|D0|^{1/2}, zeta] |D0|^{-1/2} phi|| / ||phi||.
double commutator_norm(const RVec& zeta, const std::vector<SpinorField>& trials);

struct PartitionReport {
  double total_energy = 0.0;
  std::array<double, 2> cluster_energies{0.0, 0.0};
  double cross_exchange = 0.0;  // \iint over B1 x B2 and B2 x B1 of |psi1 ^ psi2|^2 / |x - y|
  double residual = 0.0;        // total - clusters - (alpha/2) cross
  std::array<double, 2> charge_split{0.0, 0.0};  // Tr0 of each localised state, 1 + eps_j
  double total_charge = 0.0;
  double r_g = 0.0;
  double scale = 0.0;
  double eps_sum() const { return charge_split[0] + charge_split[1] - total_charge; }
};

// Needs a rank-2 state. The balls B_j have radius lambda r_g around the centres (physical units).
PartitionReport energy_partition(const RankStructuredState& state, const CutoffFamily& family);

// Energy of one cluster carrying charge q, sampled on increasing charges.
struct EnergyCurve {
  std::vector<double> charge;
  std::vector<double> energy;
  // Piecewise linear; throws DataError outside the sampled range or with fewer than two samples.
  double operator()(double q) const;
};

struct NoBindingVerdict {
  double r_g = 0.0;
  double delta2 = 0.0;       // E(total) - 2 E(1)
  double interaction = 0.0;  // (alpha/2) cross
  double residual = 0.0;
  double concavity_defect = 0.0;  // max(0, E(2) - E(1 + eps) - E(1 - eps))
  double bound = 0.0;             // |residual| + concavity_defect
  double eps = 0.0;
  bool no_binding = false;
  std::string verdict() const { return no_binding ? "no-binding" : "inconclusive"; }
};

// E(2) is taken as min(2 E(1), total) so that the ansatz itself is an admissible competitor.
NoBindingVerdict no_binding_check(const PartitionReport& partition, const ModelParams& params, double e1,
                                  const EnergyCurve& curve);

// Two compact clusters of the Pekar profile at distance r_g along x, opposite spin slots.
struct PartitionSetup {
  double r_g = 30.0;
  double cutoff_radius = 8.0;  // profile truncation, needs cutoff_radius <= r_g / 3
  double dx = 0.5;             // grid spacing in cluster units
  double margin = 4.0;
  bool with_gamma = true;
};
RankStructuredState build_partition_state(const ModelParams& params, const PekarState& pekar,
                                          const PartitionSetup& setup);
CutoffFamily partition_family(const ModelParams& params, const PartitionSetup& setup);
// E(q) for q in {0, 1/2, 1, 3/2, 2} on a single-cluster grid with the same spacing and truncation.
EnergyCurve single_cluster_curve(const ModelParams& params, const PekarState& pekar, const PartitionSetup& setup);

}  // namespace bdfnb
