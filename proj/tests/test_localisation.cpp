#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "bdfnb/errors.hpp"
#include "bdfnb/localisation.hpp"
#include "bdfnb/multipliers.hpp"
#include "bdfnb/dirac.hpp"
#include "test_util.hpp"

using namespace bdfnb;

namespace {

const PekarState& pekar() {
  static const PekarState s = pekar_ground(RadialGrid::uniform(3999, 40.0), 1e-10);
  return s;
}

ModelParams regime(double alpha, double L = 0.1) { return z3_u0(alpha, std::exp(L / alpha)); }

double slope(const std::vector<double>& x, const std::vector<double>& y) {
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= x.size();
  my /= y.size();
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (std::log(x[i]) - mx) * (std::log(y[i]) - my);
    sxx += (std::log(x[i]) - mx) * (std::log(x[i]) - mx);
  }
  return sxy / sxx;
}

// Spinor with a compactly supported radial profile around c.
SpinorField bump_spinor(const GridPtr& g, const Vec3& c, double radius) {
  SpinorField s(g);
  for (int a = 0; a < 4; ++a) s[a].assign(g->size(), cplx(0.0));
  for (std::size_t i = 0; i < g->size(); ++i) {
    const Vec3 x = g->position(i);
    const double r = std::sqrt(std::pow(x[0] - c[0], 2) + std::pow(x[1] - c[1], 2) + std::pow(x[2] - c[2], 2));
    s[0][i] = base_bump(2.0 * r / radius);
  }
  return s.scaled(1.0 / s.l2_norm());
}

PartitionSetup small_setup(double R) {
  PartitionSetup s;
  s.r_g = R;
  s.cutoff_radius = 5.0;
  s.margin = 3.0;
  return s;
}

}  // namespace

TEST(BaseBump, PlateauSupportAndSmoothness) {
  EXPECT_EQ(base_bump(0.0), 1.0);
  EXPECT_EQ(base_bump(1.0), 1.0);
  EXPECT_EQ(base_bump(2.0), 0.0);
  EXPECT_EQ(base_bump(5.0), 0.0);
  const double h = 1e-5;
  for (double t = 0.05; t < 2.5; t += 0.05) {
    EXPECT_GE(base_bump(t), 0.0);
    EXPECT_LE(base_bump(t), 1.0);
    EXPECT_NEAR((base_bump(t + h) - base_bump(t - h)) / (2 * h), base_bump_derivative(t), 1e-8);
  }
  // Second derivative vanishes from both sides at the junctions.
  for (double t : {1.0, 2.0}) {
    const double e = 1e-3;
    for (double u : {t - 2 * e, t + 2 * e}) {
      const double d2 = (base_bump(u + e) - 2 * base_bump(u) + base_bump(u - e)) / (e * e);
      EXPECT_LT(std::abs(d2), 0.5);
    }
  }
  EXPECT_NEAR(-base_bump_derivative(1.5), 1.875, 1e-14);
}

TEST(CutoffFamily, PartitionOfUnityOnFullGrid) {
  const GridPtr g = FourierGrid::cubic(40, 30.0);
  for (double lam : {1.0 / 3.0, 0.25, 1.0 / 12.0}) {
    const CutoffFamily f = make_cutoffs({-4.0, 0.0, 0.0}, {4.0, 0.0, 0.0}, lam, 8.0, 32.0);
    const RVec a = f.xi_on(g, 1), b = f.xi_on(g, 2), e = f.eta_on(g, lam);
    double worst = 0.0;
    for (std::size_t i = 0; i < g->size(); ++i) worst = std::max(worst, std::abs(a[i] * a[i] + b[i] * b[i] + e[i] * e[i] - 1.0));
    EXPECT_LT(worst, 1e-12) << lam;
  }
}

TEST(CutoffFamily, TwoHoleFunctionNests) {
  const GridPtr g = FourierGrid::cubic(40, 30.0);
  const CutoffFamily f = make_cutoffs({-2.0, 1.0, 0.0}, {2.0, -2.0, 0.0}, 1.0 / 3.0, 5.0, 20.0);
  const RVec e = f.eta_on(g, 1.0 / 3.0), h = f.eta_on(g, 1.0 / 6.0);
  for (std::size_t i = 0; i < g->size(); ++i) ASSERT_NEAR(e[i], e[i] * h[i], 1e-12);
}

TEST(CutoffFamily, DistanceIsOneLipschitz) {
  const CutoffFamily f = make_cutoffs({0.0, 0.0, -3.0}, {0.0, 0.0, 3.0}, 0.25, 6.0, 24.0, 2.5);
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-40.0, 40.0);
  for (int t = 0; t < 2000; ++t) {
    const Vec3 x{u(rng), u(rng), u(rng)}, y{u(rng), u(rng), u(rng)};
    const double dxy = std::sqrt(std::pow(x[0] - y[0], 2) + std::pow(x[1] - y[1], 2) + std::pow(x[2] - y[2], 2));
    EXPECT_LE(std::abs(f.d(x) - f.d(y)), dxy * (1 + 1e-14));
  }
  // Centres are scaled into physical units.
  EXPECT_NEAR(f.d({0.0, 0.0, 7.5}), 0.0, 1e-14);
  EXPECT_EQ(f.xi(2, {0.0, 0.0, 7.5}), 1.0);
  EXPECT_NEAR(f.theta_A({0.0, 0.0, 0.0}), 0.0, 1e-14);
}

TEST(CutoffFamily, RejectsInvalidGeometry) {
  const Vec3 a{0.0, 0.0, 0.0}, b{6.0, 0.0, 0.0};
  EXPECT_THROW(make_cutoffs(a, b, 0.5, 6.0, 24.0), ConfigError);
  EXPECT_THROW(make_cutoffs(a, b, 0.4, 6.0, 24.0), ConfigError);
  EXPECT_THROW(make_cutoffs(a, b, 0.25, 5.0, 24.0), ConfigError);
  EXPECT_THROW(make_cutoffs(a, b, 0.25, 6.0, 6.0), ConfigError);
  EXPECT_THROW(make_cutoffs(a, b, 0.2, 6.0, 24.0, 1.0, lambda_zero(0.5, 6.0)), ConfigError);
  EXPECT_NO_THROW(make_cutoffs(a, b, 1.0 / 3.0, 6.0, 24.0, 1.0, lambda_zero(3.0, 6.0)));
  EXPECT_NEAR(lambda_zero(0.1, 40.0), 1.0, 1e-15);
}

TEST(DecayMoment, VanishesInsideClusterBall) {
  const GridPtr g = FourierGrid::cubic(48, 48.0);
  const CutoffFamily f = make_cutoffs({-9.0, 0.0, 0.0}, {9.0, 0.0, 0.0}, 1.0 / 3.0, 18.0, 72.0);
  const SpinorField s = bump_spinor(g, {-9.0, 0.0, 0.0}, 5.5);
  EXPECT_EQ(decay_moment(s, f, 2, false), 0.0);
  EXPECT_EQ(decay_moment(s, f, 4, false), 0.0);
  EXPECT_THROW(decay_moment(s, f, 3, false), ConfigError);
}

TEST(DecayMoment, MassGapAndAliasingGuard) {
  const GridPtr g = FourierGrid::cubic(32, 24.0);
  std::mt19937_64 rng(5);
  for (int t = 0; t < 10; ++t) {
    const SpinorField s = testutil::random_spinor(g, rng);
    EXPECT_GE(multiplier_expectation(s, MultiplierSymbol::free_dirac_abs, 1.0, ModelParams{}), s.norm2());
  }
  // A point-like spinor is not resolved.
  SpinorField spike(g);
  for (int a = 0; a < 4; ++a) spike[a].assign(g->size(), cplx(0.0));
  spike[0][g->index(16, 16, 16)] = 1.0;
  const CutoffFamily f = make_cutoffs({-3.0, 0.0, 0.0}, {3.0, 0.0, 0.0}, 0.25, 6.0, 24.0);
  EXPECT_THROW(decay_moment(spike, f, 2, true), AccuracyError);
  EXPECT_NO_THROW(decay_moment(spike, f, 2, false));
}

TEST(DecayMoment, TwoClusterMomentsAreBoundedAndMonotone) {
  ClusterRecipe rc;
  rc.fit_centers = false;
  rc.opposite_spin = true;
  rc.tail_radius = 18.0;
  std::vector<std::vector<double>> m;
  for (double R : {8.0, 16.0}) {
    const SlaterPair sp = build_pair(pekar(), R, rc);
    std::vector<double> row;
    for (double lam : {1.0 / 12.0, 1.0 / 6.0, 1.0 / 3.0}) {
      const CutoffFamily f = make_cutoffs(sp.centers[0], sp.centers[1], lam, R, 4.0 * R);
      row.push_back(decay_moment({sp.h1, sp.h2}, f, 2, true));
    }
    for (std::size_t k = 1; k < row.size(); ++k) EXPECT_LE(row[k], row[k - 1]);
    m.push_back(row);
  }
  for (std::size_t k = 0; k < m[0].size(); ++k) EXPECT_LE(m[1][k] / m[0][k], 1.2);
}

TEST(Localise, IdentityZeroAndHermiticity) {
  const GridPtr g = FourierGrid::cubic(24, 16.0);
  std::mt19937_64 rng(3);
  const SpinorField a = testutil::random_spinor(g, rng), b = testutil::random_spinor(g, rng);
  const SpinorField id = localise(a, RVec(g->size(), 1.0));
  EXPECT_LT((id - a).l2_norm(), 1e-12);
  EXPECT_EQ(localise(a, RVec(g->size(), 0.0)).l2_norm(), 0.0);

  const CutoffFamily f = make_cutoffs({-2.0, 0.0, 0.0}, {2.0, 0.0, 0.0}, 0.25, 4.0, 16.0);
  const RVec z = f.xi_on(g, 1);
  EXPECT_NEAR(std::abs(a.inner(localise(b, z)) - localise(a, z).inner(b)), 0.0, 1e-13);
  // X is a contraction for 0 <= zeta <= 1.
  EXPECT_LE(localise(a, z).l2_norm(), 1.0 + 1e-12);
}

TEST(Localise, StateLevelIdentityAndZero) {
  const ModelParams p = regime(0.05);
  ClusterStateOptions o;
  o.n = 24;
  o.box_unit = 20.0;
  const RankStructuredState st = build_cluster_state(p, pekar(), o);
  const double e = bdf_energy(st).energy;
  const RankStructuredState same = localise_state(st, RVec(st.grid->size(), 1.0));
  EXPECT_NEAR(bdf_energy(same).energy, e, 1e-13);
  const RankStructuredState none = localise_state(st, RVec(st.grid->size(), 0.0));
  EXPECT_EQ(bdf_energy(none).energy, 0.0);
  EXPECT_EQ(p0_trace(none).total, 0.0);
  EXPECT_FALSE(same.orthonormal);
  EXPECT_FALSE(same.gamma_op);
}

TEST(Localise, OffDiagonalAndCommutatorScaleWithGradient) {
  // The cutoff only matters near the packets, so the grid covers a neighbourhood of its steepest shell.
  const GridPtr g = FourierGrid::cubic(32, 24.0);
  std::mt19937_64 rng(17);
  std::normal_distribution<double> nd(0.0, 1.0);
  std::vector<double> grad, off, comm;
  for (double s : {16.0, 32.0, 64.0, 128.0}) {
    const CutoffFamily f = make_cutoffs({-0.5 * s, 0.0, 0.0}, {0.5 * s, 0.0, 0.0}, 1.0 / 3.0, s, 4.0 * s);
    const RVec z = f.xi_on(g, 1);
    std::vector<SpinorField> trials;
    for (int t = 0; t < 50; ++t) {
      const Vec3 c{0.5 * nd(rng), 0.5 * nd(rng), 0.5 * nd(rng)};
      SpinorField sp(g);
      for (int a = 0; a < 4; ++a) {
        const cplx amp(nd(rng), nd(rng));
        sp[a].resize(g->size());
        for (std::size_t i = 0; i < g->size(); ++i) {
          const Vec3 x = g->position(i);
          const double r2 = std::pow(x[0] - c[0], 2) + std::pow(x[1] - c[1], 2) + std::pow(x[2] - c[2], 2);
          sp[a][i] = amp * std::exp(-r2 / 4.5);
        }
      }
      trials.push_back(sp.scaled(1.0 / sp.l2_norm()));
    }
    grad.push_back(f.xi_gradient_bound(1.0 / 3.0));
    off.push_back(offdiagonal_norm(z, trials));
    comm.push_back(commutator_norm(z, trials));
    EXPECT_LE(off.back(), grad.back());
    EXPECT_LE(comm.back(), grad.back());
  }
  EXPECT_NEAR(slope(grad, off), 1.0, 0.3);
  EXPECT_NEAR(slope(grad, comm), 1.0, 0.3);
}

TEST(EnergyPartition, ResidualScalesLikeInverseSeparation) {
  const ModelParams p = regime(0.05);
  std::vector<double> inv, res;
  for (double R : {15.0, 30.0}) {
    const PartitionSetup s = small_setup(R);
    const RankStructuredState st = build_partition_state(p, pekar(), s);
    const PartitionReport r = energy_partition(st, partition_family(p, s));
    EXPECT_DOUBLE_EQ(r.total_energy,
                     r.cluster_energies[0] + r.cluster_energies[1] + 0.5 * p.alpha * r.cross_exchange + r.residual);
    // Disjoint radial clusters of unit charge: Newton's theorem gives 2 / (c R) for the cross term.
    EXPECT_NEAR(r.cross_exchange * p.c_scale * R / 2.0, 1.0, 1e-3);
    EXPECT_NEAR(r.charge_split[0], 1.0, 1e-9);
    EXPECT_NEAR(r.charge_split[1], 1.0, 1e-9);
    EXPECT_NEAR(r.cluster_energies[0], r.cluster_energies[1], 1e-12);
    inv.push_back(1.0 / (p.c_scale * p.c_scale * R));
    res.push_back(std::abs(r.residual));
  }
  EXPECT_NEAR(slope(inv, res), 1.0, 0.3);
}

TEST(EnergyPartition, RejectsWrongRankAndCloseProfiles) {
  const ModelParams p = regime(0.05);
  ClusterStateOptions o;
  o.n = 16;
  o.box_unit = 16.0;
  o.with_gamma = false;
  const RankStructuredState st = build_cluster_state(p, pekar(), o);
  EXPECT_THROW(energy_partition(st, make_cutoffs({-2.0, 0.0, 0.0}, {2.0, 0.0, 0.0}, 0.25, 4.0, 16.0, p.c_scale)),
               ConfigError);
  PartitionSetup s = small_setup(12.0);
  EXPECT_THROW(build_partition_state(p, pekar(), s), ConfigError);
}

TEST(EnergyCurve, InterpolationAndMissingSamples) {
  EnergyCurve c{{0.0, 1.0, 2.0}, {0.0, 1.0, 3.0}};
  EXPECT_DOUBLE_EQ(c(0.5), 0.5);
  EXPECT_DOUBLE_EQ(c(1.5), 2.0);
  EXPECT_DOUBLE_EQ(c(2.0), 3.0);
  EXPECT_THROW(c(2.1), DataError);
  EXPECT_THROW((EnergyCurve{{1.0}, {1.0}})(1.0), DataError);
  EXPECT_THROW((EnergyCurve{{0.0, 2.0, 1.0}, {0.0, 1.0, 2.0}})(0.5), DataError);
}

TEST(NoBinding, ZeroChargeTransferReducesToSubadditivity) {
  PartitionReport r;
  r.total_energy = 2.0 + 1e-6;
  r.cross_exchange = 1e-4;
  r.residual = -1e-8;
  const EnergyCurve c{{0.0, 1.0, 2.0}, {0.0, 1.0 - 1e-8, 2.0 + 1e-5}};
  const NoBindingVerdict v = no_binding_check(r, regime(0.05), 0.0, c);
  EXPECT_EQ(v.concavity_defect, 0.0);
  EXPECT_TRUE(v.no_binding);
  EXPECT_EQ(v.verdict(), "no-binding");
  EXPECT_THROW(no_binding_check(r, regime(0.05), 0.0, EnergyCurve{{0.0, 1.0}, {0.0, 1.0}}), DataError);
}

TEST(NoBinding, CompactClustersDoNotBind) {
  for (double alpha : {0.1, 0.05}) {
    const ModelParams p = regime(alpha, 0.15);
    const PartitionSetup s = small_setup(15.0);
    const PartitionReport r = energy_partition(build_partition_state(p, pekar(), s), partition_family(p, s));
    const EnergyCurve curve = single_cluster_curve(p, pekar(), s);
    const NoBindingVerdict v = no_binding_check(r, p, std::abs(r.charge_split[0] - 1.0), curve);
    EXPECT_TRUE(v.no_binding) << alpha;
    EXPECT_GE(v.interaction, 0.9 * p.alpha / (p.c_scale * s.r_g));
    EXPECT_GT(v.delta2, 0.0);
  }
}
