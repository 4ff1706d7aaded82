#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "bdfnb/coulomb.hpp"
#include "bdfnb/errors.hpp"
#include "bdfnb/polarisation.hpp"
#include "oracles/polarisation_oracles.hpp"
#include "oracles/radial_oracles.hpp"
#include "test_util.hpp"

using namespace bdfnb;

namespace {

Vec3 random_vec(std::mt19937_64& rng, double scale) {
  std::normal_distribution<double> nd(0.0, scale);
  return {nd(rng), nd(rng), nd(rng)};
}

Mat4 random_mat(std::mt19937_64& rng) {
  std::normal_distribution<double> nd(0.0, 1.0);
  Mat4 m;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) m(i, j) = cplx(nd(rng), nd(rng));
  return m;
}

double grid_k_max(const GridPtr& g) {
  double m = 0.0;
  for (double v : g->k2()) m = std::max(m, v);
  return std::sqrt(m) * 1.001;
}

DensityField gaussian_density(const GridPtr& g, double s, double charge = 1.0) {
  RVec v(g->size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    const Vec3 x = g->position(i);
    v[i] = charge * oracle::gaussian_density(std::sqrt(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]), s);
  }
  return DensityField(g, v);
}

struct Setup {
  ModelParams params;
  GridPtr grid;
  PolarisationTable table;
};

const Setup& setup() {
  static const Setup s = [] {
    Setup out;
    out.params = z3_u0(0.05, 1e3);
    out.grid = FourierGrid::cubic(32, 16.0);
    out.table = PolarisationTable::build(out.params, grid_k_max(out.grid));
    return out;
  }();
  return s;
}

}  // namespace

TEST(ResolventKernel, SameMomentumIdentityVanishes) {
  const auto params = ModelParams::kinematic(50.0);
  std::mt19937_64 rng(1);
  for (int t = 0; t < 10; ++t) {
    const Vec3 p = random_vec(rng, 3.0);
    const Mat4 k = resolvent_pair_kernel(p, p, Mat4::Identity(), params);
    EXPECT_LT(k.norm(), 1e-14);
  }
}

TEST(ResolventKernel, MatchesFrequencyQuadrature) {
  std::mt19937_64 rng(2);
  for (double lambda : {20.0, 1e3}) {
    const auto params = ModelParams::kinematic(lambda);
    for (int t = 0; t < 4; ++t) {
      const Vec3 p = random_vec(rng, 2.0), q = random_vec(rng, 2.0);
      const Mat4 M = random_mat(rng);
      const Mat4 got = resolvent_pair_kernel(p, q, M, params);
      const Mat4 ref = oracle::omega_kernel(p, q, M, lambda);
      EXPECT_LT((got - ref).norm(), 1e-8 * M.norm()) << "lambda " << lambda;
    }
  }
}

TEST(ResolventKernel, LinearWithPairDenominator) {
  const auto params = ModelParams::kinematic(30.0);
  std::mt19937_64 rng(3);
  for (int t = 0; t < 10; ++t) {
    const Vec3 p = random_vec(rng, 4.0), q = random_vec(rng, 4.0);
    const Mat4 M = random_mat(rng);
    const cplx lam(0.7, -1.3);
    EXPECT_LT((resolvent_pair_kernel(p, q, lam * M, params) - lam * resolvent_pair_kernel(p, q, M, params)).norm(),
              1e-13 * M.norm());
    const auto pp = spectral_projectors(p, params), pq = spectral_projectors(q, params);
    const double den = energy_cut(p[0] * p[0] + p[1] * p[1] + p[2] * p[2], 30.0) +
                       energy_cut(q[0] * q[0] + q[1] * q[1] + q[2] * q[2], 30.0);
    const Mat4 numer = pp.plus * M * pq.minus + pp.minus * M * pq.plus;
    EXPECT_LT((den * resolvent_pair_kernel(p, q, M, params) - numer).norm(), 1e-12 * M.norm());
    // same-sign blocks vanish for every M
    EXPECT_LT((pp.plus * resolvent_pair_kernel(p, q, M, params) * pq.plus).norm(), 1e-13 * M.norm());
    EXPECT_LT((pp.minus * resolvent_pair_kernel(p, q, M, params) * pq.minus).norm(), 1e-13 * M.norm());
  }
}

TEST(ResolventKernel, AdjointConsistency) {
  const auto params = ModelParams::kinematic(100.0);
  std::mt19937_64 rng(4);
  for (int t = 0; t < 20; ++t) {
    const Vec3 p = random_vec(rng, 5.0), q = random_vec(rng, 5.0);
    const Mat4 M = random_mat(rng);
    const Mat4 a = resolvent_pair_kernel(p, q, M, params).adjoint();
    const Mat4 b = resolvent_pair_kernel(q, p, M.adjoint(), params);
    EXPECT_LT((a - b).norm(), 1e-14 * M.norm());
  }
}

TEST(FLambda, MatchesThreeDimensionalCubature) {
  for (double k : {0.5, 3.0, 40.0}) {
    const double got = f_lambda(k, 0.1, 200.0);
    const double ref = oracle::f_cubature(k, 0.1, 200.0);
    EXPECT_NEAR(got / ref, 1.0, 2e-6) << "k = " << k;
  }
}

TEST(FLambda, LogarithmicAsymptotics) {
  const double target = 2.0 / (3.0 * M_PI);
  const double a = 1.0 / 137.0;
  const double r4 = f_lambda(0.0, a, 1e4) / (a * std::log(1e4));
  const double r6 = f_lambda(0.0, a, 1e6) / (a * std::log(1e6));
  EXPECT_NEAR(r4 / target, 1.0, 0.10);
  EXPECT_NEAR(r6 / target, 1.0, 0.05);
  // the deficit is O(1/ln Lambda)
  EXPECT_LT(std::abs(r6 / target - 1.0), std::abs(r4 / target - 1.0));
}

TEST(FLambda, LinearInAlphaAndNonnegative) {
  for (double k : {0.0, 0.3, 2.0, 50.0, 5e3}) {
    const double f1 = f_lambda(k, 1e-3, 500.0);
    const double f2 = f_lambda(k, 2e-3, 500.0);
    EXPECT_GT(f1, 0.0);
    EXPECT_NEAR(f2 / f1, 2.0, 1e-12);
  }
  EXPECT_EQ(f_lambda(1.0, 0.0, 500.0), 0.0);
  EXPECT_THROW(f_lambda(-1.0, 0.01, 500.0), ConfigError);
}

TEST(FLambda, LipschitzNearOriginFitted) {
  const double alpha = 0.02;
  for (double lambda : {1e2, 1e4}) {
    const double f0 = f_lambda(0.0, alpha, lambda);
    double C = 0.0;
    for (int i = 1; i <= 40; ++i) {
      const double k = 0.05 * i;
      C = std::max(C, std::abs(f_lambda(k, alpha, lambda) - f0) / (alpha * k));
    }
    RecordProperty("lipschitz_C_lambda_" + std::to_string(static_cast<int>(lambda)), std::to_string(C));
    EXPECT_TRUE(std::isfinite(C));
    EXPECT_LT(C, 1.0);
  }
}

TEST(Z3, ClosureAndLimits) {
  const auto p = z3_u0(1.0 / 137.0, 1e4);
  EXPECT_NEAR(p.u0 * (1.0 - p.z3), 1.0, 1e-12);
  EXPECT_GT(p.z3, 0.0);
  EXPECT_LT(p.z3, 1.0);
  const double formula = 1.0 / (1.0 + 2.0 / (3.0 * M_PI) * p.alpha * std::log(1e4));
  EXPECT_NEAR(p.z3 / formula, 1.0, 0.10);
  const auto tiny = z3_u0(1e-9, 1e4);
  EXPECT_NEAR(tiny.z3, 1.0, 1e-8);
  EXPECT_GT(tiny.u0, 1e8);
  EXPECT_GT(tiny.c_scale, 1e16);
  EXPECT_THROW(z3_u0(-0.1, 1e4), ConfigError);
  EXPECT_THROW(z3_u0(0.1, 2.0), ConfigError);
}

TEST(PolarisationTable, ConsistencyAndRange) {
  const auto& s = setup();
  const auto& t = s.table;
  for (std::size_t i = 0; i < t.k_points().size(); ++i) {
    EXPECT_GE(t.f_values()[i], 0.0);
    EXPECT_NEAR(t.F_values()[i], t.f_values()[i] / (1.0 + t.f_values()[i]), 1e-12);
  }
  // spline between nodes against direct evaluation
  for (double k : {0.013, 0.77, 3.3337, 9.1}) EXPECT_NEAR(t.f(k) / f_lambda(k, s.params), 1.0, 1e-8) << k;
  EXPECT_NEAR(t.f(0.0), s.params.f0, 1e-15);
  EXPECT_THROW(t.f(t.k_max() * 1.01), ConfigError);
  EXPECT_THROW(t.F(-0.1), ConfigError);
  int descents = 0;
  for (std::size_t i = 1; i < t.f_values().size(); ++i) descents += t.f_values()[i] <= t.f_values()[i - 1];
  RecordProperty("f_monotone_decreasing_fraction",
                 std::to_string(static_cast<double>(descents) / (t.f_values().size() - 1)));
}

TEST(VacuumDensity, ZeroSource) {
  const auto& s = setup();
  const auto vc = vacuum_density(DensityField::zero(s.grid), 1, s.table);
  for (double v : vc.gamma_density.values()) EXPECT_EQ(v, 0.0);
}

TEST(VacuumDensity, ChargeRenormalisation) {
  const auto& s = setup();
  const auto n = gaussian_density(s.grid, 1.0);
  ASSERT_NEAR(n.total_charge(), 1.0, 1e-10);
  const auto vc = vacuum_density(n, 1, s.table);
  EXPECT_NEAR(vc.gamma_density.total_charge(), -s.params.F0() * n.total_charge(), 1e-10);
  EXPECT_NEAR((n.total_charge() + vc.gamma_density.total_charge()) / s.params.z3, 1.0, 1e-4);
  EXPECT_LT(vc.residual, 1e-10);
}

TEST(VacuumDensity, MultiplierDuality) {
  const auto& s = setup();
  std::mt19937_64 rng(7);
  const DensityField n(s.grid, testutil::real_part(testutil::random_smooth(s.grid, rng, 1.0, 1.5)));
  const auto vc = vacuum_density(n, 1, s.table);
  const CVec& out = vc.gamma_density.fourier();
  const CVec& in = n.fourier();
  double err = 0.0, scale = 0.0;
  for (std::size_t i = 0; i < in.size(); ++i) {
    const double F = s.table.F(std::sqrt(s.grid->k2()[i]));
    err = std::max(err, std::abs(out[i] + F * in[i]));
    scale = std::max(scale, std::abs(in[i]));
  }
  EXPECT_LT(err, 1e-10 * scale);
}

TEST(VacuumDensity, LinearAndScreening) {
  const auto& s = setup();
  std::mt19937_64 rng(8);
  for (int t = 0; t < 4; ++t) {
    const RVec a = testutil::real_part(testutil::random_smooth(s.grid, rng, 1.0, 1.5));
    const RVec b = testutil::real_part(testutil::random_smooth(s.grid, rng, 1.0, 1.5));
    RVec c(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) c[i] = 2.0 * a[i] - 0.5 * b[i];
    const auto ga = vacuum_density(DensityField(s.grid, a), 1, s.table).gamma_density.values();
    const auto gb = vacuum_density(DensityField(s.grid, b), 1, s.table).gamma_density.values();
    const auto gc = vacuum_density(DensityField(s.grid, c), 1, s.table).gamma_density.values();
    double err = 0.0, scale = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      err = std::max(err, std::abs(gc[i] - 2.0 * ga[i] + 0.5 * gb[i]));
      scale = std::max(scale, std::abs(gc[i]));
    }
    EXPECT_LT(err, 1e-12 * scale);
    RVec screened(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) screened[i] = a[i] + ga[i];
    EXPECT_LE(coulomb_pairing(s.grid, screened, screened), coulomb_pairing(s.grid, a, a));
  }
}

TEST(VacuumDensity, RejectsBadOrder) {
  const auto& s = setup();
  const auto n = gaussian_density(s.grid, 1.0);
  EXPECT_THROW(vacuum_density(n, 3, s.table), ConfigError);
  EXPECT_THROW(vacuum_density(n, 0, s.table), ConfigError);
  EXPECT_THROW(vacuum_density(n, 2, s.table), ConfigError);
}

TEST(ExchangeResponse, MatchesDirectKernelSum) {
  // density of kernel_res(R_N) summed pair by pair in momentum space
  const auto g = FourierGrid::cubic(6, 5.0);
  const auto params = ModelParams::kinematic(20.0);
  std::mt19937_64 rng(9);
  const SpinorField psi = testutil::random_spinor(g, rng, 1.0, 0.5);
  const RVec got = exchange_response_density({psi}, params);

  const std::size_t N = g->size();
  const auto& nn = g->n();
  const SpinorHat h = psi.fourier();
  const double dk3 = g->k_spacing(0) * g->k_spacing(1) * g->k_spacing(2);
  const double w0 = 4.0 * M_PI * 7.6741242224 * std::cbrt(dk3) / dk3;
  Eigen::MatrixXcd B = Eigen::MatrixXcd::Zero(N, N);
  for (std::size_t li = 0; li < N; ++li) {
    const Vec3 l = g->kvec(li);
    const double l2 = l[0] * l[0] + l[1] * l[1] + l[2] * l[2];
    const double wl = (l2 > 0.0 ? 4.0 * M_PI / l2 : w0) * dk3 / std::pow(2.0 * M_PI, 3);
    const int l0 = static_cast<int>(li / (nn[1] * nn[2])), l1 = static_cast<int>((li / nn[2]) % nn[1]),
              l2i = static_cast<int>(li % nn[2]);
    std::vector<Vec4> phi(N);
    for (int i = 0; i < nn[0]; ++i)
      for (int j = 0; j < nn[1]; ++j)
        for (int k = 0; k < nn[2]; ++k) {
          const std::size_t src = g->index(i, j, k);
          const std::size_t dst = g->index((i + l0) % nn[0], (j + l1) % nn[1], (k + l2i) % nn[2]);
          for (int a = 0; a < 4; ++a) phi[dst](a) = h[a][src];
        }
    for (std::size_t p = 0; p < N; ++p)
      for (std::size_t q = 0; q < N; ++q) {
        const Mat4 K = resolvent_pair_kernel(g->kvec(p), g->kvec(q), phi[p] * phi[q].adjoint(), params);
        B(p, q) += wl * K.trace();
      }
  }
  const double c = dk3 * dk3 / std::pow(2.0 * M_PI, 3);
  double err = 0.0, scale = 0.0;
  for (std::size_t x = 0; x < N; ++x) {
    const Vec3 xv = g->position(x);
    Eigen::VectorXcd e(N);
    for (std::size_t p = 0; p < N; ++p) {
      const Vec3 k = g->kvec(p);
      e(p) = std::exp(cplx(0.0, k[0] * xv[0] + k[1] * xv[1] + k[2] * xv[2]));
    }
    const Eigen::VectorXcd ec = e.conjugate();
    const cplx rho = c * ec.dot(B * ec);
    EXPECT_LT(std::abs(rho.imag()), 1e-10 * std::abs(rho.real()) + 1e-14);
    err = std::max(err, std::abs(got[x] - rho.real()));
    scale = std::max(scale, std::abs(rho.real()));
  }
  EXPECT_LT(err, 1e-7 * scale);
}

TEST(VacuumDensity, OrderTwoDiagnostic) {
  const auto g = FourierGrid::cubic(12, 8.0);
  const auto params = z3_u0(0.05, 50.0);
  const auto table = PolarisationTable::build(params, grid_k_max(g));
  std::mt19937_64 rng(10);
  const SpinorField psi = testutil::random_spinor(g, rng, 1.1, 0.3);
  const DensityField n(g, psi.density());
  const auto o1 = vacuum_density(n, 1, table);
  const auto o2 = vacuum_density(n, 2, table, {psi});
  EXPECT_EQ(o2.order, 2);
  EXPECT_LT(o2.residual, 1e-10);
  double diff = 0.0;
  for (std::size_t i = 0; i < g->size(); ++i)
    diff = std::max(diff, std::abs(o2.gamma_density.values()[i] - o1.gamma_density.values()[i]));
  EXPECT_GT(diff, 0.0);
  RecordProperty("tau10_charge", std::to_string(o2.tau10.total_charge()));
  EXPECT_THROW(exchange_response_density({SpinorField(FourierGrid::cubic(18, 8.0))}, params), ConfigError);
}

TEST(FCheck, MomentsAndIntegral) {
  const double lambda = 1e3;
  std::vector<double> m1, M1;
  for (double alpha : {0.02, 0.05, 0.1}) {
    const auto p = z3_u0(alpha, lambda);
    const auto K = fcheck_kernel(p, false);
    EXPECT_NEAR(kernel_integral(K) / p.f0, 1.0, 1e-5);
    EXPECT_GE(kernel_moment(K, 0), p.f0 * (1.0 - 1e-6));
    m1.push_back(kernel_moment(K, 1) / alpha);
    const auto KF = fcheck_kernel(p, true);
    EXPECT_NEAR(kernel_integral(KF) / p.F0(), 1.0, 1e-5);
    M1.push_back(kernel_moment(KF, 1) / alpha);
    EXPECT_GT(kernel_moment(K, 2), 0.0);
  }
  for (const auto* v : {&m1, &M1}) {
    const auto [lo, hi] = std::minmax_element(v->begin(), v->end());
    EXPECT_LE(*hi / *lo, 2.0);
  }
  EXPECT_THROW(fcheck_moment(3, z3_u0(0.02, lambda)), ConfigError);
}
