#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>

#include "bdfnb/coulomb.hpp"
#include "bdfnb/errors.hpp"
#include "bdfnb/pekar.hpp"

namespace bdfnb {

namespace {

int even_points(double box, double dx) {
  int n = static_cast<int>(std::lround(box / dx));
  if (n % 2) ++n;
  return std::max(n, 8);
}

double hat_h1_norm2(const GridPtr& g, const CVec& fh) {
  const auto& k2 = g->k2();
  double s = 0.0;
  for (std::size_t i = 0; i < fh.size(); ++i) s += (1.0 + k2[i]) * std::norm(fh[i]);
  return s * std::pow(2.0 * M_PI, 3) / g->volume();
}

void require_orthonormal(const SlaterPair& p, const char* who) {
  const double tol = 1e-7;
  if (std::abs(p.h1.l2_norm() - 1.0) > tol || std::abs(p.h2.l2_norm() - 1.0) > tol ||
      std::abs(p.h1.inner(p.h2)) > tol)
    throw PreconditionError(std::string(who) + " needs an orthonormal pair");
}

// Smooth radial cutoff, 1 below r_c - 3 and 0 beyond r_c.
double cutoff_weight(double r, double rc) {
  const double w = 3.0;
  if (r <= rc - w) return 1.0;
  if (r >= rc) return 0.0;
  const double t = (rc - r) / w;
  return t * t * t * (10.0 - 15.0 * t + 6.0 * t * t);
}

}  // namespace

SpinorField cluster_orbital(const PekarState& pekar, const GridPtr& g, const Vec3& c, const Vec4& dir,
                            double cutoff_radius) {
  SpinorField s = pekar.on_grid(g, c, dir);
  if (cutoff_radius > 0.0) {
    RVec w(g->size());
    for (std::size_t i = 0; i < w.size(); ++i) {
      const Vec3 x = g->position(i);
      const double r = std::sqrt((x[0] - c[0]) * (x[0] - c[0]) + (x[1] - c[1]) * (x[1] - c[1]) +
                                 (x[2] - c[2]) * (x[2] - c[2]));
      w[i] = cutoff_weight(r, cutoff_radius);
    }
    s = s.multiplied(w);
  }
  s *= 1.0 / s.l2_norm();
  return s;
}

GridPtr pair_grid(double R, const ClusterRecipe& recipe) {
  if (!(R >= 0.0)) throw ConfigError("separation must be non-negative");
  if (!(recipe.dx > 0.0) || !(recipe.tail_radius > 0.0)) throw ConfigError("invalid cluster recipe");
  const double bx = R + 2.0 * recipe.tail_radius, by = 2.0 * recipe.tail_radius;
  const int nx = even_points(bx, recipe.dx), ny = even_points(by, recipe.dx);
  return FourierGrid::create({nx, ny, ny}, {bx, by, by});
}

double single_cluster_energy(const PekarState& pekar, const ClusterRecipe& recipe) {
  const double b = 2.0 * recipe.tail_radius;
  auto g = FourierGrid::cubic(even_points(b, recipe.dx), b);
  Vec4 e = Vec4::Zero();
  e[0] = 1.0;
  return pekar_energy(cluster_orbital(pekar, g, {0.0, 0.0, 0.0}, e, recipe.cutoff_radius));
}

PairEnergyParts pt2_parts(const SlaterPair& pair, double U) {
  require_orthonormal(pair, "pt2_energy");
  if (!(U >= 0.0)) throw ConfigError("U must be non-negative");
  const GridPtr& g = pair.h1.grid();
  const RVec n1 = pair.h1.density(), n2 = pair.h2.density();
  const CVec q = pair.h1.pair_density(pair.h2);
  RVec qr(q.size()), qi(q.size());
  for (std::size_t i = 0; i < q.size(); ++i) {
    qr[i] = q[i].real();
    qi[i] = q[i].imag();
  }
  const Eigen::MatrixXd G = g->coulomb().gram({&n1, &n2, &qr, &qi});
  PairEnergyParts p;
  p.kinetic = kinetic_energy_nr(pair.h1) + kinetic_energy_nr(pair.h2);
  p.d12 = G(0, 1);
  p.dqq = G(2, 2) + G(3, 3);
  p.direct = G(0, 0) + G(1, 1) + 2.0 * p.d12;
  p.exchange = G(0, 0) + G(1, 1) + 2.0 * p.dqq;
  p.m2 = p.d12 - p.dqq;
  p.energy = p.kinetic - p.direct + U * (p.direct - p.exchange);
  return p;
}

double pt2_energy(const SlaterPair& pair, double U) { return pt2_parts(pair, U).energy; }

double rotated_cross_coulomb(const SlaterPair& pair, const Eigen::Matrix2cd& m) {
  SpinorField a = pair.h1.scaled(m(0, 0)) + pair.h2.scaled(m(0, 1));
  SpinorField b = pair.h1.scaled(m(1, 0)) + pair.h2.scaled(m(1, 1));
  return coulomb_pairing(pair.h1.grid(), a.density(), b.density());
}

CharacteristicLength characteristic_length(const SlaterPair& pair) {
  require_orthonormal(pair, "characteristic_length");
  const GridPtr& g = pair.h1.grid();
  const RVec n1 = pair.h1.density(), n2 = pair.h2.density();
  const CVec q = pair.h1.pair_density(pair.h2);
  RVec S(n1.size()), V1(n1.size()), V2(n1.size()), V3(n1.size());
  for (std::size_t i = 0; i < n1.size(); ++i) {
    S[i] = 0.5 * (n1[i] + n2[i]);
    V1[i] = 0.5 * (n1[i] - n2[i]);
    V2[i] = q[i].real();
    V3[i] = q[i].imag();
  }
  // The rotated first density is S + u.V with u on the unit sphere, so the cross term is
  // D(S,S) - u^T G u with G the Gram matrix of V.
  const Eigen::MatrixXd full = g->coulomb().gram({&S, &V1, &V2, &V3});
  const Eigen::Matrix3d G = full.bottomRightCorner<3, 3>();
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(G);
  const double lmax = es.eigenvalues()(2);
  Eigen::Vector3d u = es.eigenvectors().col(2);
  if (u(0) < 0.0) u = -u;

  CharacteristicLength out;
  out.d_psi = full(0, 0) - lmax;
  if (out.d_psi < 0.0) {
    out.degraded = true;
    out.d_psi = 0.0;
  }
  if (std::abs(es.eigenvalues()(2) - es.eigenvalues()(1)) < 1e-12 * std::max(1.0, std::abs(lmax)))
    out.degraded = true;  // minimiser not isolated
  const double t = 0.5 * (1.0 + u(0));
  const cplx w(0.5 * u(1), -0.5 * u(2));  // conj(a) b
  cplx a, b;
  if (t > 1e-14) {
    a = std::sqrt(t);
    b = w / a;
  } else {
    a = 0.0;
    b = 1.0;
  }
  out.rotation << a, b, -std::conj(b), std::conj(a);
  return out;
}

ManifoldFit manifold_distance(const SpinorField& h, const PekarState& reference) {
  const GridPtr& g = h.grid();
  if (std::abs(h.l2_norm() - 1.0) > 1e-6) throw PreconditionError("manifold_distance needs a normalised state");
  const CVec phi0 = reference.scalar_on_grid(g, {0.0, 0.0, 0.0});
  const CVec Phi = g->forward(phi0);
  const SpinorHat H = h.fourier();
  const auto& k2 = g->k2();
  const double dk3 = std::pow(2.0 * M_PI, 3) / g->volume();

  std::array<CVec, 4> W;
  for (int a = 0; a < 4; ++a) {
    W[a].resize(g->size());
    for (std::size_t i = 0; i < g->size(); ++i) W[a][i] = (1.0 + k2[i]) * std::conj(Phi[i]) * H[a][i];
  }
  // C_a(z) = \int W_a(k) e^{ik.z} dk on the grid translations.
  std::size_t best = 0;
  double best_val = -1.0;
  {
    std::array<CVec, 4> C;
    for (int a = 0; a < 4; ++a) C[a] = g->inverse(W[a]);
    for (std::size_t i = 0; i < g->size(); ++i) {
      double s = 0.0;
      for (int a = 0; a < 4; ++a) s += std::norm(C[a][i]);
      if (s > best_val) {
        best_val = s;
        best = i;
      }
    }
  }

  // Off-grid refinement by Newton iteration on F(z) = sum_a |C_a(z)|^2 using direct Fourier sums.
  double wmax = 0.0;
  for (int a = 0; a < 4; ++a)
    for (const auto& v : W[a]) wmax = std::max(wmax, std::abs(v));
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < g->size(); ++i) {
    double m = 0.0;
    for (int a = 0; a < 4; ++a) m = std::max(m, std::abs(W[a][i]));
    if (m > 1e-15 * wmax) keep.push_back(i);
  }
  std::vector<Vec3> kv(keep.size());
  for (std::size_t j = 0; j < keep.size(); ++j) kv[j] = g->kvec(keep[j]);

  struct Local {
    double F;
    Eigen::Vector3d grad;
    Eigen::Matrix3d hess;
    Vec4 C;
  };
  auto eval = [&](const Vec3& z) {
    Vec4 C = Vec4::Zero();
    std::array<Vec4, 3> dC;
    std::array<std::array<Vec4, 3>, 3> ddC;
    for (int j = 0; j < 3; ++j) {
      dC[j].setZero();
      for (int l = 0; l < 3; ++l) ddC[j][l].setZero();
    }
    for (std::size_t j = 0; j < keep.size(); ++j) {
      const Vec3& k = kv[j];
      const cplx e = std::polar(1.0, k[0] * z[0] + k[1] * z[1] + k[2] * z[2]);
      for (int a = 0; a < 4; ++a) {
        const cplx t = W[a][keep[j]] * e;
        if (t == cplx(0.0)) continue;
        C[a] += t;
        for (int x = 0; x < 3; ++x) {
          dC[x][a] += cplx(0.0, k[x]) * t;
          for (int y = x; y < 3; ++y) ddC[x][y][a] -= k[x] * k[y] * t;
        }
      }
    }
    Local L;
    C *= dk3;
    for (int x = 0; x < 3; ++x) {
      dC[x] *= dk3;
      for (int y = x; y < 3; ++y) ddC[x][y] *= dk3;
    }
    L.C = C;
    L.F = C.squaredNorm();
    for (int x = 0; x < 3; ++x) {
      L.grad(x) = 2.0 * C.dot(dC[x]).real();
      for (int y = x; y < 3; ++y)
        L.hess(x, y) = L.hess(y, x) = 2.0 * (dC[x].dot(dC[y]).real() + C.dot(ddC[x][y]).real());
    }
    return L;
  };

  Vec3 z = g->position(best);
  Local cur = eval(z);
  const double dxmin = std::min({g->dx(0), g->dx(1), g->dx(2)});
  for (int it = 0; it < 30; ++it) {
    Eigen::Vector3d step = -cur.hess.ldlt().solve(cur.grad);
    if (!step.allFinite() || cur.grad.dot(step) <= 0.0) step = cur.grad / (cur.grad.norm() + 1e-300) * 0.1 * dxmin;
    if (step.norm() > dxmin) step *= dxmin / step.norm();
    bool moved = false;
    for (int tries = 0; tries < 20; ++tries) {
      Vec3 zt{z[0] + step(0), z[1] + step(1), z[2] + step(2)};
      Local nx = eval(zt);
      if (nx.F >= cur.F) {
        z = zt;
        cur = nx;
        moved = true;
        break;
      }
      step *= 0.5;
    }
    if (!moved || step.norm() < 1e-11) break;
  }
  if (!std::isfinite(cur.F)) throw SolverError("manifold fit produced a non-finite overlap", cur.F);

  ManifoldFit fit;
  const double cabs = std::sqrt(cur.F);
  if (!(cabs > 0.0)) throw SolverError("state is H^1-orthogonal to every translate of the profile", 0.0);
  fit.center = z;
  fit.direction = cur.C / cabs;
  double hn = 0.0;
  for (int a = 0; a < 4; ++a) hn += hat_h1_norm2(g, H[a]);
  const double pn = hat_h1_norm2(g, Phi);
  fit.distance = std::sqrt(std::max(0.0, hn + pn - 2.0 * cabs));
  fit.phi = reference.on_grid(g, z, fit.direction);
  return fit;
}

SlaterPair build_pair(const PekarState& pekar, double R, const ClusterRecipe& recipe) {
  GridPtr g = pair_grid(R, recipe);
  Vec4 e1 = Vec4::Zero(), e2 = Vec4::Zero();
  e1[0] = 1.0;
  e2[recipe.opposite_spin ? 1 : 0] = 1.0;
  const Vec3 c1{-0.5 * R, 0.0, 0.0}, c2{0.5 * R, 0.0, 0.0};
  const SpinorField a = cluster_orbital(pekar, g, c1, e1, recipe.cutoff_radius);
  const SpinorField b = cluster_orbital(pekar, g, c2, e2, recipe.cutoff_radius);

  Eigen::Matrix2cd O;
  O(0, 0) = a.inner(a);
  O(0, 1) = a.inner(b);
  O(1, 0) = b.inner(a);
  O(1, 1) = b.inner(b);
  if (std::abs(O(0, 1)) > 1.0 - 1e-10) throw PreconditionError("clusters are linearly dependent");
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2cd> es(O);
  const Eigen::Vector2d ev = es.eigenvalues().cwiseSqrt().cwiseInverse();
  const Eigen::Matrix2cd X = es.eigenvectors() * ev.cast<cplx>().asDiagonal() * es.eigenvectors().adjoint();

  SlaterPair p;
  p.h1 = a.scaled(X(0, 0)) + b.scaled(X(1, 0));
  p.h2 = a.scaled(X(0, 1)) + b.scaled(X(1, 1));
  p.overlap = p.h1.inner(p.h2);
  p.d_psi = characteristic_length(p).d_psi;
  if (recipe.fit_centers) {
    const ManifoldFit f1 = manifold_distance(p.h1, pekar), f2 = manifold_distance(p.h2, pekar);
    p.centers = {f1.center, f2.center};
    p.delta_norms = {f1.distance, f2.distance};
    double d2 = 0.0;
    for (int j = 0; j < 3; ++j) d2 += (f1.center[j] - f2.center[j]) * (f1.center[j] - f2.center[j]);
    p.r_g = std::sqrt(d2);
  } else {
    p.centers = {c1, c2};
    p.r_g = R;
  }
  return p;
}

namespace {

// Radius holding 99% of the profile's mass, from the radial quadrature.
double mass_radius(const PekarState& pekar) {
  double tot = 0.0;
  for (std::size_t i = 0; i < pekar.phi.size(); ++i) tot += pekar.grid.w[i] * pekar.phi[i] * pekar.phi[i];
  double acc = 0.0;
  for (std::size_t i = 0; i < pekar.phi.size(); ++i) {
    acc += pekar.grid.w[i] * pekar.phi[i] * pekar.phi[i];
    if (acc >= 0.99 * tot) return pekar.grid.r[i];
  }
  return pekar.grid.r_max;
}

}  // namespace

std::vector<BindingRow> binding_scan(const PekarState& pekar, double U, const std::vector<double>& separations,
                                     const ClusterRecipe& recipe) {
  if (!(U > 0.0)) throw ConfigError("binding_scan needs U > 0");
  if (separations.empty()) throw ConfigError("binding_scan needs at least one separation");
  for (std::size_t i = 0; i < separations.size(); ++i) {
    if (!(separations[i] > 0.0)) throw ConfigError("separations must be positive");
    if (i > 0 && !(separations[i] > separations[i - 1])) throw ConfigError("separations must be increasing");
  }
  const double e1 = single_cluster_energy(pekar, recipe);
  const double diameter = 2.0 * mass_radius(pekar);
  std::vector<BindingRow> rows(separations.size());
  parallel_for(separations.size(), [&](std::size_t i) {
    const double R = separations[i];
    const SlaterPair pair = build_pair(pekar, R, recipe);
    const PairEnergyParts parts = pt2_parts(pair, U);
    BindingRow& row = rows[i];
    row.R = R;
    row.delta_e = parts.energy - 2.0 * e1;
    row.a_part = parts.kinetic - parts.direct - 2.0 * e1;
    row.d_psi = pair.d_psi;
    row.m2 = parts.m2;
    row.delta_e_times_R = row.delta_e * R;
    row.delta_e_over_d = pair.d_psi > 0.0 ? row.delta_e / pair.d_psi : std::nan("");
    row.m2_times_R = parts.m2 * R;
    row.r_g = pair.r_g;
    row.overlap_warning = R < diameter;
  });
  return rows;
}

CriticalU critical_U(const PekarState& pekar, const std::vector<double>& separations, double tol,
                     const ClusterRecipe& recipe, double u_lo, double u_hi) {
  if (!(tol > 0.0)) throw ConfigError("critical_U needs tol > 0");
  if (!(u_hi > u_lo) || u_lo < 0.0) throw ConfigError("critical_U needs 0 <= u_lo < u_hi");
  CriticalU out;
  // Delta_2 E is affine in U: A(R) + 2 U M^2(R). Compute the U-independent data once.
  ClusterRecipe r = recipe;
  out.rows = binding_scan(pekar, 1.0, separations, r);
  auto inf_delta = [&](double U) {
    double m = 1e300;
    for (const auto& row : out.rows) m = std::min(m, row.a_part + 2.0 * U * row.m2);
    return m;
  };
  if (!(inf_delta(u_lo) < 0.0) || !(inf_delta(u_hi) > 0.0))
    throw SolverError("no sign change of inf_R Delta_2 E in the U bracket; widen it", inf_delta(u_hi));
  double lo = u_lo, hi = u_hi;
  int it = 0;
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    (inf_delta(mid) < 0.0 ? lo : hi) = mid;
    ++it;
  }
  out.lo = lo;
  out.hi = hi;
  out.u_c = 0.5 * (lo + hi);
  out.iterations = it;
  return out;
}

}  // namespace bdfnb
