#include "bdfnb/bdf.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

#include "bdfnb/coulomb.hpp"
#include "bdfnb/errors.hpp"
#include "bdfnb/multipliers.hpp"

namespace bdfnb {

namespace {

double dk3(const GridPtr& g) { return std::pow(2.0 * M_PI, 3) / g->volume(); }

// m(|k|) rho^(k) back in real space, m = f or h from the table.
RVec multiplied_density(const GridPtr& g, const RVec& rho, const PolarisationTable& t, bool hs) {
  CVec h = g->forward(rho);
  const RVec& k2 = g->k2();
  for (std::size_t i = 0; i < h.size(); ++i) {
    const double k = std::sqrt(k2[i]);
    h[i] *= hs ? t.hs(k) : t.f(k);
  }
  return g->inverse_real(h);
}

double table_k_max(const GridPtr& g) {
  double s = 0.0;
  for (int a = 0; a < 3; ++a) s += std::pow(g->kcomp(a, g->n()[a] / 2), 2);
  return 1.01 * std::sqrt(s);
}

// Sum over grid momenta of (bold E - 1)|psi+|^2 - (bold E + 1)|psi-|^2, i.e. <D psi, psi> - ||psi||^2.
double dirac_excess(const GridPtr& g, const SpinorHat& h, const ModelParams& params) {
  const SpinorHat hp = project_hat(g, h, +1);
  const RVec& k2 = g->k2();
  long double s = 0.0L;
  for (std::size_t i = 0; i < g->size(); ++i) {
    double np = 0.0, nm = 0.0;
    for (int a = 0; a < 4; ++a) {
      np += std::norm(hp[a][i]);
      nm += std::norm(h[a][i] - hp[a][i]);
    }
    const double em1 = energy_cut_minus_one(k2[i], params.lambda_uv);
    s += em1 * np - (em1 + 2.0) * nm;
  }
  return static_cast<double>(s) * dk3(g);
}

double hat_weighted_norm(const GridPtr& g, const SpinorHat& h, const std::function<double(double)>& w) {
  const RVec& k2 = g->k2();
  long double s = 0.0L;
  for (std::size_t i = 0; i < g->size(); ++i) {
    double n = 0.0;
    for (int a = 0; a < 4; ++a) n += std::norm(h[a][i]);
    s += w(k2[i]) * n;
  }
  return static_cast<double>(s) * dk3(g);
}

SpinorField potential_times(const RVec& v, const SpinorField& psi) { return psi.multiplied(v); }

// alpha (v[rho_Q] psi - R_N psi)
SpinorField mean_field_perturbation(const RankStructuredState& st, const RVec& vq, const SpinorField& psi) {
  SpinorField b = potential_times(vq, psi);
  b -= exchange_apply(st.orbitals, psi);
  b *= st.params.alpha;
  return b;
}

}  // namespace

GammaOperator::GammaOperator(GridPtr grid, RVec potential, const ModelParams& params, double rel_tol)
    : grid_(std::move(grid)), V_(std::move(potential)), params_(params) {
  if (V_.size() != grid_->size()) throw ConfigError("GammaOperator: potential size does not match grid");
  E_.resize(grid_->size());
  double e_max = 1.0;
  for (std::size_t i = 0; i < E_.size(); ++i) {
    E_[i] = energy_cut(grid_->k2()[i], params_.lambda_uv);
    e_max = std::max(e_max, E_[i]);
  }
  rule_ = laplace_rule(2.0, 2.0 * e_max, rel_tol);
}

SpinorHat GammaOperator::apply_hat(const SpinorHat& h) const {
  const GridPtr& g = grid_;
  const std::size_t N = g->size();
  const SpinorHat hp = project_hat(g, h, +1);
  SpinorHat out;
  for (auto& c : out) c.assign(N, cplx(0.0));
  RVec d(N);
  for (std::size_t s = 0; s < rule_.s.size(); ++s) {
    for (std::size_t i = 0; i < N; ++i) d[i] = std::exp(-rule_.s[s] * E_[i]);
    SpinorHat vp, vm;  // V e^{-sE} P+ h and V e^{-sE} P- h
    for (int a = 0; a < 4; ++a) {
      CVec up(N), um(N);
      for (std::size_t i = 0; i < N; ++i) {
        up[i] = d[i] * hp[a][i];
        um[i] = d[i] * (h[a][i] - hp[a][i]);
      }
      up = g->inverse(up);
      um = g->inverse(um);
      for (std::size_t i = 0; i < N; ++i) {
        up[i] *= V_[i];
        um[i] *= V_[i];
      }
      vp[a] = g->forward(up);
      vm[a] = g->forward(um);
    }
    const SpinorHat a1 = project_hat(g, vm, +1);
    const SpinorHat a2 = project_hat(g, vp, -1);
    for (int a = 0; a < 4; ++a)
      for (std::size_t i = 0; i < N; ++i) out[a][i] += rule_.w[s] * d[i] * (a1[a][i] + a2[a][i]);
  }
  for (auto& c : out)
    for (auto& v : c) v *= -params_.alpha;
  return out;
}

SpinorField GammaOperator::apply(const SpinorField& psi) const {
  require_same_grid(grid_, psi.grid());
  return SpinorField::from_fourier(grid_, apply_hat(psi.fourier()));
}

RVec RankStructuredState::orbital_density() const {
  RVec n(grid->size(), 0.0);
  for (const auto& o : orbitals) {
    const RVec d = o.density();
    for (std::size_t i = 0; i < n.size(); ++i) n[i] += d[i];
  }
  return n;
}

RVec RankStructuredState::charge_density() const {
  RVec n = orbital_density();
  if (gamma) {
    const RVec& r = gamma->gamma_density.values();
    for (std::size_t i = 0; i < n.size(); ++i) n[i] += r[i];
  }
  return n;
}

void RankStructuredState::validate() const {
  if (!grid) throw ConfigError("state has no grid");
  for (const auto& o : orbitals)
    if (!o.grid() || !o.grid()->same_as(*grid)) throw ConfigError("state orbitals live on different grids");
  if (gamma && !gamma->gamma_density.grid()->same_as(*grid)) throw ConfigError("gamma lives on a different grid");
  if (!orthonormal) return;
  for (std::size_t i = 0; i < orbitals.size(); ++i)
    for (std::size_t j = 0; j <= i; ++j) {
      const cplx s = orbitals[i].inner(orbitals[j]);
      if (std::abs(s - (i == j ? 1.0 : 0.0)) > 1e-8)
        throw PreconditionError("state orbitals are not orthonormal");
    }
}

void loewdin_orthonormalise(std::vector<SpinorField>& orbitals) {
  const std::size_t m = orbitals.size();
  if (m == 0) return;
  Eigen::MatrixXcd S(m, m);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j) S(i, j) = orbitals[i].inner(orbitals[j]);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(S);
  if (es.eigenvalues().minCoeff() < 1e-10) throw PreconditionError("orbitals are linearly dependent");
  const Eigen::MatrixXcd T =
      es.eigenvectors() * es.eigenvalues().cwiseInverse().cwiseSqrt().asDiagonal() * es.eigenvectors().adjoint();
  std::vector<SpinorField> out;
  for (std::size_t j = 0; j < m; ++j) {
    SpinorField s(orbitals[0].grid());
    for (int a = 0; a < 4; ++a) s[a].assign(orbitals[0].grid()->size(), cplx(0.0));
    for (std::size_t i = 0; i < m; ++i) s += orbitals[i].scaled(T(i, j));
    out.push_back(std::move(s));
  }
  // one more diagonal pass takes the norms to round-off
  for (auto& o : out) o *= 1.0 / o.l2_norm();
  orbitals = std::move(out);
}

namespace {

// Same smooth truncation as the cluster profiles of the pair analysis: 1 below rc - 3, 0 beyond rc.
double profile_cutoff(double r, double rc) {
  const double w = 3.0;
  if (r <= rc - w) return 1.0;
  if (r >= rc) return 0.0;
  const double t = (rc - r) / w;
  return t * t * t * (10.0 - 15.0 * t + 6.0 * t * t);
}

void attach_gamma(RankStructuredState& st, const RVec& source) {
  const GridPtr& g = st.grid;
  auto table = std::make_shared<PolarisationTable>(PolarisationTable::build(st.params, table_k_max(g), 0, true));
  st.table = table;
  st.gamma = vacuum_density(DensityField(g, source), 1, *table);
  RVec tot = source;
  const RVec& rg = st.gamma->gamma_density.values();
  for (std::size_t i = 0; i < tot.size(); ++i) tot[i] += rg[i];
  st.source_total = DensityField(g, tot);
  st.gamma_op = std::make_shared<GammaOperator>(g, coulomb_potential(g, tot), st.params);
}

}  // namespace

RankStructuredState assemble_state(const ModelParams& params, std::vector<SpinorField> orbitals, bool with_gamma,
                                   GridPtr grid, bool orthonormal) {
  RankStructuredState st;
  st.params = params;
  st.orthonormal = orthonormal;
  st.grid = grid ? grid : (orbitals.empty() ? nullptr : orbitals.front().grid());
  if (!st.grid) throw ConfigError("assemble_state: no grid");
  st.orbitals = std::move(orbitals);
  st.validate();
  if (with_gamma) {
    if (!params.closed()) throw ConfigError("assemble_state: gamma needs closed parameters");
    attach_gamma(st, st.orbital_density());
  }
  return st;
}

RankStructuredState build_cluster_state(const ModelParams& params, const PekarState& pekar,
                                        const ClusterStateOptions& opts) {
  const double c = opts.scale > 0.0 ? opts.scale : params.c_scale;
  if (!(c > 0.0)) throw ConfigError("build_cluster_state: length scale must be positive");
  if (opts.centres.empty()) throw ConfigError("build_cluster_state: no centres");
  if (!opts.directions.empty() && opts.directions.size() != opts.centres.size())
    throw ConfigError("build_cluster_state: one direction per centre");
  const bool custom = opts.dims[0] > 0 && opts.dims[1] > 0 && opts.dims[2] > 0;
  const GridPtr g = custom ? FourierGrid::create(opts.dims, {opts.box_xyz[0] * c, opts.box_xyz[1] * c, opts.box_xyz[2] * c}) : FourierGrid::cubic(opts.n, opts.box_unit * c);
  const double amp = std::pow(c, -1.5);
  std::vector<SpinorField> orb;
  for (std::size_t j = 0; j < opts.centres.size(); ++j) {
    Vec4 dir = Vec4::Zero();
    if (opts.directions.empty())
      dir(0) = 1.0;
    else
      dir = opts.directions[j].normalized();
    SpinorField s(g);
    for (int a = 0; a < 4; ++a) s[a].assign(g->size(), cplx(0.0));
    for (std::size_t i = 0; i < g->size(); ++i) {
      const Vec3 x = g->position(i);
      double r2 = 0.0;
      for (int a = 0; a < 3; ++a) r2 += std::pow(x[a] / c - opts.centres[j][a], 2);
      double v = amp * pekar.value(std::sqrt(r2));
      if (opts.cutoff_radius > 0.0) v *= profile_cutoff(std::sqrt(r2), opts.cutoff_radius);
      for (int a = 0; a < 4; ++a) s[a][i] = v * dir(a);
    }
    orb.push_back(std::move(s));
  }
  loewdin_orthonormalise(orb);

  RankStructuredState st;
  st.params = params;
  st.grid = g;
  if (!opts.with_gamma) {
    for (auto& o : orb) o = project(o, +1);
    loewdin_orthonormalise(orb);
    st.orbitals = std::move(orb);
    return st;
  }
  st.orbitals = orb;
  attach_gamma(st, st.orbital_density());
  for (auto& o : orb) {
    SpinorField p = project(o, +1);
    p -= st.gamma_op->apply(o);
    if (p.l2_norm() < 0.5) throw DataError("test state construction: normalisation collapse");
    o = std::move(p);
  }
  loewdin_orthonormalise(orb);
  st.orbitals = std::move(orb);
  return st;
}

RankStructuredState build_test_state(const ModelParams& params, const PekarState& pekar, int n, double box_unit) {
  ClusterStateOptions o;
  o.n = n;
  o.box_unit = box_unit;
  return build_cluster_state(params, pekar, o);
}

ChargeTrace p0_trace(const RankStructuredState& st) {
  st.validate();
  ChargeTrace t;
  for (const auto& o : st.orbitals) t.orbitals += o.norm2();
  if (st.gamma_op) {
    // The diagonal of multiplication by V in the plane-wave basis is the mean of V.
    const GridPtr& g = st.grid;
    double vbar = 0.0;
    for (double v : st.gamma_op->potential()) vbar += v;
    vbar /= static_cast<double>(g->size());
    const Mat4 M = Mat4::Identity() * cplx(vbar);
    double s = 0.0;
    for (std::size_t i = 0; i < g->size(); ++i) {
      const Vec3 p = g->kvec(i);
      const ProjectorPair pp = spectral_projectors(p, st.params);
      const Mat4 gam = -st.params.alpha * resolvent_pair_kernel(p, p, M, st.params);
      s += std::real((pp.plus * gam * pp.plus).trace() + (pp.minus * gam * pp.minus).trace());
    }
    t.gamma = s;
  }
  t.total = t.orbitals + t.gamma;
  return t;
}

KineticParts kinetic_energy(const RankStructuredState& st) {
  KineticParts k;
  k.rest = static_cast<double>(st.rank());
  for (const auto& o : st.orbitals) {
    const SpinorHat h = o.fourier();
    k.orbital_excess += dirac_excess(st.grid, h, st.params) + (hat_weighted_norm(st.grid, h, [](double) { return 1.0; }) - 1.0);
  }
  if (st.gamma) {
    const RVec& rho = st.source_total.values();
    k.vacuum = 0.5 * st.params.alpha *
               coulomb_pairing(st.grid, rho, multiplied_density(st.grid, rho, *st.table, false));
  }
  k.total = k.rest + k.excess();
  return k;
}

ExchangeParts exchange_term(const RankStructuredState& st, bool include_gamma) {
  ExchangeParts e;
  const GridPtr& g = st.grid;
  const auto& orb = st.orbitals;
  for (std::size_t i = 0; i < orb.size(); ++i)
    for (std::size_t j = i; j < orb.size(); ++j) {
      const CVec q = orb[i].pair_density(orb[j]);
      const double d = std::real(g->coulomb().pairing(q, q));
      e.orbital += (i == j ? 1.0 : 2.0) * d;
    }
  if (include_gamma) {
    if (!st.gamma_op) throw ConfigError("exchange_term: state has no gamma");
    if (g->size() > 12 * 12 * 12) throw ConfigError("exchange_term: gamma exchange restricted to 12^3 grids");
    const RVec w = coulomb_lattice_weights(g);
    double s = 0.0;
    for (const auto& o : orb) {
      const SpinorHat h = o.fourier();
      for (std::size_t li = 0; li < g->size(); ++li) {
        const SpinorHat ph = modulate_hat(g, h, li);
        s += w[li] * std::real(hat_inner(g, ph, st.gamma_op->apply_hat(ph)));
      }
    }
    e.orbital_gamma = 2.0 * s;
    e.gamma_included = true;
  }
  e.total = e.orbital + e.orbital_gamma;
  return e;
}

BdfEnergyParts bdf_energy(const RankStructuredState& st, const DensityField* nu, bool include_gamma_exchange) {
  st.validate();
  BdfEnergyParts b;
  b.kinetic = kinetic_energy(st);
  b.exchange = exchange_term(st, include_gamma_exchange);
  const RVec rho = st.charge_density();
  b.direct = coulomb_pairing(st.grid, rho, rho);
  if (nu) {
    require_same_grid(st.grid, nu->grid());
    b.nu_coupling = coulomb_pairing(st.grid, nu->values(), rho);
  }
  const double a = st.params.alpha;
  b.energy_minus_rest = b.kinetic.excess() - a * b.nu_coupling + 0.5 * a * (b.direct - b.exchange.total);
  b.energy = b.kinetic.rest + b.energy_minus_rest;
  return b;
}

SpinorHat apply_dirac_hat(const GridPtr& g, const SpinorHat& h, const ModelParams& params) {
  SpinorHat out;
  for (auto& c : out) c.resize(g->size());
  const RVec& k2 = g->k2();
  const double il2 = 1.0 / (params.lambda_uv * params.lambda_uv);
  for (std::size_t i = 0; i < g->size(); ++i) {
    const cplx v[4] = {h[0][i], h[1][i], h[2][i], h[3][i]};
    cplx d[4];
    apply_free_symbol(g->kvec(i), v, d);
    const double cut = 1.0 + k2[i] * il2;
    for (int a = 0; a < 4; ++a) out[a][i] = d[a] * cut;
  }
  return out;
}

SpinorField exchange_apply(const std::vector<SpinorField>& orbitals, const SpinorField& psi) {
  SpinorField out(psi.grid());
  for (int a = 0; a < 4; ++a) out[a].assign(psi.grid()->size(), cplx(0.0));
  for (const auto& o : orbitals) {
    const CVec w = psi.grid()->coulomb().potential(o.pair_density(psi));
    for (int a = 0; a < 4; ++a)
      for (std::size_t i = 0; i < w.size(); ++i) out[a][i] += o[a][i] * w[i];
  }
  return out;
}

MeanFieldEntry mean_field_residual(const RankStructuredState& st, std::size_t j) {
  if (j >= st.rank()) throw ConfigError("mean_field_residual: orbital index out of range");
  const GridPtr& g = st.grid;
  const SpinorField& psi = st.orbitals[j];
  const RVec vq = coulomb_potential(g, st.charge_density());
  const SpinorField b = mean_field_perturbation(st, vq, psi);
  const SpinorHat h = psi.fourier();
  const double n2 = psi.norm2();
  MeanFieldEntry m;
  m.mu_minus_one = (dirac_excess(g, h, st.params) + std::real(psi.inner(b))) / n2 + (hat_weighted_norm(g, h, [](double) { return 1.0; }) / n2 - 1.0);
  m.mu = 1.0 + m.mu_minus_one;
  // (D - 1) psi + alpha B psi - (mu - 1) psi
  SpinorHat dm = apply_dirac_hat(g, h, st.params);
  for (int a = 0; a < 4; ++a)
    for (std::size_t i = 0; i < g->size(); ++i) dm[a][i] -= h[a][i];
  SpinorField r = SpinorField::from_fourier(g, dm);
  r += b;
  r -= psi.scaled(m.mu_minus_one);
  m.residual = r.l2_norm();
  m.gap_product = -m.mu_minus_one * st.params.c_scale * st.params.c_scale;
  return m;
}

MeanFieldReport mean_field_report(const RankStructuredState& st) {
  MeanFieldReport r;
  for (std::size_t j = 0; j < st.rank(); ++j) {
    const MeanFieldEntry e = mean_field_residual(st, j);
    r.mu_values.push_back(e.mu);
    r.mu_minus_one.push_back(e.mu_minus_one);
    r.residuals.push_back(e.residual);
    r.gap_products.push_back(e.gap_product);
  }
  return r;
}

double gamma_hs_norm(const RankStructuredState& st) {
  if (!st.gamma || !st.table || !st.table->has_hs()) throw ConfigError("gamma_hs_norm: state has no gamma table");
  const RVec& rho = st.source_total.values();
  const double d = coulomb_pairing(st.grid, rho, multiplied_density(st.grid, rho, *st.table, true));
  return std::sqrt(std::max(0.0, st.params.alpha * d));
}

double kinetic_bridge(const RankStructuredState& st) {
  const double il2 = 1.0 / (st.params.lambda_uv * st.params.lambda_uv);
  double s = 0.0;
  for (const auto& o : st.orbitals)
    s += hat_weighted_norm(st.grid, o.fourier(), [&](double p2) {
      const double t = p2 * il2;
      return p2 * (1.0 + t + t * t);
    });
  return s;
}

ResdeltaReport resdelta_check(const RankStructuredState& st, std::size_t j, double slack, int power_iterations) {
  if (j >= st.rank()) throw ConfigError("resdelta_check: orbital index out of range");
  if (!st.gamma) throw ConfigError("resdelta_check: state has no gamma");
  const GridPtr& g = st.grid;
  const ModelParams& p = st.params;
  const SpinorField& psi = st.orbitals[j];
  const SpinorHat h = psi.fourier();
  const double il2 = 1.0 / (p.lambda_uv * p.lambda_uv);
  ResdeltaReport r;
  r.slack = slack;
  r.lhs = hat_weighted_norm(g, h, [&](double p2) {
    const double t = p2 * il2;
    return p2 * ((1.0 + t) * (1.0 + t) + il2 * (2.0 + t));
  }) + (hat_weighted_norm(g, h, [](double) { return 1.0; }) - 1.0);
  r.lower = hat_weighted_norm(g, h, [&](double p2) {
    const double t = p2 * il2;
    return p2 * (il2 * (2.0 + t) + 1.0 + t);
  });

  const RVec& rg = st.gamma->gamma_density.values();
  const RVec nj = psi.density();
  r.rho_gamma_c = std::sqrt(std::max(0.0, coulomb_pairing(g, rg, rg)));
  r.n_c = std::sqrt(std::max(0.0, coulomb_pairing(g, nj, nj)));
  r.gamma_s2 = gamma_hs_norm(st);
  CoulombOperator inv2(*g, PairKernel::inverse_square, CoulombBoundary::isolated);
  r.exchange_s2 = std::sqrt(std::max(0.0, inv2.pairing(nj, nj)));
  r.grad_half = std::sqrt(hat_weighted_norm(g, h, [](double p2) { return std::sqrt(p2); }));

  // Largest eigenvalue of |grad|^{-1/2} B^2 |grad|^{-1/2} by power iteration.
  const RVec vq = coulomb_potential(g, st.charge_density());
  auto applyB = [&](const SpinorField& x) {
    SpinorField b = x.multiplied(vq);
    b -= exchange_apply(st.orbitals, x);
    return b;
  };
  const ModelParams kin = ModelParams::kinematic(p.lambda_uv);
  SpinorField x = psi;
  for (int a = 1; a < 4; ++a)
    for (std::size_t i = 0; i < g->size(); ++i) x[a][i] += 0.5 * psi[0][i] * static_cast<double>(a);
  double lam = 0.0;
  for (int it = 0; it < power_iterations; ++it) {
    const double nx = x.l2_norm();
    if (nx == 0.0) break;
    x *= 1.0 / nx;
    const SpinorField y = fractional_multiplier(x, MultiplierSymbol::grad_abs, -0.5, kin);
    const SpinorField by = applyB(y);
    lam = by.norm2();
    x = fractional_multiplier(applyB(by), MultiplierSymbol::grad_abs, -0.5, kin);
  }
  r.b_norm = std::sqrt(lam);
  const double a = p.alpha;
  r.rhs = a * r.rho_gamma_c * r.n_c + a * r.gamma_s2 * r.exchange_s2 + std::pow(a * r.b_norm * r.grad_half, 2);
  r.holds = r.lhs <= slack * r.rhs;
  r.lower_holds = r.lower <= r.lhs * (1.0 + 1e-12) + 1e-300;
  return r;
}

}  // namespace bdfnb
