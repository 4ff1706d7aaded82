#include "bdfnb/localisation.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "bdfnb/coulomb.hpp"
#include "bdfnb/dirac.hpp"
#include "bdfnb/errors.hpp"
#include "bdfnb/multipliers.hpp"

namespace bdfnb {

namespace {

double dist(const Vec3& a, const Vec3& b) {
  return std::sqrt((a[0] - b[0]) * (a[0] - b[0]) + (a[1] - b[1]) * (a[1] - b[1]) + (a[2] - b[2]) * (a[2] - b[2]));
}

template <class F>
RVec sample(const GridPtr& g, F&& f) {
  RVec v(g->size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = f(g->position(i));
  return v;
}

int even_points(double box, double dx) {
  int n = static_cast<int>(std::lround(box / dx));
  if (n % 2) ++n;
  return std::max(n, 8);
}

// |D0|^s applied componentwise.
SpinorField d0_power(const SpinorField& psi, double s) {
  return fractional_multiplier(psi, MultiplierSymbol::free_dirac_abs, s, ModelParams{});
}

RVec indicator_ball(const GridPtr& g, const Vec3& centre, double radius) {
  return sample(g, [&](const Vec3& x) { return dist(x, centre) <= radius ? 1.0 : 0.0; });
}

CVec masked(const CVec& f, const RVec& m) {
  CVec out(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) out[i] = f[i] * m[i];
  return out;
}

RVec masked(const RVec& f, const RVec& m) {
  RVec out(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) out[i] = f[i] * m[i];
  return out;
}

}  // namespace

double base_bump(double t) {
  t = std::abs(t);
  if (t <= 1.0) return 1.0;
  if (t >= 2.0) return 0.0;
  const double s = t - 1.0;
  return 1.0 - s * s * s * (10.0 - 15.0 * s + 6.0 * s * s);
}

double base_bump_derivative(double t) {
  t = std::abs(t);
  if (t <= 1.0 || t >= 2.0) return 0.0;
  const double s = t - 1.0;
  return -30.0 * s * s * (1.0 - s) * (1.0 - s);
}

double lambda_zero(double L, double r_g, double c0) {
  if (!(L > 0.0) || !(r_g > 0.0)) throw ConfigError("lambda_zero: L and r_g must be positive");
  return c0 / (L * r_g);
}

CutoffFamily::CutoffFamily(Vec3 z1, Vec3 z2, double lambda_loc, double A, double scale_c)
    : z1_(z1), z2_(z2), r_g_(dist(z1, z2)), lambda_(lambda_loc), A_(A), c_(scale_c) {}

Vec3 CutoffFamily::centre(int j) const {
  const Vec3& z = j == 1 ? z1_ : z2_;
  return {c_ * z[0], c_ * z[1], c_ * z[2]};
}

double CutoffFamily::xi(int j, const Vec3& x, double lambda) const {
  if (j != 1 && j != 2) throw ConfigError("cutoff index must be 1 or 2");
  return base_bump(dist(x, centre(j)) / (c_ * lambda * r_g_));
}

double CutoffFamily::eta(const Vec3& x, double lambda) const {
  const double a = xi(1, x, lambda), b = xi(2, x, lambda);
  return std::sqrt(std::max(0.0, 1.0 - a * a - b * b));
}

double CutoffFamily::xi_A(const Vec3& x) const {
  const Vec3 m{0.5 * c_ * (z1_[0] + z2_[0]), 0.5 * c_ * (z1_[1] + z2_[1]), 0.5 * c_ * (z1_[2] + z2_[2])};
  return base_bump(dist(x, m) / (c_ * A_));
}

double CutoffFamily::theta_A(const Vec3& x) const {
  const double a = xi_A(x);
  return std::sqrt(std::max(0.0, 1.0 - a * a));
}

double CutoffFamily::d(const Vec3& x) const { return std::min(dist(x, centre(1)), dist(x, centre(2))); }

double CutoffFamily::xi_gradient_bound(double lambda) const { return 1.875 / (c_ * lambda * r_g_); }

RVec CutoffFamily::xi_on(const GridPtr& g, int j, double lambda) const {
  return sample(g, [&](const Vec3& x) { return xi(j, x, lambda); });
}

RVec CutoffFamily::eta_on(const GridPtr& g, double lambda) const {
  return sample(g, [&](const Vec3& x) { return eta(x, lambda); });
}

RVec CutoffFamily::xi_A_on(const GridPtr& g) const {
  return sample(g, [&](const Vec3& x) { return xi_A(x); });
}

RVec CutoffFamily::d_on(const GridPtr& g) const {
  return sample(g, [&](const Vec3& x) { return d(x); });
}

CutoffFamily make_cutoffs(const Vec3& z1, const Vec3& z2, double lambda_loc, double r_g, double A, double scale_c,
                          double lambda0) {
  if (!(r_g > 0.0)) throw ConfigError("make_cutoffs: r_g must be positive");
  if (std::abs(dist(z1, z2) - r_g) > 1e-12 * r_g) throw ConfigError("make_cutoffs: |z1 - z2| differs from r_g");
  if (!(scale_c > 0.0)) throw ConfigError("make_cutoffs: scale must be positive");
  if (!(lambda_loc > lambda0) || !(lambda_loc > 0.0)) {
    std::ostringstream os;
    os << "make_cutoffs: lambda_loc " << lambda_loc << " not above lambda_0 " << lambda0;
    throw ConfigError(os.str());
  }
  if (2.0 * lambda_loc * r_g >= r_g) throw ConfigError("make_cutoffs: cluster balls overlap (2 lambda r_g >= r_g)");
  if (lambda_loc > 1.0 / 3.0 + 1e-15)
    throw ConfigError("make_cutoffs: cutoff supports overlap for lambda_loc above 1/3");
  if (!(A >= 2.0 * r_g)) throw ConfigError("make_cutoffs: A must be at least 2 r_g");
  return CutoffFamily(z1, z2, lambda_loc, A, scale_c);
}

double decay_moment(const std::vector<SpinorField>& orbitals, const CutoffFamily& family, int power, bool half_d0) {
  if (power != 2 && power != 4) throw ConfigError("decay_moment: power must be 2 or 4");
  if (orbitals.empty()) return 0.0;
  const GridPtr& g = orbitals.front().grid();
  const RVec d = family.d_on(g), xa = family.xi_A_on(g), eta = family.eta_on(g, family.lambda());
  RVec w(g->size());
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = std::pow(d[i], power) * xa[i] * xa[i] * eta[i] * eta[i];
  long double s = 0.0L;
  for (const auto& o : orbitals) {
    require_same_grid(g, o.grid());
    RVec n;
    if (half_d0) {
      const SpinorHat h = o.fourier();
      for (int a = 0; a < 4; ++a) g->check_aliasing(h[a], "decay_moment orbital", 1e-6);
      n = d0_power(o, 0.5).density();
    } else {
      n = o.density();
    }
    for (std::size_t i = 0; i < w.size(); ++i) s += static_cast<long double>(w[i] * n[i]);
  }
  return static_cast<double>(s) * g->dV();
}

double decay_moment(const SpinorField& psi, const CutoffFamily& family, int power, bool half_d0) {
  return decay_moment(std::vector<SpinorField>{psi}, family, power, half_d0);
}

SpinorField localise(const SpinorField& psi, const RVec& zeta) {
  if (zeta.size() != psi.grid()->size()) throw ConfigError("localise: cutoff does not match the grid");
  const SpinorField p = project(psi, +1);
  const SpinorField m = psi - p;
  return project(p.multiplied(zeta), +1) + project(m.multiplied(zeta), -1);
}

RankStructuredState localise_state(const RankStructuredState& state, const RVec& zeta) {
  state.validate();
  if (zeta.size() != state.grid->size()) throw ConfigError("localise_state: cutoff does not match the grid");
  RankStructuredState out = state;
  out.orthonormal = false;
  out.gamma_op.reset();
  for (auto& o : out.orbitals) o = localise(o, zeta);
  if (state.gamma) {
    RVec z2(zeta.size());
    for (std::size_t i = 0; i < z2.size(); ++i) z2[i] = zeta[i] * zeta[i];
    out.gamma->gamma_density = DensityField(state.grid, masked(state.gamma->gamma_density.values(), z2));
    out.gamma->source_n = DensityField(state.grid, masked(state.gamma->source_n.values(), z2));
    out.source_total = DensityField(state.grid, masked(state.source_total.values(), z2));
  }
  return out;
}

double offdiagonal_norm(const RVec& zeta, const std::vector<SpinorField>& trials) {
  double best = 0.0;
  for (const auto& phi : trials) {
    const double n = phi.l2_norm();
    if (n == 0.0) continue;
    const SpinorField v = project(project(phi, -1).multiplied(zeta), +1);
    best = std::max(best, v.l2_norm() / n);
  }
  return best;
}

double commutator_norm(const RVec& zeta, const std::vector<SpinorField>& trials) {
  double best = 0.0;
  for (const auto& phi : trials) {
    const double n = phi.l2_norm();
    if (n == 0.0) continue;
    const SpinorField u = d0_power(phi, -0.5);
    const SpinorField v = d0_power(u.multiplied(zeta), 0.5) - d0_power(u, 0.5).multiplied(zeta);
    best = std::max(best, v.l2_norm() / n);
  }
  return best;
}

PartitionReport energy_partition(const RankStructuredState& state, const CutoffFamily& family) {
  state.validate();
  if (state.rank() != 2) throw ConfigError("energy_partition: needs a two-cluster state of rank 2");
  const GridPtr& g = state.grid;
  PartitionReport r;
  r.r_g = family.r_g();
  r.scale = family.scale();
  r.total_energy = bdf_energy(state).energy;
  r.total_charge = p0_trace(state).total;
  for (int j = 0; j < 2; ++j) {
    const RankStructuredState loc = localise_state(state, family.xi_on(g, j + 1));
    r.cluster_energies[j] = bdf_energy(loc).energy;
    r.charge_split[j] = p0_trace(loc).total;
  }

  const double c = family.scale(), rad = c * family.lambda() * family.r_g();
  const RVec b1 = indicator_ball(g, {c * family.z1()[0], c * family.z1()[1], c * family.z1()[2]}, rad);
  const RVec b2 = indicator_ball(g, {c * family.z2()[0], c * family.z2()[1], c * family.z2()[2]}, rad);
  const SpinorField& p1 = state.orbitals[0];
  const SpinorField& p2 = state.orbitals[1];
  const RVec n1 = p1.density(), n2 = p2.density();
  const CVec q = p1.pair_density(p2);
  const double direct = coulomb_pairing(g, masked(n1, b1), masked(n2, b2)) +
                        coulomb_pairing(g, masked(n2, b1), masked(n1, b2));
  const double ex = std::real(g->coulomb().pairing(masked(q, b2), masked(q, b1)));
  // |psi1 ^ psi2|^2 = n1(x) n2(y) + n2(x) n1(y) - 2 Re q(x) conj q(y); B2 x B1 doubles the B1 x B2 part.
  r.cross_exchange = 2.0 * (direct - 2.0 * ex);
  r.residual = r.total_energy - r.cluster_energies[0] - r.cluster_energies[1] -
               0.5 * state.params.alpha * r.cross_exchange;
  return r;
}

double EnergyCurve::operator()(double q) const {
  if (charge.size() != energy.size() || charge.size() < 2) throw DataError("energy curve needs at least two samples");
  for (std::size_t i = 1; i < charge.size(); ++i)
    if (!(charge[i] > charge[i - 1])) throw DataError("energy curve charges must increase");
  const double tol = 1e-12;
  if (q < charge.front() - tol || q > charge.back() + tol) {
    std::ostringstream os;
    os << "energy curve has no samples around charge " << q;
    throw DataError(os.str());
  }
  std::size_t k = 1;
  while (k + 1 < charge.size() && charge[k] < q) ++k;
  const double t = (q - charge[k - 1]) / (charge[k] - charge[k - 1]);
  return (1.0 - t) * energy[k - 1] + t * energy[k];
}

NoBindingVerdict no_binding_check(const PartitionReport& partition, const ModelParams& params, double e1,
                                  const EnergyCurve& curve) {
  if (!(e1 >= 0.0) || e1 > 1.0) throw DataError("no_binding_check: |eps| must lie in [0, 1]");
  if (curve.charge.empty() || curve.charge.front() > 0.0 || curve.charge.back() < 2.0)
    throw DataError("no_binding_check: energy curve must cover charges 0 to 2");
  NoBindingVerdict v;
  v.r_g = partition.r_g;
  v.eps = e1;
  const double E1 = curve(1.0);
  const double E2 = std::min(2.0 * E1, partition.total_energy);
  v.delta2 = partition.total_energy - 2.0 * E1;
  v.interaction = 0.5 * params.alpha * partition.cross_exchange;
  v.residual = partition.residual;
  v.concavity_defect = std::max(0.0, E2 - curve(1.0 + e1) - curve(1.0 - e1));
  v.bound = std::abs(v.residual) + v.concavity_defect;
  v.no_binding = v.interaction > v.bound;
  return v;
}

RankStructuredState build_partition_state(const ModelParams& params, const PekarState& pekar,
                                          const PartitionSetup& s) {
  if (!(s.cutoff_radius > 0.0) || s.cutoff_radius > s.r_g / 3.0)
    throw ConfigError("partition state: cutoff radius must lie in (0, r_g/3]");
  const double bx = s.r_g + 2.0 * (s.cutoff_radius + s.margin), by = 2.0 * (s.cutoff_radius + s.margin);
  ClusterStateOptions o;
  o.dims = {even_points(bx, s.dx), even_points(by, s.dx), even_points(by, s.dx)};
  o.box_xyz = {bx, by, by};
  o.centres = {{-0.5 * s.r_g, 0.0, 0.0}, {0.5 * s.r_g, 0.0, 0.0}};
  Vec4 up = Vec4::Zero(), down = Vec4::Zero();
  up(0) = 1.0;
  down(1) = 1.0;
  o.directions = {up, down};
  o.cutoff_radius = s.cutoff_radius;
  o.with_gamma = s.with_gamma;
  return build_cluster_state(params, pekar, o);
}

CutoffFamily partition_family(const ModelParams& params, const PartitionSetup& s) {
  return make_cutoffs({-0.5 * s.r_g, 0.0, 0.0}, {0.5 * s.r_g, 0.0, 0.0}, 1.0 / 3.0, s.r_g, 4.0 * s.r_g,
                      params.c_scale);
}

EnergyCurve single_cluster_curve(const ModelParams& params, const PekarState& pekar, const PartitionSetup& s) {
  const double b = 2.0 * (s.cutoff_radius + s.margin);
  ClusterStateOptions o;
  o.n = even_points(b, s.dx);
  o.box_unit = b;
  o.centres = {{0.0, 0.0, 0.0}, {0.0, 0.0, 0.0}};
  Vec4 up = Vec4::Zero(), down = Vec4::Zero();
  up(0) = 1.0;
  down(1) = 1.0;
  o.directions = {up, down};
  o.cutoff_radius = s.cutoff_radius;
  o.with_gamma = s.with_gamma;
  const RankStructuredState pair = build_cluster_state(params, pekar, o);
  EnergyCurve curve;
  for (double q : {0.0, 0.5, 1.0, 1.5, 2.0}) {
    curve.charge.push_back(q);
    if (q == 0.0) {
      curve.energy.push_back(0.0);
      continue;
    }
    std::vector<SpinorField> orb{pair.orbitals[0].scaled(std::sqrt(std::min(q, 1.0)))};
    if (q > 1.0) orb.push_back(pair.orbitals[1].scaled(std::sqrt(q - 1.0)));
    const RankStructuredState st = assemble_state(params, std::move(orb), s.with_gamma, pair.grid, false);
    curve.energy.push_back(bdf_energy(st).energy);
  }
  return curve;
}

}  // namespace bdfnb
