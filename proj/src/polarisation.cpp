#include "bdfnb/polarisation.hpp"

#include <boost/math/interpolators/cardinal_cubic_b_spline.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <algorithm>
#include <cmath>

#include "bdfnb/errors.hpp"

namespace bdfnb {

namespace {

using Spline = boost::math::interpolators::cardinal_cubic_b_spline<double>;
using boost::math::quadrature::gauss_kronrod;

constexpr double kQuadTol = 1e-10;

double norm2(const Vec3& p) { return p[0] * p[0] + p[1] * p[1] + p[2] * p[2]; }

// Integrand in prolate spheroidal variables around p = q + k: s = |p| + |q|, t = |p| - |q| = k tau.
// The trace of the kernel is g = (k^2 + |p x q|^2) / (E_p E_q (E_p E_q + 1 + p.q)), and
// |p x q|^2 = (k^2 - t^2)(s^2 - k^2)/4, so the overall 1/k^2 cancels in closed form.
double f_integrand(double w, double sigma, double k, double lambda, int power) {
  const double tau = 1.0 - sigma;
  const double a = 0.5 * (k + w + k * tau), b = 0.5 * (w + k * sigma);
  const double ea = energy_free(a * a), eb = energy_free(b * b);
  // s^2 - t^2 = 4ab, 1 + p.q = 1 + (s^2 - k^2 - (k^2 - t^2))/4 and k^2 + |p x q|^2 = k^2 x
  const double one_pq = 1.0 + 0.25 * (w * (2.0 * k + w) - k * k * sigma * (2.0 - sigma));
  const double x = 1.0 + 0.25 * sigma * (2.0 - sigma) * w * (2.0 * k + w);
  const double e2 = ea * eb;
  // E_p E_q + 1 + p.q, rationalised when p and q are nearly antiparallel
  const double sum = one_pq >= 0.0 ? e2 + one_pq : k * k * x / (e2 - one_pq);
  const double pair = energy_cut(a * a, lambda) + energy_cut(b * b, lambda);
  return 4.0 * a * b * x / (e2 * sum * (power == 1 ? pair : pair * pair));
}

double sigma_integral(double w, double k, double lambda, int power) {
  auto inner = [&](double sg) { return f_integrand(w, sg, k, lambda, power); };
  std::vector<double> cuts = {0.0};
  const double scale = std::max(1.0, w);
  if (k > 0.0) {
    // |q| = b crosses 1, 10, 100 times max(1, w), and the cutoff scale
    for (double v : {2.0 * scale, 20.0 * scale, 200.0 * scale, 0.6 * lambda, 2.0 * lambda, 6.0 * lambda})
      if (v / k < 1.0) cuts.push_back(v / k);
  }
  std::sort(cuts.begin(), cuts.end());
  cuts.push_back(1.0);
  double sum = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i)
    sum += gauss_kronrod<double, 31>::integrate(inner, cuts[i], cuts[i + 1], 8, 0.1 * kQuadTol);
  return sum;
}

}  // namespace

Mat4 resolvent_pair_kernel(const Vec3& p, const Vec3& q, const Mat4& M, const ModelParams& params) {
  for (int j = 0; j < 3; ++j)
    if (!std::isfinite(p[j]) || !std::isfinite(q[j])) throw DataError("resolvent_pair_kernel: non-finite momentum");
  const ProjectorPair pp = spectral_projectors(p, params);
  const ProjectorPair pq = spectral_projectors(q, params);
  const double denom = energy_cut(norm2(p), params.lambda_uv) + energy_cut(norm2(q), params.lambda_uv);
  return (pp.plus * M * pq.minus + pp.minus * M * pq.plus) / denom;
}

namespace {

// (2 / (pi k^2)) \int d^3q g(q+k, q) / (E(q+k) + E(q))^power in the folded variables.
double bubble_integral(double k, double lambda_uv, int power) {
  // Outer integral over w = s - k in x = ln w; breakpoints at the mass scale, k and the cutoff.
  const double ll = std::log(lambda_uv);
  const double hi = ll + 25.0;
  std::vector<double> cuts = {-30.0, -3.0, 0.0, 2.0, ll - 2.0, ll, ll + 3.0, hi};
  if (k > 0.1) {
    const double lk = std::log(k);
    for (double t : {lk - 1.0, lk, lk + 1.0})
      if (t < hi) cuts.push_back(t);
  }
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end(), [](double a, double b) { return std::abs(a - b) < 1e-3; }),
             cuts.end());
  auto outer = [&](double x) {
    const double w = std::exp(x);
    return w * sigma_integral(w, k, lambda_uv, power);
  };
  double sum = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i)
    sum += gauss_kronrod<double, 31>::integrate(outer, cuts[i], cuts[i + 1], 10, kQuadTol);
  return sum;
}

void check_args(double k, double alpha, double lambda_uv) {
  if (!(k >= 0.0) || !std::isfinite(k)) throw ConfigError("f_lambda: k must be finite and >= 0");
  if (!(alpha >= 0.0)) throw ConfigError("f_lambda: alpha must be >= 0");
  if (!(lambda_uv > std::exp(1.0))) throw ConfigError("f_lambda: lambda_uv must exceed e");
}

}  // namespace

double f_lambda(double k, double alpha, double lambda_uv) {
  check_args(k, alpha, lambda_uv);
  if (alpha == 0.0) return 0.0;
  // d^3q = (pi/4k) (s^2 - t^2) ds dt, t = k tau, and the t-range is folded onto tau in [0, 1]
  const double f = alpha / (2.0 * M_PI) * bubble_integral(k, lambda_uv, 1);
  require_finite(f, "f_lambda");
  return f;
}

double h_lambda(double k, double alpha, double lambda_uv) {
  check_args(k, alpha, lambda_uv);
  if (alpha == 0.0) return 0.0;
  const double h = alpha / (2.0 * M_PI) * bubble_integral(k, lambda_uv, 2);
  require_finite(h, "h_lambda");
  return h;
}

ModelParams z3_u0(double alpha, double lambda_uv) {
  if (!(alpha > 0.0)) throw ConfigError("alpha must be positive");
  if (!(lambda_uv > std::exp(1.0))) throw ConfigError("lambda_uv must exceed e");
  return ModelParams::close(alpha, lambda_uv, f_lambda(0.0, alpha, lambda_uv));
}

PolarisationTable PolarisationTable::build(const ModelParams& params, double k_max, int n_points, bool with_hs) {
  if (!params.closed()) throw ConfigError("PolarisationTable needs closed parameters");
  if (!(k_max > 0.0) || !std::isfinite(k_max)) throw ConfigError("PolarisationTable: k_max must be positive");
  if (n_points == 0) n_points = std::clamp(static_cast<int>(std::ceil(k_max / 0.02)), 64, 4000) + 1;
  if (n_points < 8) throw ConfigError("PolarisationTable: need at least 8 points");
  PolarisationTable t;
  t.params_ = params;
  t.h_ = k_max / (n_points - 1);
  t.k_.resize(n_points);
  t.f_.resize(n_points);
  t.F_.resize(n_points);
  for (int i = 0; i < n_points; ++i) t.k_[i] = i * t.h_;
  t.f_[0] = params.f0;
  parallel_for(n_points - 1, [&](std::size_t i) { t.f_[i + 1] = f_lambda(t.k_[i + 1], params); });
  for (int i = 0; i < n_points; ++i) {
    if (t.f_[i] < 0.0) throw DataError("PolarisationTable: negative f_Lambda (sign convention broken)");
    t.F_[i] = t.f_[i] / (1.0 + t.f_[i]);
  }
  t.spline_ = std::make_shared<Spline>(t.f_.data(), t.f_.size(), 0.0, t.h_, 0.0);
  if (with_hs) {
    t.hs_.resize(n_points);
    parallel_for(n_points, [&](std::size_t i) { t.hs_[i] = h_lambda(t.k_[i], params.alpha, params.lambda_uv); });
    t.hs_spline_ = std::make_shared<Spline>(t.hs_.data(), t.hs_.size(), 0.0, t.h_, 0.0);
  }
  return t;
}

double PolarisationTable::f(double k) const {
  if (!(k >= 0.0) || k > k_.back() * (1.0 + 1e-12))
    throw ConfigError("PolarisationTable: k = " + std::to_string(k) + " outside [0, " + std::to_string(k_.back()) + "]");
  return (*static_cast<const Spline*>(spline_.get()))(std::min(k, k_.back()));
}

double PolarisationTable::hs(double k) const {
  if (!hs_spline_) throw ConfigError("PolarisationTable: built without the Hilbert-Schmidt multiplier");
  f(k);  // range check
  return (*static_cast<const Spline*>(hs_spline_.get()))(std::min(k, k_.back()));
}

double PolarisationTable::F(double k) const {
  const double v = f(k);
  return v / (1.0 + v);
}

LaplaceRule laplace_rule(double x_min, double x_max, double rel_tol) {
  if (!(x_min > 0.0) || !(x_max >= x_min)) throw ConfigError("laplace_rule: need 0 < x_min <= x_max");
  // 1/x = \int e^{t - x e^t} dt, trapezoid in t
  const double lt = std::log(1.0 / rel_tol);
  const double h = M_PI * M_PI / (lt + 2.0);
  const double t_lo = std::log(rel_tol / x_max);
  const double t_hi = std::log((lt + 4.0) / x_min);
  LaplaceRule r;
  for (double t = t_lo; t <= t_hi + 0.5 * h; t += h) {
    r.s.push_back(std::exp(t));
    r.w.push_back(h * std::exp(t));
  }
  return r;
}

VacuumCorrection vacuum_density(const DensityField& n, int order, const PolarisationTable& table,
                                const std::vector<SpinorField>& orbitals) {
  if (order != 1 && order != 2) throw ConfigError("vacuum_density: order must be 1 or 2");
  const GridPtr& g = n.grid();
  if (!g) throw DataError("vacuum_density: empty density");
  for (double v : n.values()) require_finite(v, "vacuum_density input");
  const CVec& nh = n.fourier();
  const RVec& k2 = g->k2();
  CVec rh(g->size());
  RVec Fk(g->size());
  for (std::size_t i = 0; i < g->size(); ++i) {
    Fk[i] = table.F(std::sqrt(k2[i]));
    rh[i] = -Fk[i] * nh[i];
  }
  VacuumCorrection out;
  out.order = order;
  out.source_n = n;
  if (order == 2) {
    if (orbitals.empty()) throw ConfigError("vacuum_density: order 2 needs the orbitals of N");
    const ModelParams& p = table.params();
    RVec tau = exchange_response_density(orbitals, p);
    DensityField tf(g, tau);
    const CVec& th = tf.fourier();
    for (std::size_t i = 0; i < g->size(); ++i) rh[i] += (1.0 - Fk[i]) * p.alpha * th[i];
    out.tau10 = tf;
  }
  out.gamma_density = DensityField(g, g->inverse_real(rh));
  if (order == 1)
    out.residual = std::abs(out.gamma_density.total_charge() + table.F(0.0) * n.total_charge());
  else
    out.residual = std::abs(out.gamma_density.total_charge() + table.F(0.0) * n.total_charge() -
                            (1.0 - table.F(0.0)) * table.params().alpha * out.tau10.total_charge());
  return out;
}

RVec coulomb_lattice_weights(const GridPtr& g) {
  // 1/|x-y| = (2pi)^{-3} \int dl (4pi/l^2) e^{il.(x-y)} summed over lattice cells.
  const double dl3 = g->k_spacing(0) * g->k_spacing(1) * g->k_spacing(2);
  constexpr double kUnitCubeInvSquare = 7.6741242224;  // \int_{[-1/2,1/2]^3} |x|^{-2} dx
  const double w0 = 4.0 * M_PI * kUnitCubeInvSquare * std::cbrt(dl3) / dl3;
  const RVec& k2 = g->k2();
  RVec w(g->size());
  for (std::size_t i = 0; i < w.size(); ++i)
    w[i] = (k2[i] > 0.0 ? 4.0 * M_PI / k2[i] : w0) * dl3 / std::pow(2.0 * M_PI, 3);
  return w;
}

SpinorHat modulate_hat(const GridPtr& g, const SpinorHat& h, std::size_t li) {
  const auto& nn = g->n();
  const int l0 = static_cast<int>(li / (nn[1] * nn[2]));
  const int l1 = static_cast<int>((li / nn[2]) % nn[1]);
  const int l2 = static_cast<int>(li % nn[2]);
  SpinorHat out;
  for (int a = 0; a < 4; ++a) out[a].assign(g->size(), cplx(0.0));
  for (int i = 0; i < nn[0]; ++i)
    for (int j = 0; j < nn[1]; ++j)
      for (int k = 0; k < nn[2]; ++k) {
        const std::size_t dst = g->index((i + l0) % nn[0], (j + l1) % nn[1], (k + l2) % nn[2]);
        const std::size_t src = g->index(i, j, k);
        for (int a = 0; a < 4; ++a) out[a][dst] = h[a][src];
      }
  return out;
}

RVec exchange_response_density(const std::vector<SpinorField>& orbitals, const ModelParams& params) {
  if (orbitals.empty()) throw ConfigError("exchange_response_density: no orbitals");
  const GridPtr g = orbitals.front().grid();
  for (const auto& o : orbitals) require_same_grid(g, o.grid());
  if (g->size() > 16 * 16 * 16) throw ConfigError("exchange_response_density: grid larger than 16^3");
  const std::size_t N = g->size();
  const RVec& k2 = g->k2();
  double e_max = 0.0;
  RVec E(N);
  for (std::size_t i = 0; i < N; ++i) {
    E[i] = energy_cut(k2[i], params.lambda_uv);
    e_max = std::max(e_max, E[i]);
  }
  const LaplaceRule rule = laplace_rule(2.0, 2.0 * e_max, 1e-9);
  std::vector<SpinorHat> hats;
  for (const auto& o : orbitals) hats.push_back(o.fourier());

  const RVec wlat = coulomb_lattice_weights(g);
  std::vector<RVec> partial(N);
  parallel_for(N, [&](std::size_t li) {
    const double wl = wlat[li];
    RVec acc(N, 0.0);
    for (const auto& h : hats) {
      const SpinorHat ph = modulate_hat(g, h, li);
      const SpinorHat plus = project_hat(g, ph, +1);
      const SpinorHat minus = project_hat(g, ph, -1);
      for (std::size_t s = 0; s < rule.s.size(); ++s) {
        std::array<CVec, 4> ap, am;
        for (int a = 0; a < 4; ++a) {
          ap[a].resize(N);
          am[a].resize(N);
          for (std::size_t i = 0; i < N; ++i) {
            const double d = std::exp(-rule.s[s] * E[i]);
            ap[a][i] = d * plus[a][i];
            am[a][i] = d * minus[a][i];
          }
          ap[a] = g->inverse(ap[a]);
          am[a] = g->inverse(am[a]);
        }
        for (std::size_t i = 0; i < N; ++i) {
          double v = 0.0;
          for (int a = 0; a < 4; ++a) v += std::real(ap[a][i] * std::conj(am[a][i]));
          acc[i] += 2.0 * rule.w[s] * wl * v;
        }
      }
    }
    partial[li] = std::move(acc);
  });
  RVec out(N, 0.0);
  for (const auto& p : partial)
    for (std::size_t i = 0; i < N; ++i) out[i] += p[i];
  return out;
}

namespace {

// \int_x^inf sin(t)/t dt
double sine_integral_tail(double x) {
  if (x > 40.0) {
    const double x2 = x * x;
    return std::cos(x) / x * (1.0 - 2.0 / x2 + 24.0 / (x2 * x2)) + std::sin(x) / x2 * (1.0 - 6.0 / x2 + 120.0 / (x2 * x2));
  }
  auto sinc = [](double t) { return t == 0.0 ? 1.0 : std::sin(t) / t; };
  return 0.5 * M_PI - gauss_kronrod<double, 61>::integrate(sinc, 0.0, x, 15, 1e-13);
}

// \int_a^b P(k) sin(k r) dk for the cubic Hermite interpolant of (h, h') at the end points.
double filon_cubic(double a, double b, double ha, double hb, double da, double db, double r) {
  const double L = b - a;
  // P(a + x) = c0 + c1 x + c2 x^2 + c3 x^3
  const double c0 = ha, c1 = da;
  const double c2 = (3.0 * (hb - ha) / L - 2.0 * da - db) / L;
  const double c3 = (2.0 * (ha - hb) / L + da + db) / (L * L);
  if (L * r < 2.0) {
    static const std::array<double, 8> xg = {-0.9602898564975363, -0.7966664774136267, -0.5255324099163290,
                                             -0.1834346424956498, 0.1834346424956498,  0.5255324099163290,
                                             0.7966664774136267,  0.9602898564975363};
    static const std::array<double, 8> wg = {0.1012285362903763, 0.2223810344533745, 0.3137066458778873,
                                             0.3626837833783620, 0.3626837833783620, 0.3137066458778873,
                                             0.2223810344533745, 0.1012285362903763};
    double s = 0.0;
    for (int i = 0; i < 8; ++i) {
      const double x = 0.5 * L * (xg[i] + 1.0);
      s += wg[i] * (c0 + x * (c1 + x * (c2 + x * c3))) * std::sin((a + x) * r);
    }
    return 0.5 * L * s;
  }
  // repeated integration by parts
  auto prim = [&](double x) {
    const double P = c0 + x * (c1 + x * (c2 + x * c3));
    const double P1 = c1 + x * (2.0 * c2 + 3.0 * c3 * x);
    const double P2 = 2.0 * c2 + 6.0 * c3 * x;
    const double P3 = 6.0 * c3;
    const double cs = std::cos((a + x) * r), sn = std::sin((a + x) * r);
    return -P * cs / r + P1 * sn / (r * r) + P2 * cs / (r * r * r) - P3 * sn / (r * r * r * r);
  };
  return prim(L) - prim(0.0);
}

}  // namespace

RadialKernel fcheck_kernel(const ModelParams& params, bool resummed) {
  if (!params.closed()) throw ConfigError("fcheck: parameters not closed");
  const double lam = params.lambda_uv;
  // f on a log-k table over [k_lo, k_hi]; f ~ C/k^2 beyond k_hi
  const double k_lo = 1e-3, k_hi = 1e3 * lam;
  const int per_decade = 40;
  const int nk = per_decade * static_cast<int>(std::ceil(std::log10(k_hi / k_lo))) + 1;
  const double dlk = std::log(k_hi / k_lo) / (nk - 1);
  std::vector<double> fv(nk);
  parallel_for(nk, [&](std::size_t i) { fv[i] = f_lambda(k_lo * std::exp(i * dlk), params); });
  const double slope = std::log(fv[nk - 1] / fv[nk - 1 - per_decade]) / std::log(10.0);
  if (std::abs(slope + 2.0) > 0.05)
    throw AccuracyError("fcheck: f_Lambda not in its k^-2 tail at the table edge (slope " + std::to_string(slope) +
                        ")");
  const Spline sp(fv.data(), fv.size(), std::log(k_lo), dlk);
  // h(k) = k m(k) and h'(k) on the nodes
  std::vector<double> kn(nk), hv(nk), dv(nk);
  for (int i = 0; i < nk; ++i) {
    const double k = k_lo * std::exp(i * dlk);
    const double f = fv[i], fp = sp.prime(std::log(k)) / k;
    const double m = resummed ? f / (1.0 + f) : f;
    const double mp = resummed ? fp / ((1.0 + f) * (1.0 + f)) : fp;
    kn[i] = k;
    hv[i] = k * m;
    dv[i] = m + k * mp;
  }
  const double m0 = resummed ? params.f0 / (1.0 + params.f0) : params.f0;
  const double tail_c = hv.back() * k_hi;  // h ~ C/k

  RadialKernel out;
  const double r_lo = 1e-3 / lam, r_hi = 40.0;
  const int nr = 24 * static_cast<int>(std::ceil(std::log10(r_hi / r_lo))) + 1;
  const double dlr = std::log(r_hi / r_lo) / (nr - 1);
  out.r.resize(nr);
  out.values.resize(nr);
  for (int i = 0; i < nr; ++i) out.r[i] = r_lo * std::exp(i * dlr);
  parallel_for(nr, [&](std::size_t i) {
    const double r = out.r[i];
    // below k_lo: m quadratic in k between m0 and the first node
    const double hk0 = hv[0] / k_lo;
    auto low = [&](double k) { return k * (m0 + (hk0 - m0) * (k * k) / (k_lo * k_lo)) * std::sin(k * r); };
    double sum = gauss_kronrod<double, 31>::integrate(low, 0.0, k_lo, 4, 1e-13);
    for (int j = 0; j + 1 < nk; ++j) sum += filon_cubic(kn[j], kn[j + 1], hv[j], hv[j + 1], dv[j], dv[j + 1], r);
    sum += tail_c * sine_integral_tail(k_hi * r);
    out.values[i] = sum / (2.0 * M_PI * M_PI * r);
  });
  out.tail = std::pow(r_hi, 3) * std::abs(out.values.back());
  if (out.tail > 1e-6 * params.f0)
    throw AccuracyError("fcheck: kernel tail not converged, r^3|g| = " + std::to_string(out.tail));
  return out;
}

double kernel_moment(const RadialKernel& k, int ell) {
  // trapezoid in ln r of 4 pi r^{3+ell} |g|
  double s = 0.0;
  for (std::size_t i = 0; i + 1 < k.r.size(); ++i) {
    const double a = 4.0 * M_PI * std::pow(k.r[i], 3 + ell) * std::abs(k.values[i]);
    const double b = 4.0 * M_PI * std::pow(k.r[i + 1], 3 + ell) * std::abs(k.values[i + 1]);
    s += 0.5 * (a + b) * std::log(k.r[i + 1] / k.r[i]);
  }
  return s;
}

double kernel_integral(const RadialKernel& k) {
  double s = 0.0;
  for (std::size_t i = 0; i + 1 < k.r.size(); ++i) {
    const double a = 4.0 * M_PI * std::pow(k.r[i], 3) * k.values[i];
    const double b = 4.0 * M_PI * std::pow(k.r[i + 1], 3) * k.values[i + 1];
    s += 0.5 * (a + b) * std::log(k.r[i + 1] / k.r[i]);
  }
  return s;
}

double fcheck_moment(int ell, const ModelParams& params, bool resummed) {
  if (ell < 0 || ell > 2) throw ConfigError("fcheck_moment: ell must be 0, 1 or 2");
  return kernel_moment(fcheck_kernel(params, resummed), ell);
}

}  // namespace bdfnb
