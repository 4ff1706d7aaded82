#include "bdfnb/commands.hpp"

#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <numbers>
#include <ostream>

#include "bdfnb/bdf.hpp"
#include "bdfnb/errors.hpp"
#include "bdfnb/inequalities.hpp"
#include "bdfnb/localisation.hpp"
#include "bdfnb/pekar.hpp"
#include "bdfnb/polarisation.hpp"

namespace bdfnb {

namespace {

using Clock = std::chrono::steady_clock;

Json params_json(const ModelParams& p) {
  return {{"alpha", p.alpha}, {"lambda_uv", p.lambda_uv}, {"L", p.L},       {"f0", p.f0},
          {"F0", p.F0()},     {"z3", p.z3},               {"u0", p.u0},     {"c_scale", p.c_scale}};
}

std::string out_name(const RunConfig& c, const char* fallback) { return c.out.empty() ? fallback : c.out; }

void probe_writable(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ConfigError("cannot create out_dir " + dir.string() + ": " + ec.message());
  const fs::path probe = dir / (".probe." + std::to_string(::getpid()));
  try {
    write_atomic(probe, "");
  } catch (const DataError&) {
    throw ConfigError("out_dir " + dir.string() + " is not writable");
  }
  fs::remove(probe, ec);
}

PekarState solve_pekar(const RunConfig& c, std::ostream& log) {
  log << "pekar: " << c.pekar_points << " points on [0, " << c.pekar_rmax << "]\n";
  return pekar_ground(RadialGrid::uniform(c.pekar_points, c.pekar_rmax), c.pekar_tol);
}

Json pekar_json(const PekarState& s) {
  return {{"energy", s.energy},
          {"kinetic", s.kinetic},
          {"coulomb", s.coulomb},
          {"multiplier", s.multiplier},
          {"virial_lambda", s.virial_lambda()},
          {"residual", s.residual},
          {"tail_rate", s.tail_rate},
          {"tail_ok", s.tail_ok},
          {"flow_steps", s.flow_steps},
          {"polish_steps", s.polish_steps},
          {"grid", {{"points", s.grid.size()}, {"r_max", s.grid.r.back()}}}};
}

void pekar_tolerances(RunManifest& m, const RunConfig& c) {
  m.set_tolerances({{"pekar_residual", c.pekar_tol}});
}

CsvTable binding_table() {
  return CsvTable({"U", "R", "delta_e", "d_psi", "m2", "delta_e_times_R", "delta_e_over_d", "m2_times_R", "r_g",
                   "a_part", "overlap_warning"});
}

void add_binding_row(CsvTable& t, double U, const BindingRow& r) {
  t.add_row({U, r.R, r.delta_e, r.d_psi, r.m2, r.delta_e_times_R, r.delta_e_over_d, r.m2_times_R, r.r_g, r.a_part,
             static_cast<long long>(r.overlap_warning)});
}

// ---- commands

void run_pekar_ground(const RunConfig& c, RunManifest& m, std::ostream& log) {
  const PekarState s = solve_pekar(c, log);
  Json j = pekar_json(s);
  std::vector<double> phi = s.phi;
  const std::string profile = radial_profile_csv(s.grid, phi);
  std::optional<std::pair<GridPtr, RVec>> field;
  if (c.write_field) {
    const GridPtr g = FourierGrid::cubic(c.n, c.box);
    Vec4 dir = Vec4::Zero();
    dir[0] = 1.0;
    const SpinorField psi = cluster_orbital(s, g, Vec3{0.0, 0.0, 0.0}, dir, 0.0);
    RVec re(g->size());
    for (std::size_t i = 0; i < re.size(); ++i) re[i] = psi[0][i].real();
    field.emplace(g, std::move(re));
  }
  pekar_tolerances(m, c);
  m.add_output(out_name(c, "pekar_state.json"), j.dump(2) + "\n");
  m.add_output("pekar_profile.csv", profile);
  if (field) {
    write_field(m.out_dir() / "pekar_field.bin", *field->first, std::vector<RVec>{field->second});
    m.add_existing("pekar_field.bin");
  }
}

void run_pt_scan(const RunConfig& c, RunManifest& m, std::ostream& log) {
  const PekarState s = solve_pekar(c, log);
  const std::vector<double> seps = separations(c);
  ClusterRecipe rec;
  rec.dx = c.dx;
  rec.tail_radius = c.tail_radius;
  rec.fit_centers = true;
  // Delta_2 E = a_part + 2 U M^2 is affine in U, so one scan serves every U including U = 0.
  log << "pt-scan: " << seps.size() << " separations\n";
  const auto base = binding_scan(s, 1.0, seps, rec);
  CsvTable t = binding_table();
  Json summary = Json::array();
  for (double U : c.u_list) {
    double inf_er = INFINITY, inf_mr = INFINITY, min_de = INFINITY;
    for (BindingRow r : base) {
      r.delta_e = r.a_part + 2.0 * U * r.m2;
      r.delta_e_times_R = r.delta_e * r.R;
      r.delta_e_over_d = r.d_psi > 0.0 ? r.delta_e / r.d_psi : std::nan("");
      add_binding_row(t, U, r);
      inf_er = std::min(inf_er, r.delta_e_times_R);
      inf_mr = std::min(inf_mr, r.m2_times_R);
      min_de = std::min(min_de, r.delta_e);
    }
    summary.push_back({{"U", U},
                       {"min_delta_e", min_de},
                       {"inf_delta_e_times_R", inf_er},
                       {"inf_m2_times_R", inf_mr},
                       {"delta_e_positive", min_de > 0.0},
                       {"large_R_delta_e", base.back().a_part + 2.0 * U * base.back().m2}});
  }
  m.set_tolerances({{"pekar_residual", c.pekar_tol}, {"dx", c.dx}, {"tail_radius", c.tail_radius}});
  m.add_output(out_name(c, "pt_scan.csv"), t.str());
  m.add_output("pt_scan_summary.json", Json{{"pekar_energy", s.energy}, {"separations", seps}, {"per_U", summary}}
                                               .dump(2) + "\n");
}

void run_critical_u(const RunConfig& c, RunManifest& m, std::ostream& log) {
  const PekarState s = solve_pekar(c, log);
  const std::vector<double> seps = separations(c);
  ClusterRecipe rec;
  rec.dx = c.dx;
  rec.tail_radius = c.tail_radius;
  rec.fit_centers = false;
  log << "critical-u: " << seps.size() << " separations\n";
  const CriticalU cu = critical_U(s, seps, c.u_tol, rec);
  CsvTable t = binding_table();
  for (const auto& r : cu.rows) add_binding_row(t, cu.u_c, r);
  m.set_tolerances({{"pekar_residual", c.pekar_tol}, {"u_tol", c.u_tol}, {"dx", c.dx}});
  m.add_output(out_name(c, "critical_u.json"), Json{{"u_c", cu.u_c},
                                                    {"bracket", {cu.lo, cu.hi}},
                                                    {"iterations", cu.iterations},
                                                    {"separations", seps}}
                                                   .dump(2) + "\n");
  m.add_output("critical_u_rows.csv", t.str());
}

DensityField gaussian_density(const GridPtr& g, double w) {
  RVec v(g->size());
  const double norm = std::pow(2.0 * std::numbers::pi * w * w, -1.5);
  for (std::size_t i = 0; i < v.size(); ++i) {
    const Vec3 x = g->position(i);
    v[i] = norm * std::exp(-(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]) / (2.0 * w * w));
  }
  return DensityField(g, std::move(v));
}

void run_vacuum(const RunConfig& c, RunManifest& m, std::ostream& log) {
  const ModelParams p = z3_u0(c.alpha, c.lambda_uv);
  log << "vacuum: alpha = " << p.alpha << ", lambda = " << p.lambda_uv << "\n";
  const PolarisationTable table = PolarisationTable::build(p, c.kmax, c.table_points);
  CsvTable t({"k", "f", "F"});
  for (std::size_t i = 0; i < table.k_points().size(); ++i)
    t.add_row({table.k_points()[i], table.f_values()[i], table.F_values()[i]});

  // unit Gaussian source on a grid the table covers
  const double box = 16.0;
  GridPtr g;
  for (int n = 32; n >= 8; n -= 2) {
    g = FourierGrid::cubic(n, box);
    double k2 = 0.0;
    for (double v : g->k2()) k2 = std::max(k2, v);
    if (std::sqrt(k2) <= c.kmax) break;
  }
  const DensityField src = gaussian_density(g, 1.0);
  const VacuumCorrection vc = vacuum_density(src, 1, table);
  const double q = src.total_charge() + vc.gamma_density.total_charge();

  Json s;
  s["params"] = params_json(p);
  s["f0_over_alpha_log_lambda"] = p.f0 / p.L;
  s["leading_coefficient"] = 2.0 / (3.0 * std::numbers::pi);
  s["gaussian_source"] = {{"grid", Json::parse(g->spec_json())},
                          {"width", 1.0},
                          {"source_charge", src.total_charge()},
                          {"screened_charge", q},
                          {"screened_over_z3", q / p.z3}};
  s["table"] = {{"k_max", table.k_max()}, {"points", table.k_points().size()}};
  m.set_tolerances({{"table_spline", "cubic"}});
  m.add_output(out_name(c, "vacuum_table.csv"), t.str());
  m.add_output("vacuum_summary.json", s.dump(2) + "\n");
}

void run_bdf_energy(const RunConfig& c, RunManifest& m, std::ostream& log) {
  const ModelParams p = z3_u0(c.alpha, c.lambda_uv);
  const PekarState s = solve_pekar(c, log);
  log << "bdf-energy: mode " << c.mode << ", " << c.n << "^3\n";
  RankStructuredState st = [&] {
    if (c.mode == "test-state") return build_test_state(p, s, c.n, c.box);
    ClusterStateOptions o;
    o.n = c.n;
    o.box_unit = c.box;
    if (c.mode == "two") {
      o.centres = {{-0.5 * c.separation, 0.0, 0.0}, {0.5 * c.separation, 0.0, 0.0}};
      Vec4 a = Vec4::Zero(), b = Vec4::Zero();
      a[0] = 1.0;
      b[1] = 1.0;
      o.directions = {a, b};
    }
    return build_cluster_state(p, s, o);
  }();
  const BdfEnergyParts e = bdf_energy(st);
  const ChargeTrace q = p0_trace(st);
  Json j;
  j["mode"] = c.mode;
  j["params"] = params_json(p);
  j["grid"] = Json::parse(st.grid->spec_json());
  j["orbitals"] = st.orbitals.size();
  j["kinetic"] = {{"rest", e.kinetic.rest},
                  {"orbital_excess", e.kinetic.orbital_excess},
                  {"vacuum", e.kinetic.vacuum},
                  {"total", e.kinetic.total}};
  j["exchange"] = {{"orbital", e.exchange.orbital},
                   {"orbital_gamma", e.exchange.orbital_gamma},
                   {"gamma_included", e.exchange.gamma_included},
                   {"total", e.exchange.total}};
  j["direct"] = e.direct;
  j["nu_coupling"] = e.nu_coupling;
  j["energy"] = e.energy;
  j["energy_minus_rest"] = e.energy_minus_rest;
  j["pekar_energy"] = s.energy;
  if (st.orbitals.size() == 1) j["asymptotic_ratio"] = e.energy_minus_rest * 2.0 * p.c_scale * p.c_scale / s.energy;
  j["charge"] = {{"orbitals", q.orbitals}, {"gamma", q.gamma}, {"total", q.total}};
  m.set_tolerances({{"pekar_residual", c.pekar_tol}});
  m.add_output(out_name(c, "bdf_energy.json"), j.dump(2) + "\n");
}

void run_no_binding(const RunConfig& c, RunManifest& m, std::ostream& log) {
  const PekarState s = solve_pekar(c, log);
  const std::vector<double> rgs = c.rg_list.empty() ? std::vector<double>{24.0, 48.0} : c.rg_list;
  CsvTable t({"alpha", "lambda_uv", "R_g", "delta2E", "interaction", "residual", "concavity_defect", "eps", "bound",
              "verdict"});
  Json rows = Json::array();
  bool all = true;
  for (const auto& [alpha, lambda] : regime_points(c)) {
    const ModelParams p = z3_u0(alpha, lambda);
    PartitionSetup setup;
    setup.cutoff_radius = c.cutoff_radius;
    setup.dx = c.partition_dx;
    setup.margin = c.margin;
    log << "no-binding: alpha = " << alpha << ", lambda = " << lambda << "\n";
    const EnergyCurve curve = single_cluster_curve(p, s, setup);
    for (double rg : rgs) {
      setup.r_g = rg;
      const PartitionReport r = energy_partition(build_partition_state(p, s, setup), partition_family(p, setup));
      const NoBindingVerdict v = no_binding_check(r, p, std::abs(r.charge_split[0] - 1.0), curve);
      all = all && v.no_binding;
      t.add_row({alpha, lambda, rg, v.delta2, v.interaction, v.residual, v.concavity_defect, v.eps, v.bound,
                 v.verdict()});
      rows.push_back({{"alpha", alpha}, {"lambda_uv", lambda}, {"R_g", rg}, {"verdict", v.verdict()}});
    }
  }
  Json rep;
  rep["label"] = "property-based substitute";
  rep["statement"] =
      "Nonexistence of a two-electron minimiser is not computable; this report checks, at each regime point and "
      "separation, that the localised energy splits into two clusters with a positive Coulomb interaction and a "
      "residual below it.";
  rep["all_no_binding"] = all;
  rep["rows"] = rows;
  m.set_tolerances({{"pekar_residual", c.pekar_tol}, {"partition_dx", c.partition_dx}});
  m.add_output(out_name(c, "no_binding.csv"), t.str());
  m.add_output("no_binding_report.json", rep.dump(2) + "\n");
}

bool run_inequalities(const RunConfig& c, RunManifest& m, std::ostream& log) {
  log << "check-inequalities: " << c.trials << " trials per check\n";
  const auto results = run_suite(SuiteOptions{c.seed, c.trials, c.include_slow});
  Json checks = Json::array();
  int failures = 0;
  for (const auto& r : results) {
    failures += !r.pass;
    checks.push_back({{"name", r.name},
                      {"lhs", r.lhs},
                      {"rhs", r.rhs},
                      {"margin", r.margin},
                      {"slack_used", r.slack_used},
                      {"trial_seed", r.trial_seed},
                      {"status", r.status()}});
  }
  m.set_tolerances({{"kato", slack::kato}, {"hardy", slack::hardy}});
  m.add_output(c.report.empty() ? out_name(c, "inequalities.json") : c.report,
               Json{{"trials", c.trials}, {"seed", c.seed}, {"failures", failures}, {"checks", checks}}.dump(2) +
                   "\n");
  log << "check-inequalities: " << results.size() << " checks, " << failures << " failures\n";
  return failures == 0;
}

}  // namespace

int dispatch(const RunConfig& config, std::ostream& log, std::ostream& err) {
  const auto t0 = Clock::now();
  try {
    probe_writable(config.out_dir);
    RunManifest m(config.command, config.out_dir, to_json(config));
    m.note("workers", worker_count());
    if (!config.config_file.empty()) m.add_input(config.config_file);
    bool ok = true;
    const std::string& cmd = config.command;
    if (cmd == "pekar-ground") run_pekar_ground(config, m, log);
    else if (cmd == "pt-scan") run_pt_scan(config, m, log);
    else if (cmd == "critical-u") run_critical_u(config, m, log);
    else if (cmd == "vacuum") run_vacuum(config, m, log);
    else if (cmd == "bdf-energy") run_bdf_energy(config, m, log);
    else if (cmd == "no-binding-report") run_no_binding(config, m, log);
    else if (cmd == "check-inequalities") ok = run_inequalities(config, m, log);
    else throw ConfigError("unknown command '" + cmd + "'");
    const fs::path mp = m.finish(std::chrono::duration<double>(Clock::now() - t0).count());
    log << "wrote " << mp.string() << "\n";
    if (!ok) {
      err << "bdfnb: inequality violations beyond the declared slack\n";
      return static_cast<int>(ExitCode::accuracy);
    }
    return 0;
  } catch (const Error& e) {
    err << "bdfnb: " << e.what() << "\n";
    return static_cast<int>(e.code());
  } catch (const std::exception& e) {
    err << "bdfnb: internal error: " << e.what() << "\n";
    return static_cast<int>(ExitCode::internal);
  }
}

int cli_main(const std::vector<std::string>& args, std::ostream& log, std::ostream& err) {
  RunConfig c;
  try {
    c = parse_config(args);
  } catch (const HelpRequested& h) {
    log << h.text;
    return 0;
  } catch (const ConfigError& e) {
    err << "bdfnb: " << e.what() << "\n\n" << usage_text();
    return static_cast<int>(ExitCode::config);
  } catch (const Error& e) {
    err << "bdfnb: " << e.what() << "\n";
    return static_cast<int>(e.code());
  } catch (const std::exception& e) {
    err << "bdfnb: " << e.what() << "\n";
    return static_cast<int>(ExitCode::config);
  }
  return dispatch(c, log, err);
}

}  // namespace bdfnb
