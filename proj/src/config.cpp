#include "bdfnb/config.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <cmath>
#include <sstream>
#include <variant>

#include "bdfnb/errors.hpp"

namespace bdfnb {

namespace {

using Member = std::variant<double RunConfig::*, int RunConfig::*, bool RunConfig::*, std::string RunConfig::*,
                            std::uint64_t RunConfig::*, std::vector<double> RunConfig::*>;

struct Key {
  const char* name;
  Member member;
  const char* help;
  const char* alias = nullptr;
};

const std::vector<Key>& keys() {
  static const std::vector<Key> k{
      {"alpha", &RunConfig::alpha, "fine structure constant"},
      {"lambda_uv", &RunConfig::lambda_uv, "ultraviolet cutoff Lambda", "--lambda"},
      {"L", &RunConfig::L, "alpha ln(Lambda); derived, ignored on input"},
      {"alpha_cap", &RunConfig::alpha_cap, "largest admissible alpha"},
      {"l_cap", &RunConfig::l_cap, "largest admissible alpha ln(Lambda)"},
      {"force", &RunConfig::force, "accept parameters outside the regime caps"},
      {"alpha_list", &RunConfig::alpha_list, "regime sweep: alphas (paired with lambda_list)"},
      {"lambda_list", &RunConfig::lambda_list, "regime sweep: cutoffs"},
      {"regime_sweep", &RunConfig::regime_sweep, "use the built-in regime sweep"},
      {"seed", &RunConfig::seed, "random seed"},
      {"out_dir", &RunConfig::out_dir, "output directory"},
      {"out", &RunConfig::out, "primary output file (relative to out_dir)"},
      {"report", &RunConfig::report, "check-inequalities report file"},
      {"pekar_points", &RunConfig::pekar_points, "radial grid points of the Pekar solver"},
      {"pekar_rmax", &RunConfig::pekar_rmax, "radial box of the Pekar solver"},
      {"pekar_tol", &RunConfig::pekar_tol, "Pekar residual tolerance"},
      {"write_field", &RunConfig::write_field, "pekar-ground: also write the 3D field container"},
      {"u_list", &RunConfig::u_list, "pt-scan: polarisation strengths U"},
      {"rg_list", &RunConfig::rg_list, "separations (Pekar units for scans, cluster units for no-binding-report)"},
      {"r_min", &RunConfig::r_min, "geometric sweep start"},
      {"r_max", &RunConfig::r_max, "geometric sweep end"},
      {"points", &RunConfig::points, "geometric sweep length"},
      {"dx", &RunConfig::dx, "two-cluster grid spacing (Pekar units)"},
      {"tail_radius", &RunConfig::tail_radius, "two-cluster box margin (Pekar units)"},
      {"u_tol", &RunConfig::u_tol, "critical-u bisection tolerance"},
      {"kmax", &RunConfig::kmax, "vacuum: largest tabulated momentum"},
      {"table_points", &RunConfig::table_points, "vacuum: table size (0 = default)"},
      {"mode", &RunConfig::mode, "bdf-energy: one, two or test-state"},
      {"n", &RunConfig::n, "bdf-energy: grid points per axis"},
      {"box", &RunConfig::box, "bdf-energy: box edge in Pekar units"},
      {"separation", &RunConfig::separation, "bdf-energy two: cluster distance in Pekar units"},
      {"cutoff_radius", &RunConfig::cutoff_radius, "no-binding-report: profile truncation radius"},
      {"partition_dx", &RunConfig::partition_dx, "no-binding-report: grid spacing"},
      {"margin", &RunConfig::margin, "no-binding-report: box margin"},
      {"trials", &RunConfig::trials, "check-inequalities: trials per check"},
      {"include_slow", &RunConfig::include_slow, "check-inequalities: include the 16^3 commutator and f_check moments"},
  };
  return k;
}

std::string flag_name(const char* key) {
  std::string s = "--";
  for (const char* p = key; *p; ++p) s += (*p == '_') ? '-' : *p;
  return s;
}

std::string fmt(double x) {
  std::ostringstream os;
  os.precision(6);
  os << x;
  return os.str();
}

}  // namespace

const std::vector<std::string>& known_commands() {
  static const std::vector<std::string> c{"pekar-ground", "pt-scan", "critical-u", "vacuum",
                                          "bdf-energy", "no-binding-report", "check-inequalities"};
  return c;
}

std::vector<std::pair<double, double>> default_regime_sweep() {
  // L = alpha ln(Lambda) = 0.069, 0.1, 0.15, 0.15
  return {{0.01, 1000.0}, {0.02, std::exp(5.0)}, {0.05, std::exp(3.0)}, {0.1, std::exp(1.5)}};
}

std::vector<std::pair<double, double>> regime_points(const RunConfig& c) {
  if (!c.alpha_list.empty()) {
    std::vector<std::pair<double, double>> v;
    for (std::size_t i = 0; i < c.alpha_list.size(); ++i) v.emplace_back(c.alpha_list[i], c.lambda_list.at(i));
    return v;
  }
  if (c.regime_sweep || c.command == "no-binding-report") return default_regime_sweep();
  return {{c.alpha, c.lambda_uv}};
}

std::vector<double> separations(const RunConfig& c) {
  if (!c.rg_list.empty()) return c.rg_list;
  std::vector<double> r(c.points);
  for (int i = 0; i < c.points; ++i) r[i] = c.r_min * std::pow(c.r_max / c.r_min, static_cast<double>(i) / (c.points - 1));
  return r;
}

Json to_json(const RunConfig& c) {
  Json j;
  j["command"] = c.command;
  for (const auto& k : keys())
    std::visit([&](auto m) { j[k.name] = c.*m; }, k.member);
  return j;
}

void apply_json(RunConfig& c, const Json& j) {
  if (!j.is_object()) throw ConfigError("config file must hold a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (it.key() == "command") {
      c.command = it.value().get<std::string>();
      continue;
    }
    const Key* k = nullptr;
    for (const auto& cand : keys())
      if (it.key() == cand.name) k = &cand;
    if (!k) throw ConfigError("unknown config key '" + it.key() + "'");
    try {
      std::visit([&](auto m) { it.value().get_to(c.*m); }, k->member);
    } catch (const nlohmann::json::exception&) {
      throw ConfigError("config key '" + it.key() + "' has the wrong type");
    }
  }
}

void validate(RunConfig& c) {
  const auto& cmds = known_commands();
  if (std::find(cmds.begin(), cmds.end(), c.command) == cmds.end())
    throw ConfigError("unknown command '" + c.command + "'");
  if (c.alpha_list.size() != c.lambda_list.size())
    throw ConfigError("alpha_list and lambda_list must have the same length");
  for (const auto& [a, lam] : regime_points(c)) {
    if (!(a > 0.0)) throw ConfigError("alpha must be positive");
    if (!(lam > M_E)) throw ConfigError("lambda_uv must exceed e (got " + fmt(lam) + ")");
    if (c.force) continue;
    if (a > c.alpha_cap)
      throw ConfigError("alpha = " + fmt(a) + " exceeds the regime cap alpha_cap = " + fmt(c.alpha_cap) +
                        " (use --force to override)");
    if (a * std::log(lam) > c.l_cap)
      throw ConfigError("alpha ln(lambda) = " + fmt(a * std::log(lam)) + " exceeds the regime cap l_cap = " +
                        fmt(c.l_cap) + " (use --force to override)");
  }
  c.L = c.alpha * std::log(c.lambda_uv);
  if (c.points < 2) throw ConfigError("points must be at least 2");
  if (!(c.r_min > 0.0 && c.r_max > c.r_min)) throw ConfigError("need 0 < r_min < r_max");
  for (std::size_t i = 0; i < c.rg_list.size(); ++i)
    if (!(c.rg_list[i] > 0.0) || (i && c.rg_list[i] <= c.rg_list[i - 1]))
      throw ConfigError("rg_list must be positive and increasing");
  if (c.u_list.empty()) throw ConfigError("u_list must not be empty");
  for (double u : c.u_list)
    if (u < 0.0) throw ConfigError("u_list entries must be non-negative");
  if (c.mode != "one" && c.mode != "two" && c.mode != "test-state")
    throw ConfigError("mode must be one, two or test-state (got '" + c.mode + "')");
  if (c.n < 8 || c.n % 2) throw ConfigError("n must be even and at least 8");
  if (c.trials < 0) throw ConfigError("trials must be non-negative");
  if (c.pekar_points < 100 || !(c.pekar_rmax > 0.0) || !(c.pekar_tol > 0.0))
    throw ConfigError("invalid Pekar solver settings");
  for (double v : {c.dx, c.tail_radius, c.box, c.separation, c.cutoff_radius, c.partition_dx, c.margin, c.kmax, c.u_tol})
    if (!(v > 0.0)) throw ConfigError("lengths, spacings and tolerances must be positive");
  if (c.out_dir.empty()) throw ConfigError("out_dir must not be empty");
}

std::string usage_text() {
  std::ostringstream os;
  os << "usage: bdfnb <command> [--config FILE] [flags]\n\ncommands:\n";
  for (const auto& c : known_commands()) os << "  " << c << "\n";
  os << "\nflags (also accepted as flat JSON keys, '-' written as '_'):\n";
  for (const auto& k : keys()) os << "  " << flag_name(k.name) << "  " << k.help << "\n";
  os << "\nBDFNB_WORKERS sets the worker count.\n";
  return os.str();
}

RunConfig parse_config(const std::vector<std::string>& args) {
  RunConfig flags;
  std::string config_path;
  CLI::App app{"bdfnb"};
  app.set_help_flag();
  bool help = false;
  app.add_flag("-h,--help", help);
  app.add_option("command", flags.command);
  app.add_option("--config", config_path);
  std::vector<std::pair<const Key*, CLI::Option*>> bound;
  for (const auto& k : keys()) {
    std::string names = flag_name(k.name);
    if (k.alias) names += std::string(",") + k.alias;
    CLI::Option* opt = nullptr;
    std::visit(
        [&](auto m) {
          using T = std::remove_reference_t<decltype(flags.*m)>;
          if constexpr (std::is_same_v<T, bool>) {
            opt = app.add_flag(names + ",!--no-" + flag_name(k.name).substr(2), flags.*m, k.help);
          } else if constexpr (std::is_same_v<T, std::vector<double>>) {
            opt = app.add_option(names, flags.*m, k.help)->delimiter(',');
          } else {
            opt = app.add_option(names, flags.*m, k.help);
          }
        },
        k.member);
    bound.emplace_back(&k, opt);
  }
  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    throw ConfigError(std::string(e.what()));
  }
  if (help) throw HelpRequested{usage_text()};

  RunConfig c;
  if (!config_path.empty()) {
    apply_json(c, Json::parse(read_file(config_path), nullptr, true, true));
    c.config_file = config_path;
  }
  if (!flags.command.empty()) c.command = flags.command;
  if (c.command.empty()) throw ConfigError("no command given");
  for (const auto& [k, opt] : bound)
    if (opt->count() > 0) std::visit([&](auto m) { c.*m = flags.*m; }, k->member);
  validate(c);
  return c;
}

}  // namespace bdfnb
