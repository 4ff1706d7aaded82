#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bdfnb/io.hpp"

namespace bdfnb {

// Flat run configuration; every field is both a JSON key and a --flag (underscores become hyphens).
struct RunConfig {
  std::string command;

  // regime
  double alpha = 0.01;
  double lambda_uv = 1000.0;
  double L = 0.0;  // derived: alpha ln(lambda_uv)
  double alpha_cap = 0.1;
  double l_cap = 0.2;
  bool force = false;
  std::vector<double> alpha_list;   // paired with lambda_list for regime sweeps
  std::vector<double> lambda_list;
  bool regime_sweep = false;        // use the built-in default sweep

  std::uint64_t seed = 1;
  std::string out_dir = "out";
  std::string out;     // primary output file; command-specific default when empty
  std::string report;  // check-inequalities report; defaults to inequalities.json
  std::string config_file;  // set by parse_config from --config; hashed into the manifest, not a JSON key

  // Pekar solver
  int pekar_points = 3999;
  double pekar_rmax = 40.0;
  double pekar_tol = 1e-10;
  bool write_field = false;  // pekar-ground also emits the profile sampled on a 3D grid

  // two-cluster scans (Pekar units)
  std::vector<double> u_list{0.0, 2.5};
  std::vector<double> rg_list;  // explicit separations; otherwise a geometric sweep
  double r_min = 3.0;
  double r_max = 30.0;
  int points = 12;
  double dx = 0.6;
  double tail_radius = 20.0;
  double u_tol = 1e-4;

  // vacuum
  double kmax = 10.0;
  int table_points = 0;  // 0 picks the table default

  // BDF energy
  std::string mode = "one";
  int n = 64;
  double box = 28.0;
  double separation = 8.0;  // two-cluster mode, Pekar units

  // no-binding report (cluster units)
  double cutoff_radius = 8.0;
  double partition_dx = 0.5;
  double margin = 4.0;

  // inequality suite
  int trials = 200;
  bool include_slow = true;

  bool operator==(const RunConfig&) const = default;
};

const std::vector<std::string>& known_commands();

// (alpha, lambda) pairs of the built-in regime sweep.
std::vector<std::pair<double, double>> default_regime_sweep();
// Pairs from alpha_list/lambda_list, else the default sweep (regime_sweep or no-binding-report), else the
// single (alpha, lambda_uv).
std::vector<std::pair<double, double>> regime_points(const RunConfig& c);
// Geometric sweep r_min..r_max with `points` entries unless rg_list is given.
std::vector<double> separations(const RunConfig& c);

Json to_json(const RunConfig& c);
// Applies the keys of j onto c; an unknown key is a ConfigError naming it.
void apply_json(RunConfig& c, const Json& j);

// Fills derived values and enforces the regime caps (unless force) and basic ranges.
void validate(RunConfig& c);

// Thrown by parse_config for --help; carries the usage text.
struct HelpRequested {
  std::string text;
};
std::string usage_text();

// argv without the program name: command, then flags; --config FILE loads JSON first and flags override it.
RunConfig parse_config(const std::vector<std::string>& args);

}  // namespace bdfnb
