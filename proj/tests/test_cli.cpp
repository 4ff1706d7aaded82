#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cmath>
#include <cstring>
#include <cstdlib>
#include <random>
#include <set>

#include "bdfnb/commands.hpp"
#include "bdfnb/config.hpp"
#include "bdfnb/errors.hpp"
#include "bdfnb/io.hpp"

using namespace bdfnb;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("bdfnb_cli_" + std::to_string(::getpid())) / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

struct CliRun {
  int code = -1;
  std::string out, err;
};

CliRun run_cli(const std::string& args) {
  static int counter = 0;
  const fs::path dir = scratch("logs");
  const fs::path o = dir / ("out" + std::to_string(counter) + ".txt");
  const fs::path e = dir / ("err" + std::to_string(counter++) + ".txt");
  const std::string cmd = std::string(BDFNB_CLI_PATH) + " " + args + " >" + o.string() + " 2>" + e.string();
  const int status = std::system(cmd.c_str());
  CliRun r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = read_file(o);
  r.err = read_file(e);
  return r;
}

std::string config_error(const std::vector<std::string>& args) {
  try {
    parse_config(args);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

// Every regular file in dir is the manifest or listed in it.
std::vector<std::string> orphans(const fs::path& dir, const fs::path& manifest) {
  const Json m = Json::parse(read_file(manifest));
  std::set<std::string> listed{manifest.filename().string()};
  for (const auto& e : m.at("outputs")) listed.insert(e.at("path").get<std::string>());
  std::vector<std::string> out;
  for (const auto& f : fs::directory_iterator(dir))
    if (!listed.count(f.path().filename().string())) out.push_back(f.path().filename().string());
  return out;
}

}  // namespace

TEST(Config, MinimalFlagsFillDefaults) {
  const RunConfig c = parse_config({"pekar-ground", "--alpha", "0.01", "--lambda", "1000"});
  EXPECT_NEAR(c.L, 0.069, 1e-3);
  EXPECT_DOUBLE_EQ(c.L, 0.01 * std::log(1000.0));
  RunConfig d;
  d.command = "pekar-ground";
  d.L = c.L;
  EXPECT_EQ(c, d);
  EXPECT_EQ(parse_config({"vacuum", "--lambda-uv", "500"}).lambda_uv, 500.0);
}

TEST(Config, RegimeCapsNeedForce) {
  const std::string e = config_error({"vacuum", "--alpha", "0.05", "--lambda", "1000"});
  EXPECT_NE(e.find("l_cap = 0.2"), std::string::npos) << e;
  EXPECT_NE(e.find("--force"), std::string::npos);
  EXPECT_NE(config_error({"vacuum", "--alpha", "0.2", "--lambda", "3"}).find("alpha_cap"), std::string::npos);
  EXPECT_NO_THROW(parse_config({"vacuum", "--alpha", "0.05", "--lambda", "1000", "--force"}));
  EXPECT_NE(config_error({"vacuum", "--lambda", "2", "--force"}).find("exceed e"), std::string::npos);
  // the sweep is checked point by point
  EXPECT_NE(config_error({"no-binding-report", "--alpha-list", "0.01,0.05", "--lambda-list", "100,1000"}).find("l_cap"),
            std::string::npos);
  EXPECT_NE(config_error({"vacuum", "--alpha-list", "0.01", "--lambda-list", "100,1000"}).find("same length"),
            std::string::npos);
}

TEST(Config, UnknownKeysAndValuesAreNamed) {
  const fs::path d = scratch("unknown");
  write_atomic(d / "c.json", R"({"command": "vacuum", "alpah": 0.01})");
  EXPECT_NE(config_error({"--config", (d / "c.json").string()}).find("'alpah'"), std::string::npos);
  write_atomic(d / "t.json", R"({"command": "vacuum", "n": "many"})");
  EXPECT_NE(config_error({"--config", (d / "t.json").string()}).find("'n'"), std::string::npos);
  EXPECT_NE(config_error({"frobnicate"}).find("frobnicate"), std::string::npos);
  EXPECT_NE(config_error({"bdf-energy", "--mode", "three"}).find("three"), std::string::npos);
  EXPECT_FALSE(config_error({"bdf-energy", "--n", "63"}).empty());
  EXPECT_FALSE(config_error({"pt-scan", "--rg-list", "5,4"}).empty());
  EXPECT_FALSE(config_error({"pt-scan", "--bogus-flag", "1"}).empty());
  EXPECT_FALSE(config_error({}).empty());
}

TEST(Config, EmitAndReparseIsIdentity) {
  RunConfig c;
  c.command = "pt-scan";
  c.alpha = 0.0123456789012345;
  c.lambda_uv = 777.25;
  c.u_list = {0.0, 1.0 / 3.0, 2.5};
  c.rg_list = {4.0, 8.5};
  c.seed = 0xfeedbeefcafeULL;
  c.include_slow = false;
  c.mode = "test-state";
  c.out_dir = "somewhere";
  validate(c);
  const fs::path d = scratch("roundtrip");
  write_atomic(d / "c.json", to_json(c).dump(2));
  RunConfig back = parse_config({"--config", (d / "c.json").string()});
  EXPECT_EQ(back.config_file, (d / "c.json").string());
  back.config_file.clear();
  EXPECT_EQ(back, c);
  EXPECT_EQ(to_json(back).dump(), to_json(c).dump());

  // flags override the file
  const RunConfig o = parse_config({"--config", (d / "c.json").string(), "--seed", "5", "--include-slow", "vacuum"});
  EXPECT_EQ(o.command, "vacuum");
  EXPECT_EQ(o.seed, 5u);
  EXPECT_TRUE(o.include_slow);
  EXPECT_EQ(o.u_list, c.u_list);
  EXPECT_FALSE(parse_config({"check-inequalities", "--no-include-slow"}).include_slow);
}

TEST(Config, SweepsAndSeparations) {
  RunConfig c = parse_config({"pt-scan"});
  const auto r = separations(c);
  ASSERT_EQ(r.size(), 12u);
  EXPECT_DOUBLE_EQ(r.front(), 3.0);
  EXPECT_NEAR(r.back(), 30.0, 1e-12);
  for (std::size_t i = 2; i < r.size(); ++i) EXPECT_NEAR(r[i] / r[i - 1], r[1] / r[0], 1e-12);
  EXPECT_EQ(regime_points(c).size(), 1u);
  EXPECT_EQ(regime_points(parse_config({"no-binding-report"})), default_regime_sweep());
  for (const auto& [a, lam] : default_regime_sweep()) {
    EXPECT_LE(a, c.alpha_cap);
    EXPECT_LE(a * std::log(lam), c.l_cap);
  }
}

TEST(Io, CsvCellsRoundTripEveryDouble) {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<std::uint64_t> bits;
  int checked = 0;
  while (checked < 2000) {
    const std::uint64_t b = bits(rng);
    double x;
    std::memcpy(&x, &b, sizeof x);
    if (!std::isfinite(x)) continue;
    const std::string s = format_double(x);
    EXPECT_EQ(std::strtod(s.c_str(), nullptr), x) << s;
    ++checked;
  }
  EXPECT_EQ(format_double(0.1), "1.0000000000000001e-01");
  CsvTable t({"a", "b", "c"});
  t.add_row({1.0, 2LL, std::string("x")});
  EXPECT_EQ(t.str(), "a,b,c\n1.0000000000000000e+00,2,x\n");
  EXPECT_THROW(t.add_row({1.0}), DataError);
}

TEST(Io, FieldContainerRoundTrip) {
  const GridPtr g = FourierGrid::create({6, 8, 10}, {3.0, 4.0, 5.5});
  std::mt19937_64 rng(4);
  std::normal_distribution<double> nd;
  RVec a(g->size()), b(g->size());
  CVec z(g->size());
  for (std::size_t i = 0; i < g->size(); ++i) {
    a[i] = nd(rng);
    b[i] = nd(rng);
    z[i] = {nd(rng), nd(rng)};
  }
  const fs::path d = scratch("field");
  write_field(d / "r.bin", *g, std::vector<RVec>{a, b});
  write_field(d / "c.bin", *g, std::vector<CVec>{z});
  const FieldFile r = read_field(d / "r.bin");
  ASSERT_EQ(r.components.size(), 2u);
  EXPECT_EQ(r.header.at("value_type"), "float64");
  EXPECT_EQ(r.header.at("grid").dump(), Json::parse(g->spec_json()).dump());
  for (std::size_t i = 0; i < g->size(); ++i) {
    EXPECT_EQ(r.components[0][i], cplx(a[i], 0.0));
    EXPECT_EQ(r.components[1][i], cplx(b[i], 0.0));
  }
  const FieldFile c = read_field(d / "c.bin");
  EXPECT_EQ(c.components.at(0), z);
  EXPECT_EQ(fs::file_size(d / "r.bin"), 16 + r.header.dump().size() + 2 * g->size() * 8);

  std::string bytes = read_file(d / "c.bin");
  write_atomic(d / "trunc.bin", bytes.substr(0, bytes.size() - 8));
  EXPECT_THROW(read_field(d / "trunc.bin"), DataError);
  bytes[0] = 'X';
  write_atomic(d / "magic.bin", bytes);
  EXPECT_THROW(read_field(d / "magic.bin"), DataError);
  EXPECT_THROW(write_field(d / "bad.bin", *g, std::vector<RVec>{RVec(5)}), DataError);
}

TEST(Io, AtomicWriteAndManifestHashes) {
  const fs::path d = scratch("manifest");
  write_atomic(d / "a.txt", "first");
  write_atomic(d / "a.txt", "second");
  EXPECT_EQ(read_file(d / "a.txt"), "second");
  EXPECT_EQ(sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");

  RunManifest m("demo", d / "run", Json{{"k", 1}});
  m.add_output("x.csv", "a\n1\n");
  m.add_input(d / "a.txt");
  const fs::path mp = m.finish(0.5);
  for (const auto& f : fs::directory_iterator(d / "run"))
    EXPECT_EQ(f.path().string().find(".tmp."), std::string::npos) << f.path();
  EXPECT_TRUE(verify_manifest(mp).ok);
  EXPECT_TRUE(orphans(d / "run", mp).empty());
  write_atomic(d / "run" / "x.csv", "a\n2\n");
  const ManifestCheck bad = verify_manifest(mp);
  EXPECT_FALSE(bad.ok);
  ASSERT_EQ(bad.problems.size(), 1u);
  EXPECT_NE(bad.problems[0].find("x.csv"), std::string::npos);
  fs::remove(d / "a.txt");
  EXPECT_EQ(verify_manifest(mp).problems.size(), 2u);
}

TEST(Cli, ExitCodesAreDistinct) {
  std::set<int> codes;
  for (ExitCode c : {ExitCode::ok, ExitCode::config, ExitCode::data, ExitCode::solver, ExitCode::accuracy,
                     ExitCode::internal})
    codes.insert(static_cast<int>(c));
  EXPECT_EQ(codes.size(), 6u);
}

TEST(Cli, UnknownCommandPrintsUsage) {
  const CliRun r = run_cli("frobnicate");
  EXPECT_EQ(r.code, static_cast<int>(ExitCode::config));
  EXPECT_NE(r.err.find("usage: bdfnb"), std::string::npos);
  EXPECT_NE(r.err.find("no-binding-report"), std::string::npos);
  const CliRun h = run_cli("--help");
  EXPECT_EQ(h.code, 0);
  EXPECT_NE(h.out.find("--out-dir"), std::string::npos);
  EXPECT_EQ(run_cli("vacuum --alpha 0.05 --lambda 1000").code, static_cast<int>(ExitCode::config));
}

TEST(Cli, UnwritableOutDirIsAConfigError) {
  const fs::path d = scratch("blocked");
  write_atomic(d / "file", "x");
  const CliRun r = run_cli("pekar-ground --out-dir " + (d / "file" / "sub").string());
  EXPECT_EQ(r.code, static_cast<int>(ExitCode::config));
  EXPECT_NE(r.err.find("out_dir"), std::string::npos);
}

TEST(Cli, PekarGroundWritesStateProfileAndManifest) {
  const fs::path d = scratch("pekar");
  const CliRun r = run_cli("pekar-ground --write-field --n 32 --box 20 --out-dir " + d.string());
  ASSERT_EQ(r.code, 0) << r.err;
  const Json s = Json::parse(read_file(d / "pekar_state.json"));
  EXPECT_LT(s.at("energy").get<double>(), 0.0);
  EXPECT_NEAR(s.at("virial_lambda").get<double>(), 1.0, 1e-4);
  EXPECT_LT(s.at("residual").get<double>(), 1e-10);
  const CsvData p = read_csv(d / "pekar_profile.csv");
  EXPECT_EQ(p.header, (std::vector<std::string>{"r", "phi"}));
  EXPECT_EQ(p.rows.size(), 3999u);
  const FieldFile f = read_field(d / "pekar_field.bin");
  EXPECT_EQ(f.components.at(0).size(), 32u * 32u * 32u);

  const fs::path mp = d / "pekar-ground.manifest.json";
  ASSERT_TRUE(fs::exists(mp));
  EXPECT_TRUE(verify_manifest(mp).ok);
  EXPECT_TRUE(orphans(d, mp).empty());
  const Json m = Json::parse(read_file(mp));
  EXPECT_EQ(m.at("code_version"), code_version());
  EXPECT_EQ(m.at("config").at("write_field"), true);
  EXPECT_GT(m.at("wall_seconds").get<double>(), 0.0);
  EXPECT_EQ(m.at("tolerances").at("pekar_residual"), 1e-10);
}

TEST(Cli, IdenticalConfigGivesIdenticalBytes) {
  const fs::path a = scratch("det_a"), b = scratch("det_b");
  write_atomic(a / "c.json", R"({"command": "vacuum", "kmax": 6.0, "seed": 9})");
  for (const fs::path& d : {a, b}) {
    const CliRun r = run_cli("--config " + (a / "c.json").string() + " --out-dir " + (d / "out").string());
    ASSERT_EQ(r.code, 0) << r.err;
    const CliRun p = run_cli("pekar-ground --out-dir " + (d / "pk").string());
    ASSERT_EQ(p.code, 0) << p.err;
  }
  for (const char* f : {"out/vacuum_table.csv", "out/vacuum_summary.json", "pk/pekar_profile.csv", "pk/pekar_state.json"})
    EXPECT_EQ(sha256_file(a / f), sha256_file(b / f)) << f;
  const Json m = Json::parse(read_file(a / "out" / "vacuum.manifest.json"));
  ASSERT_EQ(m.at("inputs").size(), 1u);
  EXPECT_EQ(m.at("inputs")[0].at("sha256"), sha256_file(a / "c.json"));
  const Json s = Json::parse(read_file(a / "out" / "vacuum_summary.json"));
  EXPECT_NEAR(s.at("gaussian_source").at("screened_over_z3").get<double>(), 1.0, 1e-4);
  EXPECT_TRUE(orphans(a / "out", a / "out" / "vacuum.manifest.json").empty());
}

TEST(Cli, InequalityReportListsEveryCheck) {
  const fs::path d = scratch("ineq");
  const CliRun r = run_cli("check-inequalities --trials 2 --no-include-slow --report ineq.json --out-dir " + d.string());
  ASSERT_EQ(r.code, 0) << r.err;
  const Json j = Json::parse(read_file(d / "ineq.json"));
  EXPECT_EQ(j.at("failures"), 0);
  std::set<std::string> names;
  for (const auto& c : j.at("checks")) names.insert(c.at("name").get<std::string>());
  for (const char* n : {"kato", "hardy", "sobolev_l6", "bb_potential", "sign_lipschitz", "f_lipschitz"})
    EXPECT_TRUE(names.count(n)) << n;
  EXPECT_TRUE(verify_manifest(d / "check-inequalities.manifest.json").ok);
}
