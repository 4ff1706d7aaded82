#include "bdfnb/io.hpp"

#include <openssl/evp.h>
#include <unistd.h>

#include <array>
#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "bdfnb/errors.hpp"

#ifndef BDFNB_VERSION
#define BDFNB_VERSION "0.0.0"
#endif

namespace bdfnb {

static_assert(std::endian::native == std::endian::little, "field container assumes a little-endian host");

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.16e", x);
  return buf;
}

CsvTable::CsvTable(std::vector<std::string> header) : header_(std::move(header)) {
  if (header_.empty()) throw DataError("CsvTable: empty header");
}

void CsvTable::add_row(std::vector<CsvCell> row) {
  if (row.size() != header_.size())
    throw DataError("CsvTable: row has " + std::to_string(row.size()) + " cells, header has " +
                    std::to_string(header_.size()));
  rows_.push_back(std::move(row));
}

std::string CsvTable::str() const {
  std::string s;
  for (std::size_t i = 0; i < header_.size(); ++i) s += (i ? "," : "") + header_[i];
  s += "\n";
  for (const auto& row : rows_) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) s += ",";
      if (const auto* d = std::get_if<double>(&row[i]))
        s += format_double(*d);
      else if (const auto* n = std::get_if<long long>(&row[i]))
        s += std::to_string(*n);
      else
        s += std::get<std::string>(row[i]);
    }
    s += "\n";
  }
  return s;
}

CsvData read_csv(const fs::path& path) {
  std::istringstream in(read_file(path));
  CsvData d;
  std::string line;
  auto split = [](const std::string& l) {
    std::vector<std::string> out;
    std::stringstream ss(l);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    return out;
  };
  if (!std::getline(in, line)) throw DataError("read_csv: empty file " + path.string());
  d.header = split(line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto row = split(line);
    if (row.size() != d.header.size()) throw DataError("read_csv: ragged row in " + path.string());
    d.rows.push_back(std::move(row));
  }
  return d;
}

void write_atomic(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot open " + tmp.string() + " for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) {
      std::error_code ec;
      fs::remove(tmp, ec);
      throw DataError("write failed: " + tmp.string());
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw DataError("cannot rename onto " + path.string());
  }
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string sha256_hex(const std::string& bytes) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md.data(), &len, EVP_sha256(), nullptr) != 1)
    throw Error(ExitCode::internal, "SHA-256 failed");
  static const char* hex = "0123456789abcdef";
  std::string s;
  for (unsigned int i = 0; i < len; ++i) {
    s += hex[md[i] >> 4];
    s += hex[md[i] & 15];
  }
  return s;
}

std::string sha256_file(const fs::path& path) { return sha256_hex(read_file(path)); }

// ---- field container

namespace {

constexpr char kMagic[] = "BDFNBF1\n";

void write_field_impl(const fs::path& path, const FourierGrid& grid, std::size_t ncomp, bool complex,
                      const std::function<void(std::string&)>& payload) {
  Json h;
  h["grid"] = Json::parse(grid.spec_json());
  h["components"] = ncomp;
  h["value_type"] = complex ? "complex128" : "float64";
  h["order"] = "row-major";
  const std::string hs = h.dump();
  std::string out(kMagic, 8);
  const std::uint64_t n = hs.size();
  out.append(reinterpret_cast<const char*>(&n), 8);
  out += hs;
  payload(out);
  write_atomic(path, out);
}

}  // namespace

void write_field(const fs::path& path, const FourierGrid& grid, const std::vector<RVec>& components) {
  for (const auto& c : components)
    if (c.size() != grid.size()) throw DataError("write_field: component size does not match the grid");
  write_field_impl(path, grid, components.size(), false, [&](std::string& out) {
    for (const auto& c : components) out.append(reinterpret_cast<const char*>(c.data()), c.size() * sizeof(double));
  });
}

void write_field(const fs::path& path, const FourierGrid& grid, const std::vector<CVec>& components) {
  for (const auto& c : components)
    if (c.size() != grid.size()) throw DataError("write_field: component size does not match the grid");
  write_field_impl(path, grid, components.size(), true, [&](std::string& out) {
    for (const auto& c : components) out.append(reinterpret_cast<const char*>(c.data()), c.size() * sizeof(cplx));
  });
}

FieldFile read_field(const fs::path& path) {
  const std::string s = read_file(path);
  if (s.size() < 16 || std::memcmp(s.data(), kMagic, 8) != 0) throw DataError("read_field: bad magic in " + path.string());
  std::uint64_t n = 0;
  std::memcpy(&n, s.data() + 8, 8);
  if (16 + n > s.size()) throw DataError("read_field: truncated header");
  FieldFile f;
  f.header = Json::parse(s.substr(16, n));
  const auto dims = f.header.at("grid").at("n");
  const std::size_t N = dims[0].get<std::size_t>() * dims[1].get<std::size_t>() * dims[2].get<std::size_t>();
  const std::size_t nc = f.header.at("components").get<std::size_t>();
  const bool complex = f.header.at("value_type") == "complex128";
  const std::size_t per = N * (complex ? 2 : 1) * sizeof(double);
  if (s.size() != 16 + n + nc * per) throw DataError("read_field: payload size mismatch");
  const char* p = s.data() + 16 + n;
  for (std::size_t c = 0; c < nc; ++c) {
    CVec v(N);
    if (complex) {
      std::memcpy(v.data(), p, per);
    } else {
      for (std::size_t i = 0; i < N; ++i) {
        double x;
        std::memcpy(&x, p + i * sizeof(double), sizeof(double));
        v[i] = x;
      }
    }
    p += per;
    f.components.push_back(std::move(v));
  }
  return f;
}

std::string radial_profile_csv(const RadialGrid& grid, const std::vector<double>& phi) {
  if (phi.size() != grid.size()) throw DataError("radial_profile_csv: size mismatch");
  CsvTable t({"r", "phi"});
  for (std::size_t i = 0; i < phi.size(); ++i) t.add_row({grid.r[i], phi[i]});
  return t.str();
}

// ---- manifest

std::string code_version() { return std::string("bdfnb ") + BDFNB_VERSION; }

RunManifest::RunManifest(std::string command, fs::path out_dir, Json config)
    : command_(std::move(command)), out_dir_(std::move(out_dir)), config_(std::move(config)) {
  fs::create_directories(out_dir_);
}

void RunManifest::add_output(const std::string& name, const std::string& content) {
  write_atomic(out_dir_ / name, content);
  outputs_.push_back({name, sha256_hex(content), content.size()});
}

void RunManifest::add_existing(const std::string& name) {
  const fs::path p = out_dir_ / name;
  outputs_.push_back({name, sha256_file(p), fs::file_size(p)});
}

void RunManifest::add_input(const fs::path& path) {
  inputs_.push_back({fs::absolute(path).string(), sha256_file(path), fs::file_size(path)});
}

fs::path RunManifest::finish(double wall_seconds) {
  Json m;
  m["command"] = command_;
  m["code_version"] = code_version();
  m["wall_seconds"] = wall_seconds;
  m["config"] = config_;
  m["tolerances"] = tolerances_;
  if (!notes_.empty()) m["notes"] = notes_;
  auto list = [](const std::vector<ManifestEntry>& v) {
    Json a = Json::array();
    for (const auto& e : v) a.push_back({{"path", e.path}, {"sha256", e.sha256}, {"bytes", e.bytes}});
    return a;
  };
  m["inputs"] = list(inputs_);
  m["outputs"] = list(outputs_);
  const fs::path p = out_dir_ / (command_ + ".manifest.json");
  write_atomic(p, m.dump(2) + "\n");
  return p;
}

ManifestCheck verify_manifest(const fs::path& manifest) {
  ManifestCheck c;
  const Json m = Json::parse(read_file(manifest));
  const fs::path dir = manifest.parent_path();
  for (const char* key : {"inputs", "outputs"}) {
    for (const auto& e : m.at(key)) {
      const fs::path p = std::string(key) == "outputs" ? dir / e.at("path").get<std::string>()
                                                       : fs::path(e.at("path").get<std::string>());
      if (!fs::exists(p)) {
        c.ok = false;
        c.problems.push_back("missing " + p.string());
        continue;
      }
      if (sha256_file(p) != e.at("sha256").get<std::string>()) {
        c.ok = false;
        c.problems.push_back("hash mismatch " + p.string());
      }
    }
  }
  return c;
}

}  // namespace bdfnb
