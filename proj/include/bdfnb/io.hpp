#pragma once

#include <filesystem>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "bdfnb/fields.hpp"
#include "bdfnb/radial_grid.hpp"

namespace bdfnb {

using Json = nlohmann::ordered_json;
namespace fs = std::filesystem;

// 17 significant digits in scientific notation; round-trips every double.
std::string format_double(double x);

using CsvCell = std::variant<double, long long, std::string>;

class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header);
  void add_row(std::vector<CsvCell> row);  // throws DataError on a column-count mismatch
  const std::vector<std::string>& header() const { return header_; }
  std::size_t rows() const { return rows_.size(); }
  std::string str() const;

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<CsvCell>> rows_;
};

// Header row plus numeric rows; used by tests and the manifest re-check.
struct CsvData {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};
CsvData read_csv(const fs::path& path);

// Writes to a temporary sibling and renames over the target.
void write_atomic(const fs::path& path, const std::string& content);
std::string read_file(const fs::path& path);

std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const fs::path& path);

// Binary field container: "BDFNBF1\n", u64 little-endian header length, JSON header (grid spec, component
// count, value type), then little-endian float64 payload, row-major, components contiguous. Complex values are
// stored as (re, im) pairs.
void write_field(const fs::path& path, const FourierGrid& grid, const std::vector<RVec>& components);
void write_field(const fs::path& path, const FourierGrid& grid, const std::vector<CVec>& components);
struct FieldFile {
  Json header;
  std::vector<CVec> components;  // real fields come back with zero imaginary parts
};
FieldFile read_field(const fs::path& path);

std::string radial_profile_csv(const RadialGrid& grid, const std::vector<double>& phi);

struct ManifestEntry {
  std::string path;  // relative to the manifest's directory
  std::string sha256;
  std::uintmax_t bytes = 0;
};

// Collects the outputs of one run and writes them, then a manifest next to them.
class RunManifest {
 public:
  RunManifest(std::string command, fs::path out_dir, Json config);
  const fs::path& out_dir() const { return out_dir_; }

  void add_output(const std::string& name, const std::string& content);
  // Registers a file already written into out_dir.
  void add_existing(const std::string& name);
  void add_input(const fs::path& path);
  void set_tolerances(Json t) { tolerances_ = std::move(t); }
  void note(const std::string& key, Json value) { notes_[key] = std::move(value); }

  // Writes <command>.manifest.json; returns its path.
  fs::path finish(double wall_seconds);

  const std::vector<ManifestEntry>& outputs() const { return outputs_; }

 private:
  std::string command_;
  fs::path out_dir_;
  Json config_, tolerances_ = Json::object(), notes_ = Json::object();
  std::vector<ManifestEntry> inputs_, outputs_;
};

std::string code_version();

struct ManifestCheck {
  bool ok = true;
  std::vector<std::string> problems;
};
// Re-hashes every listed file.
ManifestCheck verify_manifest(const fs::path& manifest);

}  // namespace bdfnb
