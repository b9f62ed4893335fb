#pragma once

// File emission: CSV tables at 17 significant digits, a whitespace-separated
// copy of the time series for plotting tools, and the run manifest. Every file
// is written to a temporary name and renamed into place.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "fracpf/analysis.hpp"
#include "fracpf/timestepper.hpp"

namespace fracpf {

inline constexpr const char* kArtifactVersion = "0.1.0";
inline constexpr const char* kTimeseriesHeader =
    "t,norm_theta,graphnorm_theta,norm_phi,graphnorm_phi,dtphi_norm,energy_lhs,energy_rhs,energy_residual";
inline constexpr const char* kSnapshotsHeader = "t,field,mode_index,coefficient";

// "%.17g"
std::string format_double(double x);

struct OutputFile {
  std::string name;
  std::uintmax_t bytes = 0;
  std::string sha256;
};

class OutputDir {
 public:
  // Creates the directory; IoError when that fails.
  explicit OutputDir(std::filesystem::path dir);
  const std::filesystem::path& path() const { return dir_; }
  // Writes name.tmp, then renames; the temporary is removed on failure.
  void write(const std::string& name, const std::string& content);
  const std::vector<OutputFile>& files() const { return files_; }

 private:
  std::filesystem::path dir_;
  std::vector<OutputFile> files_;
};

// Writes content to path atomically (temporary plus rename).
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

std::string timeseries_csv(const RunOutput& run);
std::string timeseries_dat(const RunOutput& run);
std::string snapshots_csv(const RunOutput& run);
// Columns x[,y],theta,phi on the quadrature grid.
std::string grid_csv(const DiscreteSystem& system, const State& state);
std::string grid_file_name(double t);

std::string study_csv(const StudyReport& report);
std::string contdep_csv(const ContdepReport& report);
std::string sigma_zero_csv(const std::vector<SigmaZeroRow>& rows);

struct TimeseriesRow {
  double t = 0.0;
  double norm_theta = 0.0;
  double graphnorm_theta = 0.0;
  double norm_phi = 0.0;
  double graphnorm_phi = 0.0;
  double dtphi_norm = 0.0;
  double energy_lhs = 0.0;
  double energy_rhs = 0.0;
  double energy_residual = 0.0;
};

// Parses a timeseries.csv, checking the header; IoError on malformed input.
std::vector<TimeseriesRow> read_timeseries_csv(const std::filesystem::path& path);

struct RunManifest {
  std::string subcommand;
  nlohmann::json config;  // canonical echo; null for selftest without a config
  std::string config_hash;
  std::string started_at;  // UTC, ISO 8601
  double wall_clock_seconds = 0.0;
  std::string status = "ok";
  int exit_code = 0;
  std::string failure;
  std::vector<Check> checks;
  std::vector<std::string> advisories;
  nlohmann::json summary = nlohmann::json::object();
  std::vector<OutputFile> files;
};

nlohmann::json manifest_to_json(const RunManifest& manifest);
void write_manifest(const std::filesystem::path& dir, const RunManifest& manifest);

}  // namespace fracpf
