#pragma once

// Run configuration: a JSON document with nested sections, validated into a
// RunConfig before any compute. The canonical serialization fills every default,
// so two spellings of the same run share a content hash.

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "fracpf/galerkin.hpp"
#include "fracpf/timestepper.hpp"

namespace fracpf {

struct GeometrySpec {
  BasisKind kind = BasisKind::IntervalNeumann;
  std::vector<double> extent{1.0};
  int n_modes = 16;
  int m_grid = 0;  // 0 selects 8 * n_modes on intervals, 4 * n_modes per axis on rectangles
};

struct PotentialSpec {
  PotentialKind kind = PotentialKind::Regular;
  double gamma = 1.0;
  double c1 = 1.5;
  double c2 = 1.0;
  CustomTables tables;
};

struct RunSpec {
  SchemeConfig scheme;
  double final_time = 1.0;
  int snapshot_stride = 1;
  bool grid_output = false;
};

// Subcommand parameters; each subcommand reads only its own keys.
struct StudySpec {
  // converge
  std::string axis = "dt";
  std::vector<double> values;
  std::string reference = "self_finest";
  // contdep: data2 = data1 + scale * (unit eigenfunction `perturb_mode` of the field's basis)
  std::string perturb_field = "theta0";
  int perturb_mode = 1;
  std::vector<double> scales{1e-1, 1e-2, 1e-3, 1e-4};
  double spread_tol = 0.2;
  // longtime
  double tail_fraction = 0.1;
  double tail_tol = 1e-6;
  double residual_tol = 1e-6;
  double theta_tol = 1e-6;
  double coercivity_range = 4.0;
  // relaxlimit and opcheck
  std::vector<double> sigmas{0.5, 0.25, 0.1, 0.05};
  // opcheck: coefficient vector for the sigma -> 0 check (empty: 1 / (1 + j)^2)
  std::vector<double> vector;
  int hpqo_samples = 16;
  double hpqo_amplitude = 1.0;
};

struct RunConfig {
  GeometrySpec geometry_a;
  GeometrySpec geometry_b;
  double r = 0.5;
  double sigma = 0.5;
  PotentialSpec potential;
  double eps = 1e-2;
  Coupling coupling = Coupling::constant(0.0);
  SpaceTimeField theta0;
  SpaceTimeField phi0;
  SpaceTimeField source;
  RunSpec run;
  StudySpec study;
  std::string output_dir;
  std::uint64_t seed = 0;
};

// Raw JSON -> RunConfig. Required: geometry.A, geometry.B, exponents.r,
// exponents.sigma, potential.kind, eps, scheme.dt, scheme.T. Throws
// ValidationError naming the key and the violated constraint.
RunConfig config_from_json(const nlohmann::json& doc);
// Reads a config file, or a manifest (its "config" member) from an earlier run.
nlohmann::json load_config_json(const std::string& path);
RunConfig parse_config(const std::string& path);

nlohmann::json config_to_json(const RunConfig& config);
// Hex SHA-256 of the canonical serialization without output.dir.
std::string config_hash(const RunConfig& config);
std::string sha256_hex(const std::string& bytes);

// "a.b.c=value": value parsed as JSON, falling back to a plain string.
void apply_override(nlohmann::json& doc, const std::string& assignment);

Potential build_potential(const PotentialSpec& spec);
std::shared_ptr<const SpectralBasis> build_basis(const GeometrySpec& spec);
ProblemData problem_data(const RunConfig& config);
// Builds bases and assembles the system, checking phi0 against the potential's domain.
DiscreteSystem build_system(const RunConfig& config);

}  // namespace fracpf
