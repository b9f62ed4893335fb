#include "fracpf/output.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <system_error>

#include <fmt/format.h>

#include "fracpf/config.hpp"
#include "fracpf/errors.hpp"

namespace fracpf {

namespace fs = std::filesystem;

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void write_file_atomic(const fs::path& path, const std::string& content) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (out) out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.close();
    if (!out) {
      std::error_code ignored;
      fs::remove(tmp, ignored);
      throw IoError(fmt::format("cannot write '{}'", tmp.string()));
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    std::error_code ignored;
    fs::remove(tmp, ignored);
    throw IoError(fmt::format("cannot move '{}' into place: {}", path.string(), ec.message()));
  }
}

OutputDir::OutputDir(fs::path dir) : dir_(std::move(dir)) {
  std::error_code ec;
  fs::create_directories(dir_, ec);
  if (ec || !fs::is_directory(dir_)) {
    throw IoError(fmt::format("cannot create output directory '{}': {}", dir_.string(),
                              ec ? ec.message() : "not a directory"));
  }
}

void OutputDir::write(const std::string& name, const std::string& content) {
  write_file_atomic(dir_ / name, content);
  files_.push_back({name, content.size(), sha256_hex(content)});
}

namespace {

void append_row(std::string& out, std::initializer_list<double> values, char sep = ',') {
  bool first = true;
  for (double v : values) {
    if (!first) out += sep;
    out += format_double(v);
    first = false;
  }
  out += '\n';
}

void append_sample(std::string& out, const TimeSample& s, char sep) {
  append_row(out, {s.t, s.norm_theta, s.graphnorm_theta, s.norm_phi, s.graphnorm_phi, s.dtphi_norm,
                   s.energy_lhs, s.energy_rhs, s.energy_residual},
             sep);
}

}  // namespace

std::string timeseries_csv(const RunOutput& run) {
  std::string out = kTimeseriesHeader;
  out += '\n';
  for (const auto& s : run.series) append_sample(out, s, ',');
  return out;
}

std::string timeseries_dat(const RunOutput& run) {
  std::string header = kTimeseriesHeader;
  for (char& c : header) {
    if (c == ',') c = ' ';
  }
  std::string out = "# " + header + '\n';
  for (const auto& s : run.series) append_sample(out, s, ' ');
  return out;
}

std::string snapshots_csv(const RunOutput& run) {
  std::string out = kSnapshotsHeader;
  out += '\n';
  for (const auto& snap : run.snapshots) {
    const std::string t = format_double(snap.t);
    for (int i = 0; i < snap.theta.size(); ++i) out += fmt::format("{},theta,{},{}\n", t, i, format_double(snap.theta[i]));
    for (int i = 0; i < snap.phi.size(); ++i) out += fmt::format("{},phi,{},{}\n", t, i, format_double(snap.phi[i]));
  }
  return out;
}

std::string grid_csv(const DiscreteSystem& system, const State& state) {
  const auto& pts = system.basis_a().grid_points();
  const bool two_d = system.basis_a().dim() == 2;
  const Eigen::VectorXd theta = system.theta_on_grid(state.theta);
  const Eigen::VectorXd phi = state.phi_nodes.size() == theta.size() ? state.phi_nodes : system.phi_on_grid(state.phi);
  std::string out = two_d ? "x,y,theta,phi\n" : "x,theta,phi\n";
  for (int i = 0; i < theta.size(); ++i) {
    if (two_d) {
      append_row(out, {pts(i, 0), pts(i, 1), theta[i], phi[i]});
    } else {
      append_row(out, {pts(i, 0), theta[i], phi[i]});
    }
  }
  return out;
}

std::string grid_file_name(double t) { return fmt::format("grid_{:.6f}.csv", t); }

std::string study_csv(const StudyReport& r) {
  std::string out = fmt::format(
      "{},theta_linf_h,theta_l2_h,theta_l2_v,phi_linf_h,phi_l2_h,phi_l2_v,cauchy_phi,order\n", r.parameter);
  for (std::size_t i = 0; i < r.values.size(); ++i) {
    const FieldErrors th = i < r.theta.size() ? r.theta[i] : FieldErrors{};
    const FieldErrors ph = i < r.phi.size() ? r.phi[i] : FieldErrors{};
    const double nan = std::numeric_limits<double>::quiet_NaN();
    append_row(out, {r.values[i], th.linf_h, th.l2_h, th.l2_v, ph.linf_h, ph.l2_h, ph.l2_v,
                     i < r.cauchy_phi.size() ? r.cauchy_phi[i] : nan, i < r.order.size() ? r.order[i] : nan});
  }
  return out;
}

std::string contdep_csv(const ContdepReport& r) {
  std::string out =
      "scale,lhs,rhs,ratio,degenerate,theta_l2_h,theta_int_linf_v,phi_linf_h,phi_l2_v,source_int_l2_h,theta0_h,"
      "phi0_h\n";
  for (const auto& row : r.rows) {
    const auto& t = row.terms;
    append_row(out, {row.scale, row.lhs, row.rhs, row.ratio, row.degenerate ? 1.0 : 0.0, t.theta_l2_h,
                     t.theta_int_linf_v, t.phi_linf_h, t.phi_l2_v, t.source_int_l2_h, t.theta0_h, t.phi0_h});
  }
  return out;
}

std::string sigma_zero_csv(const std::vector<SigmaZeroRow>& rows) {
  std::string out = "sigma,error,closed_form_sq,mismatch\n";
  for (const auto& r : rows) append_row(out, {r.sigma, r.error, r.closed_form_sq, r.mismatch});
  return out;
}

std::vector<TimeseriesRow> read_timeseries_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(fmt::format("cannot open '{}'", path.string()));
  std::string line;
  if (!std::getline(in, line) || line != kTimeseriesHeader) {
    throw IoError(fmt::format("'{}': unexpected header", path.string()));
  }
  std::vector<TimeseriesRow> rows;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    double v[9];
    std::stringstream ss(line);
    std::string cell;
    int k = 0;
    while (std::getline(ss, cell, ',')) {
      if (k >= 9) break;
      char* end = nullptr;
      v[k] = std::strtod(cell.c_str(), &end);
      if (end == cell.c_str() || *end != '\0') k = 100;
      ++k;
    }
    if (k != 9) throw IoError(fmt::format("'{}' line {}: expected 9 numeric columns", path.string(), line_no));
    rows.push_back({v[0], v[1], v[2], v[3], v[4], v[5], v[6], v[7], v[8]});
  }
  return rows;
}

nlohmann::json manifest_to_json(const RunManifest& m) {
  nlohmann::json checks = nlohmann::json::array();
  for (const auto& c : m.checks) checks.push_back({{"name", c.name}, {"passed", c.passed}, {"detail", c.detail}});
  nlohmann::json files = nlohmann::json::array();
  for (const auto& f : m.files) files.push_back({{"name", f.name}, {"bytes", f.bytes}, {"sha256", f.sha256}});
  return {{"artifact", "fracpf"},
          {"version", kArtifactVersion},
          {"subcommand", m.subcommand},
          {"config", m.config},
          {"config_hash", m.config_hash},
          {"started_at", m.started_at},
          {"wall_clock_seconds", m.wall_clock_seconds},
          {"status", m.status},
          {"exit_code", m.exit_code},
          {"failure", m.failure.empty() ? nlohmann::json(nullptr) : nlohmann::json(m.failure)},
          {"checks", checks},
          {"advisories", m.advisories},
          {"summary", m.summary},
          {"files", files}};
}

void write_manifest(const fs::path& dir, const RunManifest& manifest) {
  write_file_atomic(dir / "manifest.json", manifest_to_json(manifest).dump(2) + '\n');
}

}  // namespace fracpf
