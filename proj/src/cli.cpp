#include "fracpf/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "fracpf/analysis.hpp"
#include "fracpf/errors.hpp"

namespace fracpf {

namespace fs = std::filesystem;
using nlohmann::json;

const std::vector<std::string>& subcommand_names() {
  static const std::vector<std::string> names = {"simulate", "converge", "contdep", "longtime",
                                                 "relaxlimit", "opcheck", "selftest"};
  return names;
}

fs::path resolve_output_dir(const std::string& cli_out, const std::string& config_dir,
                            const std::string& subcommand) {
  if (!cli_out.empty()) return cli_out;
  fs::path dir = config_dir.empty() ? fs::path("fracpf-out") / subcommand : fs::path(config_dir);
  const char* root = std::getenv(kOutRootEnv);
  if (root && *root && dir.is_relative()) dir = fs::path(root) / dir;
  return dir;
}

namespace {

[[noreturn]] void bad_key(const std::string& key, const std::string& what) {
  throw ValidationError(fmt::format("config key '{}': {}", key, what));
}

std::string utc_now() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

struct Context {
  const RunConfig& cfg;
  OutputDir& out;
  RunManifest& manifest;
  const DispatchOptions& options;
};

void add_checks(RunManifest& m, const std::vector<Check>& checks) {
  m.checks.insert(m.checks.end(), checks.begin(), checks.end());
}

json run_summary(const RunOutput& run) {
  return {{"steps", run.series.empty() ? 0 : static_cast<int>(run.series.size()) - 1},
          {"final_time_reached", run.series.empty() ? 0.0 : run.series.back().t},
          {"max_energy_residual", max_energy_residual(run)},
          {"max_inner_iterations", run.max_inner_iterations},
          {"failed", run.failed}};
}

void emit_run(const DiscreteSystem& sys, const RunOutput& run, bool grids, OutputDir& out,
              const std::string& prefix = "") {
  out.write(prefix + "timeseries.csv", timeseries_csv(run));
  out.write(prefix + "timeseries.dat", timeseries_dat(run));
  out.write(prefix + "snapshots.csv", snapshots_csv(run));
  if (grids) {
    for (const auto& snap : run.snapshots) out.write(prefix + grid_file_name(snap.t), grid_csv(sys, snap));
  }
}

Check ledger_nonnegative(const RunOutput& run, bool check_potential) {
  int bad = 0;
  double worst = 0.0;
  for (const auto& s : run.series) {
    std::vector<double> terms = {s.theta_energy, s.dissipation_theta, s.dissipation_phi, s.phi_energy};
    if (check_potential) terms.push_back(s.potential_energy);
    for (double v : terms) {
      if (!(v >= 0.0)) {
        ++bad;
        worst = std::min(worst, v);
      }
    }
  }
  return {"ledger_lhs_nonnegative", bad == 0,
          fmt::format("{} negative terms over {} rows (most negative {:.3e})", bad, run.series.size(), worst)};
}

IntegrateOptions run_options(const RunConfig& cfg) {
  IntegrateOptions o;
  o.final_time = cfg.run.final_time;
  o.snapshot_stride = cfg.run.snapshot_stride;
  o.keep_trajectory = false;
  return o;
}

// ---- subcommands ----------------------------------------------------------

void cmd_simulate(Context& ctx) {
  const DiscreteSystem sys = build_system(ctx.cfg);
  ctx.manifest.advisories = sys.advisories();
  const RunOutput run = integrate(sys, ctx.cfg.run.scheme, run_options(ctx.cfg));
  emit_run(sys, run, ctx.cfg.run.grid_output, ctx.out);
  ctx.manifest.summary = run_summary(run);
  if (run.failed) throw SolverError(run.failure);
  ctx.manifest.checks.push_back(ledger_nonnegative(run, sys.potential().kind() != PotentialKind::Custom));
}

void cmd_converge(Context& ctx) {
  const auto& cfg = ctx.cfg;
  const StudyAxis axis = study_axis_from_string(cfg.study.axis);
  const ReferencePolicy policy = reference_policy_from_string(cfg.study.reference);
  const auto& values = cfg.study.values;
  if (values.size() < 2) bad_key("study.values", "a convergence study needs at least two levels");
  const DiscreteSystem base = build_system(cfg);
  ctx.manifest.advisories = base.advisories();

  for (double v : values) {
    if (axis == StudyAxis::Dt) {
      const double steps = cfg.run.final_time / v;
      if (std::abs(steps - std::round(steps)) > 1e-6 * std::max(1.0, steps)) {
        bad_key("study.values", fmt::format("dt = {} does not divide scheme.T", v));
      }
    }
    if (axis == StudyAxis::NModes) {
      if (v != std::floor(v)) bad_key("study.values", fmt::format("n_modes = {} is not an integer", v));
      if (cfg.geometry_a.m_grid < 4 * v) {
        bad_key("study.values", fmt::format("n_modes = {} needs m_grid >= {}", v, 4 * v));
      }
    }
  }

  auto system_for = [&](double v) -> DiscreteSystem {
    switch (axis) {
      case StudyAxis::NModes: {
        RunConfig c = cfg;
        c.geometry_a.n_modes = c.geometry_b.n_modes = static_cast<int>(v);
        return build_system(c);
      }
      case StudyAxis::Eps: return base.with_parameters(base.sigma(), v);
      case StudyAxis::Sigma: return base.with_parameters(v, base.eps());
      case StudyAxis::Dt: return base;
    }
    return base;
  };
  const CaseFactory factory = [&](double v) {
    SchemeConfig scheme = cfg.run.scheme;
    if (axis == StudyAxis::Dt) scheme.dt = v;
    return StudyCase{system_for(v), scheme};
  };

  std::optional<AnalyticSolution> analytic;
  if (policy == ReferencePolicy::Analytic) {
    if (axis == StudyAxis::Sigma) bad_key("study.reference", "no analytic reference along the sigma axis");
    const double richest = *std::max_element(values.begin(), values.end());
    analytic = linear_exact_solution(axis == StudyAxis::NModes ? system_for(richest) : base);
    if (!analytic) {
      bad_key("study.reference",
              "the analytic reference needs the decoupled linear problem (zero potential, coupling 0, f = 0)");
    }
  }
  const StudyReport report =
      convergence_study(axis, values, factory, cfg.run.final_time, policy, analytic, ctx.options.jobs);
  ctx.out.write("study.csv", study_csv(report));
  add_checks(ctx.manifest, report.checks);
  ctx.manifest.summary = {{"axis", to_string(axis)}, {"reference", to_string(policy)}, {"levels", values.size()}};
}

// Adds scale * (unit eigenfunction `mode`) to a field, as an expression term when
// the field is an expression and on the grid when it is tabulated.
SpaceTimeField add_mode(const SpaceTimeField& field, const SpectralBasis& basis, int mode, double scale) {
  if (field.is_tabulated()) {
    std::vector<Eigen::VectorXd> rows = field.table_values();
    for (auto& row : rows) row += scale * basis.eigenfunction_values().col(mode);
    return SpaceTimeField::table(field.table_times(), std::move(rows));
  }
  const bool neumann = basis.kind() == BasisKind::IntervalNeumann || basis.kind() == BasisKind::RectNeumann;
  ExprTerm term;
  term.shape = neumann ? ExprTerm::Shape::Cos : ExprTerm::Shape::Sin;
  term.modes = basis.mode_numbers()[mode];
  term.amplitude = scale;
  for (int d = 0; d < basis.dim(); ++d) {
    const double L = basis.extent()[d];
    term.amplitude *= (neumann && term.modes[d] == 0) ? 1.0 / std::sqrt(L) : std::sqrt(2.0 / L);
  }
  std::vector<ExprTerm> terms = field.terms();
  terms.push_back(term);
  return SpaceTimeField::expression(std::move(terms));
}

void cmd_contdep(Context& ctx) {
  const auto& cfg = ctx.cfg;
  const DiscreteSystem sys = build_system(cfg);
  ctx.manifest.advisories = sys.advisories();
  if (!sys.coupling().is_constant()) {
    ctx.manifest.advisories.push_back("nonconstant coupling: the empirical constant also depends on the data norms");
  }
  if (cfg.study.scales.empty()) bad_key("study.scales", "needs at least one perturbation scale");
  const std::string& which = cfg.study.perturb_field;
  const SpectralBasis& basis = which == "phi0" ? sys.basis_b() : sys.basis_a();
  const int mode = cfg.study.perturb_mode;
  if (mode >= basis.n_modes()) {
    bad_key("study.perturb_mode", fmt::format("must be < {} (modes of the {} basis)", basis.n_modes(), which));
  }
  const ProblemData data1 = sys.data();
  const auto perturb = [&](double scale) {
    ProblemData d = data1;
    SpaceTimeField& f = which == "theta0" ? d.theta0 : which == "phi0" ? d.phi0 : d.source;
    f = add_mode(f, basis, mode, scale);
    return d;
  };
  const ContdepReport report = contdep_scan(sys, cfg.run.scheme, cfg.run.final_time, data1, perturb,
                                            cfg.study.scales, cfg.study.spread_tol, ctx.options.jobs);
  ctx.out.write("contdep.csv", contdep_csv(report));
  add_checks(ctx.manifest, report.checks);
  ctx.manifest.summary = {{"ratio_spread", report.ratio_spread}, {"spread_tol", cfg.study.spread_tol},
                          {"perturb_field", which}, {"perturb_mode", mode}};
}

void cmd_longtime(Context& ctx) {
  const auto& cfg = ctx.cfg;
  const DiscreteSystem sys = build_system(cfg);
  ctx.manifest.advisories = sys.advisories();
  const RunOutput run = integrate(sys, cfg.run.scheme, run_options(cfg));
  emit_run(sys, run, cfg.run.grid_output, ctx.out);
  ctx.manifest.summary = run_summary(run);
  if (run.failed) throw SolverError(run.failure);

  OmegaThresholds th;
  th.tail_fraction = cfg.study.tail_fraction;
  th.tail_tol = cfg.study.tail_tol;
  th.residual_tol = cfg.study.residual_tol;
  th.theta_tol = cfg.study.theta_tol;
  const OmegaLimitReport rep = omega_limit_probe(sys, run, th);
  const CoercivityReport coer = coercivity_probe(sys.potential(), {cfg.eps}, cfg.study.coercivity_range);
  ctx.manifest.checks.push_back({"coercive_split", coer.ok,
                                 fmt::format("alpha {:.4g}, C {:.4g}", coer.alpha, coer.constant)});
  add_checks(ctx.manifest, rep.checks);

  std::string csv = "quantity,value\n";
  const std::vector<std::pair<const char*, double>> rows = {
      {"tail_start", rep.tail_start},
      {"tail_sup_ar_theta", rep.tail_sup_ar_theta},
      {"tail_sup_dtphi", rep.tail_sup_dtphi},
      {"tail_monotone", rep.tail_monotone ? 1.0 : 0.0},
      {"stationary_residual", rep.stationary_residual},
      {"final_ar_theta", rep.final_ar_theta},
      {"final_theta_norm", rep.final_theta_norm},
      {"trivial_kernel_a", rep.trivial_kernel_a ? 1.0 : 0.0},
      {"coercivity_alpha", coer.alpha},
      {"coercivity_constant", coer.constant}};
  for (const auto& [name, value] : rows) csv += fmt::format("{},{}\n", name, format_double(value));
  ctx.out.write("omega.csv", csv);
}

void cmd_relaxlimit(Context& ctx) {
  const auto& cfg = ctx.cfg;
  const DiscreteSystem sys = build_system(cfg);
  ctx.manifest.advisories = sys.advisories();
  if (!sys.coupling().is_constant()) bad_key("coupling", "the relaxation limit needs a constant coupling");
  if (!sys.potential().pi_is_linear()) bad_key("potential", "the relaxation limit needs a linear pi");
  const auto& sigmas = cfg.study.sigmas;
  for (std::size_t i = 1; i < sigmas.size(); ++i) {
    if (!(sigmas[i] < sigmas[i - 1])) bad_key("study.sigmas", "must be strictly decreasing");
  }
  RelaxLimitSetup setup{sys, sigmas, cfg.run.scheme, cfg.run.final_time};
  const RelaxLimitReport rep = relaxation_limit_study(setup, ctx.options.jobs);
  ctx.out.write("study.csv", study_csv(rep.study));
  ctx.out.write("limit_timeseries.csv", timeseries_csv(rep.limit));
  ctx.out.write("limit_timeseries.dat", timeseries_dat(rep.limit));
  add_checks(ctx.manifest, rep.checks);
  ctx.manifest.summary = {{"sigmas", sigmas}, {"limit", run_summary(rep.limit)}};
}

void cmd_opcheck(Context& ctx) {
  const auto& cfg = ctx.cfg;
  const DiscreteSystem sys = build_system(cfg);
  ctx.manifest.advisories = sys.advisories();
  const SpectralBasis& basis = sys.basis_b();
  const int n = basis.n_modes();
  Eigen::VectorXd v(n);
  if (cfg.study.vector.empty()) {
    for (int j = 0; j < n; ++j) v[j] = 1.0 / ((1.0 + j) * (1.0 + j));
  } else {
    if (static_cast<int>(cfg.study.vector.size()) != n) {
      bad_key("study.vector", fmt::format("needs {} coefficients (modes of B), got {}", n, cfg.study.vector.size()));
    }
    v = Eigen::Map<const Eigen::VectorXd>(cfg.study.vector.data(), n);
  }
  std::vector<SigmaZeroRow> rows = sigma_zero_operator_check(basis, v, cfg.study.sigmas);
  ctx.out.write("sigma_zero.csv", sigma_zero_csv(rows));

  double worst = 0.0;
  bool match = true;
  for (const auto& r : rows) {
    worst = std::max(worst, r.mismatch);
    match = match && r.mismatch <= 1e-12 * std::max(1.0, r.closed_form_sq);
  }
  ctx.manifest.checks.push_back({"closed_form_match", match, fmt::format("max mismatch {:.3e}", worst)});
  std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.sigma > b.sigma; });
  bool decreasing = true;
  bool all_zero = true;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    all_zero = all_zero && rows[i].error == 0.0;
    if (i > 0) decreasing = decreasing && rows[i].error < rows[i - 1].error;
  }
  ctx.manifest.checks.push_back({"error_decreasing_as_sigma_decreases", decreasing || all_zero,
                                 all_zero ? "v in ker B: all errors vanish" : ""});

  // Diagnostic only: the sign of (B^sigma beta_eps(v), B^sigma v) is recorded, not asserted.
  const auto samples = random_smooth_samples(n, cfg.study.hpqo_samples, cfg.study.hpqo_amplitude, cfg.seed);
  const HpqoReport hpqo = hpqo_probe(basis, cfg.sigma, sys.potential(), cfg.eps, samples);
  std::string csv = "sample,value\n";
  for (std::size_t i = 0; i < hpqo.values.size(); ++i) csv += fmt::format("{},{}\n", i, format_double(hpqo.values[i]));
  ctx.out.write("hpqo.csv", csv);
  ctx.manifest.summary = {{"hpqo_samples", hpqo.values.size()},
                          {"hpqo_violations", hpqo.violations},
                          {"hpqo_min_value", hpqo.min_value}};
}

void cmd_selftest(OutputDir& out, RunManifest& manifest, std::uint64_t seed) {
  const auto rows = run_selftest(seed);
  std::string csv = "suite,check,samples,violations,worst,tolerance,passed\n";
  for (const auto& r : rows) {
    csv += fmt::format("{},{},{},{},{},{},{}\n", r.suite, r.check, r.samples, r.violations, format_double(r.worst),
                       format_double(r.tolerance), r.passed() ? 1 : 0);
    manifest.checks.push_back({r.suite + "/" + r.check, r.passed(),
                               fmt::format("{} violations in {} samples, worst {:.3e}", r.violations, r.samples,
                                           r.worst)});
  }
  out.write("selftest.csv", csv);
  manifest.summary = {{"seed", seed}, {"rows", rows.size()}};
}

const char* status_name(int code) {
  switch (code) {
    case kExitOk: return "ok";
    case kExitConfig: return "config_error";
    case kExitSolver: return "solver_failure";
    case kExitCheck: return "check_failure";
    case kExitIo: return "io_error";
  }
  return "error";
}

}  // namespace

DispatchResult dispatch(const std::string& subcommand, const RunConfig* config, const DispatchOptions& options) {
  DispatchResult res;
  RunManifest& m = res.manifest;
  m.subcommand = subcommand;
  m.started_at = utc_now();
  const auto start = std::chrono::steady_clock::now();
  if (config) {
    m.config = config_to_json(*config);
    m.config_hash = config_hash(*config);
  }

  std::optional<OutputDir> out;
  try {
    out.emplace(options.out_dir);
  } catch (const IoError& e) {
    m.failure = e.what();
    m.exit_code = res.exit_code = kExitIo;
    m.status = status_name(kExitIo);
    return res;
  }

  auto fail_with = [&](int code, const std::string& what) {
    res.exit_code = code;
    m.failure = what;
  };
  try {
    const auto& names = subcommand_names();
    if (std::find(names.begin(), names.end(), subcommand) == names.end()) {
      throw ValidationError(fmt::format("unknown subcommand '{}'", subcommand));
    }
    if (subcommand == "selftest") {
      cmd_selftest(*out, m, config ? config->seed : 0);
    } else {
      if (!config) throw ValidationError(fmt::format("subcommand '{}' needs a configuration", subcommand));
      Context ctx{*config, *out, m, options};
      if (subcommand == "simulate") cmd_simulate(ctx);
      if (subcommand == "converge") cmd_converge(ctx);
      if (subcommand == "contdep") cmd_contdep(ctx);
      if (subcommand == "longtime") cmd_longtime(ctx);
      if (subcommand == "relaxlimit") cmd_relaxlimit(ctx);
      if (subcommand == "opcheck") cmd_opcheck(ctx);
    }
    if (!all_passed(m.checks)) {
      std::string failed;
      for (const auto& c : m.checks) {
        if (!c.passed) failed += (failed.empty() ? "" : ", ") + c.name;
      }
      fail_with(kExitCheck, "checks failed: " + failed);
    }
  } catch (const ValidationError& e) {
    fail_with(kExitConfig, e.what());
  } catch (const SolverError& e) {
    fail_with(kExitSolver, e.what());
  } catch (const IoError& e) {
    fail_with(kExitIo, e.what());
  } catch (const std::exception& e) {
    fail_with(kExitSolver, fmt::format("unexpected error: {}", e.what()));
  }

  m.files = out->files();
  m.wall_clock_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  m.exit_code = res.exit_code;
  m.status = status_name(res.exit_code);
  try {
    write_manifest(out->path(), m);
  } catch (const IoError& e) {
    if (res.exit_code == kExitOk) m.failure = e.what();
    m.exit_code = res.exit_code = kExitIo;
    m.status = status_name(kExitIo);
  }
  return res;
}

int run_cli(int argc, char** argv) {
  CLI::App app{"Spectral-Galerkin simulator for the fractional phase-field system"};
  app.require_subcommand(1);
  std::string config_path;
  std::string out_dir;
  std::vector<std::string> overrides;
  int jobs = 1;
  bool quiet = false;
  app.add_option("--config", config_path, "JSON run configuration, or a manifest.json from an earlier run");
  app.add_option("--out", out_dir, fmt::format("output directory (default: output.dir under ${})", kOutRootEnv));
  app.add_option("--override", overrides, "dotted.key=value, value parsed as JSON (repeatable)");
  app.add_option("--jobs", jobs, "concurrent runs inside studies")->check(CLI::PositiveNumber);
  app.add_flag("--quiet", quiet, "only report errors");
  app.fallthrough();
  for (const auto& name : subcommand_names()) app.add_subcommand(name, "run the " + name + " driver");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }
  const std::string subcommand = app.get_subcommands().front()->get_name();

  std::optional<RunConfig> config;
  json raw;
  try {
    if (config_path.empty()) {
      if (subcommand != "selftest") throw ValidationError("--config is required for " + subcommand);
      if (!overrides.empty()) throw ValidationError("--override needs --config");
    } else {
      raw = load_config_json(config_path);
      for (const auto& o : overrides) apply_override(raw, o);
      config = config_from_json(raw);
    }
  } catch (const ValidationError& e) {
    std::cerr << "fracpf: configuration error: " << e.what() << '\n';
    // Leave a failure record when a destination can be determined.
    std::string dir;
    if (raw.is_object() && raw.contains("output") && raw["output"].is_object() && raw["output"].contains("dir") &&
        raw["output"]["dir"].is_string()) {
      dir = raw["output"]["dir"].get<std::string>();
    }
    try {
      const fs::path target = resolve_output_dir(out_dir, dir, subcommand);
      OutputDir od(target);
      RunManifest m;
      m.subcommand = subcommand;
      m.config = raw;
      m.started_at = utc_now();
      m.status = status_name(kExitConfig);
      m.exit_code = kExitConfig;
      m.failure = e.what();
      write_manifest(od.path(), m);
    } catch (const IoError&) {
    }
    return kExitConfig;
  }

  DispatchOptions options;
  options.out_dir = resolve_output_dir(out_dir, config ? config->output_dir : std::string(), subcommand);
  options.jobs = jobs;
  options.quiet = quiet;
  const DispatchResult res = dispatch(subcommand, config ? &*config : nullptr, options);

  if (!quiet) {
    for (const auto& c : res.manifest.checks) {
      std::cout << (c.passed ? "PASS " : "FAIL ") << c.name << (c.detail.empty() ? "" : ": " + c.detail) << '\n';
    }
    for (const auto& a : res.manifest.advisories) std::cout << "advisory: " << a << '\n';
    std::cout << fmt::format("{} -> {} ({}, exit {})\n", subcommand, options.out_dir.string(),
                             res.manifest.status, res.exit_code);
  }
  if (res.exit_code != kExitOk) std::cerr << "fracpf: " << res.manifest.status << ": " << res.manifest.failure << '\n';
  return res.exit_code;
}

}  // namespace fracpf
