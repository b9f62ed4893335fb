// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include <fmt/format.h>

#include "fracpf/analysis.hpp"
#include "fracpf/cli.hpp"
#include "fracpf/timestepper.hpp"
#include "scenarios.hpp"

using namespace fracpf;
using namespace scenarios;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// ---------------------------------------------------------------------------

Outcome spectral_foundation() {
  const auto start = Clock::now();
  bool ok = true;
  std::string detail;
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::uniform_real_distribution<double> expo(0.05, 1.5);
  for (BasisKind kind : {BasisKind::IntervalNeumann, BasisKind::IntervalDirichlet}) {
    const auto basis = build_interval_basis(kind, 1.0, 64, 512);
    const double gram = basis.gram_deviation();
    double worst = 0.0;
    for (int k = 0; k < 100; ++k) {
      Eigen::VectorXd v(64);
      for (int j = 0; j < 64; ++j) v[j] = unit(rng);
      const double r1 = expo(rng);
      const double r2 = expo(rng);
      const Eigen::VectorXd twice = apply_fractional(basis, r2, apply_fractional(basis, r1, v));
      const Eigen::VectorXd once = apply_fractional(basis, r1 + r2, v);
      worst = std::max(worst, (twice - once).norm() / once.norm());
    }
    ok = ok && gram <= 1e-10 && worst <= 1e-13;
    detail += fmt::format("{}: gram {:.2e}, semigroup {:.2e}; ", to_string(kind), gram, worst);
  }
  const double elapsed = seconds_since(start);
  ok = ok && elapsed < 1.0;
  return {ok, detail + fmt::format("{:.3f} s", elapsed)};
}

// ---------------------------------------------------------------------------

Potential custom_quartic_like() {
  CustomTables t;
  for (int i = -8; i <= 8; ++i) {
    const double s = 0.5 * i;
    t.nodes.push_back(s);
    t.beta_min.push_back(s * std::abs(s));
    t.pi.push_back(-0.5 * s);
  }
  // beta_hat must agree with the integral of the piecewise-linear beta_min.
  double acc = 0.0;
  std::vector<double> hat(t.nodes.size());
  const std::size_t zero = 8;
  hat[zero] = 0.0;
  for (std::size_t i = zero + 1; i < t.nodes.size(); ++i) {
    acc += 0.5 * (t.beta_min[i] + t.beta_min[i - 1]) * (t.nodes[i] - t.nodes[i - 1]);
    hat[i] = acc;
  }
  acc = 0.0;
  for (std::size_t i = zero; i-- > 0;) {
    acc -= 0.5 * (t.beta_min[i] + t.beta_min[i + 1]) * (t.nodes[i + 1] - t.nodes[i]);
    hat[i] = acc;
  }
  t.beta_hat = hat;
  return Potential::custom(t);
}

Outcome convex_analysis_suite() {
  const auto start = Clock::now();
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> s_dist(-3.0, 3.0);
  std::uniform_real_distribution<double> log_eps(std::log(1e-4), std::log(1.0));
  std::uniform_real_distribution<double> stretch(1.0, 3.0);
  const std::vector<std::pair<std::string, Potential>> kinds = {
      {"regular", Potential::regular(1.0)},
      {"logarithmic", Potential::logarithmic(1.5)},
      {"double_obstacle", Potential::double_obstacle(1.0)},
      {"custom", custom_quartic_like()},
  };
  int violations = 0;
  double worst_residual = 0.0;
  std::string first_violation;
  for (const auto& [name, pot] : kinds) {
    auto flag = [&, &name = name](const char* what, double s, double eps) {
      ++violations;
      if (first_violation.empty()) {
        first_violation = fmt::format(" (first: {} {} at s = {:.17g}, eps = {:.17g})", name, what, s, eps);
      }
    };
    for (int k = 0; k < 1000; ++k) {
      const double s = s_dist(rng);
      const double t = s_dist(rng);
      const double eps = std::exp(log_eps(rng));
      const double eps2 = eps * stretch(rng);
      const double env = pot.moreau(eps, s);
      const double hat = pot.beta_hat(s);
      if (!(env >= -1e-14) || !(env <= hat + 1e-12 * std::max(1.0, std::abs(hat)))) {
        flag("envelope bounds", s, eps);
      }
      // Larger eps gives a smaller envelope.
      if (pot.moreau(eps2, s) > env + 1e-12 * std::max(1.0, std::abs(env))) {
        flag("envelope monotonicity", s, eps);
      }
      const double ys = pot.yosida(eps, s);
      const double bmin = pot.beta_min(s);
      if (std::isfinite(bmin) && std::abs(ys) > std::abs(bmin) * (1.0 + 1e-12) + 1e-12) {
        flag("|beta_eps| <= |beta_min|", s, eps);
      }
      const double yt = pot.yosida(eps, t);
      if (std::abs(ys - yt) > std::abs(s - t) / eps * (1.0 + 1e-10) + 1e-12) {
        flag("1/eps-Lipschitz", s, eps);
      }
      const auto rs = pot.resolve(eps, s);
      const auto rt = pot.resolve(eps, t);
      if (std::abs(rs.x - rt.x) > std::abs(s - t) * (1.0 + 1e-12) + 1e-14) {
        flag("nonexpansive resolvent", s, eps);
      }
      // Residual with the selected element of beta(J(s)), which must lie in the graph.
      // The log kind keeps its slope variable y, since atanh near +-1 amplifies the
      // rounding of x; membership is then tanh(y/2) == x.
      double selected = rs.slope;
      switch (pot.kind()) {
        case PotentialKind::Regular:
        case PotentialKind::Custom:
          selected = pot.beta_min(rs.x);
          break;
        case PotentialKind::Logarithmic:
          if (std::abs(std::tanh(0.5 * selected) - rs.x) > 2e-16) flag("slope off the graph", s, eps);
          break;
        case PotentialKind::DoubleObstacle: {
          const bool interior = std::abs(rs.x) < 1.0;
          if ((interior && selected != 0.0) || (rs.x == 1.0 && selected < 0.0) ||
              (rs.x == -1.0 && selected > 0.0)) {
            flag("multiplier outside the graph", s, eps);
          }
          break;
        }
      }
      const double residual = std::abs(rs.x + eps * selected - s);
      worst_residual = std::max(worst_residual, residual);
      if (residual > 1e-10) flag("resolvent residual", s, eps);
    }
  }
  const double elapsed = seconds_since(start);
  const bool ok = violations == 0 && elapsed < 5.0;
  return {ok, fmt::format("4 kinds x 1000 samples, violations {}{}, worst resolvent residual "
                          "{:.2e}, {:.3f} s",
                          violations, first_violation, worst_residual, elapsed)};
}

// ---------------------------------------------------------------------------

DiscreteSystem linear_decoupled(int n = 8) {
  auto a = interval(BasisKind::IntervalDirichlet, n, 8 * n);
  auto b = interval(BasisKind::IntervalNeumann, n, 8 * n);
  ProblemData d;
  d.theta0 = field({sine(1.0, 1), sine(0.5, 2), sine(0.25, 3), sine(0.125, 4)});
  d.phi0 = field({constant(0.3), cosine(1.0, 1), cosine(0.5, 2), cosine(0.25, 3)});
  return assemble(d, a, b, 0.25, 0.25, 1e-2, Potential::zero());
}

Outcome exact_solution_oracle() {
  const DiscreteSystem sys = linear_decoupled();
  const auto exact = linear_exact_solution(sys);
  if (!exact) return {false, "no exact solution available"};
  SchemeConfig cfg;
  cfg.dt = 1e-4;
  IntegrateOptions opts;
  opts.final_time = 0.1;
  opts.keep_trajectory = false;
  const RunOutput run = integrate(sys, cfg, opts);
  const State ref = (*exact)(0.1);
  double worst = 0.0;
  for (int j = 0; j < 4; ++j) {
    worst = std::max(worst, std::abs(run.final_state.theta[j] - ref.theta[j]) / std::abs(ref.theta[j]));
    if (ref.phi[j] != 0.0) {
      worst = std::max(worst, std::abs(run.final_state.phi[j] - ref.phi[j]) / std::abs(ref.phi[j]));
    }
  }
  const StudyReport study = convergence_study(
      StudyAxis::Dt, {1e-4, 5e-5, 2.5e-5},
      [&](double dt) {
        SchemeConfig c;
        c.dt = dt;
        return StudyCase{sys, c};
      },
      0.1, ReferencePolicy::Analytic, exact);
  double min_order = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + 1 < study.order.size(); ++i) min_order = std::min(min_order, study.order[i]);
  const bool ok = !run.failed && worst <= 1e-3 && min_order >= 0.9;
  return {ok, fmt::format("max relative modal error {:.3e} (<= 1e-3), temporal order {:.4f} (>= 0.9)",
                          worst, min_order)};
}

// ---------------------------------------------------------------------------

RunOutput run_smoke(double eps, double dt, double final_time = 1.0) {
  SchemeConfig cfg;
  cfg.dt = dt;
  IntegrateOptions opts;
  opts.final_time = final_time;
  opts.keep_trajectory = false;
  return integrate(smoke(eps), cfg, opts);
}

Outcome energy_ledger() {
  const RunOutput coarse = run_smoke(1e-2, 1e-3);
  const RunOutput fine = run_smoke(1e-2, 5e-4);
  const double r1 = max_energy_residual(coarse);
  const double r2 = max_energy_residual(fine);
  const double ratio = r1 / r2;
  bool nonneg = true;
  for (const auto* run : {&coarse, &fine}) {
    for (const auto& row : run->series) {
      nonneg = nonneg && row.theta_energy >= 0.0 && row.dissipation_theta >= 0.0 &&
               row.dissipation_phi >= 0.0 && row.phi_energy >= 0.0 && row.potential_energy >= 0.0;
    }
  }
  const bool ok = !coarse.failed && !fine.failed && std::abs(ratio - 2.0) <= 0.3 && nonneg;
  return {ok, fmt::format("max residual {:.4e} (dt=1e-3) / {:.4e} (dt=5e-4) = {:.4f}; LHS terms "
                          "nonnegative: {}",
                          r1, r2, ratio, nonneg ? "yes" : "no")};
}

// ---------------------------------------------------------------------------

Outcome uniform_in_eps() {
  SchemeConfig cfg;
  cfg.dt = 1e-3;
  const auto rep = eps_uniformity_check(smoke(1e-2), cfg, 1.0, {1e-1, 1e-2, 1e-3, 1e-4}, 0.1);
  std::string cauchy;
  for (const auto& r : rep.rows) cauchy += fmt::format(" {:.3e}", r.cauchy_half);
  double worst_spread = 0.0;
  for (const auto& c : rep.checks) {
    if (c.name.rfind("sup_spread", 0) == 0) {
      worst_spread = std::max(worst_spread, std::stod(c.detail.substr(c.detail.find('=') + 1)));
    }
  }
  return {all_passed(rep.checks),
          fmt::format("worst ledger-supremum spread {:.3e} (< 0.1); |phi_eps - phi_eps/2|:{}",
                      worst_spread, cauchy)};
}

// ---------------------------------------------------------------------------

Outcome continuous_dependence() {
  const auto start = Clock::now();
  const DiscreteSystem sys = smoke(1e-2);
  SchemeConfig cfg;
  cfg.dt = 1e-3;
  const ProblemData base = smoke_data();
  const auto perturb = [&](double delta) {
    ProblemData d = base;
    d.theta0 = field({constant(0.1), cosine(0.3 + delta * std::numbers::sqrt2, 1)});
    return d;
  };
  const auto rep = contdep_scan(sys, cfg, 1.0, base, perturb, {1e-1, 1e-2, 1e-3, 1e-4}, 0.2);
  const double elapsed = seconds_since(start);
  std::string ratios;
  for (const auto& r : rep.rows) ratios += fmt::format(" {:.4f}", r.ratio);
  return {all_passed(rep.checks) && elapsed < 30.0,
          fmt::format("ratios{}; spread {:.3e} (< 0.2); {:.2f} s", ratios, rep.ratio_spread,
                      elapsed)};
}

// ---------------------------------------------------------------------------

Outcome omega_limit() {
  const int n = 16;
  ProblemData d;
  d.theta0 = field({constant(0.1), cosine(0.3, 1)});
  d.phi0 = field({constant(0.6), cosine(0.2, 1)});
  d.coupling = Coupling::constant(0.5);
  const Potential pot = Potential::regular(1.0);
  const double eps = 1e-2;
  const auto coercive = coercivity_probe(pot, {eps}, 4.0);

  SchemeConfig cfg;
  cfg.dt = 1e-2;
  IntegrateOptions opts;
  opts.final_time = 200.0;
  opts.keep_trajectory = false;
  opts.snapshot_stride = 1000;

  std::string detail = fmt::format("coercive alpha {:.3g}; ", coercive.alpha);
  bool ok = coercive.ok;
  for (BasisKind a_kind : {BasisKind::IntervalNeumann, BasisKind::IntervalDirichlet}) {
    d.theta0 = a_kind == BasisKind::IntervalNeumann ? field({constant(0.1), cosine(0.3, 1)})
                                                    : field({sine(0.3, 1)});
    const auto sys = assemble(d, interval(a_kind, n, 8 * n),
                              interval(BasisKind::IntervalNeumann, n, 8 * n), 0.5, 0.5, eps, pot);
    const RunOutput run = integrate(sys, cfg, opts);
    OmegaThresholds th;
    th.residual_tol = 1e-5;
    const auto rep = omega_limit_probe(sys, run, th);
    ok = ok && all_passed(rep.checks);
    detail += fmt::format("{}: tail |A^r theta| {:.2e}, tail |dt phi| {:.2e}, residual {:.2e}",
                          to_string(a_kind), rep.tail_sup_ar_theta, rep.tail_sup_dtphi,
                          rep.stationary_residual);
    if (rep.trivial_kernel_a) detail += fmt::format(", final |theta| {:.2e}", rep.final_theta_norm);
    for (const auto& c : rep.checks) {
      if (!c.passed) detail += fmt::format(" [failed {}: {}]", c.name, c.detail);
    }
    detail += "; ";
  }
  return {ok, detail};
}

// ---------------------------------------------------------------------------

Outcome sigma_zero_operator() {
  const auto basis = build_interval_basis(BasisKind::IntervalNeumann, 1.0, 16, 128);
  Eigen::VectorXd eta1 = Eigen::VectorXd::Zero(16);
  eta1[1] = 1.0;
  const double oracle = std::abs(std::sqrt(std::numbers::pi) - 1.0);
  const auto single = sigma_zero_operator_check(basis, eta1, {0.25});
  bool ok = std::abs(single[0].error - oracle) <= 1e-12;

  Eigen::VectorXd v(16);
  for (int j = 0; j < 16; ++j) v[j] = 1.0 / ((1.0 + j) * (1.0 + j));
  const auto ladder = sigma_zero_operator_check(basis, v, {0.2, 0.1, 0.05, 0.01});
  double worst = single[0].mismatch;
  for (std::size_t i = 0; i < ladder.size(); ++i) {
    worst = std::max(worst, ladder[i].mismatch);
    if (i > 0 && !(ladder[i].error < ladder[i - 1].error)) ok = false;
  }
  ok = ok && worst <= 1e-12;
  std::string col;
  for (const auto& r : ladder) col += fmt::format(" {:.4e}", r.error);
  return {ok, fmt::format("eta_1, sigma=0.25: {:.12f} vs |pi^(1/2) - 1| = {:.12f}; closed-form "
                          "mismatch {:.1e}; ladder{}",
                          single[0].error, oracle, worst, col)};
}

// ---------------------------------------------------------------------------

Outcome relaxation_limit() {
  const auto start = Clock::now();
  const int n = 16;
  auto a = interval(BasisKind::IntervalNeumann, n, 8 * n);
  auto b = interval(BasisKind::IntervalNeumann, n, 8 * n);
  ProblemData d;
  d.theta0 = field({constant(0.2), cosine(0.5, 1)});
  d.phi0 = field({constant(0.1), cosine(0.6, 1), cosine(0.2, 3)});
  d.coupling = Coupling::constant(0.5);

  SchemeConfig cfg;
  cfg.scheme = Scheme::ImplicitProx;
  cfg.dt = 1e-3;
  cfg.max_inner_iters = 500;
  const std::vector<double> sigmas = {0.5, 0.25, 0.1, 0.05};

  bool ok = true;
  std::string detail;
  for (const auto& [label, pot] : {std::pair{"regular", Potential::regular(1.0)},
                                   std::pair{"double_obstacle", Potential::double_obstacle(1.0)}}) {
    RelaxLimitSetup setup{assemble(d, a, b, 0.5, 0.5, 0.0, pot), sigmas, cfg, 1.0};
    const auto rep = relaxation_limit_study(setup);
    ok = ok && all_passed(rep.checks);
    std::string phi_col, theta_col;
    for (std::size_t i = 0; i < sigmas.size(); ++i) {
      phi_col += fmt::format(" {:.3e}", rep.study.phi[i].l2_h);
      theta_col += fmt::format(" {:.3e}", rep.study.theta[i].l2_h);
    }
    detail += fmt::format("{}: phi L2(Q){}, theta L2(Q){}", label, phi_col, theta_col);
    if (pot.kind() == PotentialKind::DoubleObstacle) {
      detail += fmt::format(", limit max|phi| {:.17g}, xi at +1 >= {:.3g}, xi at -1 <= {:.3g}",
                            rep.limit.max_abs_phi_node, rep.limit.min_xi_at_upper,
                            rep.limit.max_xi_at_lower);
      if (!rep.limit.upper_contact || !rep.limit.lower_contact) {
        ok = false;
        detail += " [obstacle never active]";
      }
    }
    for (const auto& c : rep.checks) {
      if (!c.passed) detail += fmt::format(" [failed {}: {}]", c.name, c.detail);
    }
    detail += "; ";
  }
  const double elapsed = seconds_since(start);
  ok = ok && elapsed < 120.0;
  return {ok, detail + fmt::format("{:.2f} s", elapsed)};
}

// ---------------------------------------------------------------------------

namespace fs = std::filesystem;

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Every shipped config runs twice, the second time from the first run's manifest;
// all emitted files must match byte for byte. Then a time series written to CSV
// is read back and compared with the in-memory run.
Outcome determinism_round_trip() {
  const auto start = Clock::now();
  const fs::path configs = fs::path(FRACPF_SOURCE_DIR) / "configs";
  const fs::path root = fs::temp_directory_path() / fmt::format("fracpf-acceptance-{}", ::getpid());
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(configs)) {
    if (entry.path().extension() == ".json") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());

  bool ok = !files.empty();
  int compared = 0;
  std::string problems;
  auto note = [&](const std::string& what) {
    ok = false;
    if (problems.size() < 400) problems += what + "; ";
  };
  for (const auto& path : files) {
    const std::string stem = path.stem().string();
    const std::string sub = stem.substr(0, stem.find('_'));
    const RunConfig first = parse_config(path.string());
    DispatchOptions opts;
    opts.out_dir = root / (stem + "-first");
    const DispatchResult r1 = dispatch(sub, &first, opts);
    const RunConfig second = parse_config((opts.out_dir / "manifest.json").string());
    opts.out_dir = root / (stem + "-second");
    const DispatchResult r2 = dispatch(sub, &second, opts);
    if (r1.exit_code != 0 || r2.exit_code != 0) {
      note(fmt::format("{} exit {}/{}", stem, r1.exit_code, r2.exit_code));
      continue;
    }
    if (r1.manifest.config_hash != r2.manifest.config_hash) note(stem + " config hash changed");
    if (r1.manifest.files.size() != r2.manifest.files.size()) note(stem + " file sets differ");
    for (const auto& f : r1.manifest.files) {
      const std::string a = slurp(root / (stem + "-first") / f.name);
      const std::string b = slurp(root / (stem + "-second") / f.name);
      if (a.empty() || a != b) note(fmt::format("{}/{} differs", stem, f.name));
      ++compared;
    }
  }

  // Re-ingestion against the in-memory series.
  double worst = 0.0;
  {
    const RunConfig cfg = parse_config((configs / "simulate_smoke.json").string());
    const DiscreteSystem sys = build_system(cfg);
    IntegrateOptions io;
    io.final_time = cfg.run.final_time;
    io.snapshot_stride = cfg.run.snapshot_stride;
    io.keep_trajectory = false;
    const RunOutput run = integrate(sys, cfg.run.scheme, io);
    const fs::path csv = root / "simulate_smoke-first" / "timeseries.csv";
    const auto rows = read_timeseries_csv(csv);
    if (rows.size() != run.series.size()) note("re-ingested row count differs");
    for (std::size_t k = 0; k < std::min(rows.size(), run.series.size()); ++k) {
      const auto& s = run.series[k];
      const auto& r = rows[k];
      const double pairs[][2] = {{r.t, s.t},
                                 {r.norm_theta, s.norm_theta},
                                 {r.graphnorm_theta, s.graphnorm_theta},
                                 {r.norm_phi, s.norm_phi},
                                 {r.graphnorm_phi, s.graphnorm_phi},
                                 {r.dtphi_norm, s.dtphi_norm},
                                 {r.energy_lhs, s.energy_lhs},
                                 {r.energy_rhs, s.energy_rhs},
                                 {r.energy_residual, s.energy_residual}};
      for (const auto& p : pairs) worst = std::max(worst, std::abs(p[0] - p[1]) / std::max(1.0, std::abs(p[1])));
    }
    if (!(worst <= 1e-12)) note(fmt::format("re-ingestion error {:.3e}", worst));
  }
  std::error_code ignored;
  fs::remove_all(root, ignored);
  const double elapsed = seconds_since(start);
  return {ok, fmt::format("{} configs, {} files byte-identical on re-run from manifest, re-ingestion "
                          "max rel error {:.2e}; {}{:.2f} s",
                          files.size(), compared, worst, problems, elapsed)};
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria = {
      {1, "spectral foundation", spectral_foundation},
      {2, "convex-analysis suite", convex_analysis_suite},
      {3, "exact-solution oracle", exact_solution_oracle},
      {4, "energy ledger", energy_ledger},
      {5, "uniform-in-eps bounds", uniform_in_eps},
      {6, "continuous dependence", continuous_dependence},
      {7, "omega-limit", omega_limit},
      {8, "sigma-zero operator check", sigma_zero_operator},
      {9, "relaxation limit", relaxation_limit},
      {10, "determinism and round trip", determinism_round_trip},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    Outcome out;
    try {
      out = c.run();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    if (!out.pass) ++failures;
    std::printf("[%s] criterion %d %s: %s\n", out.pass ? "PASS" : "FAIL", c.id, c.name,
                out.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures,
              criteria.size());
  return failures == 0 ? 0 : 1;
}
