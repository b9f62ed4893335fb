#include "fracpf/analysis.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <random>
#include <thread>

#include <fmt/format.h>

#include "fracpf/errors.hpp"

namespace fracpf {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double weighted_norm(const Eigen::VectorXd& v, const Eigen::VectorXd* half) {
  if (!half) return v.norm();
  const Eigen::Index n = std::min(v.size(), half->size());
  const double extra = half->head(n).cwiseProduct(v.head(n)).squaredNorm();
  return std::sqrt(v.squaredNorm() + extra);
}

Eigen::VectorXd padded(const Eigen::VectorXd& v, Eigen::Index size) {
  if (v.size() >= size) return v;
  Eigen::VectorXd out = Eigen::VectorXd::Zero(size);
  out.head(v.size()) = v;
  return out;
}

int time_stride(double coarse_dt, double fine_dt) {
  const double ratio = coarse_dt / fine_dt;
  const long long k = std::llround(ratio);
  if (k < 1 || std::abs(ratio - static_cast<double>(k)) > 1e-9 * ratio) {
    throw ValidationError(fmt::format(
        "time levels do not nest: dt = {} is not an integer multiple of dt = {}", coarse_dt,
        fine_dt));
  }
  return static_cast<int>(k);
}

RunOutput run_or_throw(const DiscreteSystem& system, const SchemeConfig& scheme, double final_time,
                       const char* what) {
  IntegrateOptions opts;
  opts.final_time = final_time;
  opts.snapshot_stride = std::numeric_limits<int>::max();
  opts.keep_trajectory = true;
  RunOutput run = integrate(system, scheme, opts);
  if (run.failed) throw SolverError(fmt::format("{}: {}", what, run.failure));
  return run;
}

FieldErrors field_errors(const Series& diff, double dt, const Eigen::VectorXd& half) {
  FieldErrors e;
  e.linf_h = linf_norm(diff);
  e.l2_h = l2_norm(diff, dt);
  e.l2_v = l2_norm(diff, dt, &half);
  return e;
}

bool strictly_decreasing(const std::vector<double>& v) {
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (!(v[i] < v[i - 1])) return false;
  }
  return true;
}

// Nonincreasing, or identically zero.
bool decreasing_or_zero(const std::vector<double>& v) {
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (v[i] == 0.0 && v[i - 1] == 0.0) continue;
    if (!(v[i] < v[i - 1])) return false;
  }
  return true;
}

std::string join(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += fmt::format("{}{:.6g}", i ? ", " : "", v[i]);
  return out;
}

double spread(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  if (*hi == 0.0) return 0.0;
  if (!(*lo > 0.0)) return std::numeric_limits<double>::infinity();
  return *hi / *lo - 1.0;
}

}  // namespace

bool all_passed(const std::vector<Check>& checks) {
  return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.passed; });
}

void parallel_for(int count, int jobs, const std::function<void(int)>& fn) {
  jobs = std::max(1, std::min(jobs, count));
  if (jobs == 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> workers;
  workers.reserve(jobs);
  for (int w = 0; w < jobs; ++w) {
    workers.emplace_back([&] {
      for (int i = next++; i < count; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : workers) t.join();
  if (error) std::rethrow_exception(error);
}

Series running_integral(const Series& v, double dt) {
  Series out;
  out.reserve(v.size());
  if (v.empty()) return out;
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(v.front().size());
  for (const auto& x : v) {
    out.push_back(acc);
    acc += dt * x;
  }
  return out;
}

double linf_norm(const Series& v, const Eigen::VectorXd* half) {
  double m = 0.0;
  for (const auto& x : v) m = std::max(m, weighted_norm(x, half));
  return m;
}

double l2_norm(const Series& v, double dt, const Eigen::VectorXd* half) {
  double s = 0.0;
  for (std::size_t k = 0; k + 1 < v.size(); ++k) {
    const double n = weighted_norm(v[k], half);
    s += dt * n * n;
  }
  return std::sqrt(s);
}

Series theta_series(const RunOutput& run) {
  Series out;
  out.reserve(run.trajectory.size());
  for (const auto& s : run.trajectory) out.push_back(s.theta);
  return out;
}

Series phi_series(const RunOutput& run) {
  Series out;
  out.reserve(run.trajectory.size());
  for (const auto& s : run.trajectory) out.push_back(s.phi);
  return out;
}

Series difference(const Series& a, const Series& b) {
  if (a.size() != b.size()) {
    throw ValidationError(fmt::format("series lengths differ ({} vs {})", a.size(), b.size()));
  }
  Series out;
  out.reserve(a.size());
  for (std::size_t k = 0; k < a.size(); ++k) {
    const Eigen::Index n = std::max(a[k].size(), b[k].size());
    out.push_back(padded(a[k], n) - padded(b[k], n));
  }
  return out;
}

Series subsample(const Series& v, int stride) {
  Series out;
  for (std::size_t k = 0; k < v.size(); k += static_cast<std::size_t>(stride)) out.push_back(v[k]);
  return out;
}

std::string to_string(StudyAxis axis) {
  switch (axis) {
    case StudyAxis::NModes: return "n_modes";
    case StudyAxis::Eps: return "eps";
    case StudyAxis::Dt: return "dt";
    case StudyAxis::Sigma: return "sigma";
  }
  return "unknown";
}

StudyAxis study_axis_from_string(const std::string& name) {
  if (name == "n_modes") return StudyAxis::NModes;
  if (name == "eps") return StudyAxis::Eps;
  if (name == "dt") return StudyAxis::Dt;
  if (name == "sigma") return StudyAxis::Sigma;
  throw ValidationError(fmt::format("unknown study axis '{}' (n_modes, eps, dt, sigma)", name));
}

std::string to_string(ReferencePolicy policy) {
  return policy == ReferencePolicy::SelfFinest ? "self_finest" : "analytic";
}

ReferencePolicy reference_policy_from_string(const std::string& name) {
  if (name == "self_finest") return ReferencePolicy::SelfFinest;
  if (name == "analytic") return ReferencePolicy::Analytic;
  throw ValidationError(fmt::format("unknown reference policy '{}'", name));
}

std::optional<AnalyticSolution> linear_exact_solution(const DiscreteSystem& system) {
  if (!system.potential().is_zero() || !system.coupling().is_constant() ||
      system.coupling().value != 0.0 || !system.data().source.is_zero()) {
    return std::nullopt;
  }
  const auto init = project_data(system);
  const Eigen::VectorXd lambda = system.lambda_diag();
  const Eigen::VectorXd m = system.m_diag();
  return AnalyticSolution([init, lambda, m](double t) {
    State s;
    s.t = t;
    s.theta = init.theta.cwiseProduct((-t * lambda).array().exp().matrix());
    s.phi = init.phi.cwiseProduct((-t * m).array().exp().matrix());
    return s;
  });
}

StudyReport convergence_study(StudyAxis axis, const std::vector<double>& values,
                              const CaseFactory& factory, double final_time,
                              ReferencePolicy policy,
                              const std::optional<AnalyticSolution>& analytic, int jobs) {
  if (values.size() < 2) throw ValidationError("convergence study needs at least two levels");
  if (policy == ReferencePolicy::Analytic && !analytic) {
    throw ValidationError("analytic reference requested but no exact solution is available");
  }
  const std::size_t levels = values.size();
  std::vector<std::optional<StudyCase>> cases(levels);
  std::vector<RunOutput> runs(levels);
  parallel_for(static_cast<int>(levels), jobs, [&](int i) {
    cases[i] = factory(values[i]);
    runs[i] = run_or_throw(cases[i]->system, cases[i]->scheme, final_time,
                           fmt::format("{} = {}", to_string(axis), values[i]).c_str());
  });

  StudyReport report;
  report.parameter = to_string(axis);
  report.values = values;
  const std::size_t finest = levels - 1;

  auto halves = [&](std::size_t i, std::size_t ref) {
    const auto& a = cases[i]->system;
    const auto& b = cases[ref]->system;
    if (axis == StudyAxis::NModes && b.n_b() > a.n_b()) {
      return std::pair{b.a_half(), b.b_half()};
    }
    return std::pair{a.a_half(), a.b_half()};
  };

  for (std::size_t i = 0; i < levels; ++i) {
    const double dt = runs[i].dt;
    Series ref_theta, ref_phi;
    if (policy == ReferencePolicy::Analytic) {
      for (const auto& s : runs[i].trajectory) {
        const State exact = (*analytic)(s.t);
        ref_theta.push_back(exact.theta.head(s.theta.size()));
        ref_phi.push_back(exact.phi.head(s.phi.size()));
      }
    } else {
      const int stride = time_stride(dt, runs[finest].dt);
      ref_theta = subsample(theta_series(runs[finest]), stride);
      ref_phi = subsample(phi_series(runs[finest]), stride);
    }
    const auto [ah, bh] = halves(i, policy == ReferencePolicy::Analytic ? i : finest);
    report.theta.push_back(field_errors(difference(theta_series(runs[i]), ref_theta), dt, ah));
    report.phi.push_back(field_errors(difference(phi_series(runs[i]), ref_phi), dt, bh));

    if (i + 1 < levels) {
      const int stride = time_stride(dt, runs[i + 1].dt);
      report.cauchy_phi.push_back(
          linf_norm(difference(phi_series(runs[i]), subsample(phi_series(runs[i + 1]), stride))));
    } else {
      report.cauchy_phi.push_back(kNaN);
    }
  }
  for (std::size_t i = 0; i < levels; ++i) {
    if (i + 1 < levels && report.phi[i].linf_h > 0.0 && report.phi[i + 1].linf_h > 0.0) {
      report.order.push_back(std::log(report.phi[i].linf_h / report.phi[i + 1].linf_h) /
                             std::log(values[i] / values[i + 1]));
    } else {
      report.order.push_back(kNaN);
    }
  }

  const std::size_t compared = policy == ReferencePolicy::SelfFinest ? finest : levels;
  std::vector<double> phi_err, theta_err;
  for (std::size_t i = 0; i < compared; ++i) {
    phi_err.push_back(report.phi[i].linf_h);
    theta_err.push_back(report.theta[i].linf_h);
  }
  report.checks.push_back({"phi_error_decreasing", decreasing_or_zero(phi_err), join(phi_err)});
  report.checks.push_back(
      {"theta_error_decreasing", decreasing_or_zero(theta_err), join(theta_err)});
  if (axis == StudyAxis::Dt) {
    double min_order = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i + 1 < compared; ++i) {
      if (std::isfinite(report.order[i])) min_order = std::min(min_order, report.order[i]);
    }
    report.checks.push_back(
        {"temporal_order", min_order >= 0.9, fmt::format("min order {:.4f} (>= 0.9)", min_order)});
  }
  if (axis == StudyAxis::Eps) {
    std::vector<double> cauchy(report.cauchy_phi.begin(), report.cauchy_phi.end() - 1);
    report.checks.push_back({"phi_cauchy_decreasing", strictly_decreasing(cauchy), join(cauchy)});
  }
  return report;
}

ContdepResult contdep_check(const DiscreteSystem& system, const SchemeConfig& scheme,
                            double final_time, const ProblemData& data1, const ProblemData& data2) {
  const DiscreteSystem sys1 = system.with_data(data1);
  const DiscreteSystem sys2 = system.with_data(data2);
  const RunOutput run1 = run_or_throw(sys1, scheme, final_time, "contdep run 1");
  const RunOutput run2 = run_or_throw(sys2, scheme, final_time, "contdep run 2");
  const double dt = scheme.dt;

  ContdepResult res;
  auto& t = res.terms;
  const Series dtheta = difference(theta_series(run1), theta_series(run2));
  const Series dphi = difference(phi_series(run1), phi_series(run2));
  t.theta_l2_h = l2_norm(dtheta, dt);
  t.theta_int_linf_v = linf_norm(running_integral(dtheta, dt), &system.a_half());
  t.phi_linf_h = linf_norm(dphi);
  t.phi_l2_v = l2_norm(dphi, dt, &system.b_half());

  const auto& ba = system.basis_a();
  const auto& bb = system.basis_b();
  if (!(data1.source.is_zero() && data2.source.is_zero())) {
    Series df;
    for (const auto& s : run1.trajectory) {
      df.push_back(data1.source.sample(ba, s.t) - data2.source.sample(ba, s.t));
    }
    const Series integral = running_integral(df, dt);
    double acc = 0.0;
    for (std::size_t k = 0; k + 1 < integral.size(); ++k) {
      acc += dt * ba.grid_inner(integral[k], integral[k]);
    }
    t.source_int_l2_h = std::sqrt(acc);
  }
  const Eigen::VectorXd d_theta0 = data1.theta0.sample(ba, 0.0) - data2.theta0.sample(ba, 0.0);
  const Eigen::VectorXd d_phi0 = data1.phi0.sample(bb, 0.0) - data2.phi0.sample(bb, 0.0);
  t.theta0_h = std::sqrt(ba.grid_inner(d_theta0, d_theta0));
  t.phi0_h = std::sqrt(bb.grid_inner(d_phi0, d_phi0));

  res.lhs = t.theta_l2_h + t.theta_int_linf_v + t.phi_linf_h + t.phi_l2_v;
  res.rhs = t.source_int_l2_h + t.theta0_h + t.phi0_h;
  res.degenerate = !(res.rhs > 0.0);
  res.ratio = res.degenerate ? kNaN : res.lhs / res.rhs;
  return res;
}

ContdepReport contdep_scan(const DiscreteSystem& system, const SchemeConfig& scheme,
                           double final_time, const ProblemData& data1,
                           const std::function<ProblemData(double)>& perturb,
                           const std::vector<double>& scales, double spread_tol, int jobs) {
  ContdepReport report;
  report.rows.resize(scales.size());
  parallel_for(static_cast<int>(scales.size()), jobs, [&](int i) {
    report.rows[i] = contdep_check(system, scheme, final_time, data1, perturb(scales[i]));
    report.rows[i].scale = scales[i];
  });
  std::vector<double> ratios;
  bool finite = true;
  for (const auto& row : report.rows) {
    if (row.degenerate) continue;
    finite = finite && std::isfinite(row.ratio);
    ratios.push_back(row.ratio);
  }
  report.ratio_spread = spread(ratios);
  report.checks.push_back({"ratios_finite", finite && !ratios.empty(), join(ratios)});
  report.checks.push_back({"ratio_spread", report.ratio_spread < spread_tol,
                           fmt::format("max/min - 1 = {:.4g} (< {})", report.ratio_spread,
                                       spread_tol)});
  return report;
}

OmegaLimitReport omega_limit_probe(const DiscreteSystem& system, const RunOutput& run,
                                   const OmegaThresholds& th) {
  if (run.series.empty()) throw ValidationError("omega-limit probe: empty run");
  OmegaLimitReport rep;
  const double t_end = run.series.back().t;
  rep.tail_start = t_end * (1.0 - th.tail_fraction);
  std::vector<double> ar, dtphi;
  for (const auto& row : run.series) {
    if (row.t + 1e-12 * t_end < rep.tail_start) continue;
    ar.push_back(row.norm_ar_theta);
    dtphi.push_back(row.dtphi_norm);
  }
  rep.tail_sup_ar_theta = ar.empty() ? 0.0 : *std::max_element(ar.begin(), ar.end());
  rep.tail_sup_dtphi = dtphi.empty() ? 0.0 : *std::max_element(dtphi.begin(), dtphi.end());
  auto monotone = [&](const std::vector<double>& v) {
    for (std::size_t i = 1; i < v.size(); ++i) {
      if (v[i] > v[i - 1] * (1.0 + 1e-9) + th.noise_floor) return false;
    }
    return true;
  };
  rep.tail_monotone = monotone(ar) && monotone(dtphi);

  const State& fin = run.final_state;
  Eigen::VectorXd residual;
  if (system.eps() == 0.0 && fin.xi_nodes.size() == system.basis_b().n_grid()) {
    const Nonlinearity smooth = system.eval_smooth_part(fin.theta, fin.phi);
    residual = system.m_diag().cwiseProduct(fin.phi) + smooth.total() +
               system.basis_b().analyze(fin.xi_nodes);
  } else {
    residual = system.m_diag().cwiseProduct(fin.phi) +
               system.eval_nonlinearity(fin.theta, fin.phi).total();
  }
  rep.stationary_residual = residual.norm();
  rep.final_ar_theta = system.a_half().cwiseProduct(fin.theta).norm();
  rep.final_theta_norm = fin.theta.norm();
  rep.trivial_kernel_a = (system.basis_a().eigenvalues().array() > 0.0).all();

  rep.checks.push_back({"run_completed", !run.failed, run.failure});
  rep.checks.push_back({"tail_ar_theta", rep.tail_sup_ar_theta <= th.tail_tol,
                        fmt::format("{:.3e} <= {:.1e}", rep.tail_sup_ar_theta, th.tail_tol)});
  rep.checks.push_back({"tail_dtphi", rep.tail_sup_dtphi <= th.tail_tol,
                        fmt::format("{:.3e} <= {:.1e}", rep.tail_sup_dtphi, th.tail_tol)});
  rep.checks.push_back({"tail_monotone", rep.tail_monotone, ""});
  rep.checks.push_back({"stationary_residual", rep.stationary_residual <= th.residual_tol,
                        fmt::format("{:.3e} <= {:.1e}", rep.stationary_residual,
                                    th.residual_tol)});
  if (rep.trivial_kernel_a) {
    rep.checks.push_back({"theta_vanishes", rep.final_theta_norm <= th.theta_tol,
                          fmt::format("{:.3e} <= {:.1e}", rep.final_theta_norm, th.theta_tol)});
  }
  return rep;
}

RunOutput solve_relaxation_limit(const DiscreteSystem& system, const SchemeConfig& scheme,
                                 double final_time) {
  if (!system.coupling().is_constant()) {
    throw ValidationError("relaxation limit requires a constant coupling");
  }
  if (!system.potential().pi_is_linear()) {
    throw ValidationError("relaxation limit requires pi(s) = -gamma s");
  }
  const DiscreteSystem limit =
      system.with_parameters(system.relaxation_limit() ? 1.0 : system.sigma(), 0.0)
          .as_relaxation_limit();
  SchemeConfig cfg = scheme;
  cfg.scheme = Scheme::ImplicitProx;
  IntegrateOptions opts;
  opts.final_time = final_time;
  opts.keep_trajectory = true;
  return integrate(limit, cfg, opts);
}

RelaxLimitReport relaxation_limit_study(const RelaxLimitSetup& setup, int jobs) {
  if (setup.sigmas.empty()) throw ValidationError("relaxation study needs a sigma list");
  for (std::size_t i = 0; i < setup.sigmas.size(); ++i) {
    if (!(setup.sigmas[i] > 0.0) || (i > 0 && !(setup.sigmas[i] < setup.sigmas[i - 1]))) {
      throw ValidationError("relaxation study: sigma list must be positive and decreasing");
    }
  }
  SchemeConfig cfg = setup.scheme;
  cfg.scheme = Scheme::ImplicitProx;

  RelaxLimitReport rep;
  const std::size_t count = setup.sigmas.size();
  std::vector<RunOutput> runs(count + 1);
  std::vector<std::optional<DiscreteSystem>> systems(count);
  parallel_for(static_cast<int>(count + 1), jobs, [&](int i) {
    if (i == static_cast<int>(count)) {
      runs[i] = solve_relaxation_limit(setup.system, cfg, setup.final_time);
      return;
    }
    systems[i] = setup.system.with_parameters(setup.sigmas[i], 0.0);
    IntegrateOptions opts;
    opts.final_time = setup.final_time;
    opts.keep_trajectory = true;
    runs[i] = integrate(*systems[i], cfg, opts);
  });
  rep.limit = runs[count];
  for (std::size_t i = 0; i <= count; ++i) {
    if (runs[i].failed) {
      throw SolverError(fmt::format("relaxation study, {}: {}",
                                    i == count ? std::string("limit run")
                                               : fmt::format("sigma = {}", setup.sigmas[i]),
                                    runs[i].failure));
    }
  }

  auto& study = rep.study;
  study.parameter = "sigma";
  study.values = setup.sigmas;
  const Series lim_theta = theta_series(rep.limit);
  const Series lim_phi = phi_series(rep.limit);
  const double dt = cfg.dt;
  std::vector<double> phi_l2, theta_l2;
  for (std::size_t i = 0; i < count; ++i) {
    const auto& sys = *systems[i];
    study.theta.push_back(field_errors(difference(theta_series(runs[i]), lim_theta), dt,
                                       sys.a_half()));
    study.phi.push_back(field_errors(difference(phi_series(runs[i]), lim_phi), dt, sys.b_half()));
    phi_l2.push_back(study.phi.back().l2_h);
    theta_l2.push_back(study.theta.back().l2_h);
    study.cauchy_phi.push_back(
        i + 1 < count ? linf_norm(difference(phi_series(runs[i]), phi_series(runs[i + 1])))
                      : kNaN);
    study.order.push_back(kNaN);
  }
  rep.checks.push_back({"phi_l2q_decreasing", strictly_decreasing(phi_l2), join(phi_l2)});
  rep.checks.push_back({"theta_l2q_decreasing", strictly_decreasing(theta_l2), join(theta_l2)});

  if (setup.system.potential().kind() == PotentialKind::DoubleObstacle) {
    for (std::size_t i = 0; i <= count; ++i) {
      const auto& run = runs[i];
      const std::string label = i == count ? "limit" : fmt::format("sigma={}", setup.sigmas[i]);
      rep.checks.push_back({"obstacle_bound[" + label + "]", run.max_abs_phi_node <= 1.0,
                            fmt::format("max |phi| = {:.17g}", run.max_abs_phi_node)});
      rep.checks.push_back({"xi_sign[" + label + "]",
                            run.min_xi_at_upper >= 0.0 && run.max_xi_at_lower <= 0.0,
                            fmt::format("min xi at +1 = {:.6g} ({}), max xi at -1 = {:.6g} ({})",
                                        run.min_xi_at_upper, run.upper_contact ? "active" : "none",
                                        run.max_xi_at_lower,
                                        run.lower_contact ? "active" : "none")});
    }
  }
  study.checks = rep.checks;
  return rep;
}

std::vector<SigmaZeroRow> sigma_zero_operator_check(const SpectralBasis& basis,
                                                    const Eigen::VectorXd& v,
                                                    const std::vector<double>& sigmas) {
  if (v.size() != basis.n_modes()) {
    throw ValidationError(fmt::format("sigma-zero check: vector has {} entries, basis has {} modes",
                                      v.size(), basis.n_modes()));
  }
  const Eigen::VectorXd off_kernel = v - kernel_projection(basis, v);
  const auto& mu = basis.eigenvalues();
  std::vector<SigmaZeroRow> rows;
  for (double sigma : sigmas) {
    SigmaZeroRow row;
    row.sigma = sigma;
    row.error = (apply_fractional(basis, sigma, v) - off_kernel).norm();
    double sum = 0.0;
    for (Eigen::Index j = 0; j < mu.size(); ++j) {
      if (mu[j] > 0.0) {
        const double d = std::pow(mu[j], sigma) - 1.0;
        sum += d * d * v[j] * v[j];
      }
    }
    row.closed_form_sq = sum;
    row.mismatch = std::abs(row.error * row.error - sum);
    rows.push_back(row);
  }
  return rows;
}

HpqoReport hpqo_probe(const SpectralBasis& basis_b, double sigma, const Potential& potential,
                      double eps, const std::vector<Eigen::VectorXd>& samples) {
  const Eigen::VectorXd mult = power_multipliers(basis_b.eigenvalues(), sigma);
  HpqoReport rep;
  rep.min_value = std::numeric_limits<double>::infinity();
  for (const auto& c : samples) {
    if (c.size() != basis_b.n_modes()) throw ValidationError("hpqo probe: sample size mismatch");
    Eigen::VectorXd grid = basis_b.synthesize(c);
    for (Eigen::Index i = 0; i < grid.size(); ++i) grid[i] = potential.beta_level(eps, grid[i]);
    const Eigen::VectorXd bv = mult.cwiseProduct(c);
    const Eigen::VectorXd bb = mult.cwiseProduct(basis_b.analyze(grid));
    const double value = bb.dot(bv);
    rep.values.push_back(value);
    rep.min_value = std::min(rep.min_value, value);
    if (value < -1e-12 * bb.norm() * bv.norm()) ++rep.violations;
  }
  if (samples.empty()) rep.min_value = 0.0;
  return rep;
}

std::vector<Eigen::VectorXd> random_smooth_samples(int n_modes, int count, double amplitude,
                                                   std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<Eigen::VectorXd> out;
  for (int k = 0; k < count; ++k) {
    Eigen::VectorXd c(n_modes);
    for (int j = 0; j < n_modes; ++j) c[j] = amplitude * normal(rng) / ((1.0 + j) * (1.0 + j));
    out.push_back(c);
  }
  return out;
}

EpsUniformityReport eps_uniformity_check(const DiscreteSystem& system, const SchemeConfig& scheme,
                                         double final_time, const std::vector<double>& eps_list,
                                         double spread_tol, int jobs) {
  const std::size_t count = eps_list.size();
  std::vector<RunOutput> runs(2 * count);
  parallel_for(static_cast<int>(2 * count), jobs, [&](int i) {
    const double eps = i % 2 == 0 ? eps_list[i / 2] : 0.5 * eps_list[i / 2];
    runs[i] = run_or_throw(system.with_parameters(system.sigma(), eps), scheme, final_time,
                           fmt::format("eps = {}", eps).c_str());
  });

  EpsUniformityReport rep;
  for (std::size_t k = 0; k < count; ++k) {
    const auto& run = runs[2 * k];
    EpsUniformityRow row;
    row.eps = eps_list[k];
    for (const auto& s : run.series) {
      row.sup_theta_energy = std::max(row.sup_theta_energy, s.theta_energy);
      row.sup_dissipation_theta = std::max(row.sup_dissipation_theta, s.dissipation_theta);
      row.sup_dissipation_phi = std::max(row.sup_dissipation_phi, s.dissipation_phi);
      row.sup_phi_energy = std::max(row.sup_phi_energy, s.phi_energy);
      row.sup_potential_energy = std::max(row.sup_potential_energy, s.potential_energy);
      row.sup_lhs = std::max(row.sup_lhs, s.energy_lhs);
    }
    row.cauchy_half = linf_norm(difference(phi_series(run), phi_series(runs[2 * k + 1])));
    rep.rows.push_back(row);
  }

  auto column = [&](double EpsUniformityRow::*field) {
    std::vector<double> v;
    for (const auto& r : rep.rows) v.push_back(r.*field);
    return v;
  };
  const std::pair<const char*, double EpsUniformityRow::*> terms[] = {
      {"theta_energy", &EpsUniformityRow::sup_theta_energy},
      {"dissipation_theta", &EpsUniformityRow::sup_dissipation_theta},
      {"dissipation_phi", &EpsUniformityRow::sup_dissipation_phi},
      {"phi_energy", &EpsUniformityRow::sup_phi_energy},
      {"potential_energy", &EpsUniformityRow::sup_potential_energy},
      {"lhs", &EpsUniformityRow::sup_lhs},
  };
  for (const auto& [name, field] : terms) {
    const double s = spread(column(field));
    if (field == &EpsUniformityRow::sup_lhs) rep.sup_spread = s;
    rep.checks.push_back({fmt::format("sup_spread[{}]", name), s < spread_tol,
                          fmt::format("max/min - 1 = {:.4g} (< {})", s, spread_tol)});
  }
  const auto cauchy = column(&EpsUniformityRow::cauchy_half);
  rep.checks.push_back({"phi_cauchy_decreasing", strictly_decreasing(cauchy), join(cauchy)});
  return rep;
}

}  // namespace fracpf
