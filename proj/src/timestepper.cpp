#include "fracpf/timestepper.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "fracpf/errors.hpp"

namespace fracpf {

namespace {

void guard(const Eigen::VectorXd& v, const char* field, double t) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (!std::isfinite(v[i]) || std::abs(v[i]) > kOverflowGuard) {
      throw SolverError(fmt::format(
          "overflow guard tripped at t = {:.17g}: {}[{}] = {:.6g} (limit {:.0e})", t, field, i,
          v[i], kOverflowGuard));
    }
  }
}

void require_positive_dt(double dt) {
  if (!(dt > 0.0) || !std::isfinite(dt)) {
    throw ValidationError(fmt::format("time step must be positive, got {}", dt));
  }
}

Eigen::VectorXd update_theta(const DiscreteSystem& system, const State& state,
                             const Eigen::VectorXd& phi_next, double dt) {
  Eigen::VectorXd rhs = state.theta - system.couple(state.phi, phi_next - state.phi);
  rhs += dt * system.source(state.t + dt);
  return rhs.cwiseQuotient((Eigen::VectorXd::Ones(system.n_a()) + dt * system.lambda_diag()));
}

double potential_integral(const DiscreteSystem& system, const State& state) {
  const Eigen::VectorXd nodes =
      state.phi_nodes.size() == system.basis_b().n_grid() ? state.phi_nodes
                                                          : system.phi_on_grid(state.phi);
  const auto& w = system.basis_b().quad_weights();
  double total = 0.0;
  for (Eigen::Index i = 0; i < nodes.size(); ++i) {
    total += w[i] * system.potential().beta_hat_level(system.eps(), nodes[i]);
  }
  return total;
}

}  // namespace

std::string to_string(Scheme scheme) {
  return scheme == Scheme::ImexEuler ? "imex_euler" : "implicit_prox";
}

Scheme scheme_from_string(const std::string& name) {
  if (name == "imex_euler") return Scheme::ImexEuler;
  if (name == "implicit_prox") return Scheme::ImplicitProx;
  throw ValidationError(fmt::format("unknown scheme '{}'", name));
}

State step_imex(const DiscreteSystem& system, const State& state, double dt) {
  require_positive_dt(dt);
  const Eigen::VectorXd forcing = system.eval_nonlinearity(state.theta, state.phi).total();
  State next;
  next.t = state.t + dt;
  next.phi = (state.phi - dt * forcing)
                 .cwiseQuotient(Eigen::VectorXd::Ones(system.n_b()) + dt * system.m_diag());
  guard(next.phi, "Phi", next.t);
  next.theta = update_theta(system, state, next.phi, dt);
  guard(next.theta, "Theta", next.t);
  return next;
}

namespace {

struct ProxSolution {
  Eigen::VectorXd phi;
  Eigen::VectorXd nodes;
  Eigen::VectorXd xi;
  int iterations = 0;
};

// J(Phi) = 1/2 Phi^T H Phi - R^T Phi + dt sum_i w_i psi((V Phi)_i), psi = beta_hat_eps
// (beta_hat itself for eps = 0). Its minimizer is the backward Euler step.
struct StepFunctional {
  const SpectralBasis& basis;
  const Potential& potential;
  double eps;
  double dt;
  const Eigen::VectorXd& h;
  const Eigen::VectorXd& r;

  double value(const Eigen::VectorXd& phi, const Eigen::VectorXd& nodes) const {
    const auto& w = basis.quad_weights();
    double pot = 0.0;
    for (Eigen::Index i = 0; i < nodes.size(); ++i) {
      const double b = potential.beta_hat_level(eps, nodes[i]);
      if (!std::isfinite(b)) return std::numeric_limits<double>::infinity();
      pot += w[i] * b;
    }
    return 0.5 * phi.dot(h.cwiseProduct(phi)) - r.dot(phi) + dt * pot;
  }
};

// Damped (semismooth) Newton for single-valued beta_eps or beta.
ProxSolution newton_prox(const StepFunctional& f, const Eigen::VectorXd& start, double tol,
                         int max_iters, double t_next) {
  const auto& V = f.basis.eigenfunction_values();
  const auto& w = f.basis.quad_weights();
  const Eigen::Index m = V.rows();

  ProxSolution sol;
  sol.phi = start;
  sol.nodes = V * sol.phi;
  double value = f.value(sol.phi, sol.nodes);
  if (!std::isfinite(value)) {
    // Outside the domain of beta_hat; the origin always lies inside.
    sol.phi.setZero();
    sol.nodes.setZero();
    value = f.value(sol.phi, sol.nodes);
  }
  Eigen::VectorXd slope(m), curvature(m);
  double change = std::numeric_limits<double>::infinity();
  for (int it = 1; it <= max_iters; ++it) {
    for (Eigen::Index i = 0; i < m; ++i) {
      slope[i] = f.potential.beta_level(f.eps, sol.nodes[i]);
      curvature[i] = f.potential.beta_level_derivative(f.eps, sol.nodes[i]);
    }
    if (!slope.allFinite() || !curvature.allFinite()) {
      throw SolverError(fmt::format("implicit_prox: beta not finite on the grid at t = {:.17g}",
                                    t_next));
    }
    const Eigen::VectorXd grad =
        f.h.cwiseProduct(sol.phi) - f.r + f.dt * V.transpose() * w.cwiseProduct(slope);
    Eigen::MatrixXd hess = f.dt * V.transpose() * w.cwiseProduct(curvature).asDiagonal() * V;
    hess.diagonal() += f.h;
    const Eigen::VectorXd dir = hess.ldlt().solve(-grad);
    const double descent = grad.dot(dir);

    double alpha = 1.0;
    bool accepted = false;
    Eigen::VectorXd trial, trial_nodes;
    double trial_value = 0.0;
    for (int ls = 0; ls < 60; ++ls) {
      trial = sol.phi + alpha * dir;
      trial_nodes = V * trial;
      trial_value = f.value(trial, trial_nodes);
      if (std::isfinite(trial_value) &&
          (trial_value <= value + 1e-4 * alpha * descent ||
           trial_value <= value + 1e-13 * (1.0 + std::abs(value)))) {
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted) {
      throw SolverError(fmt::format(
          "implicit_prox: line search failed at t = {:.17g} (iteration {}, |grad| = {:.3e})",
          t_next, it, grad.lpNorm<Eigen::Infinity>()));
    }
    change = std::max((trial - sol.phi).lpNorm<Eigen::Infinity>(),
                      (trial_nodes - sol.nodes).lpNorm<Eigen::Infinity>());
    sol.phi = std::move(trial);
    sol.nodes = std::move(trial_nodes);
    value = trial_value;
    if (change <= tol) {
      sol.iterations = it;
      sol.xi.resize(m);
      for (Eigen::Index i = 0; i < m; ++i) sol.xi[i] = f.potential.beta_level(f.eps, sol.nodes[i]);
      return sol;
    }
  }
  throw SolverError(fmt::format(
      "implicit_prox: Newton iteration not converged at t = {:.17g} after {} iterations "
      "(last change {:.3e}, tol {:.1e})",
      t_next, max_iters, change, tol));
}

// Primal active-set method for min 1/2 Phi^T H Phi - R^T Phi subject to |(V Phi)_i| <= 1.
// Each iteration adds one blocking node or drops one with a negative multiplier,
// so the working rows stay linearly independent.
ProxSolution obstacle_prox(const StepFunctional& f, const Eigen::VectorXd& start,
                           const Eigen::VectorXd& previous_xi, int max_iters, double t_next) {
  const auto& V = f.basis.eigenfunction_values();
  const auto& w = f.basis.quad_weights();
  const Eigen::Index m = V.rows();
  const Eigen::Index n = V.cols();
  const Eigen::VectorXd h_inv_sqrt = f.h.cwiseSqrt().cwiseInverse();

  Eigen::VectorXd x = start;
  Eigen::VectorXd nodes = V * x;
  const double peak = nodes.lpNorm<Eigen::Infinity>();
  if (peak > 1.0) {
    x /= peak;
    nodes /= peak;
  }

  std::vector<Eigen::Index> work;
  std::vector<double> sign;
  std::vector<char> in_work(static_cast<std::size_t>(m), 0);
  if (previous_xi.size() == m) {
    for (Eigen::Index i = 0; i < m && static_cast<Eigen::Index>(work.size()) < n; ++i) {
      const double s = previous_xi[i] > 0.0 ? 1.0 : (previous_xi[i] < 0.0 ? -1.0 : 0.0);
      if (s != 0.0 && s * nodes[i] >= 1.0 - 1e-12) {
        work.push_back(i);
        sign.push_back(s);
        in_work[i] = 1;
      }
    }
  }

  Eigen::VectorXd lambda;
  auto build_rows = [&] {
    Eigen::MatrixXd a(static_cast<Eigen::Index>(work.size()), n);
    for (std::size_t k = 0; k < work.size(); ++k) a.row(k) = sign[k] * V.row(work[k]);
    return a;
  };

  for (int it = 1; it <= max_iters; ++it) {
    const Eigen::VectorXd grad = f.h.cwiseProduct(x) - f.r;
    const Eigen::MatrixXd a = build_rows();
    // Equality-constrained step in the scaled variable q = H^{1/2} p, through a QR
    // factorization of the working rows (normal equations square their conditioning).
    const Eigen::VectorXd gq = h_inv_sqrt.cwiseProduct(grad);
    Eigen::VectorXd q;
    if (work.empty()) {
      lambda.resize(0);
      q = -gq;
    } else {
      const Eigen::MatrixXd bt = h_inv_sqrt.asDiagonal() * a.transpose();
      const Eigen::HouseholderQR<Eigen::MatrixXd> qr(bt);
      const Eigen::Index k = bt.cols();
      const Eigen::MatrixXd q1 = qr.householderQ() * Eigen::MatrixXd::Identity(n, k);
      const Eigen::VectorXd proj = q1.transpose() * gq;
      q = -(gq - q1 * proj);
      lambda = -qr.matrixQR().topLeftCorner(k, k).triangularView<Eigen::Upper>().solve(proj);
    }
    const Eigen::VectorXd p = h_inv_sqrt.cwiseProduct(q);
    if (!p.allFinite()) {
      throw SolverError(fmt::format("implicit_prox: singular working set at t = {:.17g}", t_next));
    }

    if (p.lpNorm<Eigen::Infinity>() <= 1e-13 * (1.0 + x.lpNorm<Eigen::Infinity>())) {
      Eigen::Index worst = -1;
      double most_negative = -1e-12 * (1.0 + (lambda.size() ? lambda.cwiseAbs().maxCoeff() : 0.0));
      for (Eigen::Index k = 0; k < lambda.size(); ++k) {
        if (lambda[k] < most_negative) {
          most_negative = lambda[k];
          worst = k;
        }
      }
      if (worst < 0) {
        ProxSolution sol;
        sol.phi = x;
        sol.nodes = nodes.cwiseMax(-1.0).cwiseMin(1.0);
        sol.xi = Eigen::VectorXd::Zero(m);
        for (std::size_t k = 0; k < work.size(); ++k) {
          const Eigen::Index i = work[k];
          sol.nodes[i] = sign[k];
          sol.xi[i] = sign[k] * std::max(lambda[k], 0.0) / (f.dt * w[i]);
        }
        sol.iterations = it;
        return sol;
      }
      in_work[work[worst]] = 0;
      work.erase(work.begin() + worst);
      sign.erase(sign.begin() + worst);
      continue;
    }

    const Eigen::VectorXd vp = V * p;
    double alpha = 1.0;
    Eigen::Index block = -1;
    double block_sign = 0.0;
    for (Eigen::Index i = 0; i < m; ++i) {
      if (in_work[i] || vp[i] == 0.0) continue;
      const double s = vp[i] > 0.0 ? 1.0 : -1.0;
      const double reach = std::max(1.0 - s * nodes[i], 0.0) / (s * vp[i]);
      if (reach < alpha) {
        alpha = reach;
        block = i;
        block_sign = s;
      }
    }
    x += alpha * p;
    nodes = V * x;
    if (block >= 0) {
      work.push_back(block);
      sign.push_back(block_sign);
      in_work[block] = 1;
    }
  }
  throw SolverError(fmt::format(
      "implicit_prox: active-set solve not finished at t = {:.17g} after {} iterations "
      "({} active nodes)",
      t_next, max_iters, work.size()));
}

}  // namespace

State step_implicit_prox(const DiscreteSystem& system, const State& state, double dt, double tol,
                         int max_inner_iters, int* iterations_used) {
  require_positive_dt(dt);
  if (!(tol > 0.0) || max_inner_iters < 1) {
    throw ValidationError("implicit_prox: tolerance must be positive and max_inner_iters >= 1");
  }
  const auto& basis = system.basis_b();
  const Nonlinearity smooth = system.eval_smooth_part(state.theta, state.phi);
  const Eigen::VectorXd rhs = state.phi - dt * smooth.total();
  const Eigen::VectorXd h = Eigen::VectorXd::Ones(system.n_b()) + dt * system.m_diag();
  const StepFunctional functional{basis, system.potential(), system.eps(), dt, h, rhs};
  const double t_next = state.t + dt;

  ProxSolution sol;
  if (system.potential().kind() == PotentialKind::DoubleObstacle && system.eps() == 0.0) {
    const int cap = std::max(max_inner_iters, 10 * (basis.n_grid() + system.n_b()));
    sol = obstacle_prox(functional, state.phi, state.xi_nodes, cap, t_next);
  } else {
    sol = newton_prox(functional, state.phi, tol, max_inner_iters, t_next);
  }
  if (iterations_used) *iterations_used = sol.iterations;

  State next;
  next.t = t_next;
  next.phi = std::move(sol.phi);
  guard(next.phi, "Phi", next.t);
  next.phi_nodes = std::move(sol.nodes);
  next.xi_nodes = std::move(sol.xi);
  next.theta = update_theta(system, state, next.phi, dt);
  guard(next.theta, "Theta", next.t);
  return next;
}

State step(const DiscreteSystem& system, const State& state, const SchemeConfig& config,
           int* iterations_used) {
  if (config.scheme == Scheme::ImexEuler) {
    if (iterations_used) *iterations_used = 1;
    return step_imex(system, state, config.dt);
  }
  return step_implicit_prox(system, state, config.dt, config.fixed_point_tol,
                            config.max_inner_iters, iterations_used);
}

RunOutput integrate(const DiscreteSystem& system, const SchemeConfig& config,
                    const IntegrateOptions& options, std::optional<State> initial) {
  require_positive_dt(config.dt);
  if (!(options.final_time > 0.0)) throw ValidationError("final time must be positive");
  if (options.snapshot_stride < 1) throw ValidationError("snapshot stride must be >= 1");
  const double steps_real = options.final_time / config.dt;
  const long long n_steps = std::llround(steps_real);
  if (n_steps < 1 || std::abs(steps_real - static_cast<double>(n_steps)) > 1e-6) {
    throw ValidationError(fmt::format("final time {} is not an integer multiple of dt = {}",
                                      options.final_time, config.dt));
  }
  if (config.scheme == Scheme::ImexEuler && system.eps() == 0.0 &&
      !system.potential().is_smooth_everywhere()) {
    throw ValidationError(
        "imex_euler needs a single-valued beta; use implicit_prox for eps = 0 with the " +
        to_string(system.potential().kind()) + " potential");
  }

  State current;
  if (initial) {
    current = *initial;
  } else {
    const auto init = project_data(system);
    current.theta = init.theta;
    current.phi = init.phi;
  }
  if (current.theta.size() != system.n_a() || current.phi.size() != system.n_b()) {
    throw ValidationError("integrate: initial state does not match the system dimensions");
  }
  guard(current.theta, "Theta", current.t);
  guard(current.phi, "Phi", current.t);

  const double dt = config.dt;
  const auto& a_half = system.a_half();
  const auto& b_half = system.b_half();

  RunOutput out;
  out.dt = dt;

  auto phi_energy = [&](const State& s) {
    return 0.5 * (s.phi.squaredNorm() + b_half.cwiseProduct(s.phi).squaredNorm());
  };
  const double initial_energy =
      0.5 * current.theta.squaredNorm() + phi_energy(current) + potential_integral(system, current);

  double dissipation_theta = 0.0;
  double dissipation_phi = 0.0;
  double work_source = 0.0;
  double work_phi = 0.0;

  auto record = [&](const State& s, double dtphi) {
    TimeSample row;
    row.t = s.t;
    row.norm_theta = s.theta.norm();
    row.norm_ar_theta = a_half.cwiseProduct(s.theta).norm();
    row.graphnorm_theta = std::hypot(row.norm_theta, row.norm_ar_theta);
    row.norm_phi = s.phi.norm();
    row.graphnorm_phi = std::hypot(row.norm_phi, b_half.cwiseProduct(s.phi).norm());
    row.dtphi_norm = dtphi;
    row.theta_energy = 0.5 * s.theta.squaredNorm();
    row.dissipation_theta = dissipation_theta;
    row.dissipation_phi = dissipation_phi;
    row.phi_energy = phi_energy(s);
    row.potential_energy = potential_integral(system, s);
    row.work_source = work_source;
    row.work_phi = work_phi;
    row.energy_lhs = row.theta_energy + row.dissipation_theta + row.dissipation_phi +
                     row.phi_energy + row.potential_energy;
    row.energy_rhs = initial_energy + row.work_source + row.work_phi;
    row.energy_residual = std::abs(row.energy_lhs - row.energy_rhs);
    out.series.push_back(row);
  };
  auto track_nodes = [&](const State& s) {
    if (s.phi_nodes.size() == 0) return;
    for (Eigen::Index i = 0; i < s.phi_nodes.size(); ++i) {
      const double v = s.phi_nodes[i];
      const double xi = s.xi_nodes[i];
      out.max_abs_phi_node = std::max(out.max_abs_phi_node, std::abs(v));
      if (v == 1.0) {
        out.min_xi_at_upper = out.upper_contact ? std::min(out.min_xi_at_upper, xi) : xi;
        out.upper_contact = true;
      } else if (v == -1.0) {
        out.max_xi_at_lower = out.lower_contact ? std::max(out.max_xi_at_lower, xi) : xi;
        out.lower_contact = true;
      } else {
        out.min_xi_at_interior = std::min(out.min_xi_at_interior, xi);
        out.max_xi_at_interior = std::max(out.max_xi_at_interior, xi);
      }
    }
  };

  record(current, 0.0);
  out.snapshots.push_back(current);
  if (options.keep_trajectory) out.trajectory.push_back(current);

  for (long long k = 0; k < n_steps; ++k) {
    State next;
    try {
      int iters = 0;
      next = step(system, current, config, &iters);
      out.max_inner_iterations = std::max(out.max_inner_iterations, iters);
      // Exact time levels avoid drift in t.
      next.t = static_cast<double>(k + 1) * dt;

      const Eigen::VectorXd increment = next.phi - current.phi;
      const Nonlinearity smooth = system.eval_smooth_part(current.theta, current.phi);
      dissipation_theta += dt * a_half.cwiseProduct(current.theta).squaredNorm();
      dissipation_phi += increment.squaredNorm() / dt;
      work_source += dt * system.source(current.t).dot(current.theta);
      work_phi += (current.phi - smooth.potential).dot(increment);
    } catch (const SolverError& e) {
      out.failed = true;
      out.failure = fmt::format("step {} (t = {:.17g}): {}", k + 1, current.t + dt, e.what());
      break;
    }
    const double dtphi = (next.phi - current.phi).norm() / dt;
    if (k == 0) out.series.front().dtphi_norm = dtphi;
    current = std::move(next);
    track_nodes(current);
    record(current, dtphi);
    if (options.keep_trajectory) out.trajectory.push_back(current);
    if ((k + 1) % options.snapshot_stride == 0 || k + 1 == n_steps) {
      out.snapshots.push_back(current);
    }
  }
  out.final_state = current;
  return out;
}

std::vector<double> energy_ledger_audit(const RunOutput& run) {
  std::vector<double> residual;
  residual.reserve(run.series.size());
  for (const auto& row : run.series) residual.push_back(std::abs(row.energy_lhs - row.energy_rhs));
  return residual;
}

double max_energy_residual(const RunOutput& run) {
  const auto residual = energy_ledger_audit(run);
  return residual.empty() ? 0.0 : *std::max_element(residual.begin(), residual.end());
}

}  // namespace fracpf
