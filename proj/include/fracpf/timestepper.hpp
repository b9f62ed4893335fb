#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fracpf/galerkin.hpp"

namespace fracpf {

struct State {
  double t = 0.0;
  Eigen::VectorXd theta;
  Eigen::VectorXd phi;
  // Set by the proximal scheme: phi on the B-grid after the resolvent, and the
  // multiplier xi in beta(phi) on the same nodes.
  Eigen::VectorXd phi_nodes;
  Eigen::VectorXd xi_nodes;
};

enum class Scheme { ImexEuler, ImplicitProx };

std::string to_string(Scheme scheme);
Scheme scheme_from_string(const std::string& name);

struct SchemeConfig {
  Scheme scheme = Scheme::ImexEuler;
  double dt = 1e-3;
  double fixed_point_tol = 1e-10;
  int max_inner_iters = 50;
};

inline constexpr double kOverflowGuard = 1e12;

// Phi+ = (I + dt M)^{-1} (Phi - dt F(Theta, Phi)),
// Theta+ = (I + dt Lambda)^{-1} (Theta - E(Phi) (Phi+ - Phi) + dt g(t + dt)).
State step_imex(const DiscreteSystem& system, const State& state, double dt);

// Same linear treatment with beta taken implicitly: Phi+ minimizes
//   1/2 Phi^T (I + dt M) Phi - R^T Phi + dt sum_i w_i beta_hat_eps((V Phi)_i)
// on the B-grid, i.e. (I + dt M) Phi+ + dt (xi, eta_i) = R with xi in beta_eps(phi+)
// at the nodes (beta itself for eps = 0). R carries pi and the coupling at the old
// state. Equivalently phi_nodes = J_dt(y) and xi = (y - phi_nodes) / dt for
// y = phi_nodes + dt xi. Single-valued beta: damped Newton, stopping once two
// successive iterates differ by <= tol. Obstacle at eps = 0: exact active-set QP
// (at most max(max_inner_iters, 10 (m + n)) working-set changes). Throws SolverError
// on non-convergence with the last change.
State step_implicit_prox(const DiscreteSystem& system, const State& state, double dt, double tol,
                         int max_inner_iters, int* iterations_used = nullptr);

State step(const DiscreteSystem& system, const State& state, const SchemeConfig& config,
           int* iterations_used = nullptr);

// One row per time level. Ledger terms follow the first a-priori estimate:
//   1/2|theta(t)|^2 + int |A^r theta|^2 + int |dt phi|^2 + 1/2|phi(t)|_{B,sigma}^2
//   + int_Omega beta_hat_eps(phi(t))
//   = 1/2|theta0|^2 + 1/2|phi0|_{B,sigma}^2 + int_Omega beta_hat_eps(phi0)
//   + int (f, theta) + int (phi - pi(phi), dt phi).
// Time integrals use the left endpoint of each step; dt phi is the step's
// difference quotient.
struct TimeSample {
  double t = 0.0;
  double norm_theta = 0.0;
  double graphnorm_theta = 0.0;
  double norm_ar_theta = 0.0;
  double norm_phi = 0.0;
  double graphnorm_phi = 0.0;
  double dtphi_norm = 0.0;

  double theta_energy = 0.0;      // 1/2 |theta|^2
  double dissipation_theta = 0.0; // int |A^r theta|^2
  double dissipation_phi = 0.0;   // int |dt phi|^2
  double phi_energy = 0.0;        // 1/2 |phi|_{B,sigma}^2
  double potential_energy = 0.0;  // int_Omega beta_hat_eps(phi)
  double work_source = 0.0;       // int (f, theta)
  double work_phi = 0.0;          // int (phi - pi(phi), dt phi)

  double energy_lhs = 0.0;
  double energy_rhs = 0.0;
  double energy_residual = 0.0;
};

struct RunOutput {
  std::vector<TimeSample> series;
  std::vector<State> snapshots;
  // Every time level, kept for study comparisons.
  std::vector<State> trajectory;
  State final_state;
  double dt = 0.0;
  bool failed = false;
  std::string failure;
  int max_inner_iterations = 0;
  // Proximal runs: extremes over all steps and nodes.
  double max_abs_phi_node = 0.0;
  double min_xi_at_upper = 0.0;  // min of xi where phi_nodes == +1 (0 if never active)
  double max_xi_at_lower = 0.0;  // max of xi where phi_nodes == -1
  double min_xi_at_interior = 0.0;
  double max_xi_at_interior = 0.0;
  bool upper_contact = false;
  bool lower_contact = false;
};

struct IntegrateOptions {
  double final_time = 1.0;
  int snapshot_stride = 1;
  bool keep_trajectory = true;
};

// Starts from the H-projection of the system's data unless an initial state is given.
RunOutput integrate(const DiscreteSystem& system, const SchemeConfig& config,
                    const IntegrateOptions& options, std::optional<State> initial = std::nullopt);

// |LHS - RHS| per row.
std::vector<double> energy_ledger_audit(const RunOutput& run);
double max_energy_residual(const RunOutput& run);

}  // namespace fracpf
