#pragma once

// Faedo-Galerkin reduction of the fractional phase-field system onto the first
// n eigenfunctions of A (temperature) and B (order parameter):
//
//   Theta' + E Phi' + Lambda Theta = g(t),   Phi' + M Phi + F(Theta, Phi) = 0,
//
// with Lambda = diag(lambda^{2r}), M = diag(mu^{2 sigma}), E = ell [(eta_j, e_i)],
// g_i(t) = (f(t), e_i) and F_i = (beta_eps(phi) + pi(phi) - ell(phi) theta, eta_i).
// Pointwise terms are evaluated by collocation on the shared quadrature grid.

#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fracpf/fields.hpp"
#include "fracpf/potentials.hpp"
#include "fracpf/spectral.hpp"

namespace fracpf {

// Latent-heat coupling: constant ell, or ell(s) = base + amplitude * tanh(scale * s).
struct Coupling {
  enum class Kind { Constant, Tanh };
  Kind kind = Kind::Constant;
  double value = 0.0;
  double base = 0.0;
  double amplitude = 0.0;
  double scale = 1.0;

  static Coupling constant(double ell) { return {Kind::Constant, ell, 0.0, 0.0, 1.0}; }
  static Coupling tanh(double base, double amplitude, double scale) {
    return {Kind::Tanh, 0.0, base, amplitude, scale};
  }
  bool is_constant() const { return kind == Kind::Constant; }
  double operator()(double s) const;
  double bound() const;
  double lipschitz() const;
};

struct ProblemData {
  SpaceTimeField theta0;
  SpaceTimeField phi0;
  SpaceTimeField source;
  Coupling coupling = Coupling::constant(0.0);
};

struct Nonlinearity {
  Eigen::VectorXd potential;  // (beta_eps(phi) + pi(phi), eta_i)
  Eigen::VectorXd coupling;   // (ell(phi) theta, eta_i)
  Eigen::VectorXd total() const { return potential - coupling; }
};

class DiscreteSystem {
 public:
  const SpectralBasis& basis_a() const { return *basis_a_; }
  const SpectralBasis& basis_b() const { return *basis_b_; }
  std::shared_ptr<const SpectralBasis> basis_a_ptr() const { return basis_a_; }
  std::shared_ptr<const SpectralBasis> basis_b_ptr() const { return basis_b_; }
  int n_a() const { return basis_a_->n_modes(); }
  int n_b() const { return basis_b_->n_modes(); }
  double r() const { return r_; }
  // 0 for the relaxation-limit operator.
  double sigma() const { return sigma_; }
  // 0 selects the unregularized graph beta.
  double eps() const { return eps_; }
  const Potential& potential() const { return potential_; }
  const Coupling& coupling() const { return data_.coupling; }
  const ProblemData& data() const { return data_; }
  bool relaxation_limit() const { return relaxation_limit_; }

  // Lambda = lambda^{2r}, M = mu^{2 sigma} (or 1 - P in the limit).
  const Eigen::VectorXd& lambda_diag() const { return lambda_diag_; }
  const Eigen::VectorXd& m_diag() const { return m_diag_; }
  // lambda^r and mu^sigma, used by graph norms and the energy ledger.
  const Eigen::VectorXd& a_half() const { return a_half_; }
  const Eigen::VectorXd& b_half() const { return b_half_; }

  bool same_basis() const { return same_basis_; }
  // (eta_j, e_i), n_a x n_b; identity when both operators share the basis.
  const Eigen::MatrixXd& cross_mass() const { return cross_mass_; }
  const std::vector<std::string>& advisories() const { return advisories_; }

  // g(t) = [(f(t), e_i)].
  Eigen::VectorXd source(double t) const;
  // E(Phi) w in A-coefficients, ell evaluated at the order parameter Phi.
  Eigen::VectorXd couple(const Eigen::VectorXd& phi, const Eigen::VectorXd& w) const;
  Nonlinearity eval_nonlinearity(const Eigen::VectorXd& theta, const Eigen::VectorXd& phi) const;
  // (pi(phi), eta_i) and (ell(phi) theta, eta_i) only; the beta part is left to the caller.
  Nonlinearity eval_smooth_part(const Eigen::VectorXd& theta, const Eigen::VectorXd& phi) const;

  // (ell(phi) theta, eta_i) by collocation, regardless of the constant-coupling fast path.
  Eigen::VectorXd coupling_by_collocation(const Eigen::VectorXd& theta,
                                          const Eigen::VectorXd& phi) const;

  Eigen::VectorXd theta_on_grid(const Eigen::VectorXd& theta) const;
  Eigen::VectorXd phi_on_grid(const Eigen::VectorXd& phi) const;

  // Same system with B^{2 sigma} replaced by I - P (multiplier 1 on mu > 0, 0 on ker B).
  DiscreteSystem as_relaxation_limit() const;
  // Same structure, different data (bases, exponents, potential unchanged).
  DiscreteSystem with_data(ProblemData data) const;
  // Same data and bases with a new fractional exponent for B and Yosida level.
  DiscreteSystem with_parameters(double sigma, double eps) const;

 private:
  friend DiscreteSystem assemble(ProblemData, std::shared_ptr<const SpectralBasis>,
                                 std::shared_ptr<const SpectralBasis>, double, double, double,
                                 Potential);
  std::shared_ptr<const SpectralBasis> basis_a_;
  std::shared_ptr<const SpectralBasis> basis_b_;
  double r_ = 0.0;
  double sigma_ = 0.0;
  double eps_ = 0.0;
  Potential potential_;
  ProblemData data_;
  bool relaxation_limit_ = false;
  bool same_basis_ = false;
  bool source_zero_ = true;
  Eigen::VectorXd lambda_diag_, m_diag_, a_half_, b_half_;
  Eigen::MatrixXd cross_mass_;
  std::vector<std::string> advisories_;
};

// Validates phi0 against D(beta_hat) node by node (ValidationError naming the
// first offending nodes) and records advisory warnings.
DiscreteSystem assemble(ProblemData data, std::shared_ptr<const SpectralBasis> basis_a,
                        std::shared_ptr<const SpectralBasis> basis_b, double r, double sigma,
                        double eps, Potential potential);

struct InitialCoefficients {
  Eigen::VectorXd theta;
  Eigen::VectorXd phi;
};

// H-projections of theta0 and phi0 onto the discrete spaces.
InitialCoefficients project_data(const DiscreteSystem& system, const ProblemData& data);
inline InitialCoefficients project_data(const DiscreteSystem& system) {
  return project_data(system, system.data());
}

}  // namespace fracpf
