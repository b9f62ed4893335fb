#include "fracpf/galerkin.hpp"

#include <cmath>

#include <fmt/format.h>

#include "fracpf/errors.hpp"

namespace fracpf {

namespace {

void require_finite_grid(const Eigen::VectorXd& values, const SpectralBasis& basis,
                         const char* what) {
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) {
      throw SolverError(fmt::format("{}: non-finite value at grid node {} (x = {})", what, i,
                                    basis.grid_points()(i, 0)));
    }
  }
}

}  // namespace

double Coupling::operator()(double s) const {
  if (kind == Kind::Constant) return value;
  return base + amplitude * std::tanh(scale * s);
}

double Coupling::bound() const {
  if (kind == Kind::Constant) return std::abs(value);
  return std::abs(base) + std::abs(amplitude);
}

double Coupling::lipschitz() const {
  if (kind == Kind::Constant) return 0.0;
  return std::abs(amplitude * scale);
}

DiscreteSystem assemble(ProblemData data, std::shared_ptr<const SpectralBasis> basis_a,
                        std::shared_ptr<const SpectralBasis> basis_b, double r, double sigma,
                        double eps, Potential potential) {
  if (!basis_a || !basis_b) throw ValidationError("assemble: missing basis");
  if (!basis_a->shares_grid_with(*basis_b)) {
    throw ValidationError("assemble: A and B bases must be built over the same domain and grid");
  }
  if (!(r > 0.0) || !(sigma > 0.0)) {
    throw ValidationError(fmt::format("assemble: exponents must be positive (r = {}, sigma = {})",
                                      r, sigma));
  }
  if (!(eps >= 0.0) || !std::isfinite(eps)) {
    throw ValidationError(fmt::format("assemble: eps must be >= 0, got {}", eps));
  }

  // phi0 must lie in D(beta_hat) at every node.
  const Eigen::VectorXd phi0 = data.phi0.sample(*basis_b, 0.0);
  std::vector<Eigen::Index> bad;
  for (Eigen::Index i = 0; i < phi0.size(); ++i) {
    if (!std::isfinite(potential.beta_hat(phi0[i]))) bad.push_back(i);
  }
  if (!bad.empty()) {
    std::string report;
    for (std::size_t k = 0; k < bad.size() && k < 5; ++k) {
      const auto i = bad[k];
      report += fmt::format("{}node {} (x = {:.6g}): phi0 = {:.17g}", k ? "; " : "", i,
                            basis_b->grid_points()(i, 0), phi0[i]);
    }
    throw ValidationError(fmt::format(
        "phi0 leaves the domain of the {} potential at {} grid node(s): {}",
        to_string(potential.kind()), bad.size(), report));
  }

  DiscreteSystem sys;
  sys.basis_a_ = std::move(basis_a);
  sys.basis_b_ = std::move(basis_b);
  sys.r_ = r;
  sys.sigma_ = sigma;
  sys.eps_ = eps;
  sys.potential_ = std::move(potential);
  sys.data_ = std::move(data);
  sys.source_zero_ = sys.data_.source.is_zero();

  sys.lambda_diag_ = power_multipliers(sys.basis_a_->eigenvalues(), 2.0 * r);
  sys.a_half_ = power_multipliers(sys.basis_a_->eigenvalues(), r);
  sys.m_diag_ = power_multipliers(sys.basis_b_->eigenvalues(), 2.0 * sigma);
  sys.b_half_ = power_multipliers(sys.basis_b_->eigenvalues(), sigma);

  const auto& a = *sys.basis_a_;
  const auto& b = *sys.basis_b_;
  sys.same_basis_ = a.kind() == b.kind() && a.n_modes() == b.n_modes();
  if (sys.same_basis_) {
    sys.cross_mass_ = Eigen::MatrixXd::Identity(a.n_modes(), b.n_modes());
  } else {
    sys.cross_mass_ = a.eigenfunction_values().transpose() * a.quad_weights().asDiagonal() *
                      b.eigenfunction_values();
  }

  if (!sys.data_.coupling.is_constant() && !(r + 2.0 * sigma > 0.75)) {
    sys.advisories_.push_back(fmt::format(
        "nonconstant coupling with r + 2 sigma = {} <= 3/4: the embedding condition is not met "
        "(advisory only)",
        r + 2.0 * sigma));
  }
  return sys;
}

Eigen::VectorXd DiscreteSystem::source(double t) const {
  if (source_zero_) return Eigen::VectorXd::Zero(n_a());
  return basis_a_->analyze(data_.source.sample(*basis_a_, t));
}

Eigen::VectorXd DiscreteSystem::couple(const Eigen::VectorXd& phi, const Eigen::VectorXd& w) const {
  const auto& ell = data_.coupling;
  if (ell.is_constant()) {
    if (same_basis_) return ell.value * w;
    return ell.value * (cross_mass_ * w);
  }
  const Eigen::VectorXd phi_grid = basis_b_->synthesize(phi);
  Eigen::VectorXd w_grid = basis_b_->synthesize(w);
  for (Eigen::Index i = 0; i < w_grid.size(); ++i) w_grid[i] *= ell(phi_grid[i]);
  return basis_a_->analyze(w_grid);
}

Eigen::VectorXd DiscreteSystem::theta_on_grid(const Eigen::VectorXd& theta) const {
  return basis_a_->synthesize(theta);
}

Eigen::VectorXd DiscreteSystem::phi_on_grid(const Eigen::VectorXd& phi) const {
  return basis_b_->synthesize(phi);
}

Nonlinearity DiscreteSystem::eval_smooth_part(const Eigen::VectorXd& theta,
                                              const Eigen::VectorXd& phi) const {
  const Eigen::VectorXd phi_grid = phi_on_grid(phi);
  Eigen::VectorXd pi_grid(phi_grid.size());
  for (Eigen::Index i = 0; i < phi_grid.size(); ++i) pi_grid[i] = potential_.pi(phi_grid[i]);
  require_finite_grid(pi_grid, *basis_b_, "pi(phi)");

  Nonlinearity out;
  out.potential = basis_b_->analyze(pi_grid);
  const auto& ell = data_.coupling;
  if (ell.is_constant()) {
    out.coupling = ell.value * (same_basis_ ? theta : Eigen::VectorXd(cross_mass_.transpose() * theta));
  } else {
    out.coupling = coupling_by_collocation(theta, phi);
    require_finite_grid(out.coupling, *basis_b_, "ell(phi) theta");
  }
  return out;
}

Nonlinearity DiscreteSystem::eval_nonlinearity(const Eigen::VectorXd& theta,
                                               const Eigen::VectorXd& phi) const {
  Nonlinearity out = eval_smooth_part(theta, phi);
  const Eigen::VectorXd phi_grid = phi_on_grid(phi);
  Eigen::VectorXd beta_grid(phi_grid.size());
  for (Eigen::Index i = 0; i < phi_grid.size(); ++i) {
    beta_grid[i] = potential_.beta_level(eps_, phi_grid[i]);
  }
  require_finite_grid(beta_grid, *basis_b_, eps_ > 0.0 ? "beta_eps(phi)" : "beta(phi)");
  out.potential += basis_b_->analyze(beta_grid);
  return out;
}

DiscreteSystem DiscreteSystem::as_relaxation_limit() const {
  DiscreteSystem limit = *this;
  limit.relaxation_limit_ = true;
  limit.sigma_ = 0.0;
  const auto& mu = basis_b_->eigenvalues();
  for (Eigen::Index j = 0; j < mu.size(); ++j) {
    limit.m_diag_[j] = mu[j] > 0.0 ? 1.0 : 0.0;
    limit.b_half_[j] = limit.m_diag_[j];
  }
  return limit;
}

DiscreteSystem DiscreteSystem::with_data(ProblemData data) const {
  DiscreteSystem out = assemble(std::move(data), basis_a_, basis_b_, r_,
                                relaxation_limit_ ? 1.0 : sigma_, eps_, potential_);
  if (relaxation_limit_) return out.as_relaxation_limit();
  return out;
}

DiscreteSystem DiscreteSystem::with_parameters(double sigma, double eps) const {
  DiscreteSystem out =
      assemble(data_, basis_a_, basis_b_, r_, relaxation_limit_ ? 1.0 : sigma, eps, potential_);
  if (relaxation_limit_) return out.as_relaxation_limit();
  return out;
}

Eigen::VectorXd DiscreteSystem::coupling_by_collocation(const Eigen::VectorXd& theta,
                                                        const Eigen::VectorXd& phi) const {
  const Eigen::VectorXd phi_grid = phi_on_grid(phi);
  Eigen::VectorXd prod = theta_on_grid(theta);
  for (Eigen::Index i = 0; i < prod.size(); ++i) prod[i] *= data_.coupling(phi_grid[i]);
  return basis_b_->analyze(prod);
}

InitialCoefficients project_data(const DiscreteSystem& system, const ProblemData& data) {
  InitialCoefficients init;
  init.theta = system.basis_a().analyze(data.theta0.sample(system.basis_a(), 0.0));
  init.phi = system.basis_b().analyze(data.phi0.sample(system.basis_b(), 0.0));
  return init;
}

}  // namespace fracpf
