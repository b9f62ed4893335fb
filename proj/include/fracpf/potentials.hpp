#pragma once

// Convex/concave splits F = beta_hat + pi_hat of the phase-field potentials,
// with the resolvent J_eps = (I + eps*beta)^{-1}, the Yosida approximation
// beta_eps = (I - J_eps)/eps and the Moreau envelope beta_hat_eps.

#include <limits>
#include <string>
#include <vector>

namespace fracpf {

enum class PotentialKind { Regular, Logarithmic, DoubleObstacle, Custom };

std::string to_string(PotentialKind kind);
PotentialKind potential_kind_from_string(const std::string& name);

// Effective domain of beta_hat.
struct ConvexDomain {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
  bool lo_closed = false;
  bool hi_closed = false;
  bool contains(double s) const;
};

// Tabulated custom split. beta_min and pi are piecewise linear through the nodes
// and extended linearly; beta_hat is the exact integral of beta_min with
// beta_hat(0) = 0, and the supplied beta_hat table is checked against it.
struct CustomTables {
  std::vector<double> nodes;
  std::vector<double> beta_hat;
  std::vector<double> beta_min;
  std::vector<double> pi;
};

struct ResolventResult {
  double x;      // J_eps(s)
  double slope;  // (s - x) / eps, the element of beta(x) selected by the resolvent
};

class Potential {
 public:
  // beta_hat = s^4/4, pi_hat = 1/4 - gamma s^2/2 (gamma = 1 gives F_reg exactly).
  static Potential regular(double gamma = 1.0);
  // beta_hat = (1+s)ln(1+s) + (1-s)ln(1-s) on [-1,1], pi_hat = -c1 s^2, c1 > 1.
  static Potential logarithmic(double c1);
  // beta_hat = indicator of [-1,1], pi_hat = -c2 s^2, c2 > 0.
  static Potential double_obstacle(double c2);
  static Potential custom(CustomTables tables);
  // beta_hat = 0, pi = 0.
  static Potential zero();
  // beta(s) = slope*s, pi(s) = -gamma*s.
  static Potential linear(double slope, double gamma);

  PotentialKind kind() const { return kind_; }
  const ConvexDomain& domain() const { return domain_; }
  double c1() const { return c1_; }
  double c2() const { return c2_; }
  // pi(s) = -gamma s when pi is linear.
  double gamma() const { return gamma_; }
  bool pi_is_linear() const { return pi_linear_; }
  double pi_lipschitz() const;
  bool is_smooth_everywhere() const;
  // beta and pi both vanish identically.
  bool is_zero() const;

  // +infinity outside the domain.
  double beta_hat(double s) const;
  // Minimal section; NaN where beta(s) is empty (outside D(beta)).
  double beta_min(double s) const;
  bool in_beta_domain(double s) const;
  double pi_hat(double s) const;
  double pi(double s) const;
  double total(double s) const { return beta_hat(s) + pi_hat(s); }

  ResolventResult resolve(double eps, double s) const;
  double resolvent(double eps, double s) const { return resolve(eps, s).x; }
  double yosida(double eps, double s) const { return resolve(eps, s).slope; }
  double moreau(double eps, double s) const;
  // (I + tau*beta_eps)^{-1}(s) = eps/(eps+tau) s + tau/(eps+tau) J_{eps+tau}(s);
  // eps = 0 falls back to the plain resolvent J_tau.
  ResolventResult resolve_regularized(double eps, double tau, double s) const;

  // beta_eps for eps > 0, beta_min for eps == 0.
  double beta_level(double eps, double s) const;
  double beta_hat_level(double eps, double s) const;
  // d/ds of beta_level (a generalized derivative at kinks; 0 for the obstacle at eps = 0).
  double beta_level_derivative(double eps, double s) const;

 private:
  double beta_min_derivative(double s) const;
  double custom_beta_min(double s) const;
  double custom_beta_hat(double s) const;
  double custom_pi(double s) const;
  double custom_pi_hat(double s) const;

  PotentialKind kind_ = PotentialKind::Regular;
  ConvexDomain domain_;
  double c1_ = 0.0;
  double c2_ = 0.0;
  double gamma_ = 1.0;
  bool pi_linear_ = true;
  double pi_constant_ = 0.0;  // additive constant of pi_hat
  CustomTables tables_;
  std::vector<double> beta_hat_at_nodes_;
  std::vector<double> pi_hat_at_nodes_;
};

struct CoercivityReport {
  bool ok = false;
  double alpha = 0.0;
  double constant = 0.0;
};

// Largest grid-searched alpha (and its smallest C) with
// beta_hat_eps(r) + pi_hat(r) >= alpha r^2 - C on [-range, range] for every listed eps,
// accepting alpha only when the worst case is attained inside [-range/2, range/2].
CoercivityReport coercivity_probe(const Potential& potential, const std::vector<double>& eps_list,
                                  double range, int samples = 2001, int alpha_steps = 400,
                                  double alpha_cap = 10.0);

}  // namespace fracpf
