#include "fracpf/potentials.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>

#include <fmt/format.h>

#include "fracpf/errors.hpp"

namespace fracpf {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

constexpr int kNewtonMaxIters = 100;
constexpr int kBisectionMaxIters = 200;

// Root of an increasing function h on [lo, hi] with h(lo) < 0 < h(hi): Newton with
// analytic derivative, bisection whenever a step leaves the bracket, then a pure
// bisection fallback.
double solve_increasing(const std::function<double(double)>& h,
                        const std::function<double(double)>& dh, double lo, double hi,
                        double start) {
  double x = std::clamp(start, lo, hi);
  for (int it = 0; it < kNewtonMaxIters; ++it) {
    const double f = h(x);
    if (f == 0.0) return x;
    if (f < 0.0) {
      lo = x;
    } else {
      hi = x;
    }
    const double d = dh(x);
    double next = x - f / d;
    if (!(d > 0.0) || !(next > lo && next < hi)) next = 0.5 * (lo + hi);
    const double step = std::abs(next - x);
    x = next;
    if (step <= 1e-15 * std::max(1.0, std::abs(x)) || hi - lo <= 4e-16 * std::max(1.0, std::abs(x))) {
      return x;
    }
  }
  for (int it = 0; it < kBisectionMaxIters; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) return mid;
    const double f = h(mid);
    if (f == 0.0) return mid;
    if (f < 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  throw SolverError(fmt::format("resolvent solve did not converge on [{}, {}]", lo, hi));
}

double log_beta_hat(double s) {
  if (s == 1.0 || s == -1.0) return 2.0 * std::numbers::ln2;
  return (1.0 + s) * std::log1p(s) + (1.0 - s) * std::log1p(-s);
}

// Piecewise-linear interpolation with linear extension beyond the end nodes.
struct Segment {
  std::size_t i;
  double t;
};

Segment locate(const std::vector<double>& nodes, double s) {
  const std::size_t n = nodes.size();
  std::size_t i = 0;
  if (s <= nodes.front()) {
    i = 0;
  } else if (s >= nodes.back()) {
    i = n - 2;
  } else {
    i = static_cast<std::size_t>(std::upper_bound(nodes.begin(), nodes.end(), s) - nodes.begin()) - 1;
    i = std::min(i, n - 2);
  }
  return {i, (s - nodes[i]) / (nodes[i + 1] - nodes[i])};
}

double interp(const std::vector<double>& nodes, const std::vector<double>& vals, double s) {
  const auto [i, t] = locate(nodes, s);
  return vals[i] + t * (vals[i + 1] - vals[i]);
}

// Integral of the piecewise-linear interpolant from nodes[0] to s.
double integral_from_first(const std::vector<double>& nodes, const std::vector<double>& vals,
                           const std::vector<double>& cumulative, double s) {
  const auto [i, t] = locate(nodes, s);
  const double h = nodes[i + 1] - nodes[i];
  const double dx = t * h;
  const double v_at = vals[i] + t * (vals[i + 1] - vals[i]);
  return cumulative[i] + 0.5 * (vals[i] + v_at) * dx;
}

std::vector<double> cumulative_integral(const std::vector<double>& nodes,
                                        const std::vector<double>& vals) {
  std::vector<double> out(nodes.size(), 0.0);
  for (std::size_t i = 1; i < nodes.size(); ++i) {
    out[i] = out[i - 1] + 0.5 * (vals[i] + vals[i - 1]) * (nodes[i] - nodes[i - 1]);
  }
  return out;
}

}  // namespace

std::string to_string(PotentialKind kind) {
  switch (kind) {
    case PotentialKind::Regular: return "regular";
    case PotentialKind::Logarithmic: return "logarithmic";
    case PotentialKind::DoubleObstacle: return "double_obstacle";
    case PotentialKind::Custom: return "custom";
  }
  return "unknown";
}

PotentialKind potential_kind_from_string(const std::string& name) {
  if (name == "regular") return PotentialKind::Regular;
  if (name == "logarithmic") return PotentialKind::Logarithmic;
  if (name == "double_obstacle") return PotentialKind::DoubleObstacle;
  if (name == "custom") return PotentialKind::Custom;
  throw ValidationError(fmt::format("unknown potential kind '{}'", name));
}

bool ConvexDomain::contains(double s) const {
  if (std::isnan(s)) return false;
  const bool above = lo_closed ? s >= lo : s > lo;
  const bool below = hi_closed ? s <= hi : s < hi;
  return above && below;
}

Potential Potential::regular(double gamma) {
  if (!(gamma >= 0.0) || !std::isfinite(gamma)) {
    throw ValidationError(fmt::format("regular potential: gamma must be >= 0, got {}", gamma));
  }
  Potential p;
  p.kind_ = PotentialKind::Regular;
  p.gamma_ = gamma;
  p.pi_constant_ = 0.25;
  return p;
}

Potential Potential::logarithmic(double c1) {
  if (!(c1 > 1.0) || !std::isfinite(c1)) {
    throw ValidationError(fmt::format("logarithmic potential: c1 must be > 1, got {}", c1));
  }
  Potential p;
  p.kind_ = PotentialKind::Logarithmic;
  p.c1_ = c1;
  p.gamma_ = 2.0 * c1;
  p.domain_ = {-1.0, 1.0, true, true};
  return p;
}

Potential Potential::double_obstacle(double c2) {
  if (!(c2 > 0.0) || !std::isfinite(c2)) {
    throw ValidationError(fmt::format("double obstacle potential: c2 must be > 0, got {}", c2));
  }
  Potential p;
  p.kind_ = PotentialKind::DoubleObstacle;
  p.c2_ = c2;
  p.gamma_ = 2.0 * c2;
  p.domain_ = {-1.0, 1.0, true, true};
  return p;
}

Potential Potential::custom(CustomTables tables) {
  const std::size_t n = tables.nodes.size();
  if (n < 2) throw ValidationError("custom potential: need at least two table nodes");
  if (tables.beta_min.size() != n || tables.pi.size() != n ||
      (!tables.beta_hat.empty() && tables.beta_hat.size() != n)) {
    throw ValidationError("custom potential: table lengths differ from the node count");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(tables.nodes[i]) || !std::isfinite(tables.beta_min[i]) ||
        !std::isfinite(tables.pi[i])) {
      throw ValidationError(fmt::format("custom potential: non-finite entry at node {}", i));
    }
    if (i > 0 && !(tables.nodes[i] > tables.nodes[i - 1])) {
      throw ValidationError("custom potential: nodes must be strictly increasing");
    }
    if (i > 0 && tables.beta_min[i] < tables.beta_min[i - 1]) {
      throw ValidationError(fmt::format(
          "custom potential: beta table decreases between nodes {} and {} (not monotone)", i - 1, i));
    }
  }

  Potential p;
  p.kind_ = PotentialKind::Custom;
  p.tables_ = std::move(tables);
  const auto& t = p.tables_;

  // beta_hat(0) = 0 and beta_hat >= 0 force 0 in beta(0).
  const double beta_at_zero = interp(t.nodes, t.beta_min, 0.0);
  if (std::abs(beta_at_zero) > 1e-12) {
    throw ValidationError(
        fmt::format("custom potential: beta(0) = {} but beta_hat must attain its minimum 0 at 0",
                    beta_at_zero));
  }

  p.beta_hat_at_nodes_ = cumulative_integral(t.nodes, t.beta_min);
  p.pi_hat_at_nodes_ = cumulative_integral(t.nodes, t.pi);

  if (!t.beta_hat.empty()) {
    // Midpoint convexity of the supplied table interpolant.
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        const double mid = interp(t.nodes, t.beta_hat, 0.5 * (t.nodes[i] + t.nodes[j]));
        if (mid > 0.5 * (t.beta_hat[i] + t.beta_hat[j]) + 1e-12 * (1.0 + std::abs(mid))) {
          throw ValidationError(fmt::format(
              "custom potential: beta_hat table is not convex (midpoint of nodes {} and {})", i, j));
        }
      }
    }
    for (std::size_t i = 0; i < n; ++i) {
      const double expected = p.custom_beta_hat(t.nodes[i]);
      if (std::abs(expected - t.beta_hat[i]) > 1e-6 * (1.0 + std::abs(expected))) {
        throw ValidationError(fmt::format(
            "custom potential: beta_hat table at node {} is {} but the integral of beta gives {}", i,
            t.beta_hat[i], expected));
      }
    }
  }

  // pi(s) = -gamma s exactly when every node lies on one line through the origin.
  const double slope = (t.pi[n - 1] - t.pi[0]) / (t.nodes[n - 1] - t.nodes[0]);
  bool linear = std::abs(interp(t.nodes, t.pi, 0.0)) <= 1e-14;
  for (std::size_t i = 0; i < n && linear; ++i) {
    linear = std::abs(t.pi[i] - slope * t.nodes[i]) <= 1e-12 * (1.0 + std::abs(t.pi[i]));
  }
  p.pi_linear_ = linear;
  p.gamma_ = linear ? -slope : kNaN;
  return p;
}

Potential Potential::zero() { return linear(0.0, 0.0); }

Potential Potential::linear(double slope, double gamma) {
  if (!(slope >= 0.0)) throw ValidationError("linear potential: beta slope must be >= 0");
  return custom({{-1.0, 1.0}, {0.5 * slope, 0.5 * slope}, {-slope, slope}, {gamma, -gamma}});
}

double Potential::pi_lipschitz() const {
  if (kind_ != PotentialKind::Custom) return std::abs(gamma_);
  double lip = 0.0;
  const auto& t = tables_;
  for (std::size_t i = 1; i < t.nodes.size(); ++i) {
    lip = std::max(lip, std::abs((t.pi[i] - t.pi[i - 1]) / (t.nodes[i] - t.nodes[i - 1])));
  }
  return lip;
}

bool Potential::is_smooth_everywhere() const {
  return kind_ == PotentialKind::Regular || kind_ == PotentialKind::Custom;
}

bool Potential::is_zero() const {
  if (kind_ != PotentialKind::Custom) return false;
  const auto zero = [](double v) { return v == 0.0; };
  return std::all_of(tables_.beta_min.begin(), tables_.beta_min.end(), zero) &&
         std::all_of(tables_.pi.begin(), tables_.pi.end(), zero);
}

double Potential::custom_beta_min(double s) const {
  return interp(tables_.nodes, tables_.beta_min, s);
}

double Potential::custom_beta_hat(double s) const {
  const auto& t = tables_;
  const double at_zero = integral_from_first(t.nodes, t.beta_min, beta_hat_at_nodes_, 0.0);
  return integral_from_first(t.nodes, t.beta_min, beta_hat_at_nodes_, s) - at_zero;
}

double Potential::custom_pi(double s) const { return interp(tables_.nodes, tables_.pi, s); }

double Potential::custom_pi_hat(double s) const {
  const auto& t = tables_;
  const double at_zero = integral_from_first(t.nodes, t.pi, pi_hat_at_nodes_, 0.0);
  return integral_from_first(t.nodes, t.pi, pi_hat_at_nodes_, s) - at_zero;
}

double Potential::beta_hat(double s) const {
  switch (kind_) {
    case PotentialKind::Regular: return 0.25 * s * s * s * s;
    case PotentialKind::Logarithmic: return domain_.contains(s) ? log_beta_hat(s) : kInf;
    case PotentialKind::DoubleObstacle: return domain_.contains(s) ? 0.0 : kInf;
    case PotentialKind::Custom: return custom_beta_hat(s);
  }
  return kNaN;
}

bool Potential::in_beta_domain(double s) const {
  switch (kind_) {
    case PotentialKind::Logarithmic: return s > -1.0 && s < 1.0;
    case PotentialKind::DoubleObstacle: return s >= -1.0 && s <= 1.0;
    default: return std::isfinite(s);
  }
}

double Potential::beta_min(double s) const {
  if (!in_beta_domain(s)) return kNaN;
  switch (kind_) {
    case PotentialKind::Regular: return s * s * s;
    case PotentialKind::Logarithmic: return 2.0 * std::atanh(s);
    case PotentialKind::DoubleObstacle: return 0.0;
    case PotentialKind::Custom: return custom_beta_min(s);
  }
  return kNaN;
}

double Potential::beta_min_derivative(double s) const {
  switch (kind_) {
    case PotentialKind::Regular: return 3.0 * s * s;
    case PotentialKind::Logarithmic: return 2.0 / ((1.0 - s) * (1.0 + s));
    case PotentialKind::DoubleObstacle: return 0.0;
    case PotentialKind::Custom: {
      const auto [i, t] = locate(tables_.nodes, s);
      return (tables_.beta_min[i + 1] - tables_.beta_min[i]) /
             (tables_.nodes[i + 1] - tables_.nodes[i]);
    }
  }
  return kNaN;
}

double Potential::pi_hat(double s) const {
  if (kind_ == PotentialKind::Custom) return custom_pi_hat(s);
  return pi_constant_ - 0.5 * gamma_ * s * s;
}

double Potential::pi(double s) const {
  if (kind_ == PotentialKind::Custom) return custom_pi(s);
  return -gamma_ * s;
}

ResolventResult Potential::resolve(double eps, double s) const {
  if (!(eps > 0.0) || !std::isfinite(eps)) {
    throw ValidationError(fmt::format("resolvent: eps must be positive, got {}", eps));
  }
  if (!std::isfinite(s)) throw ValidationError("resolvent: non-finite argument");

  switch (kind_) {
    case PotentialKind::DoubleObstacle: {
      const double x = std::clamp(s, -1.0, 1.0);
      return {x, (s - x) / eps};
    }
    case PotentialKind::Logarithmic: {
      // Solve in the slope variable y = beta(x) = 2 atanh(x): tanh(y/2) + eps*y = s.
      // The bracket follows from |tanh| < 1.
      auto h = [&](double y) { return std::tanh(0.5 * y) + eps * y - s; };
      auto dh = [&](double y) {
        const double c = std::cosh(0.5 * y);
        return 0.5 / (c * c) + eps;
      };
      const double y = solve_increasing(h, dh, (s - 1.0) / eps, (s + 1.0) / eps, s / (1.0 + eps));
      return {std::tanh(0.5 * y), y};
    }
    case PotentialKind::Regular:
    case PotentialKind::Custom: {
      auto h = [&](double x) { return x + eps * beta_min(x) - s; };
      auto dh = [&](double x) { return 1.0 + eps * beta_min_derivative(x); };
      const double lo = std::min(s, 0.0) - std::abs(s) - 1.0;
      const double hi = std::max(s, 0.0) + std::abs(s) + 1.0;
      double start = s;
      if (kind_ == PotentialKind::Regular && eps * s * s > 1.0) start = std::cbrt(s / eps);
      const double x = solve_increasing(h, dh, lo, hi, start);
      return {x, beta_min(x)};
    }
  }
  throw SolverError("resolvent: unsupported potential kind");
}

double Potential::moreau(double eps, double s) const {
  const auto [x, slope] = resolve(eps, s);
  // |s - x|^2 / (2 eps) written through the slope (s - x) / eps.
  return 0.5 * eps * slope * slope + beta_hat(x);
}

ResolventResult Potential::resolve_regularized(double eps, double tau, double s) const {
  if (!(tau > 0.0)) throw ValidationError("regularized resolvent: tau must be positive");
  if (eps == 0.0) return resolve(tau, s);
  if (!(eps > 0.0)) throw ValidationError("regularized resolvent: eps must be >= 0");
  const auto outer = resolve(eps + tau, s);
  const double x = (eps * s + tau * outer.x) / (eps + tau);
  return {x, outer.slope};
}

double Potential::beta_level(double eps, double s) const {
  if (eps > 0.0) return yosida(eps, s);
  return beta_min(s);
}

double Potential::beta_level_derivative(double eps, double s) const {
  if (!(eps > 0.0)) return beta_min_derivative(s);
  if (kind_ == PotentialKind::DoubleObstacle) return std::abs(s) > 1.0 ? 1.0 / eps : 0.0;
  const double d = beta_min_derivative(resolvent(eps, s));
  if (!std::isfinite(d)) return 1.0 / eps;
  return d / (1.0 + eps * d);
}

double Potential::beta_hat_level(double eps, double s) const {
  if (eps > 0.0) return moreau(eps, s);
  return beta_hat(s);
}

CoercivityReport coercivity_probe(const Potential& potential, const std::vector<double>& eps_list,
                                  double range, int samples, int alpha_steps, double alpha_cap) {
  if (eps_list.empty()) throw ValidationError("coercivity_probe: empty eps list");
  if (!(range > 0.0) || samples < 3 || alpha_steps < 1 || !(alpha_cap > 0.0)) {
    throw ValidationError("coercivity_probe: invalid sampling parameters");
  }
  std::vector<double> rs(samples);
  for (int i = 0; i < samples; ++i) rs[i] = -range + 2.0 * range * i / (samples - 1);

  // F_eps(r) for every (eps, r); the envelope only enters through these values.
  std::vector<std::vector<double>> energy(eps_list.size(), std::vector<double>(samples));
  for (std::size_t e = 0; e < eps_list.size(); ++e) {
    for (int i = 0; i < samples; ++i) {
      energy[e][i] = potential.beta_hat_level(eps_list[e], rs[i]) + potential.pi_hat(rs[i]);
    }
  }

  CoercivityReport report;
  for (int k = alpha_steps; k >= 1; --k) {
    const double alpha = alpha_cap * k / alpha_steps;
    double worst = -kInf;
    double worst_inner = -kInf;
    for (std::size_t e = 0; e < eps_list.size(); ++e) {
      for (int i = 0; i < samples; ++i) {
        const double deficit = alpha * rs[i] * rs[i] - energy[e][i];
        worst = std::max(worst, deficit);
        if (std::abs(rs[i]) <= 0.5 * range) worst_inner = std::max(worst_inner, deficit);
      }
    }
    if (worst <= worst_inner + 1e-12 * std::max(1.0, std::abs(worst))) {
      report.ok = true;
      report.alpha = alpha;
      report.constant = std::max(worst, 0.0);
      return report;
    }
  }
  return report;
}

}  // namespace fracpf
