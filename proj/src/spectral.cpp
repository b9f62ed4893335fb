#include "fracpf/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <fmt/format.h>

#include "fracpf/errors.hpp"

namespace fracpf {

namespace {

using std::numbers::pi;

void require_finite(const Eigen::VectorXd& v, const char* what) {
  if (!v.allFinite()) {
    throw ValidationError(fmt::format("{}: non-finite input value", what));
  }
}

// Uniform grid on [0, L] with m nodes and composite trapezoid weights.
void trapezoid_grid(double length, int m, Eigen::VectorXd& nodes, Eigen::VectorXd& weights) {
  const double h = length / (m - 1);
  nodes.resize(m);
  weights.setConstant(m, h);
  for (int i = 0; i < m; ++i) nodes[i] = h * i;
  weights[0] = weights[m - 1] = 0.5 * h;
}

// Mode number j of the 1-D factor; Dirichlet starts at 1, Neumann at 0.
double axis_eigenvalue(int j, double length) {
  const double k = j * pi / length;
  return k * k;
}

double axis_eigenfunction(bool neumann, int j, double length, double x) {
  if (neumann) {
    if (j == 0) return 1.0 / std::sqrt(length);
    return std::sqrt(2.0 / length) * std::cos(j * pi * x / length);
  }
  return std::sqrt(2.0 / length) * std::sin(j * pi * x / length);
}

void check_orthonormal(const SpectralBasis& basis) {
  const double dev = basis.gram_deviation();
  if (!(dev <= kOrthonormalityGate)) {
    throw ValidationError(fmt::format(
        "basis {} with {} modes on {} nodes fails the orthonormality gate: max |G - I| = {:.3e}",
        to_string(basis.kind()), basis.n_modes(), basis.n_grid(), dev));
  }
}

}  // namespace

std::string to_string(BasisKind kind) {
  switch (kind) {
    case BasisKind::IntervalDirichlet: return "interval_dirichlet";
    case BasisKind::IntervalNeumann: return "interval_neumann";
    case BasisKind::RectDirichlet: return "rect_dirichlet";
    case BasisKind::RectNeumann: return "rect_neumann";
  }
  return "unknown";
}

BasisKind basis_kind_from_string(const std::string& name) {
  if (name == "interval_dirichlet") return BasisKind::IntervalDirichlet;
  if (name == "interval_neumann") return BasisKind::IntervalNeumann;
  if (name == "rect_dirichlet") return BasisKind::RectDirichlet;
  if (name == "rect_neumann") return BasisKind::RectNeumann;
  throw ValidationError(fmt::format("unknown basis kind '{}'", name));
}

bool is_neumann(BasisKind kind) {
  return kind == BasisKind::IntervalNeumann || kind == BasisKind::RectNeumann;
}

int dimension(BasisKind kind) {
  return (kind == BasisKind::IntervalDirichlet || kind == BasisKind::IntervalNeumann) ? 1 : 2;
}

Eigen::VectorXd SpectralBasis::synthesize(const Eigen::VectorXd& coeffs) const {
  if (coeffs.size() != n_modes()) {
    throw ValidationError(fmt::format("synthesize: expected {} coefficients, got {}", n_modes(),
                                      coeffs.size()));
  }
  require_finite(coeffs, "synthesize");
  return values_ * coeffs;
}

Eigen::VectorXd SpectralBasis::analyze(const Eigen::VectorXd& grid_values) const {
  if (grid_values.size() != n_grid()) {
    throw ValidationError(fmt::format("analyze: expected {} grid values, got {}", n_grid(),
                                      grid_values.size()));
  }
  require_finite(grid_values, "analyze");
  return values_.transpose() * weights_.cwiseProduct(grid_values);
}

double SpectralBasis::grid_inner(const Eigen::VectorXd& u, const Eigen::VectorXd& v) const {
  return (weights_.array() * u.array() * v.array()).sum();
}

double SpectralBasis::domain_measure() const {
  double measure = 1.0;
  for (double e : extent_) measure *= e;
  return measure;
}

double SpectralBasis::gram_deviation() const {
  const Eigen::MatrixXd gram = values_.transpose() * weights_.asDiagonal() * values_;
  return (gram - Eigen::MatrixXd::Identity(n_modes(), n_modes())).cwiseAbs().maxCoeff();
}

bool SpectralBasis::shares_grid_with(const SpectralBasis& other) const {
  return extent_ == other.extent_ && m_per_axis_ == other.m_per_axis_ &&
         dim() == other.dim();
}

SpectralBasis build_interval_basis(BasisKind kind, double length, int n_modes, int m_grid) {
  if (dimension(kind) != 1) {
    throw ValidationError("build_interval_basis: kind " + to_string(kind) + " is not 1-D");
  }
  if (!(length > 0.0) || !std::isfinite(length)) {
    throw ValidationError(fmt::format("interval length must be positive, got {}", length));
  }
  if (n_modes < 1) {
    throw ValidationError(fmt::format("n_modes must be >= 1, got {}", n_modes));
  }
  if (m_grid < 4 * n_modes) {
    throw ValidationError(fmt::format(
        "m_grid = {} too small for {} modes (need m_grid >= 4 * n_modes)", m_grid, n_modes));
  }

  SpectralBasis basis;
  basis.kind_ = kind;
  basis.extent_ = {length};
  basis.m_per_axis_ = m_grid;

  Eigen::VectorXd nodes;
  trapezoid_grid(length, m_grid, nodes, basis.weights_);
  basis.grid_points_ = nodes;

  const bool neumann = is_neumann(kind);
  const int first = neumann ? 0 : 1;
  basis.eigenvalues_.resize(n_modes);
  basis.values_.resize(m_grid, n_modes);
  for (int col = 0; col < n_modes; ++col) {
    const int j = first + col;
    basis.eigenvalues_[col] = axis_eigenvalue(j, length);
    basis.mode_numbers_.push_back({j, 0});
    for (int i = 0; i < m_grid; ++i) {
      basis.values_(i, col) = axis_eigenfunction(neumann, j, length, nodes[i]);
    }
  }
  check_orthonormal(basis);
  return basis;
}

SpectralBasis build_rect_basis(BasisKind kind, double lx, double ly, int n_modes, int m_grid) {
  if (dimension(kind) != 2) {
    throw ValidationError("build_rect_basis: kind " + to_string(kind) + " is not 2-D");
  }
  if (!(lx > 0.0) || !(ly > 0.0) || !std::isfinite(lx) || !std::isfinite(ly)) {
    throw ValidationError(fmt::format("rectangle extents must be positive, got ({}, {})", lx, ly));
  }
  if (n_modes < 1) {
    throw ValidationError(fmt::format("n_modes must be >= 1, got {}", n_modes));
  }
  // Per-axis anti-aliasing: a retained mode number never exceeds n_modes.
  if (m_grid < 4 * n_modes) {
    throw ValidationError(fmt::format(
        "m_grid = {} per axis too small for {} modes (need m_grid >= 4 * n_modes)", m_grid,
        n_modes));
  }

  const bool neumann = is_neumann(kind);
  const int first = neumann ? 0 : 1;

  struct Candidate {
    double eigenvalue;
    int j;
    int k;
  };
  std::vector<Candidate> candidates;
  for (int j = first; j < first + n_modes; ++j) {
    for (int k = first; k < first + n_modes; ++k) {
      candidates.push_back({axis_eigenvalue(j, lx) + axis_eigenvalue(k, ly), j, k});
    }
  }
  std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
    const double tol = 1e-12 * std::max({1.0, std::abs(a.eigenvalue), std::abs(b.eigenvalue)});
    if (std::abs(a.eigenvalue - b.eigenvalue) > tol) return a.eigenvalue < b.eigenvalue;
    if (a.j != b.j) return a.j < b.j;
    return a.k < b.k;
  });
  candidates.resize(n_modes);

  SpectralBasis basis;
  basis.kind_ = kind;
  basis.extent_ = {lx, ly};
  basis.m_per_axis_ = m_grid;

  Eigen::VectorXd xs, wx, ys, wy;
  trapezoid_grid(lx, m_grid, xs, wx);
  trapezoid_grid(ly, m_grid, ys, wy);
  const int m = m_grid * m_grid;
  basis.grid_points_.resize(m, 2);
  basis.weights_.resize(m);
  // x varies fastest.
  for (int iy = 0; iy < m_grid; ++iy) {
    for (int ix = 0; ix < m_grid; ++ix) {
      const int node = iy * m_grid + ix;
      basis.grid_points_(node, 0) = xs[ix];
      basis.grid_points_(node, 1) = ys[iy];
      basis.weights_[node] = wx[ix] * wy[iy];
    }
  }

  basis.eigenvalues_.resize(n_modes);
  basis.values_.resize(m, n_modes);
  for (int col = 0; col < n_modes; ++col) {
    const auto& c = candidates[col];
    basis.eigenvalues_[col] = c.eigenvalue;
    basis.mode_numbers_.push_back({c.j, c.k});
    for (int iy = 0; iy < m_grid; ++iy) {
      const double fy = axis_eigenfunction(neumann, c.k, ly, ys[iy]);
      for (int ix = 0; ix < m_grid; ++ix) {
        basis.values_(iy * m_grid + ix, col) = axis_eigenfunction(neumann, c.j, lx, xs[ix]) * fy;
      }
    }
  }
  check_orthonormal(basis);
  return basis;
}

double spectral_power(double eigenvalue, double exponent) {
  if (eigenvalue == 0.0) return 0.0;
  return std::pow(eigenvalue, exponent);
}

Eigen::VectorXd power_multipliers(const Eigen::VectorXd& eigenvalues, double exponent) {
  if (!(exponent > 0.0)) {
    throw ValidationError(fmt::format("fractional exponent must be positive, got {}", exponent));
  }
  Eigen::VectorXd out(eigenvalues.size());
  for (Eigen::Index j = 0; j < eigenvalues.size(); ++j) {
    out[j] = spectral_power(eigenvalues[j], exponent);
  }
  return out;
}

FractionalPower::FractionalPower(const SpectralBasis& basis, double exponent)
    : exponent_(exponent), multipliers_(power_multipliers(basis.eigenvalues(), exponent)) {}

Eigen::VectorXd FractionalPower::apply(const Eigen::VectorXd& coeffs) const {
  if (coeffs.size() != multipliers_.size()) {
    throw ValidationError(fmt::format("fractional power: expected {} coefficients, got {}",
                                      multipliers_.size(), coeffs.size()));
  }
  return multipliers_.cwiseProduct(coeffs);
}

Eigen::VectorXd apply_fractional(const SpectralBasis& basis, double exponent,
                                 const Eigen::VectorXd& coeffs) {
  return FractionalPower(basis, exponent).apply(coeffs);
}

Eigen::VectorXd kernel_projection(const SpectralBasis& basis, const Eigen::VectorXd& coeffs) {
  if (coeffs.size() != basis.n_modes()) {
    throw ValidationError(fmt::format("kernel_projection: expected {} coefficients, got {}",
                                      basis.n_modes(), coeffs.size()));
  }
  Eigen::VectorXd out = Eigen::VectorXd::Zero(coeffs.size());
  for (Eigen::Index j = 0; j < coeffs.size(); ++j) {
    if (basis.eigenvalues()[j] == 0.0) out[j] = coeffs[j];
  }
  return out;
}

double graph_norm(const SpectralBasis& basis, double exponent, const Eigen::VectorXd& coeffs) {
  const Eigen::VectorXd powered = apply_fractional(basis, exponent, coeffs);
  return std::sqrt(coeffs.squaredNorm() + powered.squaredNorm());
}

}  // namespace fracpf
