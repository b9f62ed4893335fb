#pragma once

// Closed-form Laplacian eigenbases on intervals and rectangles, realized on a
// uniform trapezoid grid. Coefficient vectors are always expressed in the
// orthonormal eigenbasis, so the H = L^2 norm of a Galerkin function equals the
// Euclidean norm of its coefficients.

#include <array>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace fracpf {

enum class BasisKind { IntervalDirichlet, IntervalNeumann, RectDirichlet, RectNeumann };

std::string to_string(BasisKind kind);
BasisKind basis_kind_from_string(const std::string& name);
bool is_neumann(BasisKind kind);
int dimension(BasisKind kind);

class SpectralBasis {
 public:
  BasisKind kind() const { return kind_; }
  int dim() const { return dimension(kind_); }
  // (L) in 1-D, (Lx, Ly) in 2-D.
  const std::vector<double>& extent() const { return extent_; }
  int n_modes() const { return static_cast<int>(eigenvalues_.size()); }
  int n_grid() const { return static_cast<int>(weights_.size()); }
  // Grid nodes per axis (the 2-D grid is the tensor product).
  int m_per_axis() const { return m_per_axis_; }

  const Eigen::VectorXd& eigenvalues() const { return eigenvalues_; }
  // n_grid x dim
  const Eigen::MatrixXd& grid_points() const { return grid_points_; }
  const Eigen::VectorXd& quad_weights() const { return weights_; }
  // n_grid x n_modes, column j holds eigenfunction j sampled on the grid.
  const Eigen::MatrixXd& eigenfunction_values() const { return values_; }
  // Per-axis mode numbers of each retained eigenpair; 1-D bases use only [0].
  const std::vector<std::array<int, 2>>& mode_numbers() const { return mode_numbers_; }

  Eigen::VectorXd synthesize(const Eigen::VectorXd& coeffs) const;
  Eigen::VectorXd analyze(const Eigen::VectorXd& grid_values) const;
  // Weighted (quadrature) inner product of two grid functions.
  double grid_inner(const Eigen::VectorXd& u, const Eigen::VectorXd& v) const;
  double domain_measure() const;
  // max |G - I| for the weighted Gram matrix G of the eigenfunction samples.
  double gram_deviation() const;
  // True when both bases sample the same nodes with the same weights.
  bool shares_grid_with(const SpectralBasis& other) const;

 private:
  friend SpectralBasis build_interval_basis(BasisKind, double, int, int);
  friend SpectralBasis build_rect_basis(BasisKind, double, double, int, int);

  BasisKind kind_ = BasisKind::IntervalNeumann;
  std::vector<double> extent_;
  int m_per_axis_ = 0;
  Eigen::VectorXd eigenvalues_;
  Eigen::MatrixXd grid_points_;
  Eigen::VectorXd weights_;
  Eigen::MatrixXd values_;
  std::vector<std::array<int, 2>> mode_numbers_;
};

inline constexpr double kOrthonormalityGate = 1e-8;

// m_grid >= 4 * n_modes, L > 0. Throws ValidationError otherwise or when the
// Gram matrix misses the orthonormality gate.
SpectralBasis build_interval_basis(BasisKind kind, double length, int n_modes, int m_grid);

// Tensor-product basis, eigenpairs sorted by eigenvalue with (j, k) lexicographic
// tie-break; the first n_modes are kept. m_grid counts nodes per axis.
SpectralBasis build_rect_basis(BasisKind kind, double lx, double ly, int n_modes, int m_grid);

// Spectral power of the operator realized by a basis: c_j -> lambda_j^exponent c_j,
// with 0^exponent := 0.
class FractionalPower {
 public:
  FractionalPower(const SpectralBasis& basis, double exponent);
  double exponent() const { return exponent_; }
  const Eigen::VectorXd& multipliers() const { return multipliers_; }
  Eigen::VectorXd apply(const Eigen::VectorXd& coeffs) const;

 private:
  double exponent_;
  Eigen::VectorXd multipliers_;
};

// lambda^exponent with the convention 0^exponent = 0 for exponent > 0.
double spectral_power(double eigenvalue, double exponent);
Eigen::VectorXd power_multipliers(const Eigen::VectorXd& eigenvalues, double exponent);

Eigen::VectorXd apply_fractional(const SpectralBasis& basis, double exponent,
                                 const Eigen::VectorXd& coeffs);

// H-projection onto ker of the operator: keeps zero-eigenvalue coefficients only.
Eigen::VectorXd kernel_projection(const SpectralBasis& basis, const Eigen::VectorXd& coeffs);

// (|c|^2 + |lambda^rho c|^2)^{1/2}
double graph_norm(const SpectralBasis& basis, double exponent, const Eigen::VectorXd& coeffs);

}  // namespace fracpf
