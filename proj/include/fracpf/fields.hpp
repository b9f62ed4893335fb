#pragma once

// Problem data as functions of (x, t): a small built-in expression vocabulary
// (constants, cos/sin monomials, Gaussians, each with an optional exp(-rate*t)
// factor) or tabulated grid values.

#include <array>
#include <vector>

#include <Eigen/Dense>

#include "fracpf/spectral.hpp"

namespace fracpf {

struct ExprTerm {
  enum class Shape { Constant, Cos, Sin, Gaussian };
  Shape shape = Shape::Constant;
  double amplitude = 1.0;
  // cos/sin: cos(k_x pi x / L_x) [* cos(k_y pi y / L_y) in 2-D].
  std::array<int, 2> modes{0, 0};
  // Gaussian: exp(-|x - center|^2 / (2 width^2)).
  std::array<double, 2> center{0.0, 0.0};
  double width = 1.0;
  // Time factor exp(-decay * t).
  double decay = 0.0;

  double eval(const double* x, int dim, const std::vector<double>& extent, double t) const;
};

const char* to_string(ExprTerm::Shape shape);
ExprTerm::Shape expr_shape_from_string(const std::string& name);

class SpaceTimeField {
 public:
  SpaceTimeField() = default;  // identically zero
  static SpaceTimeField expression(std::vector<ExprTerm> terms);
  // Constant in time.
  static SpaceTimeField grid_values(Eigen::VectorXd values);
  // Piecewise linear in time between the tabulated samples, constant beyond.
  static SpaceTimeField table(std::vector<double> times, std::vector<Eigen::VectorXd> values);

  bool is_zero() const;
  bool is_tabulated() const { return !table_values_.empty(); }
  const std::vector<ExprTerm>& terms() const { return terms_; }
  const std::vector<double>& table_times() const { return table_times_; }
  const std::vector<Eigen::VectorXd>& table_values() const { return table_values_; }

  Eigen::VectorXd sample(const SpectralBasis& basis, double t) const;

 private:
  std::vector<ExprTerm> terms_;
  std::vector<double> table_times_;
  std::vector<Eigen::VectorXd> table_values_;
};

}  // namespace fracpf
