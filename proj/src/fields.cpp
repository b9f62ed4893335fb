#include "fracpf/fields.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <fmt/format.h>

#include "fracpf/errors.hpp"

namespace fracpf {

double ExprTerm::eval(const double* x, int dim, const std::vector<double>& extent, double t) const {
  double value = amplitude;
  switch (shape) {
    case Shape::Constant: break;
    case Shape::Cos:
      for (int d = 0; d < dim; ++d) value *= std::cos(modes[d] * std::numbers::pi * x[d] / extent[d]);
      break;
    case Shape::Sin:
      for (int d = 0; d < dim; ++d) value *= std::sin(modes[d] * std::numbers::pi * x[d] / extent[d]);
      break;
    case Shape::Gaussian: {
      double r2 = 0.0;
      for (int d = 0; d < dim; ++d) r2 += (x[d] - center[d]) * (x[d] - center[d]);
      value *= std::exp(-r2 / (2.0 * width * width));
      break;
    }
  }
  if (decay != 0.0) value *= std::exp(-decay * t);
  return value;
}

const char* to_string(ExprTerm::Shape shape) {
  switch (shape) {
    case ExprTerm::Shape::Constant: return "const";
    case ExprTerm::Shape::Cos: return "cos";
    case ExprTerm::Shape::Sin: return "sin";
    case ExprTerm::Shape::Gaussian: return "gaussian";
  }
  return "unknown";
}

ExprTerm::Shape expr_shape_from_string(const std::string& name) {
  if (name == "const") return ExprTerm::Shape::Constant;
  if (name == "cos") return ExprTerm::Shape::Cos;
  if (name == "sin") return ExprTerm::Shape::Sin;
  if (name == "gaussian") return ExprTerm::Shape::Gaussian;
  throw ValidationError(fmt::format("unknown expression shape '{}'", name));
}

SpaceTimeField SpaceTimeField::expression(std::vector<ExprTerm> terms) {
  for (const auto& term : terms) {
    if (!std::isfinite(term.amplitude) || !std::isfinite(term.decay)) {
      throw ValidationError("expression term with non-finite amplitude or decay");
    }
    if (term.shape == ExprTerm::Shape::Gaussian && !(term.width > 0.0)) {
      throw ValidationError("gaussian term needs a positive width");
    }
  }
  SpaceTimeField field;
  field.terms_ = std::move(terms);
  return field;
}

SpaceTimeField SpaceTimeField::grid_values(Eigen::VectorXd values) {
  return table({0.0}, {std::move(values)});
}

SpaceTimeField SpaceTimeField::table(std::vector<double> times, std::vector<Eigen::VectorXd> values) {
  if (times.empty() || times.size() != values.size()) {
    throw ValidationError("tabulated field: times and value rows must be non-empty and match");
  }
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (!values[i].allFinite()) throw ValidationError("tabulated field: non-finite value");
    if (values[i].size() != values[0].size()) {
      throw ValidationError("tabulated field: rows have different lengths");
    }
    if (i > 0 && !(times[i] > times[i - 1])) {
      throw ValidationError("tabulated field: times must be strictly increasing");
    }
  }
  SpaceTimeField field;
  field.table_times_ = std::move(times);
  field.table_values_ = std::move(values);
  return field;
}

bool SpaceTimeField::is_zero() const {
  if (is_tabulated()) {
    return std::all_of(table_values_.begin(), table_values_.end(),
                       [](const Eigen::VectorXd& v) { return v.isZero(0.0); });
  }
  return std::all_of(terms_.begin(), terms_.end(),
                     [](const ExprTerm& term) { return term.amplitude == 0.0; });
}

Eigen::VectorXd SpaceTimeField::sample(const SpectralBasis& basis, double t) const {
  const int m = basis.n_grid();
  if (is_tabulated()) {
    if (table_values_[0].size() != m) {
      throw ValidationError(fmt::format("tabulated field has {} values but the grid has {} nodes",
                                        table_values_[0].size(), m));
    }
    if (t <= table_times_.front()) return table_values_.front();
    if (t >= table_times_.back()) return table_values_.back();
    const auto it = std::upper_bound(table_times_.begin(), table_times_.end(), t);
    const std::size_t i = static_cast<std::size_t>(it - table_times_.begin()) - 1;
    const double w = (t - table_times_[i]) / (table_times_[i + 1] - table_times_[i]);
    return (1.0 - w) * table_values_[i] + w * table_values_[i + 1];
  }
  Eigen::VectorXd out = Eigen::VectorXd::Zero(m);
  const int dim = basis.dim();
  const auto& pts = basis.grid_points();
  double x[2] = {0.0, 0.0};
  for (int i = 0; i < m; ++i) {
    for (int d = 0; d < dim; ++d) x[d] = pts(i, d);
    for (const auto& term : terms_) out[i] += term.eval(x, dim, basis.extent(), t);
  }
  return out;
}

}  // namespace fracpf
