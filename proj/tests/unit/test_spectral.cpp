#include <cmath>
#include <numbers>
#include <random>

#include <doctest.h>

#include "fracpf/errors.hpp"
#include "fracpf/spectral.hpp"

using namespace fracpf;
using std::numbers::pi;

namespace {

Eigen::VectorXd unit(int n, int j) {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(n);
  v[j] = 1.0;
  return v;
}

Eigen::VectorXd random_vector(int n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  Eigen::VectorXd v(n);
  for (int j = 0; j < n; ++j) v[j] = d(rng);
  return v;
}

}  // namespace

TEST_CASE("interval eigenvalues") {
  const auto neu = build_interval_basis(BasisKind::IntervalNeumann, 1.0, 3, 24);
  CHECK(neu.eigenvalues()[0] == 0.0);
  CHECK(neu.eigenvalues()[1] == doctest::Approx(pi * pi).epsilon(1e-14));
  CHECK(neu.eigenvalues()[2] == doctest::Approx(4 * pi * pi).epsilon(1e-14));

  const auto dir = build_interval_basis(BasisKind::IntervalDirichlet, 1.0, 2, 65);
  CHECK(dir.eigenvalues()[0] == doctest::Approx(pi * pi).epsilon(1e-14));
  CHECK(dir.eigenvalues()[1] == doctest::Approx(4 * pi * pi).epsilon(1e-14));
  // x = 0.5 is node 32 of 65.
  CHECK(dir.grid_points()(32, 0) == doctest::Approx(0.5));
  CHECK(dir.eigenfunction_values()(32, 0) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-14));

  const auto wide = build_interval_basis(BasisKind::IntervalNeumann, 2.0, 1, 8);
  CHECK(wide.eigenvalues()[0] == 0.0);
  for (int i = 0; i < wide.n_grid(); ++i) {
    CHECK(wide.eigenfunction_values()(i, 0) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-15));
  }
}

TEST_CASE("rectangle eigenvalues follow the sorted sums of axis spectra") {
  const auto neu = build_rect_basis(BasisKind::RectNeumann, 1.0, 1.0, 4, 16);
  const double p2 = pi * pi;
  CHECK(neu.eigenvalues()[0] == 0.0);
  CHECK(neu.eigenvalues()[1] == doctest::Approx(p2));
  CHECK(neu.eigenvalues()[2] == doctest::Approx(p2));
  CHECK(neu.eigenvalues()[3] == doctest::Approx(2 * p2));
  // Tie between (1,0) and (0,1) broken lexicographically.
  CHECK(neu.mode_numbers()[1] == std::array<int, 2>{0, 1});
  CHECK(neu.mode_numbers()[2] == std::array<int, 2>{1, 0});

  const auto dir = build_rect_basis(BasisKind::RectDirichlet, 1.0, 1.0, 1, 8);
  CHECK(dir.eigenvalues()[0] == doctest::Approx(2 * p2));

  const auto tall = build_rect_basis(BasisKind::RectNeumann, 1.0, 2.0, 2, 8);
  CHECK(tall.eigenvalues()[1] == doctest::Approx(p2 / 4));
}

TEST_CASE("eigenvalues ascend and kernels have the expected dimension") {
  for (auto kind : {BasisKind::IntervalNeumann, BasisKind::IntervalDirichlet}) {
    const auto b = build_interval_basis(kind, 1.3, 32, 128);
    for (int j = 1; j < b.n_modes(); ++j) CHECK(b.eigenvalues()[j] >= b.eigenvalues()[j - 1]);
    const int zeros = static_cast<int>((b.eigenvalues().array() == 0.0).count());
    CHECK(zeros == (kind == BasisKind::IntervalNeumann ? 1 : 0));
  }
}

TEST_CASE("orthonormality gate and argument validation") {
  for (auto kind : {BasisKind::IntervalNeumann, BasisKind::IntervalDirichlet}) {
    CHECK(build_interval_basis(kind, 1.0, 64, 256).gram_deviation() <= 1e-10);
  }
  CHECK(build_rect_basis(BasisKind::RectDirichlet, 1.0, 0.5, 20, 80).gram_deviation() <= 1e-10);
  CHECK_THROWS_AS(build_interval_basis(BasisKind::IntervalNeumann, 1.0, 16, 63), ValidationError);
  CHECK_THROWS_AS(build_interval_basis(BasisKind::IntervalNeumann, 0.0, 4, 32), ValidationError);
  CHECK_THROWS_AS(build_interval_basis(BasisKind::IntervalNeumann, 1.0, 0, 32), ValidationError);
  CHECK_THROWS_AS(build_rect_basis(BasisKind::IntervalNeumann, 1.0, 1.0, 4, 32), ValidationError);
}

TEST_CASE("fractional powers") {
  const auto b = build_interval_basis(BasisKind::IntervalNeumann, 1.0, 8, 64);
  const Eigen::VectorXd half = apply_fractional(b, 0.5, unit(8, 1));
  CHECK(half[1] == doctest::Approx(pi).epsilon(1e-14));
  CHECK(apply_fractional(b, 0.3, unit(8, 0)).norm() == 0.0);
  CHECK(spectral_power(0.0, 0.7) == 0.0);

  std::mt19937_64 rng(3);
  for (int k = 0; k < 20; ++k) {
    const Eigen::VectorXd v = random_vector(8, rng);
    const Eigen::VectorXd twice = apply_fractional(b, 1.0, apply_fractional(b, 1.0, v));
    const Eigen::VectorXd once = apply_fractional(b, 2.0, v);
    CHECK((twice - once).norm() <= 1e-13 * once.norm());
  }
  const FractionalPower op(b, 0.25);
  CHECK((op.apply(unit(8, 2)) - apply_fractional(b, 0.25, unit(8, 2))).norm() == 0.0);
}

TEST_CASE("kernel projection") {
  const auto neu = build_interval_basis(BasisKind::IntervalNeumann, 1.0, 8, 64);
  Eigen::VectorXd v = unit(8, 0) + unit(8, 1);
  const Eigen::VectorXd p = kernel_projection(neu, v);
  CHECK(p[0] == 1.0);
  CHECK(p.tail(7).norm() == 0.0);

  const auto dir = build_interval_basis(BasisKind::IntervalDirichlet, 1.0, 8, 64);
  std::mt19937_64 rng(5);
  CHECK(kernel_projection(dir, random_vector(8, rng)).norm() == 0.0);

  // Mean of x on (0,1).
  Eigen::VectorXd x = neu.grid_points().col(0);
  const Eigen::VectorXd mean = neu.synthesize(kernel_projection(neu, neu.analyze(x)));
  CHECK((mean.array() - 0.5).abs().maxCoeff() <= 1e-12);

  // Idempotent and self-adjoint.
  const Eigen::VectorXd u = random_vector(8, rng);
  const Eigen::VectorXd w = random_vector(8, rng);
  CHECK((kernel_projection(neu, kernel_projection(neu, u)) - kernel_projection(neu, u)).norm() <= 1e-15);
  CHECK(kernel_projection(neu, u).dot(w) == doctest::Approx(u.dot(kernel_projection(neu, w))).epsilon(1e-12));
}

TEST_CASE("analyze and synthesize") {
  const auto b = build_interval_basis(BasisKind::IntervalNeumann, 1.0, 8, 64);
  const Eigen::VectorXd back = b.analyze(b.synthesize(unit(8, 1)));
  CHECK(back[1] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK((back - unit(8, 1)).cwiseAbs().maxCoeff() <= 1e-12);

  const Eigen::VectorXd c = b.analyze(Eigen::VectorXd::Constant(b.n_grid(), 2.5));
  CHECK(c[0] == doctest::Approx(2.5).epsilon(1e-13));
  CHECK(c.tail(7).cwiseAbs().maxCoeff() <= 1e-12);

  Eigen::VectorXd cos3(b.n_grid());
  for (int i = 0; i < b.n_grid(); ++i) cos3[i] = std::cos(3 * pi * b.grid_points()(i, 0));
  Eigen::VectorXd c3 = b.analyze(cos3);
  CHECK(c3[3] == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));
  c3[3] = 0.0;
  CHECK(c3.cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("graph norms") {
  const auto b = build_interval_basis(BasisKind::IntervalNeumann, 1.0, 8, 64);
  CHECK(graph_norm(b, 0.5, Eigen::VectorXd::Zero(8)) == 0.0);
  CHECK(graph_norm(b, 0.9, unit(8, 0)) == 1.0);
  CHECK(graph_norm(b, 1.0, unit(8, 1)) == doctest::Approx(std::sqrt(1 + std::pow(pi, 4))).epsilon(1e-14));

  // |B^sigma v| <= graph norm at sigma0 for sigma <= sigma0.
  std::mt19937_64 rng(9);
  const Eigen::VectorXd v = random_vector(8, rng);
  const double bound = graph_norm(b, 0.5, v);
  for (double s : {0.5, 0.3, 0.1, 0.01}) CHECK(apply_fractional(b, s, v).norm() <= bound);
}
