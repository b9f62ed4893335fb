#include <cmath>
#include <random>

#include <doctest.h>

#include "fracpf/errors.hpp"
#include "fracpf/potentials.hpp"

using namespace fracpf;

namespace {

// Root of x + eps x^3 = s on [0, s] by plain bisection.
double cubic_root(double eps, double s) {
  double lo = 0.0, hi = s;
  for (int k = 0; k < 200; ++k) {
    const double mid = 0.5 * (lo + hi);
    (mid + eps * mid * mid * mid < s ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

TEST_CASE("resolvent oracles") {
  const auto obstacle = Potential::double_obstacle(1.0);
  for (double eps : {1e-3, 0.5, 10.0}) CHECK(obstacle.resolvent(eps, 2.0) == 1.0);

  const auto reg = Potential::regular(1.0);
  const double x = cubic_root(0.1, 1.0);
  CHECK(x == doctest::Approx(0.9218).epsilon(1e-4));
  CHECK(reg.resolvent(0.1, 1.0) == doctest::Approx(x).epsilon(1e-12));

  const auto log = Potential::logarithmic(1.5);
  for (double eps : {1e-4, 0.3, 5.0}) CHECK(log.resolvent(eps, 0.0) == 0.0);
}

TEST_CASE("yosida oracles") {
  const auto obstacle = Potential::double_obstacle(1.0);
  CHECK(obstacle.yosida(0.25, 1.5) == doctest::Approx(2.0));
  CHECK(obstacle.yosida(0.25, 0.5) == 0.0);
  CHECK(obstacle.yosida(3.0, -0.2) == 0.0);

  const auto reg = Potential::regular(1.0);
  const double y = reg.yosida(0.1, 1.0);
  CHECK(y == doctest::Approx((1.0 - cubic_root(0.1, 1.0)) / 0.1).epsilon(1e-10));
  CHECK(y == doctest::Approx(0.782).epsilon(1e-3));
  CHECK(y <= reg.beta_min(1.0));
}

TEST_CASE("moreau envelope oracles") {
  const auto obstacle = Potential::double_obstacle(1.0);
  CHECK(obstacle.moreau(0.5, 1.5) == doctest::Approx(0.25));
  for (const auto& p : {Potential::regular(1.0), Potential::logarithmic(1.5), obstacle}) {
    CHECK(p.moreau(0.1, 0.0) == 0.0);
  }
  // Dense grid minimization of (tau - 1)^2 / 0.2 + tau^4 / 4.
  double best = 1e300;
  const int n = 2000000;
  for (int i = 0; i <= n; ++i) {
    const double tau = static_cast<double>(i) / n;
    best = std::min(best, (tau - 1) * (tau - 1) / 0.2 + tau * tau * tau * tau / 4);
  }
  CHECK(std::abs(Potential::regular(1.0).moreau(0.1, 1.0) - best) <= 1e-8);
}

TEST_CASE("envelope converges up to the potential as eps decreases") {
  const auto reg = Potential::regular(1.0);
  double prev = 0.0;
  for (double eps : {1.0, 0.1, 0.01, 1e-3, 1e-5}) {
    const double v = reg.moreau(eps, 1.3);
    CHECK(v >= prev);
    prev = v;
  }
  CHECK(prev == doctest::Approx(reg.beta_hat(1.3)).epsilon(1e-4));
}

TEST_CASE("consistency and derivative identity on random samples") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> s_dist(-2.5, 2.5);
  std::uniform_real_distribution<double> e_dist(-3.0, 0.0);
  const std::vector<Potential> kinds = {Potential::regular(1.0), Potential::logarithmic(1.5),
                                        Potential::double_obstacle(1.0)};
  for (const auto& p : kinds) {
    for (int k = 0; k < 300; ++k) {
      const double s = s_dist(rng);
      const double eps = std::pow(10.0, e_dist(rng));
      const auto r = p.resolve(eps, s);
      if (p.kind() == PotentialKind::Regular) {
        CHECK(std::abs(r.slope - p.beta_min(r.x)) <= 1e-9 * std::max(1.0, std::abs(r.slope)));
      }
      // beta_eps = (beta_hat_eps)' by central differences.
      const double h = 1e-6 * std::max(eps, 1e-3);
      const double fd = (p.moreau(eps, s + h) - p.moreau(eps, s - h)) / (2 * h);
      const double y = p.yosida(eps, s);
      CHECK(std::abs(fd - y) <= 1e-5 * std::max(1.0, std::abs(y)));
    }
  }
}

TEST_CASE("logarithmic potential at the closure of its domain") {
  const auto log = Potential::logarithmic(1.5);
  CHECK(log.beta_hat(1.0) == doctest::Approx(2 * std::log(2.0)));
  CHECK(log.beta_hat(-1.0) == doctest::Approx(2 * std::log(2.0)));
  CHECK(std::isnan(log.beta_min(1.0)));
  CHECK(std::isinf(log.beta_hat(1.01)));
  CHECK_FALSE(log.in_beta_domain(1.0));
  CHECK(log.in_beta_domain(0.999));
}

TEST_CASE("split conventions") {
  const auto reg = Potential::regular(1.0);
  for (double s : {-1.7, -0.3, 0.0, 0.4, 2.0}) {
    CHECK(reg.total(s) == doctest::Approx((s * s - 1) * (s * s - 1) / 4));
  }
  CHECK(reg.pi(0.7) == doctest::Approx(-0.7));
  CHECK(Potential::logarithmic(2.0).pi(0.5) == doctest::Approx(-2.0));
  CHECK(Potential::double_obstacle(0.5).pi(0.5) == doctest::Approx(-0.5));
  CHECK(reg.beta_hat(0.0) == 0.0);
  CHECK_THROWS_AS(Potential::logarithmic(1.0), ValidationError);
  CHECK_THROWS_AS(Potential::double_obstacle(0.0), ValidationError);
  CHECK_THROWS_AS(reg.resolvent(0.0, 1.0), ValidationError);
}

TEST_CASE("coercivity probe") {
  const auto quartic = Potential::regular(0.0);
  const auto rep = coercivity_probe(quartic, {1e-2}, 3.0);
  CHECK(rep.ok);
  CHECK(rep.alpha > 0.0);

  const auto obstacle = Potential::double_obstacle(0.5);
  const auto obs = coercivity_probe(obstacle, {1e-3}, 3.0);
  CHECK(obs.ok);
  CHECK(obs.alpha > 0.0);
}

TEST_CASE("custom tables") {
  CustomTables t;
  t.nodes = {-2, -1, 0, 1, 2};
  t.beta_min = {-4, -1, 0, 1, 4};
  t.pi = {2, 1, 0, -1, -2};
  const auto p = Potential::custom(t);
  CHECK(p.beta_min(0.5) == doctest::Approx(0.5));
  CHECK(p.beta_hat(1.0) == doctest::Approx(0.5));
  CHECK(p.beta_hat(-1.0) == doctest::Approx(0.5));
  CHECK(p.pi(1.5) == doctest::Approx(-1.5));
  const auto r = p.resolve(0.5, 1.0);
  CHECK(r.x + 0.5 * p.beta_min(r.x) == doctest::Approx(1.0).epsilon(1e-12));

  CustomTables bad = t;
  bad.beta_min = {0, 1, 0, 1, 4};  // decreasing piece: beta_hat not convex
  CHECK_THROWS_AS(Potential::custom(bad), ValidationError);
  CustomTables short_table = t;
  short_table.pi.pop_back();
  CHECK_THROWS_AS(Potential::custom(short_table), ValidationError);

  CHECK(Potential::zero().is_zero());
  CHECK_FALSE(p.is_zero());
}
