#include <atomic>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

#include <doctest.h>

#include "../scenarios.hpp"
#include "fracpf/analysis.hpp"
#include "fracpf/errors.hpp"

using namespace scenarios;

namespace {

Series random_series(int steps, int n, std::mt19937_64& rng) {
  std::normal_distribution<double> d(0.0, 1.0);
  Series s(steps + 1, Eigen::VectorXd(n));
  for (auto& v : s) {
    for (int j = 0; j < n; ++j) v[j] = d(rng);
  }
  return s;
}

}  // namespace

TEST_CASE("running integral is linear and obeys the Cauchy-Schwarz bound") {
  std::mt19937_64 rng(21);
  const double dt = 0.01;
  for (int k = 0; k < 10; ++k) {
    const Series a = random_series(100, 4, rng);
    const Series b = random_series(100, 4, rng);
    Series combo(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) combo[i] = 2.0 * a[i] - 3.0 * b[i];
    const Series ia = running_integral(a, dt), ib = running_integral(b, dt), ic = running_integral(combo, dt);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK((ic[i] - (2.0 * ia[i] - 3.0 * ib[i])).norm() <= 1e-12);
    const double T = dt * 100;
    CHECK(linf_norm(ia) <= std::sqrt(T) * l2_norm(a, dt) * (1 + 1e-12));
  }
  Series ones(11, Eigen::VectorXd::Ones(1));
  CHECK(running_integral(ones, 0.1).back()[0] == doctest::Approx(1.0));
}

TEST_CASE("continuous dependence") {
  const auto sys = smoke(1e-2, 8);
  SchemeConfig cfg;
  cfg.dt = 1e-2;
  const auto same = contdep_check(sys, cfg, 0.5, sys.data(), sys.data());
  CHECK(same.degenerate);
  CHECK(same.lhs == 0.0);
  CHECK(std::isnan(same.ratio));

  // phi0 perturbation with l = 0: the temperatures never see it.
  ProblemData d1 = sys.data();
  d1.coupling = Coupling::constant(0.0);
  ProblemData d2 = d1;
  d2.phi0 = field({constant(0.2), cosine(0.4, 1), cosine(0.1, 2), cosine(0.05, 3)});
  const auto sys0 = sys.with_data(d1);
  const auto r = contdep_check(sys0, cfg, 0.5, d1, d2);
  CHECK_FALSE(r.degenerate);
  CHECK(r.terms.theta_l2_h == 0.0);
  CHECK(r.terms.theta_int_linf_v == 0.0);
  CHECK(r.terms.phi_linf_h > 0.0);
  CHECK(r.lhs == doctest::Approx(r.terms.phi_linf_h + r.terms.phi_l2_v));
}

TEST_CASE("omega-limit on the kernel mode reaches the scalar root") {
  const double eps = 1e-2;
  // beta_eps(s) + pi(s) = 0 with pi(s) = -s: bisection on [0.5, 2].
  const auto pot = Potential::regular(1.0);
  double lo = 0.5, hi = 2.0;
  for (int k = 0; k < 200; ++k) {
    const double mid = 0.5 * (lo + hi);
    (pot.yosida(eps, mid) - mid < 0 ? lo : hi) = mid;
  }
  const double root = 0.5 * (lo + hi);

  ProblemData d;
  d.phi0 = field({constant(0.9)});
  auto b = interval(BasisKind::IntervalNeumann, 8, 64);
  const auto sys = assemble(d, b, b, 0.5, 0.5, eps, pot);
  SchemeConfig cfg;
  cfg.dt = 1e-2;
  IntegrateOptions o;
  o.final_time = 60.0;
  o.keep_trajectory = false;
  const auto run = integrate(sys, cfg, o);
  CHECK(run.final_state.phi[0] == doctest::Approx(root).epsilon(1e-9));
  const auto rep = omega_limit_probe(sys, run);
  CHECK(all_passed(rep.checks));
  CHECK(rep.stationary_residual <= 1e-8);
}

TEST_CASE("omega-limit with a decaying source and a Dirichlet temperature basis") {
  ProblemData d;
  d.theta0 = field({sine(0.5, 1)});
  d.phi0 = field({constant(0.3), cosine(0.2, 1)});
  d.source = field({sine(1.0, 1, 1.0)});
  d.coupling = Coupling::constant(0.5);
  auto a = interval(BasisKind::IntervalDirichlet, 8, 64);
  auto b = interval(BasisKind::IntervalNeumann, 8, 64);
  const auto sys = assemble(d, a, b, 0.5, 0.5, 1e-2, Potential::regular(1.0));
  SchemeConfig cfg;
  cfg.dt = 1e-2;
  IntegrateOptions o;
  o.final_time = 100.0;
  o.keep_trajectory = false;
  const auto run = integrate(sys, cfg, o);
  const auto rep = omega_limit_probe(sys, run);
  CHECK(rep.trivial_kernel_a);
  CHECK(all_passed(rep.checks));
  CHECK(rep.final_theta_norm <= 1e-6);
}

TEST_CASE("relaxation-limit solver on the linear kernel-free modes") {
  ProblemData d;
  d.phi0 = field({constant(0.4), cosine(0.3, 1), cosine(0.2, 2)});
  auto b = interval(BasisKind::IntervalNeumann, 6, 48);
  const auto sys = assemble(d, b, b, 0.5, 0.5, 1e-2, Potential::linear(0.0, 0.0));
  SchemeConfig cfg;
  cfg.scheme = Scheme::ImplicitProx;
  cfg.dt = 1e-3;
  const auto run = solve_relaxation_limit(sys, cfg, 1.0);
  REQUIRE_FALSE(run.failed);
  const auto init = project_data(sys);
  CHECK(run.final_state.phi[0] == doctest::Approx(init.phi[0]).epsilon(1e-13));
  for (int j = 1; j < 3; ++j) {
    CHECK(run.final_state.phi[j] == doctest::Approx(std::exp(-1.0) * init.phi[j]).epsilon(1e-3));
  }

  ProblemData tanh_data = d;
  tanh_data.coupling = Coupling::tanh(0.0, 1.0, 1.0);
  CHECK_THROWS_AS(solve_relaxation_limit(sys.with_data(tanh_data), cfg, 1.0), ValidationError);
}

TEST_CASE("relaxation study error columns decrease") {
  ProblemData d;
  d.theta0 = field({constant(0.2), cosine(0.5, 1)});
  d.phi0 = field({constant(0.1), cosine(0.6, 1), cosine(0.2, 3)});
  d.coupling = Coupling::constant(0.5);
  auto b = interval(BasisKind::IntervalNeumann, 8, 64);
  RelaxLimitSetup setup{assemble(d, b, b, 0.5, 0.5, 1e-2, Potential::regular(1.0)), {0.5, 0.25, 0.1}, {}, 0.5};
  setup.scheme.dt = 1e-2;
  setup.scheme.max_inner_iters = 200;
  const auto rep = relaxation_limit_study(setup, 2);
  CHECK(all_passed(rep.checks));
  CHECK(rep.study.values.size() == 3);
}

TEST_CASE("sigma-zero operator check") {
  const auto b = build_interval_basis(BasisKind::IntervalNeumann, 1.0, 8, 64);
  Eigen::VectorXd eta1 = Eigen::VectorXd::Zero(8);
  eta1[1] = 1.0;
  const auto rows = sigma_zero_operator_check(b, eta1, {0.25});
  const double expected = std::abs(std::sqrt(std::numbers::pi) - 1.0);
  CHECK(expected == doctest::Approx(0.7725).epsilon(1e-4));
  CHECK(rows[0].error == doctest::Approx(expected).epsilon(1e-12));

  Eigen::VectorXd kernel = Eigen::VectorXd::Zero(8);
  kernel[0] = 2.0;
  for (const auto& r : sigma_zero_operator_check(b, kernel, {0.5, 0.1})) CHECK(r.error == 0.0);

  const auto ladder = sigma_zero_operator_check(b, eta1, {0.2, 0.1, 0.05, 0.01});
  for (std::size_t i = 1; i < ladder.size(); ++i) CHECK(ladder[i].error < ladder[i - 1].error);
  for (const auto& r : ladder) CHECK(r.mismatch <= 1e-12);
}

TEST_CASE("hpqo probe") {
  const auto b = build_interval_basis(BasisKind::IntervalNeumann, 1.0, 8, 64);
  const double eps = 0.1;
  const auto samples = random_smooth_samples(8, 12, 1.0, 5);
  const auto lin = hpqo_probe(b, 0.5, Potential::linear(1.0, 0.0), eps, samples);
  CHECK(lin.violations == 0);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double expect = apply_fractional(b, 0.5, samples[i]).squaredNorm() / (1 + eps);
    CHECK(lin.values[i] == doctest::Approx(expect).epsilon(1e-10));
  }
  Eigen::VectorXd c = Eigen::VectorXd::Zero(8);
  c[0] = 0.7;
  CHECK(hpqo_probe(b, 0.5, Potential::double_obstacle(1.0), eps, {c}).values[0] == 0.0);

  const auto again = random_smooth_samples(8, 12, 1.0, 5);
  for (std::size_t i = 0; i < samples.size(); ++i) CHECK((again[i] - samples[i]).norm() == 0.0);
}

TEST_CASE("convergence study along the mode and eps axes") {
  const CaseFactory modes = [](double n) {
    SchemeConfig cfg;
    cfg.dt = 1e-2;
    return StudyCase{smoke(1e-2, static_cast<int>(n)), cfg};
  };
  const auto rep = convergence_study(StudyAxis::NModes, {2, 4, 8, 16}, modes, 0.2, ReferencePolicy::SelfFinest);
  CHECK(all_passed(rep.checks));
  for (std::size_t i = 1; i + 1 < rep.phi.size(); ++i) CHECK(rep.phi[i].linf_h < rep.phi[i - 1].linf_h);

  ProblemData d;
  d.theta0 = field({constant(0.3), cosine(0.5, 1)});
  d.phi0 = field({constant(0.2), cosine(0.7, 1)});
  d.coupling = Coupling::constant(1.0);
  auto b = interval(BasisKind::IntervalNeumann, 8, 64);
  const auto obstacle = assemble(d, b, b, 0.5, 0.5, 1e-2, Potential::double_obstacle(1.0));
  const CaseFactory eps = [&](double e) {
    SchemeConfig cfg;
    cfg.dt = 1e-2;
    return StudyCase{obstacle.with_parameters(0.5, e), cfg};
  };
  const auto erep = convergence_study(StudyAxis::Eps, {0.1, 0.05, 0.025, 0.0125}, eps, 1.0,
                                      ReferencePolicy::SelfFinest, std::nullopt, 2);
  for (std::size_t i = 1; i + 1 < erep.cauchy_phi.size(); ++i) {
    CHECK(erep.cauchy_phi[i] < erep.cauchy_phi[i - 1]);
  }
  CHECK_THROWS_AS(convergence_study(StudyAxis::Eps, {0.1}, eps, 1.0, ReferencePolicy::SelfFinest), ValidationError);
}

TEST_CASE("parallel_for covers every index and rethrows") {
  std::atomic<int> sum{0};
  parallel_for(50, 4, [&](int i) { sum += i; });
  CHECK(sum == 50 * 49 / 2);
  CHECK_THROWS_AS(parallel_for(8, 3, [](int i) {
                    if (i == 5) throw std::runtime_error("boom");
                  }),
                  std::runtime_error);
}
