#include <algorithm>
#include <cmath>
#include <random>

#include "fracpf/cli.hpp"

namespace fracpf {

namespace {

struct Tally {
  SelftestRow row;
  void sample(double excess) {
    ++row.samples;
    row.worst = row.samples == 1 ? excess : std::max(row.worst, excess);
    if (!(excess <= row.tolerance)) ++row.violations;
  }
};

Tally tally(const std::string& suite, const std::string& check, double tolerance) {
  Tally t;
  t.row.suite = suite;
  t.row.check = check;
  t.row.tolerance = tolerance;
  return t;
}

void spectral_suite(std::mt19937_64& rng, std::vector<SelftestRow>& rows) {
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::uniform_real_distribution<double> expo(0.05, 1.5);
  const std::vector<SpectralBasis> bases = {
      build_interval_basis(BasisKind::IntervalNeumann, 1.0, 64, 512),
      build_interval_basis(BasisKind::IntervalDirichlet, 1.0, 64, 512),
      build_rect_basis(BasisKind::RectNeumann, 1.0, 2.0, 16, 64),
      build_rect_basis(BasisKind::RectDirichlet, 1.0, 2.0, 16, 64),
  };
  for (const auto& basis : bases) {
    const std::string suite = "spectral/" + to_string(basis.kind());
    auto gram = tally(suite, "gram_deviation", 1e-10);
    gram.sample(basis.gram_deviation());
    rows.push_back(gram.row);

    const int n = basis.n_modes();
    auto semigroup = tally(suite, "semigroup_relative", 1e-13);
    auto transform = tally(suite, "analyze_synthesize_roundtrip", 1e-12);
    for (int k = 0; k < 100; ++k) {
      Eigen::VectorXd v(n);
      for (int j = 0; j < n; ++j) v[j] = unit(rng);
      const double r1 = expo(rng);
      const double r2 = expo(rng);
      const Eigen::VectorXd twice = apply_fractional(basis, r2, apply_fractional(basis, r1, v));
      const Eigen::VectorXd once = apply_fractional(basis, r1 + r2, v);
      semigroup.sample((twice - once).norm() / std::max(once.norm(), 1e-300));
      transform.sample((basis.analyze(basis.synthesize(v)) - v).norm() / v.norm());
    }
    rows.push_back(semigroup.row);
    rows.push_back(transform.row);
  }
}

void potential_suite(std::mt19937_64& rng, std::vector<SelftestRow>& rows) {
  std::uniform_real_distribution<double> s_dist(-3.0, 3.0);
  std::uniform_real_distribution<double> log_eps(std::log(1e-4), 0.0);
  std::uniform_real_distribution<double> stretch(1.0, 3.0);
  const std::vector<Potential> kinds = {Potential::regular(1.0), Potential::logarithmic(1.5),
                                        Potential::double_obstacle(1.0)};
  for (const auto& pot : kinds) {
    const std::string suite = "potential/" + to_string(pot.kind());
    // Excess over the allowed bound, so that <= 0 means the property holds.
    auto lower = tally(suite, "envelope_nonnegative", 1e-14);
    auto upper = tally(suite, "envelope_below_potential", 0.0);
    auto monotone = tally(suite, "envelope_decreasing_in_eps", 0.0);
    auto bound = tally(suite, "yosida_below_minimal_section", 0.0);
    auto lipschitz = tally(suite, "yosida_lipschitz_1_over_eps", 0.0);
    auto nonexpansive = tally(suite, "resolvent_nonexpansive", 0.0);
    auto residual = tally(suite, "resolvent_residual", 1e-10);
    for (int k = 0; k < 1000; ++k) {
      const double s = s_dist(rng);
      const double t = s_dist(rng);
      const double eps = std::exp(log_eps(rng));
      const double eps2 = eps * stretch(rng);
      const double env = pot.moreau(eps, s);
      const double hat = pot.beta_hat(s);
      lower.sample(-env);
      upper.sample(std::isfinite(hat) ? env - hat - 1e-12 * std::max(1.0, std::abs(hat)) : -1.0);
      monotone.sample(pot.moreau(eps2, s) - env - 1e-12 * std::max(1.0, std::abs(env)));
      const double ys = pot.yosida(eps, s);
      const double bmin = pot.beta_min(s);
      bound.sample(std::isfinite(bmin) ? std::abs(ys) - std::abs(bmin) * (1.0 + 1e-12) - 1e-12 : -1.0);
      const double yt = pot.yosida(eps, t);
      lipschitz.sample(std::abs(ys - yt) - std::abs(s - t) / eps * (1.0 + 1e-10) - 1e-12);
      const auto rs = pot.resolve(eps, s);
      const auto rt = pot.resolve(eps, t);
      nonexpansive.sample(std::abs(rs.x - rt.x) - std::abs(s - t) * (1.0 + 1e-12) - 1e-14);
      // The slope must be an element of beta(J(s)); for the log kind compare through
      // the inverse graph, which is better conditioned near the endpoints.
      switch (pot.kind()) {
        case PotentialKind::Logarithmic:
          residual.sample(std::abs(std::tanh(0.5 * rs.slope) - rs.x));
          break;
        case PotentialKind::DoubleObstacle: {
          const bool inside = std::abs(rs.x) < 1.0;
          const bool off_graph = (inside && rs.slope != 0.0) || (rs.x == 1.0 && rs.slope < 0.0) ||
                                 (rs.x == -1.0 && rs.slope > 0.0) || std::abs(rs.x) > 1.0;
          residual.sample(off_graph ? 1.0 : std::abs(rs.x + eps * rs.slope - s));
          break;
        }
        default:
          residual.sample(std::abs(rs.x + eps * pot.beta_min(rs.x) - s));
          break;
      }
    }
    for (const auto* t : {&lower, &upper, &monotone, &bound, &lipschitz, &nonexpansive, &residual}) {
      rows.push_back(t->row);
    }
  }
}

}  // namespace

std::vector<SelftestRow> run_selftest(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<SelftestRow> rows;
  spectral_suite(rng, rows);
  potential_suite(rng, rows);
  return rows;
}

}  // namespace fracpf
