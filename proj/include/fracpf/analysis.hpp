#pragma once

// Experiment drivers: convergence ladders, the continuous-dependence ratio,
// long-time stationarity, the sigma -> 0 relaxation limit and small operator
// diagnostics.

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fracpf/galerkin.hpp"
#include "fracpf/timestepper.hpp"

namespace fracpf {

struct Check {
  std::string name;
  bool passed = false;
  std::string detail;
};

bool all_passed(const std::vector<Check>& checks);

// Time-discrete series: one coefficient vector per time level t_k = k dt.
using Series = std::vector<Eigen::VectorXd>;

// (1*v)(t_k) = sum_{i<k} dt v_i, the left-endpoint running integral.
Series running_integral(const Series& v, double dt);
// max_k |v_k| (optionally in the graph norm with multipliers `half`).
double linf_norm(const Series& v, const Eigen::VectorXd* half = nullptr);
// (sum_{k<N} dt |v_k|^2)^{1/2}, left-endpoint rule over the N steps.
double l2_norm(const Series& v, double dt, const Eigen::VectorXd* half = nullptr);

Series theta_series(const RunOutput& run);
Series phi_series(const RunOutput& run);
// Elementwise difference, zero-padding the shorter coefficient vectors.
Series difference(const Series& a, const Series& b);
// Keeps every stride-th level.
Series subsample(const Series& v, int stride);

struct FieldErrors {
  double linf_h = 0.0;  // L^inf(0,T;H)
  double l2_h = 0.0;    // L^2(0,T;H)
  double l2_v = 0.0;    // L^2(0,T;V) in the graph norm
};

struct StudyReport {
  std::string parameter;
  std::vector<double> values;
  std::vector<FieldErrors> theta;
  std::vector<FieldErrors> phi;
  // |phi_i - phi_{i+1}|_{L^inf(H)} between adjacent levels; last entry NaN.
  std::vector<double> cauchy_phi;
  // log(e_i / e_{i+1}) / log(v_i / v_{i+1}) on the phi L^inf(H) error; last entry NaN.
  std::vector<double> order;
  std::vector<Check> checks;
};

enum class StudyAxis { NModes, Eps, Dt, Sigma };
std::string to_string(StudyAxis axis);
StudyAxis study_axis_from_string(const std::string& name);

enum class ReferencePolicy { SelfFinest, Analytic };
std::string to_string(ReferencePolicy policy);
ReferencePolicy reference_policy_from_string(const std::string& name);

struct StudyCase {
  DiscreteSystem system;
  SchemeConfig scheme;
};
using CaseFactory = std::function<StudyCase(double value)>;

// Exact coefficients at time t; the returned state may be longer than a level's.
using AnalyticSolution = std::function<State(double t)>;

// Per-mode exponentials for the decoupled linear problem (zero potential,
// l = 0, f = 0); nullopt when the system has any other term.
std::optional<AnalyticSolution> linear_exact_solution(const DiscreteSystem& system);

// Runs each level (values ordered coarse to fine) up to final_time and measures
// errors against the finest level or the analytic solution. Comparisons use the
// time levels of the coarser run. Fails with SolverError if any level fails.
StudyReport convergence_study(StudyAxis axis, const std::vector<double>& values,
                              const CaseFactory& factory, double final_time,
                              ReferencePolicy policy,
                              const std::optional<AnalyticSolution>& analytic = std::nullopt,
                              int jobs = 1);

struct ContdepTerms {
  double theta_l2_h = 0.0;         // |theta1 - theta2|_{L^2(H)}
  double theta_int_linf_v = 0.0;   // |1*(theta1 - theta2)|_{L^inf(V_A^r)}
  double phi_linf_h = 0.0;         // |phi1 - phi2|_{L^inf(H)}
  double phi_l2_v = 0.0;           // |phi1 - phi2|_{L^2(V_B^sigma)}
  double source_int_l2_h = 0.0;    // |1*(f1 - f2)|_{L^2(H)}
  double theta0_h = 0.0;
  double phi0_h = 0.0;
};

struct ContdepResult {
  double scale = 0.0;
  double lhs = 0.0;
  double rhs = 0.0;
  double ratio = 0.0;  // NaN when degenerate
  bool degenerate = false;
  ContdepTerms terms;
};

// Both runs use `system` with its data replaced. Data norms are quadrature
// norms of the supplied fields.
ContdepResult contdep_check(const DiscreteSystem& system, const SchemeConfig& scheme,
                            double final_time, const ProblemData& data1, const ProblemData& data2);

struct ContdepReport {
  std::vector<ContdepResult> rows;
  // max/min - 1 over the non-degenerate ratios.
  double ratio_spread = 0.0;
  std::vector<Check> checks;
};

// data2 = perturb(scale) for every scale; passes when all ratios are finite and
// their spread is below spread_tol.
ContdepReport contdep_scan(const DiscreteSystem& system, const SchemeConfig& scheme,
                           double final_time, const ProblemData& data1,
                           const std::function<ProblemData(double)>& perturb,
                           const std::vector<double>& scales, double spread_tol = 0.2,
                           int jobs = 1);

struct OmegaThresholds {
  double tail_fraction = 0.1;
  double tail_tol = 1e-6;
  double residual_tol = 1e-6;
  double theta_tol = 1e-6;
  // Slack for the monotone-tail test once values sit at round-off level.
  double noise_floor = 1e-13;
};

struct OmegaLimitReport {
  double tail_start = 0.0;
  double tail_sup_ar_theta = 0.0;
  double tail_sup_dtphi = 0.0;
  bool tail_monotone = false;
  // |M Phi + F(Theta, Phi)| at the final state (xi replaces beta for eps = 0).
  double stationary_residual = 0.0;
  // |A^r theta| at the final state; theta_s lies in ker A when it vanishes.
  double final_ar_theta = 0.0;
  double final_theta_norm = 0.0;
  bool trivial_kernel_a = false;
  std::vector<Check> checks;
};

OmegaLimitReport omega_limit_probe(const DiscreteSystem& system, const RunOutput& run,
                                   const OmegaThresholds& thresholds = {});

// Limit system: B^{2 sigma} -> I - P and the unregularized graph via the
// proximal scheme. Requires constant l and linear pi.
RunOutput solve_relaxation_limit(const DiscreteSystem& system, const SchemeConfig& scheme,
                                 double final_time);

struct RelaxLimitSetup {
  // Structure and data; its sigma and eps are replaced per run (eps = 0).
  DiscreteSystem system;
  std::vector<double> sigmas;  // decreasing
  SchemeConfig scheme;
  double final_time = 1.0;
};

struct RelaxLimitReport {
  StudyReport study;  // parameter "sigma"; theta/phi l2_h columns are the L^2(Q) distances
  RunOutput limit;
  std::vector<Check> checks;
};

RelaxLimitReport relaxation_limit_study(const RelaxLimitSetup& setup, int jobs = 1);

struct SigmaZeroRow {
  double sigma = 0.0;
  double error = 0.0;          // |B^sigma v - (v - P v)| from the operator
  double closed_form_sq = 0.0; // sum_{mu_j > 0} (mu_j^sigma - 1)^2 v_j^2
  double mismatch = 0.0;       // |error^2 - closed_form_sq|
};

std::vector<SigmaZeroRow> sigma_zero_operator_check(const SpectralBasis& basis,
                                                    const Eigen::VectorXd& v,
                                                    const std::vector<double>& sigmas);

struct HpqoReport {
  std::vector<double> values;  // (B^sigma beta_eps(v), B^sigma v) per sample
  int violations = 0;
  double min_value = 0.0;
};

HpqoReport hpqo_probe(const SpectralBasis& basis_b, double sigma, const Potential& potential,
                      double eps, const std::vector<Eigen::VectorXd>& samples);

// Random smooth coefficient vectors c_j ~ N(0,1) amplitude / (1 + j)^2.
std::vector<Eigen::VectorXd> random_smooth_samples(int n_modes, int count, double amplitude,
                                                   std::uint64_t seed);

struct EpsUniformityRow {
  double eps = 0.0;
  // Suprema over time of the ledger left-hand terms.
  double sup_theta_energy = 0.0;
  double sup_dissipation_theta = 0.0;
  double sup_dissipation_phi = 0.0;
  double sup_phi_energy = 0.0;
  double sup_potential_energy = 0.0;
  double sup_lhs = 0.0;
  // |phi_eps - phi_{eps/2}|_{L^inf(H)}
  double cauchy_half = 0.0;
};

struct EpsUniformityReport {
  std::vector<EpsUniformityRow> rows;
  // max/min - 1 of sup_lhs across eps.
  double sup_spread = 0.0;
  std::vector<Check> checks;
};

EpsUniformityReport eps_uniformity_check(const DiscreteSystem& system, const SchemeConfig& scheme,
                                         double final_time, const std::vector<double>& eps_list,
                                         double spread_tol = 0.1, int jobs = 1);

// Runs fn(i) for i in [0, count) on up to `jobs` threads; rethrows the first exception.
void parallel_for(int count, int jobs, const std::function<void(int)>& fn);

}  // namespace fracpf
