// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fail.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <functional>
#include <iostream>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "irlpilot/basis.hpp"
#include "irlpilot/experiment.hpp"
#include "irlpilot/lti_system.hpp"
#include "irlpilot/quadcopter.hpp"
#include "support.hpp"

namespace irlpilot {
namespace {

using testing::MaxAbs;
using testing::DefaultProblem;
using testing::RandomVector;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string Num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

std::string TrialCsv(const TrialRecord& rec) {
  std::ostringstream os;
  WriteTrajectoryCsv(os, rec);
  WriteMetricsCsv(os, rec);
  WriteStackCsv(os, rec);
  return os.str();
}

std::string AllCsv(const MonteCarloResult& res) {
  std::string out;
  for (const auto& r : res.records) out += TrialCsv(r);
  std::ostringstream os;
  WriteSummaryCsv(os, res.records);
  return out + os.str();
}

// Runs shared by several criteria, computed once.
struct Runs {
  ExperimentConfig cfg = ExperimentConfig::Defaults();
  MonteCarloResult rhso;
  MonteCarloResult rhso_parallel;
  MonteCarloResult hso;
  double rhso_seconds = 0.0;
};

double Seconds(std::chrono::steady_clock::time_point since) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - since).count();
}

Outcome Convergence(const Runs& runs) {
  const auto& s = runs.rhso.summary;
  const bool pass = s.trials == 13 && s.diverged == 0 && s.mean_relative_gain_error < 1e-3 &&
                    runs.rhso_seconds < 300.0;
  return {pass, "trials=" + std::to_string(s.trials) + " diverged=" + std::to_string(s.diverged) +
                    " mean_rel_gain_error=" + Num(s.mean_relative_gain_error) +
                    " runtime_s=" + Num(runs.rhso_seconds)};
}

Outcome Nonuniqueness(const Runs& runs) {
  double worst = 0.0;
  for (const auto& r : runs.rhso.records) {
    const double rel = r.RelativeGainError();
    worst = std::isfinite(rel) ? std::max(worst, rel) : std::numeric_limits<double>::infinity();
  }
  const double sd = runs.rhso.summary.stddev_q_error;
  return {worst < 1e-3 && sd > 0.1,
          "max_rel_gain_error=" + Num(worst) + " stddev_q_error=" + Num(sd)};
}

Outcome HsoFailure(const Runs& runs) {
  int diverged = 0;
  bool sentinels = true;
  for (const auto& r : runs.hso.records) {
    if (!r.diverged) continue;
    ++diverged;
    sentinels = sentinels && std::isnan(r.final_metrics.gain_error) &&
                std::isnan(r.final_metrics.delta_norm);
  }
  std::ostringstream os;
  WriteSummaryCsv(os, runs.hso.records);
  const bool reported = os.str().find("NaN") != std::string::npos;
  return {diverged >= 1 && sentinels && reported,
          "diverged=" + std::to_string(diverged) + "/" + std::to_string(runs.hso.summary.trials) +
              " nan_sentinels=" + (sentinels && reported ? "yes" : "no")};
}

Outcome Contraction(const Runs& runs) {
  int violations = 0;
  double worst_ratio = 0.0;
  double worst_final = 0.0;
  for (const auto& r : runs.rhso.records) {
    violations += r.contraction_violations;
    worst_ratio = std::max(worst_ratio, r.worst_contraction_ratio);
    const double rel = r.final_delta_norm / r.initial_delta_norm;
    worst_final = std::isfinite(rel) ? std::max(worst_final, rel)
                                     : std::numeric_limits<double>::infinity();
  }
  return {violations == 0 && worst_final < 1e-6,
          "growth_steps=" + std::to_string(violations) + " max_step_ratio=" + Num(worst_ratio) +
              " max_final_over_initial=" + Num(worst_final)};
}

Outcome ExactSolution() {
  const DefaultProblem p;
  const auto samples = testing::ExcitedTrajectory(p, testing::HoverStart(1.2, -0.8), 250);
  double worst = 0.0;
  std::string detail;
  for (const WeightLayout* layout : {&p.full, &p.sparse}) {
    HistoryStack stack(p.system, *layout, 100, 0.002);
    for (const auto& s : samples) stack.Record(s.t, s.x, s.u);
    const double res = (stack.sigma_u() - stack.sigma() * p.TrueWeights(*layout)).norm();
    worst = std::max(worst, res);
    detail += "residual_" + std::to_string(layout->total_dim()) + "=" + Num(res) + " ";
  }
  return {worst < 1e-8, detail + "stack=100"};
}

Outcome Riccati() {
  Eigen::Matrix2d a;
  a << 0, 1, 0, 0;
  const LinearSystem di(a, Eigen::Vector2d(0, 1));
  const CostFunctional unit(Eigen::Matrix2d::Identity(), Eigen::MatrixXd::Identity(1, 1));
  const RiccatiSolution sol = SolveCare(di, unit);
  const double r3 = std::sqrt(3.0);
  Eigen::Matrix2d s_exact;
  s_exact << r3, 1, 1, r3;
  const double di_err = std::max(MaxAbs(sol.s - s_exact),
                                 MaxAbs(sol.k - Eigen::RowVector2d(1, r3)));

  const DefaultProblem p;
  const RiccatiSolution ham = SolveCare(p.system, p.cost);
  const RiccatiSolution nk = SolveCareNewtonKleinman(p.system, p.cost);
  const double residual = AreResidual(p.system, ham.s, p.cost.q(), p.cost.r());
  const double agree = MaxAbs(ham.s - nk.s);
  return {di_err < 1e-9 && residual < 1e-9 && agree < 1e-8,
          "double_integrator_error=" + Num(di_err) + " quad_are_residual=" + Num(residual) +
              " newton_vs_hamiltonian=" + Num(agree)};
}

Outcome ModelChecks() {
  const DefaultProblem p;
  const bool stab = IsStabilizable(p.system);
  const bool det = IsDetectable(p.system.a(), PsdSqrt(p.cost.q()));
  const LinearizationReport lin = VerifyLinearization(QuadParams::Lab());
  const double err = std::max(lin.max_state_error, lin.max_input_error);
  return {stab && det && err < 1e-6, std::string("stabilizable=") + (stab ? "yes" : "no") +
                                         " detectable=" + (det ? "yes" : "no") +
                                         " jacobian_error=" + Num(err)};
}

Outcome BasisIdentities() {
  constexpr int kDraws = 1000;
  const DefaultProblem p;
  std::mt19937_64 rng(2024);
  double quad = 0.0, grad = 0.0, action = 0.0, block = 0.0;
  const double h = 1e-5;
  for (int d = 0; d < kDraws; ++d) {
    const Eigen::VectorXd x = RandomVector(12, rng);
    const Eigen::MatrixXd m = testing::RandomSymmetric(12, rng);
    const double form = x.dot(m * x);
    quad = std::max(quad, std::abs(Uvec(m).dot(SigmaQuad(x)) - form) / std::max(1.0, std::abs(form)));

    const Eigen::MatrixXd g = GradSigmaQuad(x);
    for (int j = 0; j < 12; ++j) {
      const Eigen::VectorXd e = Eigen::VectorXd::Unit(12, j);
      const Eigen::VectorXd fd = (SigmaQuad(x + h * e) - SigmaQuad(x - h * e)) / (2 * h);
      grad = std::max(grad, MaxAbs(g.col(j) - fd));
    }

    const Eigen::VectorXd u = RandomVector(4, rng);
    const Eigen::MatrixXd r = testing::RandomSpd(4, rng);
    const Eigen::VectorXd ru = r * u;
    action = std::max(action, MaxAbs(SigmaR2(u) * Uvec(r) - ru) / std::max(1.0, MaxAbs(ru)));

    const Eigen::MatrixXd s_hat = testing::RandomSymmetric(12, rng);
    const Eigen::MatrixXd r_hat = r / r(0, 0);
    const Eigen::VectorXd w = PackNormalized(p.full, s_hat, m, r_hat).Packed();
    const Eigen::VectorXd u_exp = -p.policy.k_expert * x;
    Eigen::VectorXd lhs = SigmaDeltaUBlock(p.system, p.full, x, u_exp) * w;
    lhs(0) += 2.0 * WeightVector::kR1 * u_exp(0);
    const Eigen::MatrixXd k_tilde =
        r_hat.inverse() * p.system.b().transpose() * s_hat - p.policy.k_expert;
    const Eigen::VectorXd rhs = 2.0 * r_hat * k_tilde * x;
    block = std::max(block, MaxAbs(lhs - rhs) / std::max(1.0, MaxAbs(rhs)));
  }
  return {quad < 1e-12 && grad < 1e-7 && action < 1e-12 && block < 1e-10,
          "draws=" + std::to_string(kDraws) + " quadratic_form=" + Num(quad) +
              " gradient_fd=" + Num(grad) + " sigma_r2_action=" + Num(action) +
              " gain_identity=" + Num(block)};
}

Outcome DataSelection(const Runs& runs) {
  int increases = 0;
  double latest_fi = 0.0;
  for (const auto* res : {&runs.rhso, &runs.rhso_parallel, &runs.hso}) {
    for (const auto& r : res->records) increases += r.condition_increases;
  }
  for (const auto& r : runs.rhso.records) {
    latest_fi = r.fi_time ? std::max(latest_fi, *r.fi_time)
                          : std::numeric_limits<double>::infinity();
  }
  return {increases == 0 && latest_fi <= 30.0,
          "condition_increases=" + std::to_string(increases) +
              " latest_fi_time_s=" + Num(latest_fi)};
}

Outcome Determinism(const Runs& runs) {
  const TrialOptions options{.informativity = true, .informativity_until_first = true};
  bool rerun_same = true;
  for (int idx : {0, 7, 12}) {
    rerun_same = rerun_same && TrialCsv(RunTrial(runs.cfg, idx, options)) ==
                                   TrialCsv(runs.rhso.records[idx]);
  }
  const bool threads_same = AllCsv(runs.rhso) == AllCsv(runs.rhso_parallel);
  return {rerun_same && threads_same,
          std::string("rerun_identical=") + (rerun_same ? "yes" : "no") +
              " serial_vs_4_threads_identical=" + (threads_same ? "yes" : "no")};
}

}  // namespace
}  // namespace irlpilot

int main() {
  using namespace irlpilot;
  const TrialOptions options{.informativity = true, .informativity_until_first = true};

  Runs runs;
  std::cerr << "running 13 RHSO trials serially...\n";
  auto start = std::chrono::steady_clock::now();
  runs.rhso = RunMonteCarlo(runs.cfg, options, 0);
  runs.rhso_seconds = Seconds(start);
  std::cerr << "running 13 RHSO trials on 4 threads...\n";
  runs.rhso_parallel = RunMonteCarlo(runs.cfg, options, 4);
  std::cerr << "running 13 HSO trials...\n";
  ExperimentConfig hso_cfg = runs.cfg;
  hso_cfg.observer.mode = ObserverMode::kHso;
  runs.hso = RunMonteCarlo(hso_cfg, options);

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"convergence", [&] { return Convergence(runs); }},
      {"nonuniqueness", [&] { return Nonuniqueness(runs); }},
      {"hso_failure", [&] { return HsoFailure(runs); }},
      {"delta_contraction", [&] { return Contraction(runs); }},
      {"exact_solution", ExactSolution},
      {"riccati", Riccati},
      {"model_checks", ModelChecks},
      {"basis_identities", BasisIdentities},
      {"data_selection", [&] { return DataSelection(runs); }},
      {"determinism", [&] { return Determinism(runs); }},
  };

  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failures;
    std::cout << (o.pass ? "PASS" : "FAIL") << " " << (i + 1) << " " << criteria[i].first << ": "
              << o.detail << std::endl;
  }
  std::cout << (criteria.size() - failures) << "/" << criteria.size() << " criteria passed"
            << std::endl;
  return failures == 0 ? 0 : 1;
}
