#pragma once

#include <cmath>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "irlpilot/basis.hpp"
#include "irlpilot/lti_system.hpp"
#include "irlpilot/pilot.hpp"
#include "irlpilot/quadcopter.hpp"

namespace irlpilot::testing {

inline Eigen::MatrixXd RandomMatrix(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng,
                                    double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = n(rng);
  }
  return m;
}

inline Eigen::VectorXd RandomVector(Eigen::Index size, std::mt19937_64& rng, double scale = 1.0) {
  return RandomMatrix(size, 1, rng, scale);
}

inline Eigen::MatrixXd RandomSymmetric(Eigen::Index n, std::mt19937_64& rng) {
  const Eigen::MatrixXd m = RandomMatrix(n, n, rng);
  return 0.5 * (m + m.transpose());
}

inline Eigen::MatrixXd RandomSpd(Eigen::Index n, std::mt19937_64& rng, double shift = 0.5) {
  const Eigen::MatrixXd m = RandomMatrix(n, n, rng);
  return m * m.transpose() + shift * Eigen::MatrixXd::Identity(n, n);
}

inline double MaxAbs(const Eigen::MatrixXd& m) { return m.cwiseAbs().maxCoeff(); }

/// The lab quadcopter, the default cost and the resulting expert.
struct DefaultProblem {
  LinearSystem system = BuildLinearModel(QuadParams::Lab());
  CostFunctional cost = MakeDefaultCost();
  PilotPolicy policy = SynthesizePilot(system, cost);
  WeightLayout sparse = WeightLayout::FromMasks(cost.q_mask(), cost.r_mask());
  WeightLayout full = WeightLayout::Full(12, 4);

  Eigen::VectorXd TrueWeights(const WeightLayout& layout) const {
    return PackNormalized(layout, policy.s, cost.q(), cost.r()).Packed();
  }
};

struct Sample {
  double t;
  Eigen::VectorXd x;
  Eigen::VectorXd u;  // expert output -K x
};

/// Closed loop driven by the excited expert, integrated with RK4 at dt and
/// sampled every `every` steps. Noiseless: each stored u is exactly -K x.
inline std::vector<Sample> ExcitedTrajectory(const DefaultProblem& p, const Eigen::VectorXd& x0,
                                             int samples, int every = 20, double dt = 0.004,
                                             double magnitude = 0.03) {
  ExcitationConfig cfg;
  cfg.magnitude = magnitude;
  const ExcitationSignal exc(cfg);
  const Eigen::MatrixXd& a = p.system.a();
  const Eigen::MatrixXd& b = p.system.b();
  const Eigen::MatrixXd& k = p.policy.k_expert;
  const auto f = [&](const Eigen::VectorXd& x, double t) -> Eigen::VectorXd {
    return a * x + b * (-k * x + exc(t));
  };
  std::vector<Sample> out;
  Eigen::VectorXd x = x0;
  for (int step = 0; static_cast<int>(out.size()) < samples; ++step) {
    const double t = step * dt;
    if (step % every == 0) out.push_back({t, x, -k * x});
    const Eigen::VectorXd k1 = f(x, t);
    const Eigen::VectorXd k2 = f(x + 0.5 * dt * k1, t + 0.5 * dt);
    const Eigen::VectorXd k3 = f(x + 0.5 * dt * k2, t + 0.5 * dt);
    const Eigen::VectorXd k4 = f(x + dt * k3, t + dt);
    x += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return out;
}

inline Eigen::VectorXd HoverStart(double x, double y) {
  Eigen::VectorXd x0 = Eigen::VectorXd::Zero(12);
  x0(0) = x;
  x0(1) = y;
  return x0;
}

}  // namespace irlpilot::testing
