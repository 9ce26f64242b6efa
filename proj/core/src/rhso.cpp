#include "irlpilot/rhso.hpp"

#include <cmath>
#include <limits>

namespace irlpilot {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

bool WeightsDiverged(const Eigen::VectorXd& w) {
  return !w.allFinite() || (w.size() > 0 && w.cwiseAbs().maxCoeff() > kDivergenceBound);
}

double RHatCondition(const WeightLayout& layout, const Eigen::VectorXd& w) {
  if (!w.allFinite()) return kNaN;
  return ConditionNumber(ExtractMatrices(layout, w).r_hat);
}

}  // namespace

ObserverState MakeObserver(const WeightLayout& layout, Eigen::VectorXd w0, double epsilon) {
  if (w0.size() != layout.total_dim()) {
    throw DimensionMismatch("initial weights do not match the layout");
  }
  if (!(epsilon >= 0.0)) throw ConfigError("epsilon must be nonnegative");
  ObserverState obs;
  obs.epsilon = epsilon;
  obs.r_hat_condition = RHatCondition(layout, w0);
  obs.diverged = WeightsDiverged(w0);
  obs.w = std::move(w0);
  return obs;
}

ObserverState MakeHsoMode(ObserverState observer) {
  observer.epsilon = 0.0;
  return observer;
}

Eigen::VectorXd Delta(const HistoryStack& stack, const Eigen::VectorXd& w) {
  return stack.sigma_u() - stack.sigma() * w;
}

NormalEquations::NormalEquations(const HistoryStack& stack, double epsilon)
    : epsilon_(epsilon),
      version_(stack.version()),
      empty_(stack.empty()),
      gram_(stack.gram()),
      rhs_(stack.gram_rhs()) {
  if (empty_) return;
  const Eigen::Index d = gram_.rows();
  if (epsilon_ > 0.0) {
    llt_.emplace(gram_ + epsilon_ * Eigen::MatrixXd::Identity(d, d));
    if (llt_->info() != Eigen::Success) {
      throw SingularNormalMatrix("regularized normal matrix is not positive definite");
    }
    return;
  }
  ldlt_.emplace(gram_);
  if (ldlt_->info() != Eigen::Success || !(ldlt_->rcond() > kNormalMatrixRcond)) {
    throw SingularNormalMatrix("Sigma'Sigma is singular; the unregularized update is undefined");
  }
}

Eigen::VectorXd NormalEquations::Derivative(const Eigen::VectorXd& w) const {
  if (empty_) return Eigen::VectorXd::Zero(w.size());
  Eigen::VectorXd residual = rhs_;
  residual.noalias() -= gram_ * w;
  return llt_ ? Eigen::VectorXd(llt_->solve(residual))
              : Eigen::VectorXd(ldlt_->solve(residual));
}

Eigen::VectorXd UpdateDerivative(const HistoryStack& stack, const Eigen::VectorXd& w,
                                 double epsilon) {
  return NormalEquations(stack, epsilon).Derivative(w);
}

ObserverState Step(const ObserverState& observer, const NormalEquations& normal,
                   const HistoryStack& stack, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("observer step needs dt > 0");
  if (observer.diverged) return observer;
  // The update law is linear in w, so each stage is a single derivative call.
  const Eigen::VectorXd& w = observer.w;
  const Eigen::VectorXd k1 = normal.Derivative(w);
  const Eigen::VectorXd k2 = normal.Derivative(w + 0.5 * dt * k1);
  const Eigen::VectorXd k3 = normal.Derivative(w + 0.5 * dt * k2);
  const Eigen::VectorXd k4 = normal.Derivative(w + dt * k3);

  ObserverState next = observer;
  next.w = w + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  next.diverged = WeightsDiverged(next.w);
  next.r_hat_condition = RHatCondition(stack.layout(), next.w);
  next.last_delta_norm = stack.empty() ? 0.0 : Delta(stack, next.w).norm();
  return next;
}

ObserverState Step(const ObserverState& observer, const HistoryStack& stack, double dt) {
  return Step(observer, NormalEquations(stack, observer.epsilon), stack, dt);
}

EquivalenceMetrics Metrics(const ObserverState& observer, const WeightLayout& layout,
                           const LinearSystem& system, const PilotPolicy& truth) {
  EquivalenceMetrics out;
  out.delta_norm = observer.last_delta_norm;
  if (!observer.w.allFinite()) {
    out.gain_error = out.q_error = out.r_error = out.hjb_res = kNaN;
    return out;
  }
  const EstimatedCost est = ExtractMatrices(layout, observer.w);
  out.q_error = SpectralNorm(est.q_hat - truth.cost.q());
  out.r_error = SpectralNorm(est.r_hat - truth.cost.r());
  if (!(ConditionNumber(est.r_hat) < kRHatConditionLimit)) {
    out.gain_error = out.hjb_res = kNaN;
    return out;
  }
  const Eigen::MatrixXd k_hat =
      est.r_hat.fullPivLu().solve(system.b().transpose() * est.s_hat);
  out.gain_error = SpectralNorm(k_hat - truth.k_expert);
  out.hjb_res = AreResidual(system, est.s_hat, est.q_hat, est.r_hat);
  return out;
}

}  // namespace irlpilot
