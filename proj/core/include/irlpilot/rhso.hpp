#pragma once

#include <cstdint>
#include <optional>

#include <Eigen/Dense>

#include "irlpilot/basis.hpp"
#include "irlpilot/history_stack.hpp"
#include "irlpilot/lti_system.hpp"
#include "irlpilot/pilot.hpp"

namespace irlpilot {

/// Weights beyond this magnitude (or non-finite) mark the observer diverged.
inline constexpr double kDivergenceBound = 1e8;
/// R estimates at or above this condition number are treated as singular
/// when forming the implied feedback gain.
inline constexpr double kRHatConditionLimit = 1e10;
/// Reciprocal condition below which the unregularized normal matrix is
/// declared singular.
inline constexpr double kNormalMatrixRcond = 1e-12;

struct ObserverState {
  Eigen::VectorXd w;  // packed [W_S; W_Q; W_R^-]
  double epsilon = 0.002;
  double last_delta_norm = 0.0;
  double r_hat_condition = 0.0;
  bool diverged = false;
};

/// Fresh observer with weights w0; fills the monitoring fields.
ObserverState MakeObserver(const WeightLayout& layout, Eigen::VectorXd w0, double epsilon);

/// Same machinery with the regularization removed (epsilon = 0).
ObserverState MakeHsoMode(ObserverState observer);

/// Sigma_u - Sigma w over the occupied slots.
Eigen::VectorXd Delta(const HistoryStack& stack, const Eigen::VectorXd& w);

/// Factorization of Sigma'Sigma + eps I for a frozen stack. Built once per
/// stack version and reused across integration steps.
class NormalEquations {
 public:
  /// Throws SingularNormalMatrix when eps = 0 and Sigma'Sigma is numerically
  /// singular (non-empty stack only).
  NormalEquations(const HistoryStack& stack, double epsilon);

  /// (Sigma'Sigma + eps I)^-1 Sigma'(Sigma_u - Sigma w); zero for an empty stack.
  Eigen::VectorXd Derivative(const Eigen::VectorXd& w) const;

  std::uint64_t stack_version() const { return version_; }
  double epsilon() const { return epsilon_; }

 private:
  double epsilon_;
  std::uint64_t version_;
  bool empty_;
  Eigen::MatrixXd gram_;
  Eigen::VectorXd rhs_;
  std::optional<Eigen::LLT<Eigen::MatrixXd>> llt_;
  std::optional<Eigen::LDLT<Eigen::MatrixXd>> ldlt_;
};

Eigen::VectorXd UpdateDerivative(const HistoryStack& stack, const Eigen::VectorXd& w,
                                 double epsilon);

/// One RK4 step of the update law with the stack held fixed. Diverged
/// observers are returned unchanged.
ObserverState Step(const ObserverState& observer, const NormalEquations& normal,
                   const HistoryStack& stack, double dt);
ObserverState Step(const ObserverState& observer, const HistoryStack& stack, double dt);

struct EquivalenceMetrics {
  double delta_norm = 0.0;
  double gain_error = 0.0;  // ||R^-1 B'S - K_EP||_2
  double q_error = 0.0;     // ||Q_hat - Q||_2
  double r_error = 0.0;     // ||R_hat - R||_2
  double hjb_res = 0.0;     // ||M_hat||_F
};

/// Compares the extracted estimate with the true pilot. gain_error and
/// hjb_res are NaN when R_hat is singular at kRHatConditionLimit.
EquivalenceMetrics Metrics(const ObserverState& observer, const WeightLayout& layout,
                           const LinearSystem& system, const PilotPolicy& truth);

}  // namespace irlpilot
