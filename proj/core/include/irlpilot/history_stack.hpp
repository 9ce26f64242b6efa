#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "irlpilot/basis.hpp"
#include "irlpilot/lti_system.hpp"

namespace irlpilot {

/// One stored sample and the regressor rows it generates.
struct StackSlot {
  double t = 0.0;
  Eigen::VectorXd x;
  Eigen::VectorXd u;
  Eigen::MatrixXd rows;     // [sigma_delta; sigma_delta_u], (1 + m) x total_dim
  Eigen::VectorXd targets;  // [-u1^2 r1, -2 u1 r1, 0, ..., 0]
  Eigen::MatrixXd gram;     // rows' rows
  Eigen::VectorXd gram_rhs; // rows' targets
};

StackSlot MakeSlot(const LinearSystem& system, const WeightLayout& layout, double t,
                   const Eigen::VectorXd& x, const Eigen::VectorXd& u);

/// Condition number of G + eps I for symmetric PSD G; infinity when the
/// smallest eigenvalue is not positive.
double RegularizedConditionNumber(const Eigen::MatrixXd& gram, double epsilon);

/// The history stack (Sigma, Sigma_u). Fills in arrival order; once full, a
/// new sample replaces the slot whose removal minimizes cond(Sigma'Sigma + eps I),
/// and only when that strictly lowers the current value.
class HistoryStack {
 public:
  HistoryStack(LinearSystem system, WeightLayout layout, int capacity, double epsilon);

  /// Samples must arrive with strictly increasing t (std::invalid_argument
  /// otherwise). Returns whether the sample was stored.
  bool Record(double t, const Eigen::VectorXd& x, const Eigen::VectorXd& u);

  int size() const { return static_cast<int>(slots_.size()); }
  int capacity() const { return capacity_; }
  bool full() const { return size() == capacity_; }
  bool empty() const { return slots_.empty(); }
  double epsilon() const { return epsilon_; }
  Eigen::Index rows_per_slot() const { return 1 + layout_.m(); }
  const LinearSystem& system() const { return system_; }
  const WeightLayout& layout() const { return layout_; }
  const std::vector<StackSlot>& slots() const { return slots_; }

  /// Stacked regressor over occupied slots, in slot order.
  const Eigen::MatrixXd& sigma() const { return sigma_; }
  const Eigen::VectorXd& sigma_u() const { return sigma_u_; }
  /// Sigma' Sigma and Sigma' Sigma_u, accumulated slot by slot.
  const Eigen::MatrixXd& gram() const { return gram_; }
  const Eigen::VectorXd& gram_rhs() const { return gram_rhs_; }

  /// cond(Sigma' Sigma + eps I); 1 for an empty stack with eps > 0.
  double condition_number() const { return condition_; }
  /// Bumped whenever the contents change.
  std::uint64_t version() const { return version_; }
  /// Number of slot replacements committed so far.
  std::uint64_t replacements() const { return replacements_; }

  /// One row per slot: t, x..., u...
  void WriteCsv(std::ostream& os) const;

 private:
  Eigen::MatrixXd GramWithReplacement(int slot, const StackSlot& candidate) const;
  bool TryReplace(StackSlot candidate);
  void Rebuild();
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>& CurrentEigen();

  LinearSystem system_;
  WeightLayout layout_;
  int capacity_;
  double epsilon_;
  std::vector<StackSlot> slots_;
  std::optional<double> last_t_;

  Eigen::MatrixXd sigma_;
  Eigen::VectorXd sigma_u_;
  Eigen::MatrixXd gram_;
  Eigen::VectorXd gram_rhs_;
  double condition_ = 1.0;
  std::uint64_t version_ = 0;
  std::uint64_t replacements_ = 0;

  std::optional<Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>> eigen_;
};

/// Data-richness diagnostics of a stack.
struct InformativityReport {
  int state_rank = 0;             // rank [x_1 ... x_N]
  bool state_span = false;        // == n
  int sym_rank = 0;               // rank [uvec(x_1 x_1') ... ]
  bool sym_span = false;          // == n(n+1)/2
  double range_residual = 0.0;    // min_w ||Sigma w - Sigma_u||
  bool range_ok = false;          // residual <= 1e-8 ||Sigma_u||
  double min_eig_state = 0.0;     // lambda_min(X X')
  double min_eig_sym = 0.0;       // lambda_min(Z Z')
  bool eps_state = false;         // min_eig_state > epsilon_fi
  bool eps_sym = false;           // min_eig_sym > epsilon_fi

  bool finitely_informative() const { return state_span && sym_span && range_ok; }
};

InformativityReport Informativity(const HistoryStack& stack, double epsilon_fi);

}  // namespace irlpilot
