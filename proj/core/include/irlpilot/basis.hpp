#pragma once

#include <vector>

#include <Eigen/Dense>

#include "irlpilot/lti_system.hpp"

namespace irlpilot {

/// Number of independent entries of a symmetric k x k matrix.
constexpr Eigen::Index SymDim(Eigen::Index k) { return k * (k + 1) / 2; }

/// Row-major upper-triangular vectorization, no scaling:
/// [M11, M12, ..., M1n, M22, M23, ..., Mnn].
Eigen::VectorXd Uvec(const Eigen::MatrixXd& m);
/// Inverse of Uvec: rebuilds the symmetric matrix.
Eigen::MatrixXd FromUvec(const Eigen::VectorXd& v, Eigen::Index n);
/// 0-based position of entry (i, j), i <= j, in Uvec ordering.
Eigen::Index UvecIndex(Eigen::Index i, Eigen::Index j, Eigen::Index n);

/// Quadratic basis [x1^2, 2x1x2, ..., 2x1xn, x2^2, ..., xn^2], so that
/// Uvec(M)' * SigmaQuad(x) = x' M x for symmetric M.
Eigen::VectorXd SigmaQuad(const Eigen::VectorXd& x);
/// Recovers x x' from SigmaQuad(x).
Eigen::MatrixXd OuterFromSigmaQuad(const Eigen::VectorXd& sigma, Eigen::Index n);
/// Analytic Jacobian d SigmaQuad / dx, SymDim(n) x n.
Eigen::MatrixXd GradSigmaQuad(const Eigen::VectorXd& x);

/// Input quadratic basis; same layout as SigmaQuad over u.
inline Eigen::VectorXd SigmaR1(const Eigen::VectorXd& u) { return SigmaQuad(u); }
/// m x SymDim(m) matrix with SigmaR2(u) * Uvec(R) = R u.
Eigen::MatrixXd SigmaR2(const Eigen::VectorXd& u);

/// Which entries of Q and R are estimated. The S block always keeps all
/// SymDim(n) weights; R(0,0) is the scale anchor r1 = 1 and never estimated.
class WeightLayout {
 public:
  /// Every upper-triangular entry of Q and every R entry except r1.
  static WeightLayout Full(Eigen::Index n, Eigen::Index m);
  /// Entries selected by the cost's sparsity masks.
  static WeightLayout FromMasks(const BoolMatrix& q_mask, const BoolMatrix& r_mask);
  /// Explicit 0-based positions into Uvec(Q) and Uvec(R); r positions must be
  /// >= 1 because position 0 is r1.
  WeightLayout(Eigen::Index n, Eigen::Index m, std::vector<Eigen::Index> q_indices,
               std::vector<Eigen::Index> r_indices);

  Eigen::Index n() const { return n_; }
  Eigen::Index m() const { return m_; }
  Eigen::Index s_dim() const { return SymDim(n_); }
  Eigen::Index q_dim() const { return static_cast<Eigen::Index>(q_indices_.size()); }
  Eigen::Index r_dim() const { return static_cast<Eigen::Index>(r_indices_.size()); }
  Eigen::Index total_dim() const { return s_dim() + q_dim() + r_dim(); }
  const std::vector<Eigen::Index>& q_indices() const { return q_indices_; }
  const std::vector<Eigen::Index>& r_indices() const { return r_indices_; }

  bool operator==(const WeightLayout&) const = default;

 private:
  Eigen::Index n_;
  Eigen::Index m_;
  std::vector<Eigen::Index> q_indices_;
  std::vector<Eigen::Index> r_indices_;
};

/// Packed estimate W = [W_S; W_Q; W_R^-] with the fixed scale r1.
struct WeightVector {
  static constexpr double kR1 = 1.0;

  Eigen::VectorXd s;
  Eigen::VectorXd q;
  Eigen::VectorXd r_minus;

  static WeightVector Zero(const WeightLayout& layout);
  /// Splits a packed total_dim vector.
  static WeightVector Unpack(const WeightLayout& layout, const Eigen::VectorXd& packed);
  Eigen::VectorXd Packed() const;
};

struct EstimatedCost {
  Eigen::MatrixXd s_hat;
  Eigen::MatrixXd q_hat;
  Eigen::MatrixXd r_hat;
};

EstimatedCost ExtractMatrices(const WeightLayout& layout, const WeightVector& w);
EstimatedCost ExtractMatrices(const WeightLayout& layout, const Eigen::VectorXd& packed);

/// Packs (S, Q, R) after dividing all three by R(0,0), which maps them onto
/// the r1 = 1 scale. Entries outside the layout are dropped.
WeightVector PackNormalized(const WeightLayout& layout, const Eigen::MatrixXd& s,
                            const Eigen::MatrixXd& q, const Eigen::MatrixXd& r);

/// HJB regressor row [(Ax+Bu)' dSigma' , SigmaQ(x)|q , SigmaR1^-(u)|r].
Eigen::RowVectorXd SigmaDeltaRow(const LinearSystem& system, const WeightLayout& layout,
                                 const Eigen::VectorXd& x, const Eigen::VectorXd& u);
/// Optimal-control regressor block [B' dSigma', 0, 2 SigmaR2^-(u)|r], m rows.
Eigen::MatrixXd SigmaDeltaUBlock(const LinearSystem& system, const WeightLayout& layout,
                                 const Eigen::VectorXd& x, const Eigen::VectorXd& u);

}  // namespace irlpilot
