#pragma once

#include <Eigen/Dense>

#include "irlpilot/errors.hpp"

namespace irlpilot {

/// Continuous-time plant xdot = A x + B u.
class LinearSystem {
 public:
  /// Throws DimensionMismatch on bad shapes and Error on non-finite entries.
  LinearSystem(Eigen::MatrixXd a, Eigen::MatrixXd b);

  const Eigen::MatrixXd& a() const { return a_; }
  const Eigen::MatrixXd& b() const { return b_; }
  Eigen::Index n() const { return a_.rows(); }
  Eigen::Index m() const { return b_.cols(); }

 private:
  Eigen::MatrixXd a_;
  Eigen::MatrixXd b_;
};

using BoolMatrix = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>;

/// Quadratic cost J = int x'Qx + u'Ru dt, plus the structural sparsity of Q
/// and R. Entries outside a mask are exactly zero.
class CostFunctional {
 public:
  /// Masks default to the nonzero pattern of q and r.
  CostFunctional(Eigen::MatrixXd q, Eigen::MatrixXd r);
  CostFunctional(Eigen::MatrixXd q, Eigen::MatrixXd r, BoolMatrix q_mask,
                 BoolMatrix r_mask);

  static CostFunctional Diagonal(const Eigen::VectorXd& q_diag,
                                 const Eigen::VectorXd& r_diag);

  const Eigen::MatrixXd& q() const { return q_; }
  const Eigen::MatrixXd& r() const { return r_; }
  const BoolMatrix& q_mask() const { return q_mask_; }
  const BoolMatrix& r_mask() const { return r_mask_; }

  /// Same masks, both penalties multiplied by c > 0.
  CostFunctional Scaled(double c) const;

 private:
  Eigen::MatrixXd q_;
  Eigen::MatrixXd r_;
  BoolMatrix q_mask_;
  BoolMatrix r_mask_;
};

struct RiccatiSolution {
  Eigen::MatrixXd s;  // stabilizing solution of the ARE
  Eigen::MatrixXd k;  // R^-1 B' S, applied as u = -k x
  double residual_norm = 0.0;
};

/// Stabilizing solution of A'S + SA - SBR^-1B'S + Q = 0 from the stable
/// invariant subspace of the Hamiltonian matrix.
RiccatiSolution SolveCare(const LinearSystem& system, const CostFunctional& cost);

/// Newton-Kleinman iteration. Without an initial gain, a stabilizing one is
/// found by continuation over a shift of A, starting from a shift large
/// enough that K = 0 stabilizes. Independent of SolveCare; used as its
/// cross-check.
RiccatiSolution SolveCareNewtonKleinman(const LinearSystem& system,
                                        const CostFunctional& cost,
                                        int max_iterations = 100,
                                        double tolerance = 1e-13);
RiccatiSolution SolveCareNewtonKleinman(const LinearSystem& system,
                                        const CostFunctional& cost,
                                        const Eigen::MatrixXd& initial_gain,
                                        int max_iterations = 100,
                                        double tolerance = 1e-13);

/// Solves A'X + XA + C = 0 by Kronecker vectorization. Intended for n <= 20.
Eigen::MatrixXd SolveLyapunov(const Eigen::MatrixXd& a, const Eigen::MatrixXd& c);

/// ||A'S + SA - SBR^-1B'S + Q||_F. Throws SingularRHat when cond(R) >= 1e12.
double HjbResidual(const LinearSystem& system, const Eigen::MatrixXd& s_hat,
                   const Eigen::MatrixXd& q_hat, const Eigen::MatrixXd& r_hat);

/// Frobenius norm of the ARE left-hand side with a known-good R.
double AreResidual(const LinearSystem& system, const Eigen::MatrixXd& s,
                   const Eigen::MatrixXd& q, const Eigen::MatrixXd& r);

/// Real singular values below kRankTolerance * sigma_max count as zero.
inline constexpr double kRankTolerance = 1e-9;
/// Eigenvalues with Re >= -kMarginalTolerance need the PBH rank test.
inline constexpr double kMarginalTolerance = 1e-9;
/// Eigenvalues of a PSD input may dip this far below zero.
inline constexpr double kPsdTolerance = 1e-10;

int NumericalRank(const Eigen::MatrixXcd& m);
int NumericalRank(const Eigen::MatrixXd& m);

bool IsStabilizable(const LinearSystem& system);
/// PBH detectability of (A, C) where C is typically sqrt(Q).
bool IsDetectable(const Eigen::MatrixXd& a, const Eigen::MatrixXd& q_sqrt);

/// Symmetric PSD square root via eigendecomposition. Throws NotPsd if an
/// eigenvalue is below -kPsdTolerance; smaller negatives are clipped to 0.
Eigen::MatrixXd PsdSqrt(const Eigen::MatrixXd& q);

struct EquivalenceReport {
  bool equivalent = false;
  double hjb_residual = 0.0;
  double gain_error = 0.0;  // induced 2-norm of R^-1B'S - K_expert
};

/// varpi-equivalence of (S, Q, R) with respect to an expert gain.
EquivalenceReport CheckEquivalentSolution(const LinearSystem& system,
                                          const Eigen::MatrixXd& s_hat,
                                          const Eigen::MatrixXd& q_hat,
                                          const Eigen::MatrixXd& r_hat,
                                          const Eigen::MatrixXd& k_expert,
                                          double varpi);

double SpectralNorm(const Eigen::MatrixXd& m);
/// 2-norm condition number; infinity for singular input.
double ConditionNumber(const Eigen::MatrixXd& m);
bool IsHurwitz(const Eigen::MatrixXd& a);

}  // namespace irlpilot
