#include "irlpilot/lti_system.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <sstream>
#include <vector>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

namespace irlpilot {
namespace {

constexpr double kSymmetryTolerance = 1e-12;
constexpr double kSingularRThreshold = 1e12;
constexpr int kContinuationRounds = 60;
constexpr int kContinuationIterations = 100;
constexpr double kContinuationTolerance = 1e-10;
constexpr int kRefinementSteps = 4;
// Newton-Kleinman also stops once updates stop shrinking below this relative
// size, which is where rounding in the Lyapunov solves takes over.
constexpr double kStallTolerance = 1e-9;

std::string ShapeOf(const Eigen::MatrixXd& m) {
  std::ostringstream os;
  os << m.rows() << "x" << m.cols();
  return os.str();
}

void RequireSymmetric(const Eigen::MatrixXd& m, const char* name) {
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > kSymmetryTolerance * scale) {
    throw Error(std::string(name) + " must be symmetric");
  }
}

BoolMatrix NonzeroPattern(const Eigen::MatrixXd& m) {
  return m.unaryExpr([](double v) { return v != 0.0; });
}

void CheckCostShapes(const LinearSystem& system, const CostFunctional& cost) {
  if (cost.q().rows() != system.n()) {
    throw DimensionMismatch("Q is " + ShapeOf(cost.q()) + " but A is " +
                            ShapeOf(system.a()));
  }
  if (cost.r().rows() != system.m()) {
    throw DimensionMismatch("R is " + ShapeOf(cost.r()) + " but B is " +
                            ShapeOf(system.b()));
  }
}

RiccatiSolution Finish(const LinearSystem& system, const CostFunctional& cost,
                       Eigen::MatrixXd s) {
  s = 0.5 * (s + s.transpose()).eval();
  RiccatiSolution out;
  out.k = cost.r().llt().solve(system.b().transpose() * s);
  out.residual_norm = AreResidual(system, s, cost.q(), cost.r());
  out.s = std::move(s);
  return out;
}

double SpectralAbscissa(const Eigen::MatrixXd& a) {
  return a.eigenvalues().real().maxCoeff();
}

RiccatiSolution NewtonKleinmanFrom(const LinearSystem& system, const CostFunctional& cost,
                                   Eigen::MatrixXd k, int max_iterations, double tolerance) {
  const Eigen::MatrixXd& a = system.a();
  const Eigen::MatrixXd& b = system.b();
  const Eigen::MatrixXd& r = cost.r();
  if (!IsHurwitz(a - b * k)) {
    throw NoStabilizingSolution("initial gain is not stabilizing");
  }
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(system.n(), system.n());
  double previous_change = std::numeric_limits<double>::infinity();
  for (int it = 0; it < max_iterations; ++it) {
    const Eigen::MatrixXd closed = a - b * k;
    Eigen::MatrixXd next = SolveLyapunov(closed, cost.q() + k.transpose() * r * k);
    next = 0.5 * (next + next.transpose()).eval();
    const double change = (next - s).norm();
    s = std::move(next);
    k = r.llt().solve(b.transpose() * s);
    if (!s.allFinite()) break;
    const double scale = std::max(1.0, s.norm());
    if (it > 0 && change <= tolerance * scale) return Finish(system, cost, s);
    if (it > 1 && change <= kStallTolerance * scale && change > 0.5 * previous_change) {
      return Finish(system, cost, s);
    }
    previous_change = change;
  }
  throw NoStabilizingSolution("Newton-Kleinman iteration did not converge");
}

// Discount continuation: for alpha above the spectral abscissa of A the
// shifted pair (A - alpha I, B) is stabilized by K = 0. Each solve yields a
// gain whose closed loop sits left of the next, smaller shift, down to zero.
Eigen::MatrixXd ContinuationStabilizingGain(const LinearSystem& system,
                                            const CostFunctional& cost) {
  const Eigen::Index n = system.n();
  const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(n, n);
  double alpha = std::max(0.0, SpectralAbscissa(system.a())) + 1.0;
  const CostFunctional unit_q(eye, cost.r());
  Eigen::MatrixXd k = Eigen::MatrixXd::Zero(system.m(), n);
  for (int round = 0; round < kContinuationRounds; ++round) {
    const LinearSystem shifted(system.a() - alpha * eye, system.b());
    k = NewtonKleinmanFrom(shifted, unit_q, k, kContinuationIterations, kContinuationTolerance).k;
    const double abscissa = SpectralAbscissa(system.a() - system.b() * k);
    if (abscissa < 0.0) return k;
    if (!(abscissa < alpha)) break;
    alpha = abscissa + 0.5 * (alpha - abscissa);
  }
  throw NoStabilizingSolution("no stabilizing gain found: (A, B) is not stabilizable");
}

}  // namespace

LinearSystem::LinearSystem(Eigen::MatrixXd a, Eigen::MatrixXd b)
    : a_(std::move(a)), b_(std::move(b)) {
  if (a_.rows() < 1 || a_.rows() != a_.cols()) {
    throw DimensionMismatch("A must be square and non-empty, got " + ShapeOf(a_));
  }
  if (b_.rows() != a_.rows() || b_.cols() < 1) {
    throw DimensionMismatch("B is " + ShapeOf(b_) + " but A is " + ShapeOf(a_));
  }
  if (!a_.allFinite() || !b_.allFinite()) {
    throw Error("system matrices must be finite");
  }
}

CostFunctional::CostFunctional(Eigen::MatrixXd q, Eigen::MatrixXd r)
    : CostFunctional(q, r, NonzeroPattern(q), NonzeroPattern(r)) {}

CostFunctional::CostFunctional(Eigen::MatrixXd q, Eigen::MatrixXd r,
                               BoolMatrix q_mask, BoolMatrix r_mask)
    : q_(std::move(q)),
      r_(std::move(r)),
      q_mask_(std::move(q_mask)),
      r_mask_(std::move(r_mask)) {
  if (q_.rows() != q_.cols() || r_.rows() != r_.cols()) {
    throw DimensionMismatch("Q and R must be square");
  }
  if (q_mask_.rows() != q_.rows() || q_mask_.cols() != q_.cols() ||
      r_mask_.rows() != r_.rows() || r_mask_.cols() != r_.cols()) {
    throw DimensionMismatch("mask shape does not match its penalty matrix");
  }
  if (!q_.allFinite() || !r_.allFinite()) throw Error("Q and R must be finite");
  RequireSymmetric(q_, "Q");
  RequireSymmetric(r_, "R");
  if (q_mask_ != q_mask_.transpose() || r_mask_ != r_mask_.transpose()) {
    throw Error("sparsity masks must be symmetric");
  }
  for (Eigen::Index i = 0; i < q_.size(); ++i) {
    if (!q_mask_(i) && q_(i) != 0.0) throw Error("Q has a nonzero entry outside its mask");
  }
  for (Eigen::Index i = 0; i < r_.size(); ++i) {
    if (!r_mask_(i) && r_(i) != 0.0) throw Error("R has a nonzero entry outside its mask");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> q_eig(q_, Eigen::EigenvaluesOnly);
  if (q_eig.eigenvalues().minCoeff() < -kPsdTolerance) {
    throw NotPsd("Q must be positive semidefinite");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> r_eig(r_, Eigen::EigenvaluesOnly);
  if (r_eig.eigenvalues().minCoeff() <= 0.0) {
    throw Error("R must be positive definite");
  }
}

CostFunctional CostFunctional::Diagonal(const Eigen::VectorXd& q_diag,
                                        const Eigen::VectorXd& r_diag) {
  return CostFunctional(q_diag.asDiagonal().toDenseMatrix(),
                        r_diag.asDiagonal().toDenseMatrix());
}

CostFunctional CostFunctional::Scaled(double c) const {
  if (!(c > 0.0)) throw Error("cost scale must be positive");
  return CostFunctional(c * q_, c * r_, q_mask_, r_mask_);
}

Eigen::MatrixXd SolveLyapunov(const Eigen::MatrixXd& a, const Eigen::MatrixXd& c) {
  const Eigen::Index n = a.rows();
  if (a.cols() != n || c.rows() != n || c.cols() != n) {
    throw DimensionMismatch("Lyapunov operands must be square and conformable");
  }
  const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(n, n);
  Eigen::MatrixXd op(n * n, n * n);
  // vec(A'X + XA) = (I kron A' + A' kron I) vec(X)
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      op.block(i * n, j * n, n, n) = eye(i, j) * a.transpose() + a(j, i) * eye;
    }
  }
  Eigen::FullPivLU<Eigen::MatrixXd> lu(op);
  if (!lu.isInvertible()) {
    throw Error("Lyapunov operator is singular (A has eigenvalues summing to zero)");
  }
  const Eigen::VectorXd rhs = -Eigen::Map<const Eigen::VectorXd>(c.data(), n * n);
  Eigen::VectorXd x = lu.solve(rhs);
  return Eigen::Map<Eigen::MatrixXd>(x.data(), n, n);
}

RiccatiSolution SolveCare(const LinearSystem& system, const CostFunctional& cost) {
  CheckCostShapes(system, cost);
  const Eigen::Index n = system.n();
  const Eigen::MatrixXd& a = system.a();
  const Eigen::MatrixXd& b = system.b();
  const Eigen::MatrixXd g = b * cost.r().llt().solve(b.transpose());

  Eigen::MatrixXd h(2 * n, 2 * n);
  h << a, -g, -cost.q(), -a.transpose();

  Eigen::ComplexEigenSolver<Eigen::MatrixXd> eig(h, true);
  if (eig.info() != Eigen::Success) {
    throw NoStabilizingSolution("Hamiltonian eigendecomposition failed");
  }
  const double scale = std::max(1.0, h.cwiseAbs().maxCoeff());
  std::vector<Eigen::Index> stable;
  for (Eigen::Index i = 0; i < 2 * n; ++i) {
    const double re = eig.eigenvalues()(i).real();
    if (std::abs(re) <= 1e-12 * scale) {
      throw NoStabilizingSolution("Hamiltonian has eigenvalues on the imaginary axis");
    }
    if (re < 0.0) stable.push_back(i);
  }
  if (static_cast<Eigen::Index>(stable.size()) != n) {
    throw NoStabilizingSolution("stable invariant subspace has wrong dimension");
  }

  Eigen::MatrixXcd basis(2 * n, n);
  for (Eigen::Index j = 0; j < n; ++j) basis.col(j) = eig.eigenvectors().col(stable[j]);
  // Orthonormalize; the subspace (and hence S) is unchanged.
  Eigen::HouseholderQR<Eigen::MatrixXcd> qr(basis);
  const Eigen::MatrixXcd q_basis =
      qr.householderQ() * Eigen::MatrixXcd::Identity(2 * n, n);
  const Eigen::MatrixXcd u1 = q_basis.topRows(n);
  const Eigen::MatrixXcd u2 = q_basis.bottomRows(n);

  Eigen::FullPivLU<Eigen::MatrixXcd> lu(u1);
  if (!lu.isInvertible()) {
    throw NoStabilizingSolution("stable subspace is not a graph subspace");
  }
  // S = U2 U1^-1  <=>  U1' S' = U2'
  const Eigen::MatrixXcd s_complex =
      u1.transpose().fullPivLu().solve(u2.transpose()).transpose();
  RiccatiSolution out = Finish(system, cost, s_complex.real());
  if (!out.s.allFinite() || !IsHurwitz(a - b * out.k)) {
    throw NoStabilizingSolution("Hamiltonian solution is not stabilizing");
  }
  // Eigenvector bases lose accuracy on ill-conditioned problems; Newton steps
  // from the computed gain recover it and stop once the residual stalls.
  for (int it = 0; it < kRefinementSteps; ++it) {
    const Eigen::MatrixXd closed = a - b * out.k;
    RiccatiSolution next = Finish(
        system, cost, SolveLyapunov(closed, cost.q() + out.k.transpose() * cost.r() * out.k));
    if (!(next.residual_norm < out.residual_norm) || !IsHurwitz(a - b * next.k)) break;
    out = std::move(next);
  }
  return out;
}

RiccatiSolution SolveCareNewtonKleinman(const LinearSystem& system,
                                        const CostFunctional& cost,
                                        int max_iterations, double tolerance) {
  CheckCostShapes(system, cost);
  const Eigen::MatrixXd k0 = IsHurwitz(system.a())
                                 ? Eigen::MatrixXd::Zero(system.m(), system.n())
                                 : ContinuationStabilizingGain(system, cost);
  return NewtonKleinmanFrom(system, cost, k0, max_iterations, tolerance);
}

RiccatiSolution SolveCareNewtonKleinman(const LinearSystem& system,
                                        const CostFunctional& cost,
                                        const Eigen::MatrixXd& initial_gain,
                                        int max_iterations, double tolerance) {
  CheckCostShapes(system, cost);
  if (initial_gain.rows() != system.m() || initial_gain.cols() != system.n()) {
    throw DimensionMismatch("initial gain must be m x n");
  }
  return NewtonKleinmanFrom(system, cost, initial_gain, max_iterations, tolerance);
}

double AreResidual(const LinearSystem& system, const Eigen::MatrixXd& s,
                   const Eigen::MatrixXd& q, const Eigen::MatrixXd& r) {
  const Eigen::MatrixXd& a = system.a();
  const Eigen::MatrixXd bts = system.b().transpose() * s;
  const Eigen::MatrixXd m = a.transpose() * s + s * a -
                            bts.transpose() * r.fullPivLu().solve(bts) + q;
  return m.norm();
}

double HjbResidual(const LinearSystem& system, const Eigen::MatrixXd& s_hat,
                   const Eigen::MatrixXd& q_hat, const Eigen::MatrixXd& r_hat) {
  if (s_hat.rows() != system.n() || s_hat.cols() != system.n() ||
      q_hat.rows() != system.n() || q_hat.cols() != system.n() ||
      r_hat.rows() != system.m() || r_hat.cols() != system.m()) {
    throw DimensionMismatch("estimate shapes do not match the system");
  }
  if (!(ConditionNumber(r_hat) < kSingularRThreshold)) {
    throw SingularRHat("R estimate is singular at the 1e12 condition threshold");
  }
  return AreResidual(system, s_hat, q_hat, r_hat);
}

EquivalenceReport CheckEquivalentSolution(const LinearSystem& system,
                                          const Eigen::MatrixXd& s_hat,
                                          const Eigen::MatrixXd& q_hat,
                                          const Eigen::MatrixXd& r_hat,
                                          const Eigen::MatrixXd& k_expert,
                                          double varpi) {
  if (k_expert.rows() != system.m() || k_expert.cols() != system.n()) {
    throw DimensionMismatch("expert gain must be m x n");
  }
  EquivalenceReport report;
  report.hjb_residual = HjbResidual(system, s_hat, q_hat, r_hat);
  const Eigen::MatrixXd k_hat =
      r_hat.fullPivLu().solve(system.b().transpose() * s_hat);
  report.gain_error = SpectralNorm(k_hat - k_expert);
  report.equivalent = report.hjb_residual <= varpi && report.gain_error <= varpi;
  return report;
}

int NumericalRank(const Eigen::MatrixXcd& m) {
  if (m.size() == 0) return 0;
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(m);
  const Eigen::VectorXd& sv = svd.singularValues();
  if (sv.size() == 0 || sv(0) == 0.0) return 0;
  const double cutoff = kRankTolerance * sv(0);
  return static_cast<int>((sv.array() > cutoff).count());
}

int NumericalRank(const Eigen::MatrixXd& m) {
  if (m.size() == 0) return 0;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  const Eigen::VectorXd& sv = svd.singularValues();
  if (sv.size() == 0 || sv(0) == 0.0) return 0;
  const double cutoff = kRankTolerance * sv(0);
  return static_cast<int>((sv.array() > cutoff).count());
}

bool IsStabilizable(const LinearSystem& system) {
  const Eigen::Index n = system.n();
  const Eigen::VectorXcd eig = system.a().eigenvalues();
  const Eigen::MatrixXcd a = system.a().cast<std::complex<double>>();
  const Eigen::MatrixXcd eye = Eigen::MatrixXcd::Identity(n, n);
  Eigen::MatrixXcd pbh(n, n + system.m());
  pbh.rightCols(system.m()) = system.b().cast<std::complex<double>>();
  for (const auto& lambda : eig) {
    if (lambda.real() < -kMarginalTolerance) continue;
    pbh.leftCols(n) = a - lambda * eye;
    if (NumericalRank(pbh) < n) return false;
  }
  return true;
}

bool IsDetectable(const Eigen::MatrixXd& a, const Eigen::MatrixXd& q_sqrt) {
  const Eigen::Index n = a.rows();
  if (a.cols() != n || q_sqrt.cols() != n) {
    throw DimensionMismatch("detectability operands are not conformable");
  }
  const Eigen::VectorXcd eig = a.eigenvalues();
  const Eigen::MatrixXcd ac = a.cast<std::complex<double>>();
  const Eigen::MatrixXcd eye = Eigen::MatrixXcd::Identity(n, n);
  Eigen::MatrixXcd pbh(n + q_sqrt.rows(), n);
  pbh.bottomRows(q_sqrt.rows()) = q_sqrt.cast<std::complex<double>>();
  for (const auto& lambda : eig) {
    if (lambda.real() < -kMarginalTolerance) continue;
    pbh.topRows(n) = ac - lambda * eye;
    if (NumericalRank(pbh) < n) return false;
  }
  return true;
}

Eigen::MatrixXd PsdSqrt(const Eigen::MatrixXd& q) {
  if (q.rows() != q.cols()) throw DimensionMismatch("PsdSqrt needs a square matrix");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (q + q.transpose()));
  Eigen::VectorXd lambda = eig.eigenvalues();
  if (lambda.size() > 0 && lambda.minCoeff() < -kPsdTolerance) {
    throw NotPsd("matrix has an eigenvalue below -1e-10");
  }
  lambda = lambda.cwiseMax(0.0).cwiseSqrt();
  return eig.eigenvectors() * lambda.asDiagonal() * eig.eigenvectors().transpose();
}

double SpectralNorm(const Eigen::MatrixXd& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  return svd.singularValues()(0);
}

double ConditionNumber(const Eigen::MatrixXd& m) {
  if (m.size() == 0) return std::numeric_limits<double>::infinity();
  if (!m.allFinite()) return std::numeric_limits<double>::quiet_NaN();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  const Eigen::VectorXd& sv = svd.singularValues();
  const double smin = sv(sv.size() - 1);
  if (smin == 0.0) return std::numeric_limits<double>::infinity();
  return sv(0) / smin;
}

bool IsHurwitz(const Eigen::MatrixXd& a) {
  if (!a.allFinite()) return false;
  const Eigen::VectorXcd eig = a.eigenvalues();
  return (eig.real().array() < 0.0).all();
}

}  // namespace irlpilot
