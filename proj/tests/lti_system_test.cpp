#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <limits>
#include <random>

#include "irlpilot/errors.hpp"
#include "irlpilot/lti_system.hpp"
#include "support.hpp"

namespace irlpilot {
namespace {

using testing::MaxAbs;
using testing::RandomMatrix;
using testing::RandomSpd;

Eigen::MatrixXd M(std::initializer_list<std::initializer_list<double>> rows) {
  Eigen::MatrixXd m(rows.size(), rows.begin()->size());
  Eigen::Index i = 0;
  for (const auto& r : rows) {
    Eigen::Index j = 0;
    for (double v : r) m(i, j++) = v;
    ++i;
  }
  return m;
}

LinearSystem DoubleIntegrator() { return LinearSystem(M({{0, 1}, {0, 0}}), M({{0}, {1}})); }

// Smallest singular value of [lambda I - A, B] over the unstable eigenvalues:
// the distance from (A, B) to an unstabilizable pair.
double StabilizabilityMargin(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  const Eigen::Index n = a.rows();
  double margin = std::numeric_limits<double>::infinity();
  const Eigen::VectorXcd eig = a.eigenvalues();
  for (const auto& lambda : eig) {
    if (lambda.real() < 0.0) continue;
    Eigen::MatrixXcd pbh(n, n + b.cols());
    pbh << lambda * Eigen::MatrixXcd::Identity(n, n) - a.cast<std::complex<double>>(),
        b.cast<std::complex<double>>();
    margin = std::min(margin, Eigen::JacobiSVD<Eigen::MatrixXcd>(pbh).singularValues().minCoeff());
  }
  return margin;
}

// Gaussian pairs, redrawn while they sit close to losing stabilizability.
// Near that boundary ||S|| grows without bound and no double-precision
// comparison at fixed tolerance is meaningful.
LinearSystem RandomSystem(Eigen::Index n, Eigen::Index m, std::mt19937_64& rng) {
  for (;;) {
    Eigen::MatrixXd a = RandomMatrix(n, n, rng);
    Eigen::MatrixXd b = RandomMatrix(n, m, rng);
    if (StabilizabilityMargin(a, b) >= 0.25) return LinearSystem(std::move(a), std::move(b));
  }
}

TEST(LinearSystemTest, RejectsBadShapesAndValues) {
  EXPECT_THROW(LinearSystem(Eigen::MatrixXd::Zero(3, 2), Eigen::MatrixXd::Zero(3, 1)),
               DimensionMismatch);
  EXPECT_THROW(LinearSystem(Eigen::MatrixXd::Zero(3, 3), Eigen::MatrixXd::Zero(2, 1)),
               DimensionMismatch);
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(2, 2);
  a(0, 1) = std::numeric_limits<double>::infinity();
  EXPECT_THROW(LinearSystem(a, Eigen::MatrixXd::Ones(2, 1)), Error);
}

TEST(CostFunctionalTest, ValidatesSymmetryDefinitenessAndMasks) {
  EXPECT_THROW(CostFunctional(M({{1, 0.1}, {0, 1}}), M({{1}})), Error);
  EXPECT_THROW(CostFunctional(M({{-1, 0}, {0, 1}}), M({{1}})), NotPsd);
  EXPECT_THROW(CostFunctional(M({{1, 0}, {0, 1}}), M({{0}})), Error);

  BoolMatrix q_mask = BoolMatrix::Constant(2, 2, false);
  q_mask(0, 0) = true;
  BoolMatrix r_mask = BoolMatrix::Constant(1, 1, true);
  EXPECT_THROW(CostFunctional(M({{1, 0}, {0, 1}}), M({{1}}), q_mask, r_mask), Error);

  const CostFunctional c = CostFunctional::Diagonal(Eigen::Vector2d(2.0, 0.0),
                                                    Eigen::VectorXd::Constant(1, 3.0));
  EXPECT_TRUE(c.q_mask()(0, 0));
  EXPECT_FALSE(c.q_mask()(1, 1));
  EXPECT_FALSE(c.q_mask()(0, 1));
  const CostFunctional scaled = c.Scaled(2.0);
  EXPECT_DOUBLE_EQ(scaled.q()(0, 0), 4.0);
  EXPECT_DOUBLE_EQ(scaled.r()(0, 0), 6.0);
  EXPECT_EQ(scaled.q_mask(), c.q_mask());
}

TEST(SolveCareTest, ScalarClosedForm) {
  const LinearSystem sys(M({{0}}), M({{1}}));
  const RiccatiSolution sol = SolveCare(sys, CostFunctional(M({{1}}), M({{1}})));
  EXPECT_NEAR(sol.s(0, 0), 1.0, 1e-12);
  EXPECT_NEAR(sol.k(0, 0), 1.0, 1e-12);
}

TEST(SolveCareTest, DoubleIntegratorClosedForm) {
  // A'S + SA - SBB'S + I = 0 with S = [[a, b], [b, c]]:
  //   b^2 = 1, a = bc, 2b - c^2 + 1 = 0  =>  b = 1, c = sqrt(3), a = sqrt(3).
  const double r3 = std::sqrt(3.0);
  const LinearSystem sys = DoubleIntegrator();
  const CostFunctional cost(Eigen::MatrixXd::Identity(2, 2), M({{1}}));
  for (const RiccatiSolution& sol : {SolveCare(sys, cost), SolveCareNewtonKleinman(sys, cost)}) {
    EXPECT_LT(MaxAbs(sol.s - M({{r3, 1}, {1, r3}})), 1e-9);
    EXPECT_LT(MaxAbs(sol.k - M({{1, r3}})), 1e-9);
    EXPECT_LT(sol.residual_norm, 1e-12);
  }
}

TEST(SolveCareTest, QuadcopterSolutionIsStabilizingAndAccurate) {
  const testing::DefaultProblem p;
  const RiccatiSolution sol = SolveCare(p.system, p.cost);
  const double q_scale = std::max(1.0, p.cost.q().norm());
  EXPECT_LT(sol.residual_norm, 1e-9 * q_scale);
  EXPECT_NEAR(sol.residual_norm, AreResidual(p.system, sol.s, p.cost.q(), p.cost.r()), 1e-15);
  EXPECT_TRUE(IsHurwitz(p.system.a() - p.system.b() * sol.k));
  EXPECT_LT(MaxAbs(sol.s - sol.s.transpose()), 1e-10);
  EXPECT_GT(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(sol.s).eigenvalues().minCoeff(),
            -1e-10);
  const Eigen::MatrixXd k = p.cost.r().inverse() * p.system.b().transpose() * sol.s;
  EXPECT_LT(MaxAbs(sol.k - k), 1e-10);
}

TEST(SolveCareTest, NewtonKleinmanAgreesWithHamiltonian) {
  const testing::DefaultProblem p;
  const RiccatiSolution ham = SolveCare(p.system, p.cost);
  const RiccatiSolution nk = SolveCareNewtonKleinman(p.system, p.cost);
  EXPECT_LT(MaxAbs(ham.s - nk.s), 1e-8);
  EXPECT_LT(MaxAbs(ham.k - nk.k), 1e-8);
}

TEST(SolveCareTest, NewtonKleinmanFromGivenGain) {
  const LinearSystem sys = DoubleIntegrator();
  const CostFunctional cost(Eigen::MatrixXd::Identity(2, 2), M({{1}}));
  const RiccatiSolution sol = SolveCareNewtonKleinman(sys, cost, M({{2, 3}}));
  EXPECT_LT(MaxAbs(sol.k - M({{1, std::sqrt(3.0)}})), 1e-9);
}

TEST(SolveCareTest, ScaleEquivariance) {
  const testing::DefaultProblem p;
  const RiccatiSolution base = SolveCare(p.system, p.cost);
  for (double c : {0.1, 2.0, 10.0}) {
    const RiccatiSolution scaled = SolveCare(p.system, p.cost.Scaled(c));
    EXPECT_LT(MaxAbs(scaled.s - c * base.s) / MaxAbs(c * base.s), 1e-8) << "c=" << c;
    EXPECT_LT(MaxAbs(scaled.k - base.k) / MaxAbs(base.k), 1e-8) << "c=" << c;
  }
}

TEST(SolveCareTest, RandomSystemsAgreeAcrossMethods) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 40; ++trial) {
    const Eigen::Index n = 2 + trial % 11;
    const Eigen::Index m = 1 + trial % 3;
    const LinearSystem sys = RandomSystem(n, m, rng);
    const CostFunctional cost(RandomSpd(n, rng), RandomSpd(m, rng));
    const RiccatiSolution ham = SolveCare(sys, cost);
    const RiccatiSolution nk = SolveCareNewtonKleinman(sys, cost);
    const double scale = std::max(1.0, MaxAbs(ham.s));
    EXPECT_LT(MaxAbs(ham.s - nk.s) / scale, 1e-8) << "n=" << n;
    EXPECT_TRUE(IsHurwitz(sys.a() - sys.b() * ham.k));
  }
}

TEST(SolveCareTest, UnreachableUnstableModeHasNoStabilizingSolution) {
  const LinearSystem sys(M({{1}}), M({{0}}));
  EXPECT_THROW(SolveCare(sys, CostFunctional(M({{1}}), M({{1}}))), NoStabilizingSolution);
}

TEST(SolveCareTest, RejectsMismatchedCost) {
  EXPECT_THROW(SolveCare(DoubleIntegrator(), CostFunctional(M({{1}}), M({{1}}))),
               DimensionMismatch);
}

TEST(LyapunovTest, SolvesRandomStableEquation) {
  std::mt19937_64 rng(3);
  for (int n : {1, 3, 7}) {
    Eigen::MatrixXd a = RandomMatrix(n, n, rng);
    a -= (Eigen::ComplexEigenSolver<Eigen::MatrixXd>(a).eigenvalues().real().maxCoeff() + 1.0) *
         Eigen::MatrixXd::Identity(n, n);
    const Eigen::MatrixXd c = RandomSpd(n, rng);
    const Eigen::MatrixXd x = SolveLyapunov(a, c);
    EXPECT_LT(MaxAbs(a.transpose() * x + x * a + c), 1e-10);
  }
}

TEST(PbhTest, ScalarExamples) {
  EXPECT_TRUE(IsStabilizable(LinearSystem(M({{1}}), M({{1}}))));
  EXPECT_FALSE(IsStabilizable(LinearSystem(M({{1}}), M({{0}}))));
  EXPECT_TRUE(IsStabilizable(LinearSystem(M({{-1}}), M({{0}}))));
  EXPECT_FALSE(IsStabilizable(LinearSystem(M({{0}}), M({{0}}))));
  EXPECT_TRUE(IsDetectable(M({{1}}), M({{1}})));
  EXPECT_FALSE(IsDetectable(M({{1}}), M({{0}})));
}

TEST(PbhTest, QuadcopterPassesBothTests) {
  const testing::DefaultProblem p;
  EXPECT_TRUE(IsStabilizable(p.system));
  EXPECT_TRUE(IsDetectable(p.system.a(), PsdSqrt(p.cost.q())));
  // Dropping the heading penalty leaves the psi integrator invisible.
  Eigen::MatrixXd q = p.cost.q();
  q(8, 8) = 0.0;
  EXPECT_FALSE(IsDetectable(p.system.a(), PsdSqrt(q)));
}

// Kalman decomposition oracle: in coordinates [controllable; uncontrollable]
// the pair is stabilizable exactly when the uncontrollable block is Hurwitz.
TEST(PbhTest, AgreesWithKalmanDecompositionOracle) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 2 + trial % 4;
    const int nc = 1 + trial % n;
    const int nu = n - nc;
    const int m = 1 + trial % 2;
    Eigen::MatrixXd a = RandomMatrix(n, n, rng);
    a.bottomLeftCorner(nu, nc).setZero();
    Eigen::MatrixXd b = Eigen::MatrixXd::Zero(n, m);
    b.topRows(nc) = RandomMatrix(nc, m, rng);
    bool oracle = true;
    if (nu > 0) {
      Eigen::MatrixXd a22 = RandomMatrix(nu, nu, rng);
      const double shift = (trial % 3 == 0 ? 0.5 : -0.5) -
                           Eigen::ComplexEigenSolver<Eigen::MatrixXd>(a22).eigenvalues().real().maxCoeff();
      a22 += shift * Eigen::MatrixXd::Identity(nu, nu);
      a.bottomRightCorner(nu, nu) = a22;
      oracle = Eigen::ComplexEigenSolver<Eigen::MatrixXd>(a22).eigenvalues().real().maxCoeff() < 0;
    }
    const Eigen::MatrixXd t = RandomMatrix(n, n, rng) + 3.0 * Eigen::MatrixXd::Identity(n, n);
    const Eigen::MatrixXd ti = t.inverse();
    const LinearSystem sys(t * a * ti, t * b);
    EXPECT_EQ(IsStabilizable(sys), oracle) << "trial " << trial;
    EXPECT_EQ(IsDetectable(sys.a().transpose(), sys.b().transpose()), oracle) << "trial " << trial;
  }
}

TEST(PsdSqrtTest, SquaresBackAndRejectsIndefinite) {
  std::mt19937_64 rng(9);
  const Eigen::MatrixXd q = RandomSpd(6, rng, 0.0);
  const Eigen::MatrixXd r = PsdSqrt(q);
  EXPECT_LT(MaxAbs(r * r - q), 1e-10);
  EXPECT_LT(MaxAbs(r - r.transpose()), 1e-12);
  Eigen::MatrixXd tiny = Eigen::MatrixXd::Zero(2, 2);
  tiny(0, 0) = -1e-12;
  EXPECT_NO_THROW(PsdSqrt(tiny));
  EXPECT_THROW(PsdSqrt(M({{-1e-6, 0}, {0, 1}})), NotPsd);
}

TEST(NumericalRankTest, CountsSingularValuesAboveRelativeThreshold) {
  EXPECT_EQ(NumericalRank(M({{1, 0}, {0, 1e-12}})), 1);
  EXPECT_EQ(NumericalRank(M({{1, 0}, {0, 1e-8}})), 2);
  EXPECT_EQ(NumericalRank(Eigen::MatrixXd(Eigen::MatrixXd::Zero(3, 3))), 0);
}

TEST(HjbResidualTest, ZeroValueFunctionLeavesQ) {
  const testing::DefaultProblem p;
  const Eigen::MatrixXd zero = Eigen::MatrixXd::Zero(12, 12);
  EXPECT_NEAR(HjbResidual(p.system, zero, p.cost.q(), p.cost.r()), p.cost.q().norm(), 1e-12);
  std::mt19937_64 rng(1);
  EXPECT_NEAR(HjbResidual(p.system, zero, p.cost.q(), RandomSpd(4, rng)), p.cost.q().norm(),
              1e-12);
}

TEST(HjbResidualTest, SingularRIsRejected) {
  const testing::DefaultProblem p;
  Eigen::MatrixXd r = Eigen::MatrixXd::Zero(4, 4);
  r(0, 0) = 1.0;
  EXPECT_THROW(HjbResidual(p.system, p.policy.s, p.cost.q(), r), SingularRHat);
}

TEST(HjbResidualTest, GrowsLinearlyUnderSmallPerturbation) {
  const testing::DefaultProblem p;
  std::mt19937_64 rng(2);
  Eigen::MatrixXd e = testing::RandomSymmetric(12, rng);
  e /= e.norm();
  const double r1 = HjbResidual(p.system, p.policy.s + 1e-4 * e, p.cost.q(), p.cost.r());
  const double r2 = HjbResidual(p.system, p.policy.s + 1e-5 * e, p.cost.q(), p.cost.r());
  EXPECT_NEAR(r1 / r2, 10.0, 1e-2);
}

TEST(EquivalenceTest, TrueAndScaledSolutionsAreEquivalent) {
  const testing::DefaultProblem p;
  const auto& k = p.policy.k_expert;
  EquivalenceReport rep =
      CheckEquivalentSolution(p.system, p.policy.s, p.cost.q(), p.cost.r(), k, 1e-8);
  EXPECT_TRUE(rep.equivalent);
  rep = CheckEquivalentSolution(p.system, 2.0 * p.policy.s, 2.0 * p.cost.q(), 2.0 * p.cost.r(),
                                k, 1e-8);
  EXPECT_TRUE(rep.equivalent);

  rep = CheckEquivalentSolution(p.system, Eigen::MatrixXd::Zero(12, 12), p.cost.q(), p.cost.r(),
                                k, 1e-3);
  EXPECT_FALSE(rep.equivalent);
  EXPECT_NEAR(rep.gain_error, SpectralNorm(k), 1e-12);
}

TEST(EquivalenceTest, RandomSystemsAcceptSolverOutputsAndScalings) {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 30; ++trial) {
    const Eigen::Index n = 2 + trial % 11;
    const Eigen::Index m = 1 + trial % 4;
    const LinearSystem sys = RandomSystem(n, m, rng);
    const CostFunctional cost(RandomSpd(n, rng), RandomSpd(m, rng));
    const RiccatiSolution sol = SolveCare(sys, cost);
    const double tol = 1e-8 * std::max(1.0, MaxAbs(sol.s));
    for (double c : {1.0, 0.5, 3.0}) {
      const EquivalenceReport rep =
          CheckEquivalentSolution(sys, c * sol.s, c * cost.q(), c * cost.r(), sol.k, c * tol);
      EXPECT_TRUE(rep.equivalent) << "n=" << n << " c=" << c << " res=" << rep.hjb_residual
                                  << " gain=" << rep.gain_error;
    }
    // A different cost generally gives a different gain.
    const CostFunctional other(RandomSpd(n, rng), RandomSpd(m, rng));
    const RiccatiSolution wrong = SolveCare(sys, other);
    EXPECT_FALSE(CheckEquivalentSolution(sys, wrong.s, other.q(), other.r(), sol.k, tol).equivalent);
  }
}

TEST(NormsTest, SpectralNormAndCondition) {
  EXPECT_NEAR(SpectralNorm(M({{3, 0}, {0, -4}})), 4.0, 1e-15);
  EXPECT_NEAR(ConditionNumber(M({{3, 0}, {0, -4}})), 4.0 / 3.0, 1e-15);
  EXPECT_TRUE(std::isinf(ConditionNumber(M({{1, 0}, {0, 0}}))));
  EXPECT_TRUE(IsHurwitz(M({{-1, 5}, {0, -2}})));
  EXPECT_FALSE(IsHurwitz(M({{0, 1}, {0, 0}})));
}

}  // namespace
}  // namespace irlpilot
