#include "irlpilot/quadcopter.hpp"

#include <cmath>
#include <numbers>

namespace irlpilot {
namespace {

using namespace state_index;

constexpr double kMinThrustDenominator = 1e-6;

double ThrustDenominator(const QuadParams& p, const QuadState& x,
                         const QuadCommand& u) {
  const double den = p.g + p.kp13 * (u(2) - x(kZDot));
  if (!(std::abs(den) > kMinThrustDenominator)) {
    throw SingularThrustDenominator(
        "g + kp13 (zdot_d - zdot) is too close to zero for the attitude targets");
  }
  return den;
}

}  // namespace

void QuadParams::Validate() const {
  if (!(mass > 0.0) || !(arm_length > 0.0) || !(i_xx > 0.0) || !(i_yy > 0.0) ||
      !(i_zz > 0.0) || !(g > 0.0)) {
    throw ConfigError("mass, arm length, inertias and g must be positive");
  }
  if (!(k_t >= 0.0)) throw ConfigError("drag k_t must be nonnegative");
  for (double v : {kp11, kp12, kp13, kp21, kp22, kp23, kd1, kd2, kd3}) {
    if (!std::isfinite(v)) throw ConfigError("autopilot gains must be finite");
  }
}

DesiredAngles AutopilotAngles(const QuadParams& p, const QuadState& x,
                              const QuadCommand& u, AutopilotVariant variant) {
  const double den = ThrustDenominator(p, x, u);
  const double ex = p.kp11 * (u(0) - x(kXDot));
  const double ey = p.kp12 * (u(1) - x(kYDot));
  const double psi = x(kPsi);
  DesiredAngles out;
  if (variant == AutopilotVariant::kFullArctan) {
    out.theta = std::atan((ey * std::sin(psi) + ex * std::cos(psi)) / den);
    out.phi = std::atan(std::cos(out.theta) *
                        (ex * std::sin(psi) - ey * std::cos(psi)) / den);
  } else {
    constexpr double kSlope = std::numbers::pi / 4.0;
    out.theta = kSlope * (ey * psi + ex) / den;
    out.phi = kSlope * (ex * psi - ey) / den;
  }
  return out;
}

ThrustTorques ComputeThrustAndTorques(const QuadParams& p, const QuadState& x,
                                      const QuadCommand& u,
                                      const DesiredAngles& angles) {
  ThrustTorques out;
  out.thrust = p.mass * p.g + p.mass * p.kp13 * (x(kZDot) - u(2));
  out.tau1 = p.kp21 * (angles.phi - x(kPhi)) - p.kd1 * x(kPhiDot);
  out.tau2 = p.kp22 * (angles.theta - x(kTheta)) - p.kd2 * x(kThetaDot);
  out.tau3 = p.kd3 * (u(3) - x(kPsiDot));
  return out;
}

QuadState NonlinearDerivative(const QuadParams& p, const QuadState& x,
                              const QuadCommand& u, AutopilotVariant variant) {
  const DesiredAngles angles = AutopilotAngles(p, x, u, variant);
  const ThrustTorques ft = ComputeThrustAndTorques(p, x, u, angles);
  const double phi = x(kPhi), theta = x(kTheta), psi = x(kPsi);
  const double f_over_m = ft.thrust / p.mass;
  const double drag = p.k_t / p.mass;

  QuadState dx;
  dx.segment<3>(kX) = x.segment<3>(kXDot);
  dx.segment<3>(kPhi) = x.segment<3>(kPhiDot);
  // Third column of the small-angle rotation matrix times -F.
  dx(kXDot) = -(theta + phi * psi) * f_over_m - drag * x(kXDot);
  dx(kYDot) = -(theta * psi - phi) * f_over_m - drag * x(kYDot);
  dx(kZDot) = p.g - f_over_m - drag * x(kZDot);

  const double p_rate = x(kPhiDot), q_rate = x(kThetaDot), r_rate = x(kPsiDot);
  dx(kPhiDot) =
      (q_rate * r_rate * (p.i_yy - p.i_zz) + p.arm_length * ft.tau1) / p.i_xx;
  dx(kThetaDot) =
      (p_rate * r_rate * (p.i_zz - p.i_xx) + p.arm_length * ft.tau2) / p.i_yy;
  dx(kPsiDot) = (q_rate * p_rate * (p.i_xx - p.i_yy) + ft.tau3) / p.i_zz;
  return dx;
}

LinearSystem BuildLinearModel(const QuadParams& p) {
  p.Validate();
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(kQuadStates, kQuadStates);
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(kQuadStates, kQuadInputs);
  const double drag = p.k_t / p.mass;
  const double quarter_pi_over_g = std::numbers::pi / (4.0 * p.g);

  for (int i = 0; i < 3; ++i) {
    a(kX + i, kXDot + i) = 1.0;
    a(kPhi + i, kPhiDot + i) = 1.0;
  }

  a(kXDot, kTheta) = -p.g;
  a(kXDot, kXDot) = -drag;

  a(kYDot, kPhi) = p.g;
  a(kYDot, kYDot) = -drag;

  a(kZDot, kZDot) = -p.kp13 - drag;
  b(kZDot, 2) = p.kp13;

  const double roll_cmd = p.b1() * p.kp21 * p.kp12 * quarter_pi_over_g;
  a(kPhiDot, kYDot) = roll_cmd;
  b(kPhiDot, 1) = -roll_cmd;
  a(kPhiDot, kPhiDot) = -p.b1() * p.kd1;
  a(kPhiDot, kPhi) = -p.b1() * p.kp21;

  const double pitch_cmd = p.b2() * p.kp22 * p.kp11 * quarter_pi_over_g;
  b(kThetaDot, 0) = pitch_cmd;
  a(kThetaDot, kXDot) = -pitch_cmd;
  a(kThetaDot, kThetaDot) = -p.b2() * p.kd2;
  a(kThetaDot, kTheta) = -p.b2() * p.kp22;

  a(kPsiDot, kPsiDot) = -p.b3() * p.kd3;
  b(kPsiDot, 3) = p.b3() * p.kd3;

  return LinearSystem(std::move(a), std::move(b));
}

LinearizationReport VerifyLinearization(const QuadParams& params,
                                        AutopilotVariant variant, double step) {
  const LinearSystem lin = BuildLinearModel(params);
  LinearizationReport report;
  report.jacobian_state.resize(kQuadStates, kQuadStates);
  report.jacobian_input.resize(kQuadStates, kQuadInputs);
  const QuadCommand u0 = QuadCommand::Zero();
  for (int j = 0; j < kQuadStates; ++j) {
    QuadState plus = QuadState::Zero(), minus = QuadState::Zero();
    plus(j) = step;
    minus(j) = -step;
    report.jacobian_state.col(j) =
        (NonlinearDerivative(params, plus, u0, variant) -
         NonlinearDerivative(params, minus, u0, variant)) /
        (2.0 * step);
  }
  for (int j = 0; j < kQuadInputs; ++j) {
    QuadCommand plus = QuadCommand::Zero(), minus = QuadCommand::Zero();
    plus(j) = step;
    minus(j) = -step;
    const QuadState x0 = QuadState::Zero();
    report.jacobian_input.col(j) = (NonlinearDerivative(params, x0, plus, variant) -
                                    NonlinearDerivative(params, x0, minus, variant)) /
                                   (2.0 * step);
  }
  report.max_state_error = (report.jacobian_state - lin.a()).cwiseAbs().maxCoeff();
  report.max_input_error = (report.jacobian_input - lin.b()).cwiseAbs().maxCoeff();
  return report;
}

}  // namespace irlpilot
