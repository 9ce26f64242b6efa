#pragma once

#include <Eigen/Dense>

#include "irlpilot/lti_system.hpp"

namespace irlpilot {

inline constexpr int kQuadStates = 12;
inline constexpr int kQuadInputs = 4;

/// [x, y, z, xdot, ydot, zdot, phi, theta, psi, phidot, thetadot, psidot] in
/// NED coordinates (m, m/s, rad, rad/s).
using QuadState = Eigen::Matrix<double, kQuadStates, 1>;
/// [xdot_d, ydot_d, zdot_d, psidot_d]: commanded velocities and yaw rate.
using QuadCommand = Eigen::Matrix<double, kQuadInputs, 1>;

namespace state_index {
inline constexpr int kX = 0, kY = 1, kZ = 2;
inline constexpr int kXDot = 3, kYDot = 4, kZDot = 5;
inline constexpr int kPhi = 6, kTheta = 7, kPsi = 8;
inline constexpr int kPhiDot = 9, kThetaDot = 10, kPsiDot = 11;
}  // namespace state_index

/// Airframe and autopilot constants. Gains follow the naming of the velocity
/// loop (kp11, kp12, kp13), attitude loop (kp21, kp22, kd1, kd2) and yaw-rate
/// loop (kd3). kp23 is carried for completeness; no law uses it.
struct QuadParams {
  double mass = 0.579902;         // kg
  double arm_length = 0.107642;   // m
  double i_xx = 0.002261;         // kg m^2
  double i_yy = 0.002824;
  double i_zz = 0.002097;
  double k_t = 0.01;              // linear drag
  double g = 9.81;                // m/s^2
  double kp11 = -5.25;
  double kp12 = -5.25;
  double kp13 = 3.0;
  double kp21 = 3.5;
  double kp22 = 3.5;
  double kp23 = 0.35;
  double kd1 = 0.4;
  double kd2 = 0.4;
  double kd3 = 0.1;

  /// Parameters of the lab vehicle.
  static QuadParams Lab() { return {}; }

  double b1() const { return arm_length / i_xx; }
  double b2() const { return arm_length / i_yy; }
  double b3() const { return 1.0 / i_zz; }

  /// Throws ConfigError when a physical constant is out of range.
  void Validate() const;
};

enum class AutopilotVariant {
  kFullArctan,   // exact arctangent attitude targets
  kLinearized,   // small-angle form with the pi/4 arctangent slope
};

struct DesiredAngles {
  double theta = 0.0;
  double phi = 0.0;
};

struct ThrustTorques {
  double thrust = 0.0;  // N
  double tau1 = 0.0;    // N m
  double tau2 = 0.0;
  double tau3 = 0.0;
};

/// Attitude targets of the velocity loop. Throws SingularThrustDenominator
/// when |g + kp13 (zdot_d - zdot)| <= 1e-6.
DesiredAngles AutopilotAngles(const QuadParams& params, const QuadState& state,
                              const QuadCommand& cmd, AutopilotVariant variant);

ThrustTorques ComputeThrustAndTorques(const QuadParams& params,
                                      const QuadState& state,
                                      const QuadCommand& cmd,
                                      const DesiredAngles& angles);

/// Closed-loop nonlinear vector field: translational dynamics with the
/// small-angle rotation matrix, rigid-body rotation with gyroscopic terms.
QuadState NonlinearDerivative(const QuadParams& params, const QuadState& state,
                              const QuadCommand& cmd, AutopilotVariant variant);

/// 12-state linearization about hover, including the kinematic rows.
LinearSystem BuildLinearModel(const QuadParams& params);

struct LinearizationReport {
  double max_state_error = 0.0;  // max |J_x - A|
  double max_input_error = 0.0;  // max |J_u - B|
  Eigen::MatrixXd jacobian_state;
  Eigen::MatrixXd jacobian_input;
};

/// Central-difference Jacobian of NonlinearDerivative at the origin compared
/// against BuildLinearModel.
LinearizationReport VerifyLinearization(
    const QuadParams& params,
    AutopilotVariant variant = AutopilotVariant::kLinearized,
    double step = 1e-6);

}  // namespace irlpilot
