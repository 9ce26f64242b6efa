#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include <Eigen/Dense>

#include "irlpilot/basis.hpp"
#include "irlpilot/lti_system.hpp"
#include "irlpilot/pilot.hpp"
#include "irlpilot/quadcopter.hpp"

namespace irlpilot {

enum class PlantFidelity { kLinear, kNonlinear };
enum class WeightInitMode { kUniform, kTruncatedNormal };
enum class LayoutKind { kFull, kSparse };
enum class ObserverMode { kRhso, kHso };
enum class InitialStateMode { kRandomHover, kExplicit };

/// Diagonal penalties. The structural masks are the nonzero pattern of the
/// diagonals, which is also what the sparse weight layout is built from.
struct CostSpec {
  Eigen::VectorXd q_diag;
  Eigen::VectorXd r_diag;

  CostFunctional Build() const;
};

struct ObserverConfig {
  double epsilon = 0.002;
  int stack_capacity = 100;
  double sample_interval = 0.08;  // s
  WeightInitMode init_mode = WeightInitMode::kUniform;
  std::array<double, 2> init_range{-5.0, 5.0};
  LayoutKind layout = LayoutKind::kSparse;
  ObserverMode mode = ObserverMode::kRhso;
  /// Threshold for the eigenvalue-based informativity flags; unset means
  /// "same as epsilon".
  std::optional<double> epsilon_fi;

  double EffectiveEpsilonFi() const { return epsilon_fi.value_or(epsilon); }
  /// Regularization actually used by the update law.
  double UpdateEpsilon() const { return mode == ObserverMode::kHso ? 0.0 : epsilon; }
};

/// Axis-aligned box for the random hover start, in metres.
struct HoverBox {
  std::array<double, 2> x{-1.5, 1.5};
  std::array<double, 2> y{-1.5, 1.5};
};

struct SimConfig {
  double dt = 0.004;      // s
  double horizon = 200.0; // s
  InitialStateMode initial_state_mode = InitialStateMode::kRandomHover;
  HoverBox hover_box;
  double z_offset = 1.5;  // m, reference hover height above the origin
  PlantFidelity plant = PlantFidelity::kLinear;
  AutopilotVariant autopilot = AutopilotVariant::kLinearized;
  QuadState initial_state = QuadState::Zero();  // used in explicit mode

  /// Number of integration steps between stack samples.
  int StepsPerSample(double sample_interval) const;
  int TotalSteps() const;
};

struct ExperimentConfig {
  QuadParams quad;
  CostSpec cost;
  ExcitationConfig excitation;
  ObserverConfig observer;
  SimConfig sim;
  int trials = 13;
  std::uint64_t master_seed = 20240917;

  /// Every documented default.
  static ExperimentConfig Defaults();
  /// Missing keys keep their defaults; unknown keys and bad values throw
  /// ConfigError.
  static ExperimentConfig FromTomlString(std::string_view text);
  static ExperimentConfig FromTomlFile(const std::filesystem::path& path);

  /// Throws ConfigError on inconsistent settings.
  void Validate() const;

  WeightLayout Layout() const;
};

std::string_view ToString(PlantFidelity v);
std::string_view ToString(WeightInitMode v);
std::string_view ToString(LayoutKind v);
std::string_view ToString(ObserverMode v);
std::string_view ToString(InitialStateMode v);
std::string_view ToString(AutopilotVariant v);

/// Parse helpers used by the CLI; throw ConfigError on unknown names.
ObserverMode ParseObserverMode(std::string_view name);
LayoutKind ParseLayoutKind(std::string_view name);

/// Canonical TOML rendering of a configuration (round-trips through
/// FromTomlString).
std::string ToToml(const ExperimentConfig& cfg);

}  // namespace irlpilot
