#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "irlpilot/lti_system.hpp"

namespace irlpilot {

/// Multisine excitation added on top of the pilot's commands. One set of
/// sinusoids per command channel.
struct ExcitationConfig {
  int num_sets = 4;
  int sines_per_set = 75;
  double f_min = 0.001;    // Hz
  double f_max = 10.0;     // Hz
  double magnitude = 0.03;
  std::uint64_t phase_seed = 1;

  void Validate() const;
};

/// Frequencies and phases are fixed at construction, so evaluation is a pure
/// function of t.
class ExcitationSignal {
 public:
  explicit ExcitationSignal(const ExcitationConfig& cfg);

  Eigen::VectorXd operator()(double t) const;

  int channels() const { return config_.num_sets; }
  const ExcitationConfig& config() const { return config_; }
  /// Row j holds the frequencies (Hz) of channel j.
  const Eigen::MatrixXd& frequencies() const { return frequencies_; }
  const Eigen::MatrixXd& phases() const { return phases_; }

 private:
  ExcitationConfig config_;
  Eigen::MatrixXd frequencies_;
  Eigen::MatrixXd phases_;
};

/// Optimal expert: u = -k_expert x with k_expert = R^-1 B' S.
struct PilotPolicy {
  Eigen::MatrixXd k_expert;
  CostFunctional cost;
  Eigen::MatrixXd s;  // ARE solution the gain came from
};

/// Q = diag(9.57, 6.91, 2.84, 0, 0, 0, 0, 0, 11.68, 0, 0, 0),
/// R = diag(9.57, 3.48, 14.40, 0.17): positions and heading penalized.
CostFunctional MakeDefaultCost();

PilotPolicy SynthesizePilot(const LinearSystem& system, const CostFunctional& cost);

struct PilotCommand {
  Eigen::VectorXd pilot;  // -k_expert x, what the observer records
  Eigen::VectorXd cmd;    // pilot + excitation, what the plant receives
};

PilotCommand CommandedInput(const PilotPolicy& policy,
                            const ExcitationSignal& excitation,
                            const Eigen::VectorXd& state, double t);

}  // namespace irlpilot
