#include "irlpilot/pilot.hpp"

#include <cmath>
#include <numbers>
#include <random>

namespace irlpilot {

void ExcitationConfig::Validate() const {
  if (num_sets < 1 || sines_per_set < 1) {
    throw ConfigError("excitation needs at least one set and one sinusoid");
  }
  if (!(f_min > 0.0) || !(f_min < f_max) || !std::isfinite(f_max)) {
    throw ConfigError("excitation requires 0 < f_min < f_max");
  }
  if (!(magnitude >= 0.0) || !std::isfinite(magnitude)) {
    throw ConfigError("excitation magnitude must be finite and nonnegative");
  }
}

ExcitationSignal::ExcitationSignal(const ExcitationConfig& cfg) : config_(cfg) {
  config_.Validate();
  const int sets = config_.num_sets;
  const int sines = config_.sines_per_set;
  frequencies_.resize(sets, sines);
  phases_.resize(sets, sines);

  // Log-spaced grid over [f_min, f_max); each channel's grid is shifted by a
  // golden-ratio fraction of one grid cell so no two channels share a tone.
  const double log_span = std::log(config_.f_max / config_.f_min);
  for (int j = 0; j < sets; ++j) {
    const double offset = std::fmod(j * (std::numbers::phi - 1.0), 1.0);
    for (int i = 0; i < sines; ++i) {
      const double s = (i + offset) / sines;
      frequencies_(j, i) = config_.f_min * std::exp(s * log_span);
    }
  }

  std::mt19937_64 rng(config_.phase_seed);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  for (int j = 0; j < sets; ++j) {
    for (int i = 0; i < sines; ++i) phases_(j, i) = phase(rng);
  }
}

Eigen::VectorXd ExcitationSignal::operator()(double t) const {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(config_.num_sets);
  if (config_.magnitude == 0.0) return out;
  const double two_pi_t = 2.0 * std::numbers::pi * t;
  for (int j = 0; j < config_.num_sets; ++j) {
    double sum = 0.0;
    for (int i = 0; i < config_.sines_per_set; ++i) {
      sum += std::sin(two_pi_t * frequencies_(j, i) + phases_(j, i));
    }
    out(j) = config_.magnitude * sum;
  }
  return out;
}

CostFunctional MakeDefaultCost() {
  Eigen::VectorXd q(12);
  q << 9.57, 6.91, 2.84, 0, 0, 0, 0, 0, 11.68, 0, 0, 0;
  Eigen::VectorXd r(4);
  r << 9.57, 3.48, 14.40, 0.17;
  return CostFunctional::Diagonal(q, r);
}

PilotPolicy SynthesizePilot(const LinearSystem& system, const CostFunctional& cost) {
  RiccatiSolution sol = SolveCare(system, cost);
  return PilotPolicy{std::move(sol.k), cost, std::move(sol.s)};
}

PilotCommand CommandedInput(const PilotPolicy& policy,
                            const ExcitationSignal& excitation,
                            const Eigen::VectorXd& state, double t) {
  if (excitation.channels() != policy.k_expert.rows()) {
    throw DimensionMismatch("excitation channel count must equal the input dimension");
  }
  PilotCommand out;
  out.pilot = -policy.k_expert * state;
  out.cmd = out.pilot + excitation(t);
  return out;
}

}  // namespace irlpilot
