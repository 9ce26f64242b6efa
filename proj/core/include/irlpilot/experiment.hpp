#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "irlpilot/config.hpp"
#include "irlpilot/history_stack.hpp"
#include "irlpilot/rhso.hpp"

namespace irlpilot {

/// Seed of trial `trial_index`, a SplitMix64 mix of both inputs.
std::uint64_t TrialSeed(std::uint64_t master_seed, int trial_index);

struct TrajectoryRow {
  double t = 0.0;
  QuadState x;
  QuadCommand u_pilot;
  QuadCommand u_cmd;
};

struct MetricsRow {
  double t = 0.0;
  EquivalenceMetrics metrics;
  double cond_number = 0.0;
  bool fi_state_span = false;
  bool fi_sym_span = false;
  bool fi_range = false;
};

struct StoredSample {
  double t = 0.0;
  Eigen::VectorXd x;
  Eigen::VectorXd u;
};

struct TrialRecord {
  int trial_index = 0;
  std::uint64_t seed = 0;
  ObserverMode mode = ObserverMode::kRhso;
  WeightInitMode init_mode = WeightInitMode::kUniform;
  QuadState initial_state;
  Eigen::VectorXd initial_weights;
  Eigen::VectorXd final_weights;

  std::vector<TrajectoryRow> trajectory;  // one row per stack sample and at the horizon
  std::vector<MetricsRow> metrics;        // same instants as the trajectory

  EquivalenceMetrics final_metrics;
  double k_expert_norm = 0.0;
  bool diverged = false;
  std::string divergence_reason;
  std::optional<double> divergence_time;

  /// First sample time at which state span, symmetric span and the range
  /// condition all hold.
  std::optional<double> fi_time;
  /// ||Delta|| right after the first sample, and at the horizon.
  double initial_delta_norm = 0.0;
  double final_delta_norm = 0.0;

  /// Observer steps on which ||Delta|| grew although the stack was frozen.
  int contraction_violations = 0;
  double worst_contraction_ratio = 0.0;  // max ||Delta_after|| / ||Delta_before||
  /// Committed stack changes after filling that raised the condition number.
  int condition_increases = 0;
  std::uint64_t stack_replacements = 0;
  double final_condition = 0.0;

  std::vector<StoredSample> final_stack;

  double RelativeGainError() const { return final_metrics.gain_error / k_expert_norm; }
};

struct TrialOptions {
  /// Evaluate the informativity diagnostics at every sample. They dominate
  /// the cost of a sample once the stack is full.
  bool informativity = true;
  /// Stop evaluating informativity once all flags have held at one sample.
  bool informativity_until_first = false;
};

/// Runs one trial of the configured experiment; deterministic in
/// (cfg, trial_index). Observer divergence is flagged in the record.
TrialRecord RunTrial(const ExperimentConfig& cfg, int trial_index,
                     const TrialOptions& options = {});

struct MonteCarloSummary {
  int trials = 0;
  int diverged = 0;
  double mean_gain_error = 0.0;      // NaN as soon as any trial has no finite gain
  double variance_gain_error = 0.0;  // sample variance; 0 for a single trial
  double mean_relative_gain_error = 0.0;
  double stddev_q_error = 0.0;
  bool single_sample = false;
};

struct MonteCarloResult {
  std::vector<TrialRecord> records;  // ordered by trial index
  MonteCarloSummary summary;
};

/// Worker count for `trials` tasks: IRLPILOT_THREADS when set (0 means
/// serial), otherwise the hardware concurrency.
int MonteCarloThreads(int trials);

MonteCarloResult RunMonteCarlo(const ExperimentConfig& cfg, const TrialOptions& options = {},
                               std::optional<int> threads = std::nullopt);

MonteCarloSummary Summarize(const std::vector<TrialRecord>& records);

void WriteTrajectoryCsv(std::ostream& os, const TrialRecord& record);
void WriteMetricsCsv(std::ostream& os, const TrialRecord& record);
void WriteStackCsv(std::ostream& os, const TrialRecord& record);
void WriteSummaryCsv(std::ostream& os, const std::vector<TrialRecord>& records);
void WriteTrialReport(std::ostream& os, const TrialRecord& record);
void WriteMonteCarloReport(std::ostream& os, const ExperimentConfig& cfg,
                           const MonteCarloResult& result);

/// trajectory.csv, metrics.csv, stack.csv and report.txt under `dir`.
void WriteTrialOutputs(const std::filesystem::path& dir, const TrialRecord& record);
/// summary.csv and report.txt under `dir`, plus one trial_NN directory each.
void WriteMonteCarloOutputs(const std::filesystem::path& dir, const ExperimentConfig& cfg,
                            const MonteCarloResult& result);

}  // namespace irlpilot
