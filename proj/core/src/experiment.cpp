#include "irlpilot/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <limits>
#include <numeric>
#include <ostream>
#include <random>
#include <string>
#include <thread>

#include "irlpilot/csv.hpp"
#include "irlpilot/errors.hpp"
#include "irlpilot/pilot.hpp"
#include "irlpilot/quadcopter.hpp"

namespace irlpilot {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
// Floor on the detectable growth of ||Delta||, in units of the rounding error
// of forming Sigma_u - Sigma w.
constexpr double kContractionRoundoff = 64.0 * std::numeric_limits<double>::epsilon();

using PlantA = Eigen::Matrix<double, kQuadStates, kQuadStates>;
using PlantB = Eigen::Matrix<double, kQuadStates, kQuadInputs>;
using PlantK = Eigen::Matrix<double, kQuadInputs, kQuadStates>;

std::uint64_t SplitMix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double Uniform(std::mt19937_64& rng, double lo, double hi) {
  if (lo == hi) return lo;
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

// Normal centred on the interval with the bounds two standard deviations out,
// resampled until the draw falls inside.
double TruncatedNormal(std::mt19937_64& rng, double lo, double hi) {
  std::normal_distribution<double> dist(0.5 * (lo + hi), 0.25 * (hi - lo));
  for (;;) {
    const double v = dist(rng);
    if (v >= lo && v <= hi) return v;
  }
}

QuadState InitialState(const ExperimentConfig& cfg, std::mt19937_64& rng) {
  if (cfg.sim.initial_state_mode == InitialStateMode::kExplicit) return cfg.sim.initial_state;
  QuadState x = QuadState::Zero();
  x(state_index::kX) = Uniform(rng, cfg.sim.hover_box.x[0], cfg.sim.hover_box.x[1]);
  x(state_index::kY) = Uniform(rng, cfg.sim.hover_box.y[0], cfg.sim.hover_box.y[1]);
  return x;
}

Eigen::VectorXd InitialWeights(const ObserverConfig& obs, Eigen::Index dim,
                               std::mt19937_64& rng) {
  Eigen::VectorXd w(dim);
  const auto [lo, hi] = obs.init_range;
  for (Eigen::Index i = 0; i < dim; ++i) {
    w(i) = obs.init_mode == WeightInitMode::kUniform ? Uniform(rng, lo, hi)
                                                     : TruncatedNormal(rng, lo, hi);
  }
  return w;
}

EquivalenceMetrics Sentinel() {
  return {kNaN, kNaN, kNaN, kNaN, kNaN};
}

// Closed-loop plant under u_cmd = -K x + e(t). The excitation is evaluated on
// the half-step grid and shared between consecutive steps.
class Plant {
 public:
  Plant(const ExperimentConfig& cfg, const LinearSystem& system, const PilotPolicy& policy,
        const ExcitationSignal& excitation)
      : cfg_(cfg),
        a_(system.a()),
        b_(system.b()),
        k_(policy.k_expert),
        excitation_(excitation) {}

  QuadCommand Excitation(double t) const { return excitation_(t); }

  QuadCommand Command(const QuadState& x, const QuadCommand& e) const { return -k_ * x + e; }

  QuadState Derivative(const QuadState& x, const QuadCommand& e) const {
    const QuadCommand u = Command(x, e);
    if (cfg_.sim.plant == PlantFidelity::kLinear) return a_ * x + b_ * u;
    return NonlinearDerivative(cfg_.quad, x, u, cfg_.sim.autopilot);
  }

  QuadState Step(const QuadState& x, const QuadCommand& e0, const QuadCommand& eh,
                 const QuadCommand& e1, double dt) const {
    const QuadState k1 = Derivative(x, e0);
    const QuadState k2 = Derivative(x + 0.5 * dt * k1, eh);
    const QuadState k3 = Derivative(x + 0.5 * dt * k2, eh);
    const QuadState k4 = Derivative(x + dt * k3, e1);
    return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }

 private:
  const ExperimentConfig& cfg_;
  PlantA a_;
  PlantB b_;
  PlantK k_;
  const ExcitationSignal& excitation_;
};

void WriteVector(CsvWriter& csv, const Eigen::Ref<const Eigen::VectorXd>& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) csv << v(i);
}

std::ofstream OpenOutput(const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot write " + path.string());
  return os;
}

std::string TrialDirName(int index) {
  std::string n = std::to_string(index);
  if (n.size() < 2) n.insert(0, 2 - n.size(), '0');
  return "trial_" + n;
}

double SampleVariance(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return ss / static_cast<double>(v.size() - 1);
}

double Mean(const std::vector<double>& v) {
  if (v.empty()) return kNaN;
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

std::uint64_t TrialSeed(std::uint64_t master_seed, int trial_index) {
  return SplitMix64(SplitMix64(master_seed) ^ static_cast<std::uint64_t>(trial_index));
}

TrialRecord RunTrial(const ExperimentConfig& cfg, int trial_index, const TrialOptions& options) {
  cfg.Validate();
  TrialRecord rec;
  rec.trial_index = trial_index;
  rec.seed = TrialSeed(cfg.master_seed, trial_index);
  rec.mode = cfg.observer.mode;
  rec.init_mode = cfg.observer.init_mode;

  const LinearSystem system = BuildLinearModel(cfg.quad);
  const PilotPolicy policy = SynthesizePilot(system, cfg.cost.Build());
  const ExcitationSignal excitation(cfg.excitation);
  const WeightLayout layout = cfg.Layout();
  rec.k_expert_norm = SpectralNorm(policy.k_expert);

  std::mt19937_64 rng(rec.seed);
  rec.initial_state = InitialState(cfg, rng);
  rec.initial_weights = InitialWeights(cfg.observer, layout.total_dim(), rng);

  // Both modes select data with the configured epsilon so that they see the
  // same stack; only the update law drops the regularization in HSO mode.
  HistoryStack stack(system, layout, cfg.observer.stack_capacity, cfg.observer.epsilon);
  ObserverState observer =
      MakeObserver(layout, rec.initial_weights, cfg.observer.UpdateEpsilon());
  const bool hso = cfg.observer.mode == ObserverMode::kHso;
  std::optional<NormalEquations> normal;

  const Plant plant(cfg, system, policy, excitation);
  const double dt = cfg.sim.dt;
  const int steps = cfg.sim.TotalSteps();
  const int per_sample = cfg.sim.StepsPerSample(cfg.observer.sample_interval);
  const double eps_fi = cfg.observer.EffectiveEpsilonFi();

  QuadState x = rec.initial_state;
  QuadCommand e_now = plant.Excitation(0.0);

  std::uint64_t fi_version = 0;
  bool fi_valid = false;
  InformativityReport fi;
  double sigma_scale = 0.0;  // ||Sigma_u|| + ||Sigma||_F, refreshed per stack version
  std::uint64_t scale_version = 0;

  const auto flag_divergence = [&](double t, std::string reason) {
    if (rec.diverged) return;
    rec.diverged = true;
    rec.divergence_time = t;
    rec.divergence_reason = std::move(reason);
  };

  for (int k = 0;; ++k) {
    const double t = k * dt;
    const bool at_end = k == steps;

    if (k % per_sample == 0 || at_end) {
      const QuadCommand u_pilot = -policy.k_expert * x;
      if (!at_end && !rec.diverged) {
        const bool was_full = stack.full();
        const double cond_before = stack.condition_number();
        stack.Record(t, x, u_pilot);
        if (was_full && stack.condition_number() > cond_before) ++rec.condition_increases;
      }
      rec.trajectory.push_back({t, x, u_pilot, u_pilot + e_now});

      MetricsRow row;
      row.t = t;
      row.cond_number = stack.condition_number();
      if (rec.diverged) {
        row.metrics = Sentinel();
      } else {
        row.metrics = Metrics(observer, layout, system, policy);
        row.metrics.delta_norm = Delta(stack, observer.w).norm();
        if (k == 0) rec.initial_delta_norm = row.metrics.delta_norm;
      }
      const bool want_fi = options.informativity &&
                           !(options.informativity_until_first && rec.fi_time.has_value());
      if (want_fi && !stack.empty() && (!fi_valid || fi_version != stack.version())) {
        fi = Informativity(stack, eps_fi);
        fi_version = stack.version();
        fi_valid = true;
      }
      if (fi_valid) {
        row.fi_state_span = fi.state_span;
        row.fi_sym_span = fi.sym_span;
        row.fi_range = fi.range_ok;
        if (!rec.fi_time && fi.finitely_informative()) rec.fi_time = t;
      }
      rec.metrics.push_back(row);
    }
    if (at_end) break;

    if (!rec.diverged && !(hso && !stack.full())) {
      double delta_before = observer.last_delta_norm;
      if (!normal || normal->stack_version() != stack.version()) {
        try {
          normal.emplace(stack, observer.epsilon);
        } catch (const SingularNormalMatrix& e) {
          normal.reset();
          flag_divergence(t, e.what());
        }
        delta_before = Delta(stack, observer.w).norm();
      }
      if (normal) {
        if (scale_version != stack.version()) {
          sigma_scale = stack.sigma_u().norm() + stack.sigma().norm();
          scale_version = stack.version();
        }
        observer = Step(observer, *normal, stack, dt);
        if (observer.diverged) {
          flag_divergence(t + dt, "observer weights became non-finite or exceeded the bound");
        } else {
          const double after = observer.last_delta_norm;
          const double floor = kContractionRoundoff * sigma_scale *
                               std::max(1.0, observer.w.lpNorm<Eigen::Infinity>());
          if (delta_before > 0.0) {
            rec.worst_contraction_ratio = std::max(rec.worst_contraction_ratio, after / delta_before);
          }
          if (after > delta_before + floor) ++rec.contraction_violations;
        }
      }
    }

    const QuadCommand e_half = plant.Excitation((k + 0.5) * dt);
    const QuadCommand e_next = plant.Excitation((k + 1) * dt);
    x = plant.Step(x, e_now, e_half, e_next, dt);
    e_now = e_next;
    if (!x.allFinite()) throw Error("plant state became non-finite");
  }

  rec.final_weights = observer.w;
  rec.final_metrics = rec.metrics.back().metrics;
  rec.final_delta_norm = rec.final_metrics.delta_norm;
  rec.stack_replacements = stack.replacements();
  rec.final_condition = stack.condition_number();
  for (const auto& s : stack.slots()) rec.final_stack.push_back({s.t, s.x, s.u});
  return rec;
}

int MonteCarloThreads(int trials) {
  int threads = static_cast<int>(std::thread::hardware_concurrency());
  if (const char* env = std::getenv("IRLPILOT_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v >= 0) threads = static_cast<int>(v);
  }
  return std::clamp(threads, 0, std::max(trials, 0));
}

MonteCarloResult RunMonteCarlo(const ExperimentConfig& cfg, const TrialOptions& options,
                               std::optional<int> threads) {
  cfg.Validate();
  const int n = cfg.trials;
  const int workers = std::clamp(threads.value_or(MonteCarloThreads(n)), 0, n);
  MonteCarloResult result;
  result.records.resize(n);

  if (workers <= 1) {
    for (int i = 0; i < n; ++i) result.records[i] = RunTrial(cfg, i, options);
  } else {
    std::atomic<int> next{0};
    std::vector<std::exception_ptr> errors(n);
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (int i = next++; i < n; i = next++) {
          try {
            result.records[i] = RunTrial(cfg, i, options);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
    }
    pool.clear();
    for (const auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }
  result.summary = Summarize(result.records);
  return result;
}

MonteCarloSummary Summarize(const std::vector<TrialRecord>& records) {
  MonteCarloSummary s;
  s.trials = static_cast<int>(records.size());
  s.single_sample = s.trials == 1;
  std::vector<double> gain, rel, q;
  for (const auto& r : records) {
    if (r.diverged) ++s.diverged;
    gain.push_back(r.final_metrics.gain_error);
    rel.push_back(r.RelativeGainError());
    q.push_back(r.final_metrics.q_error);
  }
  s.mean_gain_error = Mean(gain);
  s.variance_gain_error = SampleVariance(gain);
  s.mean_relative_gain_error = Mean(rel);
  s.stddev_q_error = std::sqrt(SampleVariance(q));
  return s;
}

void WriteTrajectoryCsv(std::ostream& os, const TrialRecord& record) {
  CsvWriter csv(os);
  csv.Header({"t", "x", "y", "z", "xdot", "ydot", "zdot", "phi", "theta", "psi", "phidot",
              "thetadot", "psidot", "u1_pilot", "u2_pilot", "u3_pilot", "u4_pilot", "u1_cmd",
              "u2_cmd", "u3_cmd", "u4_cmd"});
  for (const auto& row : record.trajectory) {
    csv << row.t;
    WriteVector(csv, row.x);
    WriteVector(csv, row.u_pilot);
    WriteVector(csv, row.u_cmd);
    csv.EndRow();
  }
}

void WriteMetricsCsv(std::ostream& os, const TrialRecord& record) {
  CsvWriter csv(os);
  csv.Header({"t", "delta_norm", "gain_error", "q_error", "r_error", "hjb_res", "cond_number",
              "fi_state_span", "fi_sym_span", "fi_range"});
  for (const auto& row : record.metrics) {
    const auto& m = row.metrics;
    csv << row.t << m.delta_norm << m.gain_error << m.q_error << m.r_error << m.hjb_res
        << row.cond_number;
    csv << std::string_view(row.fi_state_span ? "1" : "0")
        << std::string_view(row.fi_sym_span ? "1" : "0")
        << std::string_view(row.fi_range ? "1" : "0");
    csv.EndRow();
  }
}

void WriteStackCsv(std::ostream& os, const TrialRecord& record) {
  CsvWriter csv(os);
  std::vector<std::string> header{"t"};
  for (int i = 1; i <= kQuadStates; ++i) header.push_back("x" + std::to_string(i));
  for (int i = 1; i <= kQuadInputs; ++i) header.push_back("u" + std::to_string(i));
  csv.Header(header);
  for (const auto& s : record.final_stack) {
    csv << s.t;
    WriteVector(csv, s.x);
    WriteVector(csv, s.u);
    csv.EndRow();
  }
}

void WriteSummaryCsv(std::ostream& os, const std::vector<TrialRecord>& records) {
  CsvWriter csv(os);
  csv.Header({"trial", "seed", "final_gain_error", "final_q_error", "final_r_error", "diverged"});
  for (const auto& r : records) {
    csv << std::string_view(std::to_string(r.trial_index))
        << std::string_view(std::to_string(r.seed)) << r.final_metrics.gain_error
        << r.final_metrics.q_error << r.final_metrics.r_error
        << std::string_view(r.diverged ? "1" : "0");
    csv.EndRow();
  }
}

void WriteTrialReport(std::ostream& os, const TrialRecord& r) {
  const auto opt = [](const std::optional<double>& v) {
    return v ? FormatNumber(*v) : std::string("never");
  };
  os << "trial: " << r.trial_index << "\n"
     << "seed: " << r.seed << "\n"
     << "mode: " << ToString(r.mode) << "\n"
     << "weight_init: " << ToString(r.init_mode) << "\n"
     << "initial_x: " << FormatNumber(r.initial_state(state_index::kX)) << "\n"
     << "initial_y: " << FormatNumber(r.initial_state(state_index::kY)) << "\n"
     << "diverged: " << (r.diverged ? "true" : "false") << "\n";
  if (r.diverged) {
    os << "divergence_time: " << opt(r.divergence_time) << "\n"
       << "divergence_reason: " << r.divergence_reason << "\n";
  }
  os << "final_gain_error: " << FormatNumber(r.final_metrics.gain_error) << "\n"
     << "final_relative_gain_error: " << FormatNumber(r.RelativeGainError()) << "\n"
     << "final_q_error: " << FormatNumber(r.final_metrics.q_error) << "\n"
     << "final_r_error: " << FormatNumber(r.final_metrics.r_error) << "\n"
     << "final_hjb_res: " << FormatNumber(r.final_metrics.hjb_res) << "\n"
     << "initial_delta_norm: " << FormatNumber(r.initial_delta_norm) << "\n"
     << "final_delta_norm: " << FormatNumber(r.final_delta_norm) << "\n"
     << "fi_time: " << opt(r.fi_time) << "\n"
     << "final_condition: " << FormatNumber(r.final_condition) << "\n"
     << "stack_replacements: " << r.stack_replacements << "\n"
     << "condition_increases: " << r.condition_increases << "\n"
     << "contraction_violations: " << r.contraction_violations << "\n";
}

void WriteMonteCarloReport(std::ostream& os, const ExperimentConfig& cfg,
                           const MonteCarloResult& result) {
  const MonteCarloSummary& s = result.summary;
  os << "mode: " << ToString(cfg.observer.mode) << "\n"
     << "layout: " << ToString(cfg.observer.layout) << "\n"
     << "trials: " << s.trials << "\n"
     << "diverged: " << s.diverged << "\n"
     << "mean_final_gain_error: " << FormatNumber(s.mean_gain_error) << "\n"
     << "variance_final_gain_error: " << FormatNumber(s.variance_gain_error) << "\n"
     << "mean_final_relative_gain_error: " << FormatNumber(s.mean_relative_gain_error) << "\n"
     << "stddev_final_q_error: " << FormatNumber(s.stddev_q_error) << "\n";
  if (s.single_sample) os << "note: single trial, variance reported as 0\n";
}

void WriteTrialOutputs(const std::filesystem::path& dir, const TrialRecord& record) {
  std::filesystem::create_directories(dir);
  {
    auto os = OpenOutput(dir / "trajectory.csv");
    WriteTrajectoryCsv(os, record);
  }
  {
    auto os = OpenOutput(dir / "metrics.csv");
    WriteMetricsCsv(os, record);
  }
  {
    auto os = OpenOutput(dir / "stack.csv");
    WriteStackCsv(os, record);
  }
  auto os = OpenOutput(dir / "report.txt");
  WriteTrialReport(os, record);
}

void WriteMonteCarloOutputs(const std::filesystem::path& dir, const ExperimentConfig& cfg,
                            const MonteCarloResult& result) {
  std::filesystem::create_directories(dir);
  for (const auto& r : result.records) WriteTrialOutputs(dir / TrialDirName(r.trial_index), r);
  {
    auto os = OpenOutput(dir / "summary.csv");
    WriteSummaryCsv(os, result.records);
  }
  {
    auto os = OpenOutput(dir / "config.toml");
    os << ToToml(cfg);
  }
  auto os = OpenOutput(dir / "report.txt");
  WriteMonteCarloReport(os, cfg, result);
}

}  // namespace irlpilot
