#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "irlpilot/config.hpp"
#include "irlpilot/csv.hpp"
#include "irlpilot/errors.hpp"
#include "irlpilot/experiment.hpp"
#include "irlpilot/lti_system.hpp"
#include "irlpilot/pilot.hpp"
#include "irlpilot/quadcopter.hpp"
#include "irlpilot/version.hpp"

namespace {

using namespace irlpilot;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitModelCheck = 2;
constexpr double kLinearizationTolerance = 1e-6;

struct CommonFlags {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<int> trials;
  std::string mode;
  std::string layout;
};

void AddCommonFlags(CLI::App* cmd, CommonFlags& flags, const std::string& default_out) {
  flags.out = default_out;
  cmd->add_option("--config", flags.config, "TOML experiment config (defaults when omitted)");
  cmd->add_option("--out", flags.out, "Output directory")->capture_default_str();
  cmd->add_option("--seed", flags.seed, "Override experiment.master_seed");
  cmd->add_option("--trials", flags.trials, "Override experiment.trials")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--mode", flags.mode, "Observer mode")
      ->check(CLI::IsMember({"rhso", "hso"}));
  cmd->add_option("--layout", flags.layout, "Weight layout")
      ->check(CLI::IsMember({"full", "sparse"}));
}

ExperimentConfig LoadConfig(const CommonFlags& flags) {
  ExperimentConfig cfg = flags.config.empty() ? ExperimentConfig::Defaults()
                                              : ExperimentConfig::FromTomlFile(flags.config);
  if (flags.seed) cfg.master_seed = *flags.seed;
  if (flags.trials) cfg.trials = *flags.trials;
  if (!flags.mode.empty()) cfg.observer.mode = ParseObserverMode(flags.mode);
  if (!flags.layout.empty()) cfg.observer.layout = ParseLayoutKind(flags.layout);
  cfg.Validate();
  return cfg;
}

const char* YesNo(bool v) { return v ? "true" : "false"; }

int CheckModel(const ExperimentConfig& cfg) {
  const LinearSystem system = BuildLinearModel(cfg.quad);
  const CostFunctional cost = cfg.cost.Build();
  const bool stabilizable = IsStabilizable(system);
  const bool detectable = IsDetectable(system.a(), PsdSqrt(cost.q()));
  const LinearizationReport lin = VerifyLinearization(cfg.quad);
  const double lin_error = std::max(lin.max_state_error, lin.max_input_error);
  const bool lin_ok = lin_error < kLinearizationTolerance;

  std::cout << "stabilizable=" << YesNo(stabilizable) << "\n"
            << "detectable=" << YesNo(detectable) << "\n"
            << "linearization_max_state_error=" << FormatNumber(lin.max_state_error) << "\n"
            << "linearization_max_input_error=" << FormatNumber(lin.max_input_error) << "\n"
            << "linearization_ok=" << YesNo(lin_ok) << "\n";

  bool pilot_ok = false;
  if (stabilizable && detectable) {
    const PilotPolicy pilot = SynthesizePilot(system, cost);
    const Eigen::MatrixXd a_cl = system.a() - system.b() * pilot.k_expert;
    pilot_ok = IsHurwitz(a_cl);
    std::cout << "are_residual=" << FormatNumber(AreResidual(system, pilot.s, cost.q(), cost.r()))
              << "\n"
              << "closed_loop_hurwitz=" << YesNo(pilot_ok) << "\n"
              << "k_expert_norm=" << FormatNumber(SpectralNorm(pilot.k_expert)) << "\n";
  }
  return stabilizable && detectable && lin_ok && pilot_ok ? kExitOk : kExitModelCheck;
}

double Seconds(std::chrono::steady_clock::time_point since) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - since).count();
}

int Simulate(const ExperimentConfig& cfg, const std::filesystem::path& out) {
  const auto start = std::chrono::steady_clock::now();
  const TrialRecord rec = RunTrial(cfg, 0);
  WriteTrialOutputs(out, rec);
  WriteTrialReport(std::cout, rec);
  std::printf("wall_seconds: %.2f\noutput: %s\n", Seconds(start), out.string().c_str());
  return kExitOk;
}

int MonteCarlo(const ExperimentConfig& cfg, const std::filesystem::path& out) {
  const auto start = std::chrono::steady_clock::now();
  const MonteCarloResult result = RunMonteCarlo(cfg);
  WriteMonteCarloOutputs(out, cfg, result);
  WriteSummaryCsv(std::cout, result.records);
  WriteMonteCarloReport(std::cout, cfg, result);
  std::printf("wall_seconds: %.2f\noutput: %s\n", Seconds(start), out.string().c_str());
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Observer-based inverse reinforcement learning of a surrogate quadcopter pilot"};
  app.require_subcommand(1);

  CommonFlags check_flags, sim_flags, mc_flags;
  CLI::App* check = app.add_subcommand("check-model", "PBH tests and linearization check");
  AddCommonFlags(check, check_flags, ".");
  CLI::App* simulate = app.add_subcommand("simulate", "Run one trial and write its CSV files");
  AddCommonFlags(simulate, sim_flags, "run");
  CLI::App* montecarlo = app.add_subcommand("montecarlo", "Run all trials and summarize");
  AddCommonFlags(montecarlo, mc_flags, "montecarlo");
  CLI::App* version = app.add_subcommand("version", "Print the version");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    std::cerr << app.help();
    return kExitConfig;
  }

  try {
    if (version->parsed()) {
      std::cout << "irlpilot " << Version() << "\n";
      return kExitOk;
    }
    if (check->parsed()) return CheckModel(LoadConfig(check_flags));
    if (simulate->parsed()) return Simulate(LoadConfig(sim_flags), sim_flags.out);
    if (montecarlo->parsed()) return MonteCarlo(LoadConfig(mc_flags), mc_flags.out);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }
  return kExitConfig;
}
