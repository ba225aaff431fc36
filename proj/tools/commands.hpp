#pragma once

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace phsis::cli {

/// Error carrying an explicit exit code (used to annotate failures with the
/// sweep parameter that caused them).
struct CommandError : std::runtime_error {
  CommandError(const std::string& what, int code) : std::runtime_error(what), code(code) {}
  int code;
};

/// Exit code for an exception: 2 input, 3 precondition, 4 non-convergence.
int exit_code(const std::exception& e);

/// "0.5,1,2" or a range "start:step:stop" (inclusive).
std::vector<double> parse_alphas(const std::string& s);

struct FitOptions {
  double alpha = 1.0;
  int phases = 10;
  int grid = 400;
  double quantile = 0.9999;
  int max_iterations = 1000;
  double tolerance = 1e-7;
  std::string init = "erlang-chain";
  unsigned long long seed = 1;
  std::filesystem::path out;
};

struct ThresholdOptions {
  std::string graph;
  std::string ph;
  std::string regime = "ph-recovery";
  bool require_irreducible = false;
  std::filesystem::path out;
};

struct SimulateOptions {
  std::filesystem::path config;
  int runs = 100;
  unsigned long long seed = 1;
  int trajectories = 0;
  bool bound = false;
  std::filesystem::path out;
};

struct ExperimentOptions {
  std::vector<double> alphas;
  int phases = 10;
  int grid = 400;
  unsigned long long seed = 1;
  int n = 100;
  double p_edge = 0.05;
  std::filesystem::path out;
};

/// Output directory: the flag if given, else $PHSIS_OUT_DIR, else "out".
std::filesystem::path resolve_out(const std::filesystem::path& flag);

int cmd_fit(const FitOptions& o);
int cmd_threshold(const ThresholdOptions& o);
int cmd_simulate(const SimulateOptions& o);
int cmd_fig1(const ExperimentOptions& o);
int cmd_fig2(const ExperimentOptions& o);

}  // namespace phsis::cli
