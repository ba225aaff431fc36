#include <CLI11.hpp>

#include <iostream>

#include "commands.hpp"
#include "phsis/io.hpp"

using namespace phsis::cli;

int main(int argc, char** argv) {
  CLI::App app{"Phase-type SIS epidemic thresholds, fitting and simulation"};
  app.set_version_flag("--version", phsis::io::kToolVersion);
  app.require_subcommand(1);

  FitOptions fit;
  auto* fit_cmd = app.add_subcommand("fit", "Fit a phase-type distribution to a unit-mean Weibull density");
  fit_cmd->add_option("--alpha", fit.alpha, "Weibull shape")->required();
  fit_cmd->add_option("--phases", fit.phases, "number of phases")->capture_default_str();
  fit_cmd->add_option("--grid", fit.grid, "density grid points")->capture_default_str();
  fit_cmd->add_option("--quantile", fit.quantile, "truncation quantile")->capture_default_str();
  fit_cmd->add_option("--max-iterations", fit.max_iterations, "EM iteration cap")->capture_default_str();
  fit_cmd->add_option("--tolerance", fit.tolerance, "log-likelihood change tolerance")->capture_default_str();
  fit_cmd->add_option("--init", fit.init, "erlang-chain | random")->capture_default_str();
  fit_cmd->add_option("--seed", fit.seed, "seed for the initial guess")->capture_default_str();
  fit_cmd->add_option("--out", fit.out, "output directory (default $PHSIS_OUT_DIR or ./out)");

  ThresholdOptions thr;
  auto* thr_cmd = app.add_subcommand("threshold", "Compute epidemic thresholds for a graph and phase type");
  thr_cmd->add_option("--graph", thr.graph, "graph file (.json or edge list) or complete:N|star:N|path:N|er:N:P[:SEED]")
      ->required();
  thr_cmd->add_option("--ph", thr.ph, "phase-type JSON file or exp:RATE|erlang:K:RATE")->required();
  thr_cmd->add_option("--regime", thr.regime, "ph-recovery (A) | ph-transmission (B)")->capture_default_str();
  thr_cmd->add_flag("--require-irreducible", thr.require_irreducible, "fail with exit code 3 on a disconnected graph");
  thr_cmd->add_option("--out", thr.out, "output directory");

  SimulateOptions sim;
  auto* sim_cmd = app.add_subcommand("simulate", "Monte Carlo ensemble of the phase-augmented SIS chain");
  sim_cmd->add_option("--config", sim.config, "simulation config JSON")->required();
  sim_cmd->add_option("--runs", sim.runs, "run count (a value in the config wins)")->capture_default_str();
  sim_cmd->add_option("--seed", sim.seed, "base seed (a value in the config wins)")->capture_default_str();
  sim_cmd->add_option("--trajectories", sim.trajectories, "write event logs of the first K runs")
      ->capture_default_str();
  sim_cmd->add_flag("--bound", sim.bound, "also integrate the linear mean-field upper bound");
  sim_cmd->add_option("--out", sim.out, "output directory");

  auto* exp_cmd = app.add_subcommand("experiment", "Reproduce the figures");
  exp_cmd->require_subcommand(1);
  ExperimentOptions fig1, fig2;
  std::string fig1_alphas, fig2_alphas;
  auto* fig1_cmd = exp_cmd->add_subcommand("fig1", "Weibull densities against their phase-type fits");
  fig1_cmd->add_option("--alphas", fig1_alphas, "list a,b,c or range start:step:stop (default 1.5,2.5,3.5,4.5)");
  fig1_cmd->add_option("--phases", fig1.phases)->capture_default_str();
  fig1_cmd->add_option("--grid", fig1.grid)->capture_default_str();
  fig1_cmd->add_option("--seed", fig1.seed)->capture_default_str();
  fig1_cmd->add_option("--out", fig1.out, "output directory");

  auto* fig2_cmd = exp_cmd->add_subcommand("fig2", "Closed-form against spectral minimum recovery rates");
  fig2_cmd->add_option("--alphas", fig2_alphas, "list or range (default 0.5:0.5:5)");
  fig2_cmd->add_option("--n", fig2.n, "Erdos-Renyi node count")->capture_default_str();
  fig2_cmd->add_option("--p-edge", fig2.p_edge, "Erdos-Renyi edge probability")->capture_default_str();
  fig2_cmd->add_option("--phases", fig2.phases)->capture_default_str();
  fig2_cmd->add_option("--grid", fig2.grid)->capture_default_str();
  fig2_cmd->add_option("--seed", fig2.seed, "seed for the graph and the fits")->capture_default_str();
  fig2_cmd->add_option("--out", fig2.out, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*fit_cmd) return cmd_fit(fit);
    if (*thr_cmd) return cmd_threshold(thr);
    if (*sim_cmd) return cmd_simulate(sim);
    if (*fig1_cmd) {
      if (!fig1_alphas.empty()) fig1.alphas = parse_alphas(fig1_alphas);
      return cmd_fig1(fig1);
    }
    if (*fig2_cmd) {
      if (!fig2_alphas.empty()) fig2.alphas = parse_alphas(fig2_alphas);
      return cmd_fig2(fig2);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code(e);
  }
  return 2;
}
