#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "phsis/graph.hpp"
#include "phsis/phase_type.hpp"
#include "phsis/spectral.hpp"

namespace phsis {

enum class Execution { parallel, serial };

/// One Monte Carlo experiment on the phase-augmented SIS chain.
///
/// Regime ph-recovery: recovery times follow ph, each infected node fires
/// transmission broadcasts at rate `rate` (beta). Regime ph-transmission:
/// each infected node carries a renewal clock following ph, recovers at
/// rate `rate` (delta).
struct SimConfig {
  SimConfig(Graph g, PhaseType p) : graph(std::move(g)), ph(std::move(p)) {}

  Graph graph;
  PhaseType ph;
  std::string graph_id = "graph";
  Regime regime = Regime::ph_recovery;
  double rate = 1.0;
  std::vector<int> initial_infected{0};
  double t_max = 10.0;
  std::vector<double> grid;  // empty: 200 uniform points on [0, t_max]
  int runs = 100;
  std::uint64_t seed = 1;

  /// Throws InputError. `allow_empty_initial` admits an empty initial set
  /// (used by the mean-field bound, whose trajectory is then zero).
  void validate(bool allow_empty_initial = false) const;
  std::vector<double> observation_grid() const;
};

std::vector<double> uniform_grid(double t_max, int points = 200);

enum class EventKind { phase_change, recovery, transmission_broadcast, infection };
std::string to_string(EventKind k);

struct Event {
  double time;
  int node;
  EventKind kind;
  int phase;  // phase after the event, -1 when the node is susceptible
};

struct Trajectory {
  int nodes = 0;
  std::vector<Event> events;
  /// Row-major grid × nodes infected indicators.
  std::vector<std::uint8_t> infected;
  std::optional<double> extinction_time;  // empty: censored at t_max
  std::uint64_t seed = 0;
  std::uint64_t run_index = 0;

  bool censored() const { return !extinction_time.has_value(); }
  bool infected_at(std::size_t grid_index, int node) const {
    return infected[grid_index * static_cast<std::size_t>(nodes) + static_cast<std::size_t>(node)] != 0;
  }
};

/// Exact (Gillespie) simulation of one run. The stream is keyed by
/// (cfg.seed, run_index).
Trajectory run_regime_A(const SimConfig& cfg, std::uint64_t run_index, bool record_events = true);
Trajectory run_regime_B(const SimConfig& cfg, std::uint64_t run_index, bool record_events = true);
Trajectory run_single(const SimConfig& cfg, std::uint64_t run_index, bool record_events = true);

struct EnsembleSummary {
  std::vector<double> t;
  std::vector<double> mean_infected_fraction;
  std::vector<double> stderr_infected_fraction;
  std::vector<double> extinct_prob;
  /// Row-major grid × nodes estimates of p_i(t) and their standard errors.
  std::vector<double> node_prob;
  std::vector<double> node_stderr;
  /// Per run, ordered by run index; NaN when censored.
  std::vector<double> extinction_times;
  int nodes = 0;
  int runs = 0;
  std::uint64_t seed = 0;
  double censored_fraction = 0.0;

  double p(std::size_t grid_index, int node) const {
    return node_prob[grid_index * static_cast<std::size_t>(nodes) + static_cast<std::size_t>(node)];
  }
  double p_stderr(std::size_t grid_index, int node) const {
    return node_stderr[grid_index * static_cast<std::size_t>(nodes) + static_cast<std::size_t>(node)];
  }

  friend bool operator==(const EnsembleSummary&, const EnsembleSummary&) = default;
};

/// Runs cfg.runs independent trajectories (run indices 0..runs-1) and
/// aggregates them. Aggregation uses integer counts, so the result does not
/// depend on thread count or scheduling.
EnsembleSummary run_ensemble(const SimConfig& cfg, Execution exec = Execution::parallel);

struct MeanFieldBound {
  std::vector<double> t;
  /// Row-major grid × nodes upper bound 1ᵀ xi_i(t).
  std::vector<double> bound;
  /// Full state xi(t) per grid point, row-major grid × (nodes·phases).
  std::vector<double> state;
  double step = 0.0;
  int nodes = 0;

  double at(std::size_t grid_index, int node) const {
    return bound[grid_index * static_cast<std::size_t>(nodes) + static_cast<std::size_t>(node)];
  }
};

/// Integrates the linear comparison system xi' = M xi (M = A_beta for
/// ph-recovery, B_delta for ph-transmission) from xi_i(0) = phi on the
/// initial set, with fixed-step RK4, step <= 0.01/||M||_inf.
MeanFieldBound mean_field_bound(const SimConfig& cfg, Execution exec = Execution::parallel);

}  // namespace phsis
