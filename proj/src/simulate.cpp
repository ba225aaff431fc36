#include "phsis/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "phsis/kernels.hpp"

namespace phsis {

std::vector<double> uniform_grid(double t_max, int points) {
  if (points < 2) throw InputError("grid: need at least two points");
  std::vector<double> g(static_cast<std::size_t>(points));
  for (int k = 0; k < points; ++k) g[k] = t_max * k / (points - 1);
  g.back() = t_max;
  return g;
}

void SimConfig::validate(bool allow_empty_initial) const {
  if (!(rate >= 0.0) || !std::isfinite(rate)) throw InputError("sim: rate must be nonnegative and finite");
  if (!(t_max > 0.0) || !std::isfinite(t_max)) throw InputError("sim: t_max must be positive");
  if (runs < 1) throw InputError("sim: run count must be >= 1");
  if (initial_infected.empty() && !allow_empty_initial) throw InputError("sim: initial infected set is empty");
  std::vector<int> init = initial_infected;
  std::sort(init.begin(), init.end());
  if (std::adjacent_find(init.begin(), init.end()) != init.end())
    throw InputError("sim: initial infected set has duplicates");
  for (int i : init)
    if (i < 0 || i >= graph.nodes()) throw InputError("sim: initial infected node out of range");
  for (std::size_t k = 0; k < grid.size(); ++k) {
    if (grid[k] < 0.0 || grid[k] > t_max) throw InputError("sim: grid point outside [0, t_max]");
    if (k > 0 && !(grid[k] > grid[k - 1])) throw InputError("sim: grid must be strictly increasing");
  }
}

std::vector<double> SimConfig::observation_grid() const { return grid.empty() ? uniform_grid(t_max) : grid; }

std::string to_string(EventKind k) {
  switch (k) {
    case EventKind::phase_change:
      return "phase-change";
    case EventKind::recovery:
      return "recovery";
    case EventKind::transmission_broadcast:
      return "transmission-broadcast";
    case EventKind::infection:
      return "infection";
  }
  return "unknown";
}

namespace {

/// Binary sum tree over per-node event rates. Parents are recomputed from
/// their children on every update, so the total never drifts.
class RateTree {
 public:
  explicit RateTree(int n) : leaves_(1) {
    while (leaves_ < n) leaves_ *= 2;
    tree_.assign(static_cast<std::size_t>(2 * leaves_), 0.0);
  }

  void set(int i, double rate) {
    std::size_t k = static_cast<std::size_t>(leaves_ + i);
    tree_[k] = rate;
    for (k /= 2; k >= 1; k /= 2) tree_[k] = tree_[2 * k] + tree_[2 * k + 1];
  }

  double total() const { return tree_[1]; }

  int find(double x) const {
    std::size_t k = 1;
    while (k < static_cast<std::size_t>(leaves_)) {
      const double left = tree_[2 * k];
      if (x < left || tree_[2 * k + 1] <= 0.0) {
        k = 2 * k;
      } else {
        x -= left;
        k = 2 * k + 1;
      }
    }
    return static_cast<int>(k) - leaves_;
  }

 private:
  int leaves_;
  std::vector<double> tree_;
};

class Engine {
 public:
  Engine(const SimConfig& cfg, std::uint64_t run_index, bool record)
      : cfg_(cfg),
        n_(cfg.graph.nodes()),
        p_(cfg.ph.phases()),
        rng_(cfg.seed, run_index),
        tree_(std::max(1, cfg.graph.nodes())),
        phase_(static_cast<std::size_t>(cfg.graph.nodes()), -1),
        record_(record),
        grid_(cfg.observation_grid()) {
    traj_.nodes = n_;
    traj_.seed = cfg.seed;
    traj_.run_index = run_index;
    traj_.infected.reserve(grid_.size() * static_cast<std::size_t>(n_));
  }

  Trajectory run() {
    for (int i : cfg_.initial_infected) infect(i, 0.0);

    double t = 0.0;
    std::size_t g = 0;
    while (true) {
      const double total = tree_.total();
      if (!(total > 0.0)) {
        traj_.extinction_time = t;
        snapshot_until(g, std::numeric_limits<double>::infinity());
        break;
      }
      const double next = t + rng_.exponential(total);
      if (next > cfg_.t_max) {
        snapshot_until(g, std::numeric_limits<double>::infinity());
        break;
      }
      snapshot_until(g, next);
      t = next;
      fire(tree_.find(rng_.uniform() * total), t);
    }
    return std::move(traj_);
  }

 private:
  double node_rate(int i) const {
    if (phase_[i] < 0) return 0.0;
    return cfg_.ph.transition_cdf(phase_[i]).back() + cfg_.rate;
  }

  void set_phase(int i, int phase) {
    phase_[i] = phase;
    tree_.set(i, node_rate(i));
  }

  void log(double t, int node, EventKind kind) {
    if (record_) traj_.events.push_back({t, node, kind, phase_[node]});
  }

  void infect(int i, double t) {
    set_phase(i, sample_initial_phase(cfg_.ph, rng_));
    log(t, i, EventKind::infection);
  }

  void broadcast(int i, double t) {
    for (int j : cfg_.graph.neighbors(i))
      if (phase_[j] < 0) infect(j, t);
  }

  void fire(int i, double t) {
    const auto row = cfg_.ph.transition_cdf(phase_[i]);
    const double internal = row.back();
    const double u = rng_.uniform() * (internal + cfg_.rate);
    if (u >= internal) {
      if (cfg_.regime == Regime::ph_recovery) {
        log(t, i, EventKind::transmission_broadcast);
        broadcast(i, t);
      } else {
        set_phase(i, -1);
        log(t, i, EventKind::recovery);
      }
      return;
    }
    const auto target = static_cast<int>(rng_.categorical(row));
    if (target < p_) {
      set_phase(i, target);
      log(t, i, EventKind::phase_change);
    } else if (cfg_.regime == Regime::ph_recovery) {
      set_phase(i, -1);
      log(t, i, EventKind::recovery);
    } else {
      // Renewal: infect susceptible neighbours, then restart own clock.
      broadcast(i, t);
      set_phase(i, sample_initial_phase(cfg_.ph, rng_));
      log(t, i, EventKind::transmission_broadcast);
    }
  }

  // Records the current state at every grid point strictly before `until`.
  void snapshot_until(std::size_t& g, double until) {
    for (; g < grid_.size() && grid_[g] < until; ++g)
      for (int i = 0; i < n_; ++i) traj_.infected.push_back(phase_[i] >= 0 ? 1 : 0);
  }

  const SimConfig& cfg_;
  int n_;
  int p_;
  RandomStream rng_;
  RateTree tree_;
  std::vector<int> phase_;
  bool record_;
  std::vector<double> grid_;
  Trajectory traj_;
};

}  // namespace

Trajectory run_regime_A(const SimConfig& cfg, std::uint64_t run_index, bool record_events) {
  if (cfg.regime != Regime::ph_recovery) throw InputError("run_regime_A: config regime is not ph-recovery");
  cfg.validate();
  return Engine(cfg, run_index, record_events).run();
}

Trajectory run_regime_B(const SimConfig& cfg, std::uint64_t run_index, bool record_events) {
  if (cfg.regime != Regime::ph_transmission) throw InputError("run_regime_B: config regime is not ph-transmission");
  cfg.validate();
  return Engine(cfg, run_index, record_events).run();
}

Trajectory run_single(const SimConfig& cfg, std::uint64_t run_index, bool record_events) {
  return cfg.regime == Regime::ph_recovery ? run_regime_A(cfg, run_index, record_events)
                                           : run_regime_B(cfg, run_index, record_events);
}

namespace {

struct Tally {
  std::vector<std::int64_t> node_count;  // grid × nodes
  std::vector<std::int64_t> sum_k;       // per grid: sum over runs of infected count
  std::vector<std::int64_t> sum_k2;
  std::vector<std::int64_t> extinct;

  Tally(std::size_t grid, std::size_t nodes)
      : node_count(grid * nodes, 0), sum_k(grid, 0), sum_k2(grid, 0), extinct(grid, 0) {}

  void add(const Trajectory& tr, const std::vector<double>& t) {
    const auto n = static_cast<std::size_t>(tr.nodes);
    for (std::size_t g = 0; g < t.size(); ++g) {
      std::int64_t k = 0;
      for (std::size_t i = 0; i < n; ++i) {
        const std::int64_t on = tr.infected[g * n + i];
        node_count[g * n + i] += on;
        k += on;
      }
      sum_k[g] += k;
      sum_k2[g] += k * k;
      if (tr.extinction_time && *tr.extinction_time <= t[g]) ++extinct[g];
    }
  }

  void merge(const Tally& o) {
    for (std::size_t q = 0; q < node_count.size(); ++q) node_count[q] += o.node_count[q];
    for (std::size_t g = 0; g < sum_k.size(); ++g) {
      sum_k[g] += o.sum_k[g];
      sum_k2[g] += o.sum_k2[g];
      extinct[g] += o.extinct[g];
    }
  }
};

}  // namespace

EnsembleSummary run_ensemble(const SimConfig& cfg, Execution exec) {
  cfg.validate();
  const std::vector<double> t = cfg.observation_grid();
  const auto n = static_cast<std::size_t>(cfg.graph.nodes());
  const int runs = cfg.runs;

  Tally total(t.size(), n);
  std::vector<double> extinction(static_cast<std::size_t>(runs), std::numeric_limits<double>::quiet_NaN());

  if (exec == Execution::parallel) {
#pragma omp parallel
    {
      Tally local(t.size(), n);
#pragma omp for schedule(dynamic, 4)
      for (int r = 0; r < runs; ++r) {
        const Trajectory tr = run_single(cfg, static_cast<std::uint64_t>(r), false);
        local.add(tr, t);
        if (tr.extinction_time) extinction[r] = *tr.extinction_time;
      }
#pragma omp critical
      total.merge(local);
    }
  } else {
    for (int r = 0; r < runs; ++r) {
      const Trajectory tr = run_single(cfg, static_cast<std::uint64_t>(r), false);
      total.add(tr, t);
      if (tr.extinction_time) extinction[r] = *tr.extinction_time;
    }
  }

  EnsembleSummary s;
  s.t = t;
  s.nodes = static_cast<int>(n);
  s.runs = runs;
  s.seed = cfg.seed;
  const double R = runs;
  const double dn = static_cast<double>(n);
  for (std::size_t g = 0; g < t.size(); ++g) {
    const double m = static_cast<double>(total.sum_k[g]) / R;
    const double m2 = static_cast<double>(total.sum_k2[g]) / R;
    const double var = runs > 1 ? std::max(0.0, (m2 - m * m) * R / (R - 1.0)) : 0.0;
    s.mean_infected_fraction.push_back(m / dn);
    s.stderr_infected_fraction.push_back(std::sqrt(var / R) / dn);
    s.extinct_prob.push_back(static_cast<double>(total.extinct[g]) / R);
    for (std::size_t i = 0; i < n; ++i) {
      const double p = static_cast<double>(total.node_count[g * n + i]) / R;
      s.node_prob.push_back(p);
      s.node_stderr.push_back(runs > 1 ? std::sqrt(p * (1.0 - p) / (R - 1.0)) : 0.0);
    }
  }
  int censored = 0;
  for (double e : extinction) censored += std::isnan(e) ? 1 : 0;
  s.censored_fraction = censored / R;
  s.extinction_times = std::move(extinction);
  return s;
}

MeanFieldBound mean_field_bound(const SimConfig& cfg, Execution exec) {
  cfg.validate(true);
  const KroneckerOperator op(cfg.regime == Regime::ph_recovery ? a_beta_blocks(cfg.graph, cfg.ph, cfg.rate)
                                                               : b_delta_blocks(cfg.graph, cfg.ph, cfg.rate));
  const int n = cfg.graph.nodes();
  const int p = cfg.ph.phases();
  const auto dim = static_cast<std::size_t>(n) * static_cast<std::size_t>(p);
  const std::vector<double> t = cfg.observation_grid();

  const double norm = op.norm_inf();
  const double max_step = norm > 0.0 ? 0.01 / norm : t.back();
  constexpr double kMaxSteps = 1e9;
  if (t.back() / max_step > kMaxSteps)
    throw ConvergenceError("mean_field_bound: step underflow, required step " + std::to_string(max_step), max_step);

  auto apply = [&](const std::vector<double>& x, std::vector<double>& y) {
    if (exec == Execution::parallel)
      kernels::kron_apply(op.blocks(), x, y);
    else
      kernels::serial::kron_apply(op.blocks(), x, y);
  };

  std::vector<double> x(dim, 0.0);
  for (int i : cfg.initial_infected)
    for (int l = 0; l < p; ++l) x[static_cast<std::size_t>(i) * p + l] = cfg.ph.phi()[l];
  std::vector<double> k1(dim), k2(dim), k3(dim), k4(dim), tmp(dim);

  MeanFieldBound out;
  out.t = t;
  out.nodes = n;
  out.step = max_step;
  double now = 0.0;
  for (double target : t) {
    const double span = target - now;
    if (span > 0.0) {
      const auto steps = static_cast<long>(std::ceil(span / max_step));
      const double h = span / static_cast<double>(steps);
      for (long s = 0; s < steps; ++s) {
        apply(x, k1);
        for (std::size_t q = 0; q < dim; ++q) tmp[q] = x[q] + 0.5 * h * k1[q];
        apply(tmp, k2);
        for (std::size_t q = 0; q < dim; ++q) tmp[q] = x[q] + 0.5 * h * k2[q];
        apply(tmp, k3);
        for (std::size_t q = 0; q < dim; ++q) tmp[q] = x[q] + h * k3[q];
        apply(tmp, k4);
        for (std::size_t q = 0; q < dim; ++q) x[q] += h / 6.0 * (k1[q] + 2.0 * k2[q] + 2.0 * k3[q] + k4[q]);
      }
      now = target;
    }
    out.state.insert(out.state.end(), x.begin(), x.end());
    for (int i = 0; i < n; ++i) {
      double s = 0.0;
      for (int l = 0; l < p; ++l) s += x[static_cast<std::size_t>(i) * p + l];
      out.bound.push_back(s);
    }
  }
  return out;
}

}  // namespace phsis
