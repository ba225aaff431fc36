// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <Eigen/Eigenvalues>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <unsupported/Eigen/KroneckerProduct>

#include "phsis/fitting.hpp"
#include "phsis/io.hpp"
#include "phsis/simulate.hpp"
#include "phsis/spectral.hpp"
#include "test_support.hpp"

using namespace phsis;
using testing::ks_critical_1pct;
using testing::ks_statistic;
using testing::reference_ph4;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

int failures = 0;

void report(int id, const std::string& name, bool ok, const std::string& detail) {
  std::printf("[%s] %2d %s: %s\n", ok ? "PASS" : "FAIL", id, name.c_str(), detail.c_str());
  std::fflush(stdout);
  failures += !ok;
}

void info(const std::string& line) {
  std::printf("       %s\n", line.c_str());
  std::fflush(stdout);
}

std::string num(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3g", x);
  return buf;
}

Graph er30() { return connected_erdos_renyi(30, 0.15, 1).graph; }

// ---------------------------------------------------------------------------

void criterion_1() {
  const auto t0 = Clock::now();
  const double delta = 1.3;
  double worst = 0.0;
  for (const Graph& g : {Graph::complete(5), Graph::star(10), er30()}) {
    const double bstar = beta_threshold_spectral(g, PhaseType::exponential(delta));
    const double want = delta / spectral_radius(g);
    worst = std::max(worst, std::abs(bstar - want) / want);
  }
  const double secs = seconds_since(t0);
  report(1, "classical reduction", worst <= 1e-8 && secs < 1.0,
         "max rel err " + num(worst) + " (<= 1e-8), " + num(secs) + " s (< 1 s)");
}

void criterion_2() {
  const auto t0 = Clock::now();
  const PhaseType ph = reference_ph4();
  double worst = 0.0;
  for (const Graph& g : {Graph::star(10), er30()}) {
    const double beta0 = 1.0 / (mean(ph) * spectral_radius(g));
    worst = std::max(worst, std::abs(spectral_abscissa(a_beta_operator(g, ph, beta0))));
  }
  const double secs = seconds_since(t0);
  report(2, "beta threshold identity", worst <= 1e-8 && secs < 10.0,
         "max |eta(A_beta0)| " + num(worst) + " (<= 1e-8), " + num(secs) + " s");
}

void criterion_3() {
  const PhaseType ph = reference_ph4();
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(4, 4);
  bool literal = true;
  bool transpose_ok = true;
  bool corrected_ok = true;
  std::string detail;
  for (const Graph& g : {Graph::star(10), er30()}) {
    const double eta = spectral_radius(g);
    const double delta = 1.01 * delta_threshold_laplace(eta, ph);
    const Eigen::VectorXd u = perron_vector(MetzlerMatrix(adjacency(g)));
    const Eigen::MatrixXd B = assemble_B_delta(g, ph, delta).to_dense();

    const Eigen::VectorXd z = Eigen::kroneckerProduct(u, (delta * I - ph.S()).partialPivLu().solve(ph.v()));
    const Eigen::VectorXd bz = B * z;
    const bool ok = (z.array() > 0.0).all() && (bz.array() < 1e-12).all();
    literal = literal && ok;
    detail += "n=" + std::to_string(g.nodes()) + ": max(Bz) " + num(bz.maxCoeff()) + ", " +
              std::to_string((bz.array() >= 1e-12).count()) + "/" + std::to_string(bz.size()) + " entries >= 0; ";

    transpose_ok = transpose_ok && ((B.transpose() * z).array() < 1e-12).all();
    const Eigen::VectorXd zc = Eigen::kroneckerProduct(u, (delta * I - ph.S().transpose()).partialPivLu().solve(ph.phi()));
    corrected_ok = corrected_ok && (zc.array() > 0.0).all() && ((B * zc).array() < 1e-12).all();
  }
  report(3, "recovery certificate Bz < 0", literal, detail);
  info(std::string("same z against B^T: ") + (transpose_ok ? "B^T z < 0 holds" : "fails"));
  info(std::string("z = u (x) (delta I - S^T)^-1 phi against B: ") + (corrected_ok ? "Bz < 0 holds" : "fails"));
}

void criterion_4() {
  const auto t0 = Clock::now();
  RandomStream rng(404);
  PhaseType random4 = testing::random_phase_type(4, rng);
  const std::vector<std::pair<std::string, PhaseType>> phs{
      {"Erlang(2)", PhaseType::erlang(2, 2.0)}, {"Erlang(4)", PhaseType::erlang(4, 4.0)}, {"random 4-phase", random4}};
  double worst = 0.0;
  for (const Graph& g : {Graph::complete(5), Graph::star(10)})
    for (const auto& [name, ph] : phs) {
      const double d1 = delta_threshold_spectral(g, ph);
      const double d0 = delta_threshold_laplace(g, ph);
      worst = std::max(worst, std::abs(d1 - d0) / d0);
    }
  const double secs = seconds_since(t0);
  report(4, "threshold coincidence", worst <= 1e-6 && secs < 30.0,
         "max rel diff " + num(worst) + " (<= 1e-6), irreducible random PH: " +
             (is_irreducible(random4.S()) ? "yes" : "no") + ", " + num(secs) + " s");
}

void criterion_5() {
  const auto t0 = Clock::now();
  const ConnectedGraph cg = connected_erdos_renyi(100, 0.05, 1);
  const double eta = spectral_radius(cg.graph);
  const bool exact_at_one = weibull_delta_zero(1.0, eta) == eta;

  std::vector<double> alphas;
  for (int k = 1; k <= 10; ++k) alphas.push_back(0.5 * k);
  std::vector<double> d0(alphas.size()), d1(alphas.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (int k = 0; k < static_cast<int>(alphas.size()); ++k) {
    const FitResult fit = fit_density(FitTarget::weibull_unit_mean(alphas[k]), FitConfig{});
    d1[k] = delta_threshold_spectral(cg.graph, fit.ph);
    d0[k] = weibull_delta_zero(alphas[k], eta);
  }
  bool sweep_ok = true;
  std::string bad;
  for (std::size_t k = 0; k < alphas.size(); ++k) {
    const double gap = d1[k] / d0[k] - 1.0;
    if (alphas[k] >= 1.0 && std::abs(gap) > 0.1) {
      sweep_ok = false;
      bad += " " + num(alphas[k]);
    }
  }
  const double secs = seconds_since(t0);
  report(5, "closed form vs spectral sweep", exact_at_one && sweep_ok && secs <= 600.0,
         std::string("delta0(1) == eta: ") + (exact_at_one ? "yes" : "no") + "; |d1/d0 - 1| > 0.1 at alpha" +
             (bad.empty() ? " none" : bad) + "; eta(A) " + num(eta) + ", " + num(secs) + " s");
  for (std::size_t k = 0; k < alphas.size(); ++k)
    info("alpha " + num(alphas[k]) + ": delta0 " + num(d0[k]) + "  delta1 " + num(d1[k]) + "  d1/d0 - 1 " +
         num(d1[k] / d0[k] - 1.0) + (alphas[k] < 1.0 ? "  (no assertion)" : ""));
}

// Metzler property suites --------------------------------------------------

bool pattern_irreducible(const Eigen::MatrixXd& m) {
  const Eigen::Index n = m.rows();
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> r(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) r(i, j) = i == j || m(i, j) != 0.0;
  for (Eigen::Index k = 0; k < n; ++k)
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j) r(i, j) = r(i, j) || (r(i, k) && r(k, j));
  return r.all();
}

Eigen::MatrixXd irreducible_metzler(int n, RandomStream& rng) {
  while (true) {
    Eigen::MatrixXd m = testing::random_metzler(n, rng, 0.6, 3.0);
    if (pattern_irreducible(m)) return m;
  }
}

void criterion_6() {
  const auto t0 = Clock::now();
  RandomStream rng(606);
  int hurwitz_ok = 0, skipped = 0;
  for (int rep = 0; rep < 200; ++rep) {
    const int n = 2 + rep % 10;
    const Eigen::MatrixXd m = testing::random_metzler(n, rng, 0.5, 0.5 + 0.5 * n * rng.uniform());
    const double eta = Eigen::EigenSolver<Eigen::MatrixXd>(m, false).eigenvalues().real().maxCoeff();
    const bool hurwitz = eta < 0.0;
    const HurwitzResult h = is_hurwitz(MetzlerMatrix::from_dense(m));
    const bool certificate = h.stable && (h.certificate.array() > 0.0).all() && ((m * h.certificate).array() < 0.0).all();
    const Eigen::FullPivLU<Eigen::MatrixXd> lu(m);
    const bool inverse_nonpositive = lu.isInvertible() && (lu.inverse().array() <= 1e-12).all();
    if (std::abs(eta) < 1e-8) ++skipped;
    hurwitz_ok += (hurwitz == certificate && hurwitz == inverse_nonpositive);
  }
  int null_ok = 0;
  double worst_residual = 0.0;
  for (int rep = 0; rep < 50; ++rep) {
    const Eigen::MatrixXd m = irreducible_metzler(2 + rep % 12, rng);
    const SpectralResult r = spectral_abscissa_full(MetzlerMatrix::from_dense(m));
    const double res =
        ((m - r.abscissa * Eigen::MatrixXd::Identity(m.rows(), m.cols())) * r.vector).cwiseAbs().maxCoeff();
    worst_residual = std::max(worst_residual, res);
    null_ok += (r.vector.array() > 0.0).all() && res <= 1e-8;
  }
  int mono_ok = 0;
  for (int rep = 0; rep < 50; ++rep) {
    const int n = 2 + rep % 10;
    const Eigen::MatrixXd a = irreducible_metzler(n, rng);
    Eigen::MatrixXd b = Eigen::MatrixXd::Zero(n, n);
    b(static_cast<int>(rng.uniform() * n), static_cast<int>(rng.uniform() * n)) = 0.05 + rng.uniform();
    mono_ok += spectral_abscissa(MetzlerMatrix::from_dense(a)) < spectral_abscissa(MetzlerMatrix::from_dense(a + b));
  }
  const double secs = seconds_since(t0);
  report(6, "Metzler property suites", hurwitz_ok == 200 && null_ok == 50 && mono_ok == 50 && secs < 30.0,
         "Hurwitz equivalences " + std::to_string(hurwitz_ok) + "/200 (boundary cases " + std::to_string(skipped) + "), positive null vector " +
             std::to_string(null_ok) + "/50 (max residual " + num(worst_residual) + "), strict monotonicity " +
             std::to_string(mono_ok) + "/50, " + num(secs) + " s");
}

// Simulation criteria ---------------------------------------------------------

void criterion_7() {
  const auto t0 = Clock::now();
  const PhaseType ph = reference_ph4();
  auto ph_cdf = [&](double t) { return cdf(ph, t); };
  std::string detail;
  bool ok = true;
  auto check = [&](const std::string& name, std::vector<double> xs, const std::function<double(double)>& F) {
    const double d = ks_statistic(std::move(xs), F);
    const double crit = ks_critical_1pct(10000);
    ok = ok && d < crit;
    detail += name + " D=" + num(d) + "; ";
  };

  {
    SimConfig cfg(Graph(1, {}), ph);
    cfg.rate = 3.0;
    cfg.t_max = 1e3;
    std::vector<double> ext;
    for (std::uint64_t r = 0; r < 10000; ++r) {
      const Trajectory tr = run_regime_A(cfg, r, false);
      ext.push_back(tr.extinction_time.value_or(cfg.t_max));
    }
    check("A extinction", ext, ph_cdf);
  }
  {
    SimConfig cfg(Graph(1, {}), ph);
    cfg.regime = Regime::ph_transmission;
    cfg.rate = 0.0;
    cfg.t_max = 1.2e4 * mean(ph);
    const Trajectory tr = run_regime_B(cfg, 0);
    std::vector<double> gaps;
    double last = 0.0;
    for (const Event& e : tr.events)
      if (e.kind == EventKind::transmission_broadcast && gaps.size() < 10000) {
        gaps.push_back(e.time - last);
        last = e.time;
      }
    ok = ok && gaps.size() == 10000;
    check("B renewal", gaps, ph_cdf);
  }
  {
    const double delta = 1.7;
    SimConfig cfg(Graph::complete(5), PhaseType::exponential(delta));
    cfg.rate = 0.9;
    cfg.initial_infected = {0, 1, 2, 3, 4};
    cfg.t_max = 60.0;
    std::vector<double> first;
    for (std::uint64_t r = 0; r < 2000; ++r) {
      const Trajectory tr = run_regime_A(cfg, r);
      std::vector<double> seen(5, cfg.t_max);
      std::vector<bool> done(5, false);
      for (const Event& e : tr.events)
        if (e.kind == EventKind::recovery && !done[e.node]) {
          seen[e.node] = e.time;
          done[e.node] = true;
        }
      first.insert(first.end(), seen.begin(), seen.end());
    }
    check("A p=1 recovery", first, [&](double t) { return 1.0 - std::exp(-delta * t); });
  }
  {
    const double lam = 0.8;
    SimConfig cfg(Graph::path(2), PhaseType::exponential(lam));
    cfg.regime = Regime::ph_transmission;
    cfg.rate = 0.0;
    cfg.t_max = 30.0 / lam;
    cfg.grid = {0.0, cfg.t_max};
    std::vector<double> times;
    for (std::uint64_t r = 0; r < 10000; ++r) {
      const Trajectory tr = run_regime_B(cfg, r);
      double hit = cfg.t_max;
      for (const Event& e : tr.events)
        if (e.kind == EventKind::infection && e.node == 1) {
          hit = e.time;
          break;
        }
      times.push_back(hit);
    }
    check("B p=1 infection", times, [&](double t) { return 1.0 - std::exp(-lam * t); });
  }
  const double secs = seconds_since(t0);
  report(7, "simulator distributional exactness", ok && secs < 120.0,
         detail + "1% critical " + num(ks_critical_1pct(10000)) + ", " + num(secs) + " s");
}

void criterion_8() {
  const auto t0 = Clock::now();
  const Graph g = er30();
  const PhaseType ph = reference_ph4();
  std::string detail;
  bool ok = true;
  for (Regime r : {Regime::ph_recovery, Regime::ph_transmission}) {
    SimConfig cfg(g, ph);
    cfg.regime = r;
    cfg.rate = r == Regime::ph_recovery ? 0.8 * beta_threshold_spectral(g, ph) : 1.25 * delta_threshold_spectral(g, ph);
    cfg.initial_infected = {0};
    cfg.t_max = 20.0;
    cfg.grid = uniform_grid(cfg.t_max, 201);
    cfg.runs = 2000;
    cfg.seed = 8;
    const EnsembleSummary s = run_ensemble(cfg);
    const MeanFieldBound mf = mean_field_bound(cfg);
    int violations = 0;
    double worst = -1.0;
    for (std::size_t k = 0; k < s.t.size(); ++k)
      for (int i = 0; i < g.nodes(); ++i) {
        const double excess = s.p(k, i) - mf.at(k, i) - 3.0 * s.p_stderr(k, i);
        worst = std::max(worst, excess);
        violations += excess > 1e-12;
      }
    ok = ok && violations == 0;
    detail += to_string(r) + " rate " + num(cfg.rate) + ": " + std::to_string(violations) + " violations (max excess " +
              num(worst) + "); ";
  }
  const double secs = seconds_since(t0);
  report(8, "mean-field domination", ok && secs < 300.0, detail + num(secs) + " s");
}

void criterion_9() {
  const Graph g = er30();
  const PhaseType ph = reference_ph4();
  SimConfig cfg(g, ph);
  cfg.rate = 0.5 * beta_threshold_spectral(g, ph);
  const double eta = spectral_abscissa(a_beta_operator(g, ph, cfg.rate));
  cfg.t_max = 200.0 / std::abs(eta);
  cfg.initial_infected.clear();
  for (int i = 0; i < g.nodes(); ++i) cfg.initial_infected.push_back(i);
  cfg.runs = 200;
  cfg.seed = 9;
  const EnsembleSummary s = run_ensemble(cfg);
  const double extinct = s.extinct_prob.back();
  const double final_fraction = s.mean_infected_fraction.back();
  std::string censored;
  for (std::size_t r = 0; r < s.extinction_times.size(); ++r)
    if (std::isnan(s.extinction_times[r])) censored += " " + std::to_string(r);
  report(9, "subcritical extinction", extinct >= 0.99 && final_fraction <= 1e-3,
         "extinct fraction " + num(extinct) + " (>= 0.99), final infected fraction " + num(final_fraction) +
             " (<= 1e-3), t_max " + num(cfg.t_max) + ", seed " + std::to_string(cfg.seed) +
             (censored.empty() ? "" : ", surviving run indices:" + censored));
}

void criterion_10() {
  const auto t0 = Clock::now();
  const std::vector<double> alphas{1.5, 2.5, 3.5, 4.5};
  std::vector<double> mre(alphas.size()), l1(alphas.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (int k = 0; k < static_cast<int>(alphas.size()); ++k) {
    const FitResult r = fit_density(FitTarget::weibull_unit_mean(alphas[k]), FitConfig{});
    mre[k] = std::abs(mean(r.ph) - 1.0);
    l1[k] = r.l1_distance;
  }
  bool ok = true;
  std::string detail;
  for (std::size_t k = 0; k < alphas.size(); ++k) {
    ok = ok && mre[k] <= 0.02 && l1[k] <= 0.05;
    detail += "alpha " + num(alphas[k]) + ": mean err " + num(mre[k]) + ", L1 " + num(l1[k]) + "; ";
  }
  const double secs = seconds_since(t0);
  report(10, "fit quality", ok && secs <= 180.0, detail + num(secs) + " s");
}

// CLI determinism -------------------------------------------------------------

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

// Runs the command into two fresh directories; returns "" when every output
// file is byte-identical, else a description of the difference.
std::string compare_runs(const std::string& name, const std::string& args, const std::filesystem::path& root) {
  std::vector<std::filesystem::path> dirs{root / (name + "_1"), root / (name + "_2")};
  for (const auto& d : dirs) {
    std::filesystem::remove_all(d);
    const std::string cmd = std::string("\"") + PHSIS_CLI + "\" " + args + " --out \"" + d.string() + "\" > /dev/null";
    if (std::system(cmd.c_str()) != 0) return name + ": command failed";
  }
  int files = 0;
  for (const auto& e : std::filesystem::recursive_directory_iterator(dirs[0])) {
    if (!e.is_regular_file()) continue;
    const auto rel = std::filesystem::relative(e.path(), dirs[0]);
    if (!std::filesystem::exists(dirs[1] / rel) || slurp(e.path()) != slurp(dirs[1] / rel))
      return name + ": " + rel.string() + " differs";
    ++files;
  }
  return files == 0 ? name + ": no output" : "";
}

void criterion_11() {
  const auto root = std::filesystem::temp_directory_path() / "phsis_acceptance";
  std::filesystem::create_directories(root);
  io::write_text(root / "sim.json", R"({
  "graph": {"n": 6, "edges": [[0,1],[1,2],[2,3],[3,4],[4,5],[5,0],[0,3]]},
  "ph": {"phi": [0.6, 0.4], "S": [[-2.0, 1.0], [0.5, -1.5]]},
  "regime": "ph-transmission", "rate": 3.0, "initial_infected": [0, 2], "t_max": 5, "grid_points": 26
})");
  const std::vector<std::pair<std::string, std::string>> commands{
      {"fit", "fit --alpha 2.5 --phases 10 --seed 7"},
      {"threshold_A", "threshold --graph er:30:0.15:1 --ph erlang:3:3 --regime A"},
      {"threshold_B", "threshold --graph star:10 --ph erlang:2:2 --regime B"},
      {"simulate", "simulate --config \"" + (root / "sim.json").string() + "\" --runs 300 --seed 5 --trajectories 3 --bound"},
      {"fig1", "experiment fig1 --alphas 1.5,2.5 --phases 6"},
      {"fig2", "experiment fig2 --n 40 --p-edge 0.15 --alphas 1,2 --phases 6 --seed 3"},
  };
  std::string problems;
  for (const auto& [name, args] : commands) {
    const std::string p = compare_runs(name, args, root);
    if (!p.empty()) problems += p + "; ";
  }
  report(11, "CLI determinism", problems.empty(),
         problems.empty() ? std::to_string(commands.size()) + " commands byte-identical across two runs" : problems);
}

}  // namespace

int main() {
  const auto t0 = Clock::now();
  const std::vector<void (*)()> criteria{criterion_1, criterion_2, criterion_3, criterion_4,  criterion_5, criterion_6,
                                         criterion_7, criterion_8, criterion_9, criterion_10, criterion_11};
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    try {
      criteria[k]();
    } catch (const std::exception& e) {
      report(static_cast<int>(k + 1), "criterion", false, std::string("threw: ") + e.what());
    }
  }
  std::printf("%d of %zu criteria failed (%.1f s)\n", failures, criteria.size(), seconds_since(t0));
  return failures == 0 ? 0 : 1;
}
