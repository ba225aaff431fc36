#include "commands.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <iostream>
#include <sstream>

#include "phsis/io.hpp"

namespace phsis::cli {

using io::fmt;
using io::json;

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) parts.push_back(item);
  return parts;
}

double to_double(const std::string& s, const std::string& what) {
  try {
    std::size_t used = 0;
    const double x = std::stod(s, &used);
    if (used == s.size()) return x;
  } catch (const std::exception&) {
  }
  throw InputError(what + ": not a number: '" + s + "'");
}

int to_int(const std::string& s, const std::string& what) {
  const double x = to_double(s, what);
  if (x != std::floor(x) || std::abs(x) > 1e9) throw InputError(what + ": not an integer: '" + s + "'");
  return static_cast<int>(x);
}

// Short label for file names, e.g. 2.5 -> "2.5".
std::string label(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", x);
  return buf;
}

std::string flag(double x) { return fmt(x); }
std::string flag(unsigned long long x) { return std::to_string(x); }
std::string flag(int x) { return std::to_string(x); }

std::string alpha_list(const std::vector<double>& alphas) {
  std::string s;
  for (std::size_t k = 0; k < alphas.size(); ++k) s += (k ? "," : "") + fmt(alphas[k]);
  return s;
}

// Graphs come from a file or a generator spec:
//   complete:N  star:N  path:N  er:N:P[:SEED] (regenerated until connected)
Graph load_graph(const std::string& spec) {
  if (std::filesystem::exists(spec)) return io::read_graph(spec);
  const auto parts = split(spec, ':');
  const std::string& kind = parts.empty() ? spec : parts[0];
  if ((kind == "complete" || kind == "star" || kind == "path") && parts.size() == 2) {
    const int n = to_int(parts[1], "graph size");
    if (n < 1) throw InputError("graph size must be >= 1");
    if (kind == "complete") return Graph::complete(n);
    if (kind == "star") return Graph::star(n);
    return Graph::path(n);
  }
  if (kind == "er" && (parts.size() == 3 || parts.size() == 4)) {
    const int n = to_int(parts[1], "graph size");
    const double p = to_double(parts[2], "edge probability");
    const auto seed = parts.size() == 4 ? static_cast<std::uint64_t>(to_int(parts[3], "graph seed")) : 1u;
    return connected_erdos_renyi(n, p, seed).graph;
  }
  throw InputError("graph: no such file and not a generator spec: '" + spec + "'");
}

// Phase types come from a JSON file or exp:RATE / erlang:K:RATE.
PhaseType load_phase_type(const std::string& spec) {
  if (std::filesystem::exists(spec)) return io::read_phase_type(spec);
  const auto parts = split(spec, ':');
  if (parts.size() == 2 && parts[0] == "exp") return PhaseType::exponential(to_double(parts[1], "rate"));
  if (parts.size() == 3 && parts[0] == "erlang")
    return PhaseType::erlang(to_int(parts[1], "erlang order"), to_double(parts[2], "rate"));
  throw InputError("ph: no such file and not a generator spec: '" + spec + "'");
}

FitInit parse_init(const std::string& s) {
  if (s == "erlang-chain") return FitInit::erlang_chain;
  if (s == "random") return FitInit::random;
  throw InputError("unknown init mode '" + s + "' (erlang-chain | random)");
}

json with_provenance(json body, const io::Provenance& prov) {
  body["provenance"] = prov.to_json();
  return body;
}

void write_json(const std::filesystem::path& path, const json& j) {
  io::write_text(path, j.dump(2) + "\n");
  std::cout << "wrote " << path.string() << "\n";
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  io::write_text(path, text);
  std::cout << "wrote " << path.string() << "\n";
}

FitConfig fit_config(int phases, int grid, std::uint64_t seed) {
  FitConfig cfg;
  cfg.phases = phases;
  cfg.grid = grid;
  cfg.seed = seed;
  return cfg;
}

[[noreturn]] void rethrow_for_alpha(std::exception_ptr e, double alpha) {
  try {
    std::rethrow_exception(e);
  } catch (const std::exception& x) {
    throw CommandError("alpha=" + fmt(alpha) + ": " + x.what(), exit_code(x));
  }
}

// Runs body(k) for every alpha concurrently; the first failure in alpha
// order is re-raised after all work has finished.
template <class F>
void for_each_alpha(const std::vector<double>& alphas, F&& body) {
  std::vector<std::exception_ptr> errors(alphas.size());
  const auto n = static_cast<int>(alphas.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (int k = 0; k < n; ++k) {
    try {
      body(static_cast<std::size_t>(k));
    } catch (...) {
      errors[k] = std::current_exception();
    }
  }
  for (std::size_t k = 0; k < alphas.size(); ++k)
    if (errors[k]) rethrow_for_alpha(errors[k], alphas[k]);
}

std::string diagnostics_columns() { return "l1_distance,mean_relative_error,log_likelihood,iterations,attempts"; }

std::string diagnostics_values(const FitResult& r) {
  return fmt(r.l1_distance) + ',' + fmt(r.mean_relative_error) + ',' + fmt(r.log_likelihood) + ',' +
         std::to_string(r.iterations) + ',' + std::to_string(r.attempts);
}

}  // namespace

int exit_code(const std::exception& e) {
  if (const auto* c = dynamic_cast<const CommandError*>(&e)) return c->code;
  if (dynamic_cast<const InputError*>(&e)) return 2;
  if (dynamic_cast<const PreconditionError*>(&e)) return 3;
  if (dynamic_cast<const ConvergenceError*>(&e)) return 4;
  return 1;
}

std::vector<double> parse_alphas(const std::string& s) {
  std::vector<double> out;
  const auto range = split(s, ':');
  if (range.size() == 3) {
    const double start = to_double(range[0], "alphas"), step = to_double(range[1], "alphas"),
                 stop = to_double(range[2], "alphas");
    if (!(step > 0.0) || stop < start) throw InputError("alphas: range needs step > 0 and stop >= start");
    const auto count = static_cast<int>(std::floor((stop - start) / step + 1e-9));
    for (int k = 0; k <= count; ++k) out.push_back(start + k * step);
  } else {
    for (const auto& part : split(s, ',')) out.push_back(to_double(part, "alphas"));
  }
  if (out.empty()) throw InputError("alphas: empty list");
  for (double a : out)
    if (!(a > 0.0) || !std::isfinite(a)) throw InputError("alphas: values must be positive");
  return out;
}

std::filesystem::path resolve_out(const std::filesystem::path& flag) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv("PHSIS_OUT_DIR"); env && *env) return env;
  return "out";
}

// ---------------------------------------------------------------------------

int cmd_fit(const FitOptions& o) {
  FitConfig cfg = fit_config(o.phases, o.grid, o.seed);
  cfg.quantile = o.quantile;
  cfg.max_iterations = o.max_iterations;
  cfg.tolerance = o.tolerance;
  cfg.init = parse_init(o.init);
  const FitTarget target = FitTarget::weibull_unit_mean(o.alpha);
  const FitResult r = fit_density(target, cfg);

  const std::filesystem::path dir = resolve_out(o.out);
  const io::Provenance prov{"fit",
                            {{"alpha", flag(o.alpha)},
                             {"phases", flag(o.phases)},
                             {"grid", flag(o.grid)},
                             {"quantile", flag(o.quantile)},
                             {"max_iterations", flag(o.max_iterations)},
                             {"tolerance", flag(o.tolerance)},
                             {"init", o.init},
                             {"seed", flag(o.seed)}}};
  const std::string stem = "fit_alpha" + label(o.alpha) + "_p" + std::to_string(o.phases);
  write_json(dir / (stem + ".json"), with_provenance(io::to_json(r, cfg, target.describe()), prov));

  std::ostringstream csv;
  prov.write_csv_header(csv);
  csv << "t,target_pdf,fitted_pdf\n";
  for (double t : r.grid) csv << fmt(t) << ',' << fmt(target.density(t)) << ',' << fmt(pdf(r.ph, t)) << '\n';
  write_file(dir / (stem + ".csv"), csv.str());

  std::cout << "L1 distance " << fmt(r.l1_distance) << ", mean relative error " << fmt(r.mean_relative_error)
            << ", " << r.iterations << " EM iterations\n";
  return 0;
}

int cmd_threshold(const ThresholdOptions& o) {
  const Regime regime = parse_regime(o.regime);
  const Graph g = load_graph(o.graph);
  const PhaseType ph = load_phase_type(o.ph);
  if (o.require_irreducible && !is_connected(g))
    throw PreconditionError("threshold: graph is disconnected (adjacency reducible)");

  ThresholdReport r = threshold_report(g, ph, regime);
  r.graph_id = o.graph;
  r.ph_id = o.ph;
  const io::Provenance prov{"threshold",
                            {{"graph", o.graph},
                             {"ph", o.ph},
                             {"regime", to_string(regime)},
                             {"require_irreducible", o.require_irreducible ? "true" : "false"}}};
  write_json(resolve_out(o.out) / "threshold.json", with_provenance(io::to_json(r), prov));
  if (r.beta_star) std::cout << "beta_star " << fmt(*r.beta_star) << ", beta_zero " << fmt(*r.beta_zero) << "\n";
  if (r.delta_one) std::cout << "delta_one " << fmt(*r.delta_one) << ", delta_zero " << fmt(*r.delta_zero) << "\n";
  return 0;
}

int cmd_simulate(const SimulateOptions& o) {
  // Precedence: config file over flags over defaults.
  const json j = io::read_json(o.config);
  json merged = j;
  if (!merged.contains("runs")) merged["runs"] = o.runs;
  if (!merged.contains("seed")) merged["seed"] = o.seed;
  const SimConfig cfg = io::sim_config_from_json(merged, o.config.parent_path());
  if (o.trajectories < 0) throw InputError("simulate: --trajectories must be >= 0");

  const std::filesystem::path dir = resolve_out(o.out);
  const io::Provenance prov{"simulate",
                            {{"config", o.config.string()},
                             {"runs", flag(cfg.runs)},
                             {"seed", flag(static_cast<unsigned long long>(cfg.seed))},
                             {"trajectories", flag(o.trajectories)},
                             {"bound", o.bound ? "true" : "false"},
                             {"regime", to_string(cfg.regime)},
                             {"rate", flag(cfg.rate)},
                             {"t_max", flag(cfg.t_max)}}};

  const EnsembleSummary s = run_ensemble(cfg);
  write_file(dir / "ensemble.csv", io::ensemble_csv(s, prov));

  std::ostringstream np;
  prov.write_csv_header(np);
  np << "t";
  for (int i = 0; i < s.nodes; ++i) np << ",p_" << i;
  np << '\n';
  for (std::size_t k = 0; k < s.t.size(); ++k) {
    np << fmt(s.t[k]);
    for (int i = 0; i < s.nodes; ++i) np << ',' << fmt(s.p(k, i));
    np << '\n';
  }
  write_file(dir / "node_prob.csv", np.str());

  std::vector<io::SvgSeries> series{{"mean infected fraction", s.t, s.mean_infected_fraction}};
  if (o.bound) {
    const MeanFieldBound mf = mean_field_bound(cfg);
    std::ostringstream b;
    prov.write_csv_header(b);
    b << "# step=" << fmt(mf.step) << "\nt";
    for (int i = 0; i < mf.nodes; ++i) b << ",bound_" << i;
    b << '\n';
    std::vector<double> mean_bound(mf.t.size(), 0.0);
    for (std::size_t k = 0; k < mf.t.size(); ++k) {
      b << fmt(mf.t[k]);
      for (int i = 0; i < mf.nodes; ++i) {
        b << ',' << fmt(mf.at(k, i));
        mean_bound[k] += std::min(1.0, mf.at(k, i)) / mf.nodes;
      }
      b << '\n';
    }
    write_file(dir / "bound.csv", b.str());
    series.push_back({"mean-field bound", mf.t, mean_bound, io::SvgSeries::Style::dashed, "#d62728"});
  }
  write_file(dir / "simulate.svg", io::svg_plot(series, "SIS ensemble (" + to_string(cfg.regime) + ")", "t",
                                                "infected fraction"));

  for (int r = 0; r < std::min(o.trajectories, cfg.runs); ++r) {
    char name[48];
    std::snprintf(name, sizeof name, "run_%06d.csv", r);
    write_file(dir / "trajectories" / name, io::trajectory_csv(run_single(cfg, static_cast<std::uint64_t>(r)), prov));
  }

  json summary = {{"config", io::to_json(cfg)},
                  {"runs", s.runs},
                  {"seed", s.seed},
                  {"censored_fraction", s.censored_fraction},
                  {"final_mean_infected_fraction", s.mean_infected_fraction.back()},
                  {"final_extinct_prob", s.extinct_prob.back()}};
  write_json(dir / "summary.json", with_provenance(std::move(summary), prov));
  std::cout << "extinct by t_max: " << fmt(s.extinct_prob.back()) << ", final mean infected fraction "
            << fmt(s.mean_infected_fraction.back()) << "\n";
  return 0;
}

int cmd_fig1(const ExperimentOptions& o) {
  const std::vector<double> alphas = o.alphas.empty() ? std::vector<double>{1.5, 2.5, 3.5, 4.5} : o.alphas;
  const FitConfig cfg = fit_config(o.phases, o.grid, o.seed);
  cfg.validate();
  std::vector<std::optional<FitResult>> fits(alphas.size());
  for_each_alpha(alphas, [&](std::size_t k) { fits[k] = fit_density(FitTarget::weibull_unit_mean(alphas[k]), cfg); });

  const std::filesystem::path dir = resolve_out(o.out);
  const io::Provenance prov{"experiment fig1",
                            {{"alphas", alpha_list(alphas)},
                             {"phases", flag(o.phases)},
                             {"grid", flag(o.grid)},
                             {"seed", flag(o.seed)}}};
  std::ostringstream curves, diag;
  prov.write_csv_header(curves);
  prov.write_csv_header(diag);
  curves << "alpha,t,target_pdf,fitted_pdf\n";
  diag << "alpha," << diagnostics_columns() << '\n';
  static const char* colors[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b"};
  std::vector<io::SvgSeries> series;
  for (std::size_t k = 0; k < alphas.size(); ++k) {
    const FitResult& r = *fits[k];
    const FitTarget target = FitTarget::weibull_unit_mean(alphas[k]);
    io::SvgSeries tgt{"Weibull a=" + label(alphas[k]), {}, {}, io::SvgSeries::Style::dashed, colors[k % 6]};
    io::SvgSeries fit{"PH fit a=" + label(alphas[k]), {}, {}, io::SvgSeries::Style::line, colors[k % 6]};
    for (double t : r.grid) {
      const double g = target.density(t);
      const double f = pdf(r.ph, t);
      curves << fmt(alphas[k]) << ',' << fmt(t) << ',' << fmt(g) << ',' << fmt(f) << '\n';
      tgt.x.push_back(t);
      tgt.y.push_back(g);
      fit.x.push_back(t);
      fit.y.push_back(f);
    }
    series.push_back(std::move(tgt));
    series.push_back(std::move(fit));
    diag << fmt(alphas[k]) << ',' << diagnostics_values(r) << '\n';
    write_json(dir / ("fig1_ph_alpha" + label(alphas[k]) + ".json"),
               with_provenance(io::to_json(r, cfg, target.describe()), prov));
  }
  write_file(dir / "fig1.csv", curves.str());
  write_file(dir / "fig1_fits.csv", diag.str());
  write_file(dir / "fig1.svg", io::svg_plot(series, "Weibull densities and phase-type fits", "t", "density"));
  return 0;
}

int cmd_fig2(const ExperimentOptions& o) {
  std::vector<double> alphas = o.alphas;
  if (alphas.empty())
    for (int k = 1; k <= 10; ++k) alphas.push_back(0.5 * k);
  if (o.n < 2) throw InputError("fig2: --n must be >= 2");
  if (!(o.p_edge > 0.0 && o.p_edge <= 1.0)) throw InputError("fig2: --p-edge must lie in (0, 1]");
  const FitConfig cfg = fit_config(o.phases, o.grid, o.seed);
  cfg.validate();

  const ConnectedGraph cg = connected_erdos_renyi(o.n, o.p_edge, o.seed);
  const double eta = spectral_radius(cg.graph);

  struct Row {
    double delta_zero = 0.0;
    double delta_one = 0.0;
    std::optional<FitResult> fit;
  };
  std::vector<Row> rows(alphas.size());
  for_each_alpha(alphas, [&](std::size_t k) {
    rows[k].fit = fit_density(FitTarget::weibull_unit_mean(alphas[k]), cfg);
    rows[k].delta_one = delta_threshold_spectral(cg.graph, rows[k].fit->ph);
    rows[k].delta_zero = weibull_delta_zero(alphas[k], eta);
  });

  const std::filesystem::path dir = resolve_out(o.out);
  const io::Provenance prov{"experiment fig2",
                            {{"alphas", alpha_list(alphas)},
                             {"n", flag(o.n)},
                             {"p_edge", flag(o.p_edge)},
                             {"phases", flag(o.phases)},
                             {"grid", flag(o.grid)},
                             {"seed", flag(o.seed)},
                             {"graph_seed", flag(static_cast<unsigned long long>(cg.seed))},
                             {"graph_attempts", flag(cg.attempts)}}};
  std::ostringstream csv;
  prov.write_csv_header(csv);
  csv << "# eta_A=" << fmt(eta) << "\n# edges=" << cg.graph.edges().size() << '\n';
  csv << "alpha,delta_zero,delta_one,ratio," << diagnostics_columns() << '\n';
  io::SvgSeries one{"delta_1 (spectral)", {}, {}, io::SvgSeries::Style::circle, "#1f77b4"};
  io::SvgSeries zero{"delta_0 (closed form)", {}, {}, io::SvgSeries::Style::square, "#d62728"};
  for (std::size_t k = 0; k < alphas.size(); ++k) {
    const Row& r = rows[k];
    csv << fmt(alphas[k]) << ',' << fmt(r.delta_zero) << ',' << fmt(r.delta_one) << ','
        << fmt(r.delta_one / r.delta_zero) << ',' << diagnostics_values(*r.fit) << '\n';
    one.x.push_back(alphas[k]);
    one.y.push_back(r.delta_one);
    zero.x.push_back(alphas[k]);
    zero.y.push_back(r.delta_zero);
  }
  write_file(dir / "fig2.csv", csv.str());
  write_json(dir / "fig2_graph.json", with_provenance(io::to_json(cg.graph), prov));
  write_file(dir / "fig2.svg", io::svg_plot({one, zero}, "Minimum recovery rates", "alpha", "recovery rate"));
  return 0;
}

}  // namespace phsis::cli
