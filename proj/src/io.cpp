#include "phsis/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

namespace phsis::io {

json Provenance::to_json() const {
  json flag_obj = json::object();
  for (const auto& [k, v] : flags) flag_obj[k] = v;
  return {{"tool", kToolVersion}, {"command", command}, {"flags", flag_obj}};
}

void Provenance::write_csv_header(std::ostream& os) const {
  os << "# tool=" << kToolVersion << "\n# command=" << command << "\n";
  for (const auto& [k, v] : flags) os << "# " << k << "=" << v << "\n";
}

std::string fmt(double x) {
  if (std::isnan(x)) return "nan";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return {buf, res.ptr};
}

// ---------------------------------------------------------------------------

json to_json(const PhaseType& ph) {
  const int p = ph.phases();
  json phi = json::array();
  json S = json::array();
  for (int l = 0; l < p; ++l) {
    phi.push_back(ph.phi()[l]);
    json row = json::array();
    for (int m = 0; m < p; ++m) row.push_back(ph.S()(l, m));
    S.push_back(std::move(row));
  }
  return {{"phi", phi}, {"S", S}};
}

PhaseType phase_type_from_json(const json& j) {
  try {
    const auto phi = j.at("phi").get<std::vector<double>>();
    const auto rows = j.at("S").get<std::vector<std::vector<double>>>();
    Eigen::VectorXd ph = Eigen::Map<const Eigen::VectorXd>(phi.data(), static_cast<Eigen::Index>(phi.size()));
    Eigen::MatrixXd S(static_cast<Eigen::Index>(rows.size()), rows.empty() ? 0 : static_cast<Eigen::Index>(rows[0].size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
      if (rows[r].size() != rows[0].size()) throw InputError("phase-type JSON: ragged S");
      for (std::size_t c = 0; c < rows[r].size(); ++c) S(r, c) = rows[r][c];
    }
    return PhaseType::make(std::move(ph), std::move(S));
  } catch (const json::exception& e) {
    throw InputError(std::string("phase-type JSON: ") + e.what());
  }
}

json to_json(const Graph& g) {
  json edges = json::array();
  for (const auto& [i, j] : g.edges()) edges.push_back({i, j});
  return {{"n", g.nodes()}, {"edges", edges}};
}

Graph graph_from_json(const json& j) {
  try {
    const int n = j.at("n").get<int>();
    std::vector<Graph::Edge> edges;
    for (const auto& e : j.at("edges")) {
      if (e.size() != 2) throw InputError("graph JSON: edge must have two endpoints");
      edges.emplace_back(e[0].get<int>(), e[1].get<int>());
    }
    return Graph(n, std::move(edges));
  } catch (const json::exception& e) {
    throw InputError(std::string("graph JSON: ") + e.what());
  }
}

Graph graph_from_edge_list(std::istream& in) {
  std::vector<Graph::Edge> edges;
  int declared = -1;
  int largest = -1;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) {
      std::istringstream comment(line.substr(hash + 1));
      std::string key;
      int value = 0;
      if (comment >> key >> value && key == "n") declared = value;
      line.erase(hash);
    }
    std::istringstream ls(line);
    int i = 0;
    int j = 0;
    if (!(ls >> i)) continue;
    if (!(ls >> j)) throw InputError("edge list: line " + std::to_string(lineno) + " has a single index");
    std::string rest;
    if (ls >> rest) throw InputError("edge list: trailing data on line " + std::to_string(lineno));
    edges.emplace_back(i, j);
    largest = std::max({largest, i, j});
  }
  return Graph(declared >= 0 ? declared : largest + 1, std::move(edges));
}

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  out << text;
}

Graph read_graph(const std::filesystem::path& path) {
  if (path.extension() == ".json") return graph_from_json(read_json(path));
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  return graph_from_edge_list(in);
}

PhaseType read_phase_type(const std::filesystem::path& path) { return phase_type_from_json(read_json(path)); }

// ---------------------------------------------------------------------------

namespace {

json optional_number(const std::optional<double>& x) { return x ? json(*x) : json(nullptr); }

json number_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

}  // namespace

json to_json(const ThresholdReport& r) {
  return {{"beta_star", optional_number(r.beta_star)},
          {"beta_zero", optional_number(r.beta_zero)},
          {"delta_one", optional_number(r.delta_one)},
          {"delta_zero", optional_number(r.delta_zero)},
          {"eta_A", r.eta_A},
          {"diagnostics",
           {{"regime", to_string(r.regime)},
            {"graph_id", r.graph_id},
            {"ph_id", r.ph_id},
            {"tolerance", r.tolerance},
            {"bracket_steps", r.diagnostics.bracket_steps},
            {"bisection_steps", r.diagnostics.bisection_steps},
            {"power_iterations", r.diagnostics.power_iterations},
            {"dense_fallback", r.diagnostics.dense_fallback},
            {"subgenerator_irreducible", r.subgenerator_irreducible},
            {"thresholds_agree", r.thresholds_agree}}}};
}

json to_json(const FitResult& r, const FitConfig& cfg, const std::string& target) {
  return {{"ph", to_json(r.ph)},
          {"diagnostics",
           {{"target", target},
            {"phases", cfg.phases},
            {"grid", cfg.grid},
            {"quantile", cfg.quantile},
            {"seed", cfg.seed},
            {"init", cfg.init == FitInit::erlang_chain ? "erlang-chain" : "random"},
            {"log_likelihood", number_or_null(r.log_likelihood)},
            {"iterations", r.iterations},
            {"attempts", r.attempts},
            {"l1_distance", number_or_null(r.l1_distance)},
            {"mean", mean(r.ph)},
            {"mean_relative_error", number_or_null(r.mean_relative_error)}}}};
}

SimConfig sim_config_from_json(const json& j, const std::filesystem::path& base) {
  try {
    const json& gj = j.at("graph");
    Graph g = gj.is_string() ? read_graph(base / gj.get<std::string>()) : graph_from_json(gj);
    const json& pj = j.at("ph");
    PhaseType ph = pj.is_string() ? read_phase_type(base / pj.get<std::string>()) : phase_type_from_json(pj);

    SimConfig cfg(std::move(g), std::move(ph));
    cfg.graph_id = j.value("graph_id", gj.is_string() ? gj.get<std::string>() : std::string("inline"));
    cfg.regime = parse_regime(j.at("regime").get<std::string>());
    cfg.rate = j.at("rate").get<double>();
    cfg.initial_infected = j.at("initial_infected").get<std::vector<int>>();
    cfg.t_max = j.at("t_max").get<double>();
    if (j.contains("grid")) cfg.grid = j.at("grid").get<std::vector<double>>();
    else if (j.contains("grid_points")) cfg.grid = uniform_grid(cfg.t_max, j.at("grid_points").get<int>());
    if (j.contains("runs")) cfg.runs = j.at("runs").get<int>();
    if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
    cfg.validate();
    return cfg;
  } catch (const json::exception& e) {
    throw InputError(std::string("sim config: ") + e.what());
  }
}

json to_json(const SimConfig& cfg) {
  return {{"graph", to_json(cfg.graph)},
          {"graph_id", cfg.graph_id},
          {"ph", to_json(cfg.ph)},
          {"regime", to_string(cfg.regime)},
          {"rate", cfg.rate},
          {"initial_infected", cfg.initial_infected},
          {"t_max", cfg.t_max},
          {"grid", cfg.observation_grid()},
          {"runs", cfg.runs},
          {"seed", cfg.seed}};
}

std::string trajectory_csv(const Trajectory& tr, const Provenance& prov) {
  std::ostringstream os;
  prov.write_csv_header(os);
  os << "# seed=" << tr.seed << "\n# run_index=" << tr.run_index << "\n";
  os << "# extinction_time=" << (tr.extinction_time ? fmt(*tr.extinction_time) : std::string("censored")) << "\n";
  os << "time,node,event\n";
  for (const Event& e : tr.events) os << fmt(e.time) << ',' << e.node << ',' << to_string(e.kind) << '\n';
  return os.str();
}

std::string ensemble_csv(const EnsembleSummary& s, const Provenance& prov) {
  std::ostringstream os;
  prov.write_csv_header(os);
  os << "# runs=" << s.runs << "\n# seed=" << s.seed << "\n# censored_fraction=" << fmt(s.censored_fraction) << "\n";
  os << "t,mean_infected_fraction,stderr,extinct_prob\n";
  for (std::size_t g = 0; g < s.t.size(); ++g)
    os << fmt(s.t[g]) << ',' << fmt(s.mean_infected_fraction[g]) << ',' << fmt(s.stderr_infected_fraction[g]) << ','
       << fmt(s.extinct_prob[g]) << '\n';
  return os.str();
}

// ---------------------------------------------------------------------------

std::string svg_plot(const std::vector<SvgSeries>& series, const std::string& title, const std::string& xlabel,
                     const std::string& ylabel) {
  constexpr double W = 640, H = 420, L = 70, R = 150, T = 40, B = 55;
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const auto& s : series) {
    for (std::size_t k = 0; k < s.x.size(); ++k) {
      if (!std::isfinite(s.x[k]) || !std::isfinite(s.y[k])) continue;
      x0 = std::min(x0, s.x[k]);
      x1 = std::max(x1, s.x[k]);
      y0 = std::min(y0, s.y[k]);
      y1 = std::max(y1, s.y[k]);
    }
  }
  if (!(x1 > x0)) x1 = x0 + 1.0;
  y0 = std::min(y0, 0.0);
  if (!(y1 > y0)) y1 = y0 + 1.0;
  y1 += 0.05 * (y1 - y0);
  auto px = [&](double x) { return L + (x - x0) / (x1 - x0) * (W - L - R); };
  auto py = [&](double y) { return H - B - (y - y0) / (y1 - y0) * (H - T - B); };

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << title << "</text>\n";
  os << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B
     << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 5; ++k) {
    const double xv = x0 + (x1 - x0) * k / 5.0;
    const double yv = y0 + (y1 - y0) * k / 5.0;
    char xl[32], yl[32];
    std::snprintf(xl, sizeof xl, "%.3g", xv);
    std::snprintf(yl, sizeof yl, "%.3g", yv);
    os << "<text x=\"" << px(xv) << "\" y=\"" << H - B + 18 << "\" text-anchor=\"middle\" font-size=\"11\">" << xl
       << "</text>\n";
    os << "<text x=\"" << L - 6 << "\" y=\"" << py(yv) + 4 << "\" text-anchor=\"end\" font-size=\"11\">" << yl
       << "</text>\n";
  }
  os << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\" font-size=\"13\">"
     << xlabel << "</text>\n";
  os << "<text x=\"16\" y=\"" << (T + H - B) / 2 << "\" text-anchor=\"middle\" font-size=\"13\" transform=\"rotate(-90 16 "
     << (T + H - B) / 2 << ")\">" << ylabel << "</text>\n";

  int legend = 0;
  for (const auto& s : series) {
    using Style = SvgSeries::Style;
    if (s.style == Style::line || s.style == Style::dashed) {
      os << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.5\""
         << (s.style == Style::dashed ? " stroke-dasharray=\"6,4\"" : "") << " points=\"";
      for (std::size_t k = 0; k < s.x.size(); ++k)
        if (std::isfinite(s.x[k]) && std::isfinite(s.y[k])) os << px(s.x[k]) << ',' << py(s.y[k]) << ' ';
      os << "\"/>\n";
    } else {
      for (std::size_t k = 0; k < s.x.size(); ++k) {
        if (!std::isfinite(s.x[k]) || !std::isfinite(s.y[k])) continue;
        if (s.style == Style::circle)
          os << "<circle cx=\"" << px(s.x[k]) << "\" cy=\"" << py(s.y[k]) << "\" r=\"4\" fill=\"none\" stroke=\""
             << s.color << "\"/>\n";
        else
          os << "<rect x=\"" << px(s.x[k]) - 4 << "\" y=\"" << py(s.y[k]) - 4
             << "\" width=\"8\" height=\"8\" fill=\"none\" stroke=\"" << s.color << "\"/>\n";
      }
    }
    const double ly = T + 10 + 18 * legend++;
    os << "<text x=\"" << W - R + 12 << "\" y=\"" << ly + 4 << "\" font-size=\"11\" fill=\"" << s.color << "\">"
       << s.name << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace phsis::io
