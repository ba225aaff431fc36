#pragma once

#include <filesystem>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "phsis/fitting.hpp"
#include "phsis/graph.hpp"
#include "phsis/phase_type.hpp"
#include "phsis/simulate.hpp"
#include "phsis/spectral.hpp"

namespace phsis::io {

using nlohmann::json;

inline constexpr const char* kToolVersion = "phsis 1.0.0";

/// Ordered flag record embedded into every output file.
struct Provenance {
  std::string command;
  std::map<std::string, std::string> flags;

  json to_json() const;
  void write_csv_header(std::ostream& os) const;
};

/// {"phi": [...], "S": [[...], ...]}; v is derived on read.
json to_json(const PhaseType& ph);
PhaseType phase_type_from_json(const json& j);

/// {"n": int, "edges": [[i, j], ...]} with edges sorted.
json to_json(const Graph& g);
Graph graph_from_json(const json& j);
/// One "i j" pair per line; '#' starts a comment. Node count is one more
/// than the largest index unless a "# n <count>" comment says otherwise.
Graph graph_from_edge_list(std::istream& in);
/// Dispatches on extension (.json vs anything else).
Graph read_graph(const std::filesystem::path& path);
PhaseType read_phase_type(const std::filesystem::path& path);

json to_json(const ThresholdReport& r);
json to_json(const FitResult& r, const FitConfig& cfg, const std::string& target);

/// Graph and ph entries may be inline objects or paths relative to `base`.
SimConfig sim_config_from_json(const json& j, const std::filesystem::path& base);
json to_json(const SimConfig& cfg);

json read_json(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

/// Shortest representation that round-trips.
std::string fmt(double x);

std::string trajectory_csv(const Trajectory& tr, const Provenance& prov);
std::string ensemble_csv(const EnsembleSummary& s, const Provenance& prov);

struct SvgSeries {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
  enum class Style { line, dashed, circle, square } style = Style::line;
  std::string color = "#1f77b4";
};

std::string svg_plot(const std::vector<SvgSeries>& series, const std::string& title, const std::string& xlabel,
                     const std::string& ylabel);

}  // namespace phsis::io
