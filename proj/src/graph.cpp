#include "phsis/graph.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "phsis/errors.hpp"
#include "phsis/kernels.hpp"

namespace phsis {

Graph::Graph(int n, std::vector<Edge> edges) : n_(n), edges_(std::move(edges)) {
  if (n < 0) throw InputError("graph: negative node count");
  for (auto& [i, j] : edges_) {
    if (i < 0 || j < 0 || i >= n || j >= n)
      throw InputError("graph: edge (" + std::to_string(i) + "," + std::to_string(j) + ") out of range");
    if (i == j) throw InputError("graph: self-loop at node " + std::to_string(i));
    if (i > j) std::swap(i, j);
  }
  std::sort(edges_.begin(), edges_.end());
  if (std::adjacent_find(edges_.begin(), edges_.end()) != edges_.end())
    throw InputError("graph: duplicate edge");

  offsets_.assign(static_cast<std::size_t>(n) + 1, 0);
  for (const auto& [i, j] : edges_) {
    ++offsets_[i + 1];
    ++offsets_[j + 1];
  }
  for (int i = 0; i < n; ++i) offsets_[i + 1] += offsets_[i];
  adj_.resize(edges_.size() * 2);
  std::vector<int> cursor(offsets_.begin(), offsets_.end() - 1);
  for (const auto& [i, j] : edges_) {
    adj_[cursor[i]++] = j;
    adj_[cursor[j]++] = i;
  }
  for (int i = 0; i < n; ++i) std::sort(adj_.begin() + offsets_[i], adj_.begin() + offsets_[i + 1]);
}

Graph Graph::complete(int n) {
  std::vector<Edge> e;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) e.emplace_back(i, j);
  return Graph(n, std::move(e));
}

Graph Graph::star(int n) {
  std::vector<Edge> e;
  for (int j = 1; j < n; ++j) e.emplace_back(0, j);
  return Graph(n, std::move(e));
}

Graph Graph::path(int n) {
  std::vector<Edge> e;
  for (int i = 0; i + 1 < n; ++i) e.emplace_back(i, i + 1);
  return Graph(n, std::move(e));
}

CsrMatrix adjacency(const Graph& g) {
  CsrMatrix a;
  a.rows = a.cols = g.nodes();
  a.row_ptr.assign(static_cast<std::size_t>(g.nodes()) + 1, 0);
  for (int i = 0; i < g.nodes(); ++i) {
    for (int j : g.neighbors(i)) {
      a.col.push_back(j);
      a.val.push_back(1.0);
    }
    a.row_ptr[i + 1] = a.nnz();
  }
  return a;
}

Graph erdos_renyi(int n, double p_edge, RandomStream& rng) {
  if (n < 1) throw InputError("erdos_renyi: need at least one node");
  if (!(p_edge >= 0.0 && p_edge <= 1.0)) throw InputError("erdos_renyi: edge probability outside [0,1]");
  std::vector<Graph::Edge> e;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (rng.uniform() < p_edge) e.emplace_back(i, j);
  return Graph(n, std::move(e));
}

ConnectedGraph connected_erdos_renyi(int n, double p_edge, std::uint64_t seed, int max_attempts) {
  for (int attempt = 0; attempt < max_attempts; ++attempt) {
    RandomStream rng(seed + attempt);
    Graph g = erdos_renyi(n, p_edge, rng);
    if (is_connected(g)) return {std::move(g), seed + attempt, attempt + 1};
  }
  throw PreconditionError("erdos_renyi: no connected realization in " + std::to_string(max_attempts) +
                          " attempts");
}

bool is_connected(const Graph& g) {
  const int n = g.nodes();
  if (n <= 1) return true;
  std::vector<char> seen(static_cast<std::size_t>(n), 0);
  std::vector<int> queue{0};
  seen[0] = 1;
  for (std::size_t head = 0; head < queue.size(); ++head) {
    for (int j : g.neighbors(queue[head])) {
      if (!seen[j]) {
        seen[j] = 1;
        queue.push_back(j);
      }
    }
  }
  return static_cast<int>(queue.size()) == n;
}

double spectral_radius(const Graph& g, double tolerance) {
  if (g.edges().empty()) return 0.0;
  const CsrMatrix a = adjacency(g);
  const auto n = static_cast<std::size_t>(g.nodes());
  std::vector<double> x(n, 1.0 / std::sqrt(static_cast<double>(n)));
  std::vector<double> y(n);
  double previous = 0.0;
  constexpr int kMaxIterations = 1'000'000;
  for (int it = 0; it < kMaxIterations; ++it) {
    kernels::spmv(a, x, y, 1.0);
    double rq = 0.0;
    double norm = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      rq += x[i] * y[i];
      norm += y[i] * y[i];
    }
    norm = std::sqrt(norm);
    for (std::size_t i = 0; i < n; ++i) x[i] = y[i] / norm;
    // Rayleigh quotient of A + I; its error is about (1 - r^2)^-1 times the step change.
    if (it > 0 && std::abs(rq - previous) <= tolerance * 1e-2 * rq) return rq - 1.0;
    previous = rq;
  }
  throw ConvergenceError("spectral_radius: power iteration did not converge", std::abs(previous));
}

}  // namespace phsis
