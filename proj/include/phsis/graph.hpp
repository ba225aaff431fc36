#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "phsis/csr.hpp"
#include "phsis/rng.hpp"

namespace phsis {

/// Simple undirected graph on nodes 0..n-1. Edges are stored canonically as
/// (i, j) with i < j, sorted lexicographically.
class Graph {
 public:
  using Edge = std::pair<int, int>;

  Graph() = default;
  /// Throws InputError on self-loops, duplicates or out-of-range indices.
  Graph(int n, std::vector<Edge> edges);

  int nodes() const { return n_; }
  std::span<const Edge> edges() const { return edges_; }
  std::span<const int> neighbors(int i) const {
    return {adj_.data() + offsets_[i], static_cast<std::size_t>(offsets_[i + 1] - offsets_[i])};
  }
  int degree(int i) const { return offsets_[i + 1] - offsets_[i]; }

  static Graph complete(int n);
  static Graph star(int n);
  static Graph path(int n);

 private:
  int n_ = 0;
  std::vector<Edge> edges_;
  std::vector<int> offsets_{0};
  std::vector<int> adj_;
};

/// Symmetric 0/1 adjacency with zero diagonal.
CsrMatrix adjacency(const Graph& g);

Graph erdos_renyi(int n, double p_edge, RandomStream& rng);

struct ConnectedGraph {
  Graph graph;
  std::uint64_t seed;  // seed that produced the returned realization
  int attempts;
};

/// Regenerates with seed, seed+1, ... until connected; throws
/// PreconditionError after max_attempts.
ConnectedGraph connected_erdos_renyi(int n, double p_edge, std::uint64_t seed, int max_attempts = 100);

bool is_connected(const Graph& g);

/// Largest adjacency eigenvalue by power iteration on A + I (symmetric, so
/// the Rayleigh quotient converges quadratically). Empty graph gives 0.
double spectral_radius(const Graph& g, double tolerance = 1e-12);

}  // namespace phsis
