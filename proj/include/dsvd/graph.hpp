#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <istream>
#include <ostream>
#include <queue>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "dsvd/core.hpp"

namespace dsvd {

struct Edge {
  std::size_t a = 0;
  std::size_t b = 0;

  friend bool operator==(const Edge&, const Edge&) = default;
  friend auto operator<=>(const Edge&, const Edge&) = default;
};

/// Undirected simple graph over nodes 0..n-1. Edges are stored with a < b.
class Graph {
 public:
  Graph() = default;

  Graph(std::size_t n_nodes, const std::vector<Edge>& edges) : n_(n_nodes), adj_(n_nodes) {
    require(n_nodes > 0, "graph: n_nodes must be positive");
    std::set<Edge> seen;
    for (Edge e : edges) {
      require(e.a < n_ && e.b < n_, "graph: edge endpoint out of range");
      require(e.a != e.b, "graph: self-loop on node " + std::to_string(e.a));
      if (e.a > e.b) std::swap(e.a, e.b);
      require(seen.insert(e).second,
              "graph: duplicate edge " + std::to_string(e.a) + "-" + std::to_string(e.b));
    }
    edges_.assign(seen.begin(), seen.end());
    for (const Edge& e : edges_) {
      adj_[e.a].push_back(e.b);
      adj_[e.b].push_back(e.a);
    }
    for (auto& list : adj_) std::sort(list.begin(), list.end());
  }

  std::size_t n_nodes() const { return n_; }
  std::size_t n_edges() const { return edges_.size(); }
  const std::vector<Edge>& edges() const { return edges_; }
  const std::vector<std::size_t>& neighbors(std::size_t i) const { return adj_.at(i); }
  std::size_t degree(std::size_t i) const { return adj_.at(i).size(); }

  bool has_edge(std::size_t i, std::size_t j) const {
    const auto& list = adj_.at(i);
    return std::binary_search(list.begin(), list.end(), j);
  }

  /// Number of connected components, by breadth-first traversal.
  std::size_t component_count() const {
    std::vector<bool> seen(n_, false);
    std::size_t components = 0;
    for (std::size_t start = 0; start < n_; ++start) {
      if (seen[start]) continue;
      ++components;
      std::queue<std::size_t> frontier;
      frontier.push(start);
      seen[start] = true;
      while (!frontier.empty()) {
        const std::size_t v = frontier.front();
        frontier.pop();
        for (std::size_t w : adj_[v]) {
          if (!seen[w]) {
            seen[w] = true;
            frontier.push(w);
          }
        }
      }
    }
    return components;
  }

  bool is_connected() const { return n_ > 0 && component_count() == 1; }

  /// Dense symmetric 0/1 adjacency with zero diagonal.
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> adjacency() const {
    Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> a =
        Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>::Constant(n_, n_, false);
    for (const Edge& e : edges_) {
      a(e.a, e.b) = true;
      a(e.b, e.a) = true;
    }
    return a;
  }

  static Graph from_adjacency(const Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>& a) {
    require(a.rows() == a.cols(), "graph: adjacency must be square");
    std::vector<Edge> edges;
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
      require(!a(i, i), "graph: adjacency diagonal must be false");
      for (Eigen::Index j = i + 1; j < a.cols(); ++j) {
        require(a(i, j) == a(j, i), "graph: adjacency must be symmetric");
        if (a(i, j)) edges.push_back({std::size_t(i), std::size_t(j)});
      }
    }
    return Graph(std::size_t(a.rows()), edges);
  }

  static Graph complete(std::size_t n) {
    std::vector<Edge> edges;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) edges.push_back({i, j});
    return Graph(n, edges);
  }

  static Graph path(std::size_t n) {
    std::vector<Edge> edges;
    for (std::size_t i = 0; i + 1 < n; ++i) edges.push_back({i, i + 1});
    return Graph(n, edges);
  }

 private:
  std::size_t n_ = 0;
  std::vector<Edge> edges_;
  std::vector<std::vector<std::size_t>> adj_;
};

/// Regenerations allowed before a generator gives up on connectivity.
inline constexpr int kConnectivityRetries = 100;

/// Watts-Strogatz ring lattice with random rewiring, regenerated until
/// connected. Each node starts linked to k/2 successors and k/2 predecessors.
inline Graph generate_small_world(std::size_t n, std::size_t k, double p_rewire,
                                  std::uint64_t seed) {
  require(n >= 3, "small_world: n must be >= 3");
  require(k % 2 == 0 && k >= 2, "small_world: k must be even and >= 2");
  require(k < n, "small_world: k must be < n");
  require(p_rewire >= 0.0 && p_rewire <= 1.0, "small_world: p_rewire must lie in [0, 1]");

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);

  for (int attempt = 0; attempt < kConnectivityRetries; ++attempt) {
    std::set<Edge> edges;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 1; j <= k / 2; ++j) {
        std::size_t a = i, b = (i + j) % n;
        if (a > b) std::swap(a, b);
        edges.insert({a, b});
      }
    for (std::size_t j = 1; j <= k / 2; ++j) {
      for (std::size_t i = 0; i < n; ++i) {
        if (coin(rng) >= p_rewire) continue;
        Edge old{std::min(i, (i + j) % n), std::max(i, (i + j) % n)};
        if (!edges.count(old)) continue;
        std::size_t degree_i = 0;
        for (const Edge& e : edges)
          if (e.a == i || e.b == i) ++degree_i;
        if (degree_i >= n - 1) continue;
        std::size_t w = 0;
        Edge candidate{};
        do {
          w = pick(rng);
          candidate = {std::min(i, w), std::max(i, w)};
        } while (w == i || edges.count(candidate));
        edges.erase(old);
        edges.insert(candidate);
      }
    }
    Graph g(n, std::vector<Edge>(edges.begin(), edges.end()));
    if (g.is_connected()) return g;
  }
  throw ConnectivityError("small_world: no connected graph after " +
                          std::to_string(kConnectivityRetries) + " regenerations");
}

/// Symmetric doubly-stochastic Metropolis weights 1/(1+max(deg_i, deg_j)).
inline RealMatrix metropolis_weights(const Graph& g) {
  require(g.is_connected(), "metropolis_weights: graph must be connected");
  const auto n = Eigen::Index(g.n_nodes());
  RealMatrix w = RealMatrix::Zero(n, n);
  for (const Edge& e : g.edges()) {
    const double v = 1.0 / (1.0 + double(std::max(g.degree(e.a), g.degree(e.b))));
    w(e.a, e.b) = v;
    w(e.b, e.a) = v;
  }
  for (Eigen::Index i = 0; i < n; ++i) w(i, i) = 1.0 - w.row(i).sum();
  return w;
}

/// Random symmetric observation mask that removes exactly
/// round(missing_fraction * n(n-1)/2) node pairs, redrawn until the remaining
/// links form a connected graph.
inline Graph random_mask_graph(std::size_t n, double missing_fraction, std::uint64_t seed) {
  require(n >= 2, "random_mask: n must be >= 2");
  require(missing_fraction >= 0.0 && missing_fraction < 1.0,
          "random_mask: missing_fraction must lie in [0, 1)");
  std::vector<Edge> pairs;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) pairs.push_back({i, j});
  const auto n_missing = std::size_t(std::llround(missing_fraction * double(pairs.size())));
  std::mt19937_64 rng(seed);
  for (int attempt = 0; attempt < kConnectivityRetries; ++attempt) {
    std::vector<Edge> shuffled = pairs;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    shuffled.resize(pairs.size() - n_missing);
    Graph g(n, shuffled);
    if (g.is_connected()) return g;
  }
  throw ConnectivityError("random_mask: no connected mask after " +
                          std::to_string(kConnectivityRetries) + " redraws");
}

// Plain-text edge list: first line N, then one "i j" pair per line, 0-indexed.

inline void write_edge_list(std::ostream& out, const Graph& g) {
  out << g.n_nodes() << '\n';
  for (const Edge& e : g.edges()) out << e.a << ' ' << e.b << '\n';
}

inline Graph read_edge_list(std::istream& in) {
  std::string line;
  std::size_t n = 0;
  bool have_n = false;
  std::vector<Edge> edges;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream fields(line);
    if (!have_n) {
      long long value = -1;
      if (!(fields >> value) || value <= 0)
        throw PreconditionError("edge list: line " + std::to_string(line_no) +
                                ": expected positive node count");
      n = std::size_t(value);
      have_n = true;
      continue;
    }
    long long a = -1, b = -1;
    if (!(fields >> a >> b) || a < 0 || b < 0)
      throw PreconditionError("edge list: line " + std::to_string(line_no) +
                              ": expected two non-negative node indices");
    edges.push_back({std::size_t(a), std::size_t(b)});
  }
  if (!have_n) throw PreconditionError("edge list: missing node count");
  return Graph(n, edges);
}

}  // namespace dsvd
