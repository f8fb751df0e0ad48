#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "loopmod/graph.hpp"
#include "loopmod/karate_data.hpp"
#include "loopmod/random.hpp"

namespace loopmod {

struct BuiltinParams {
  std::size_t rows = 10;
  std::size_t cols = 10;
  std::size_t n = 10;
  std::size_t degree = 4;
  std::uint64_t seed = 1;
};

struct BuiltinGraph {
  Graph graph;
  std::optional<Partition> truth;
};

/// Planar r x c lattice; node (i, j) has id i*cols + j.
inline Graph grid_graph(std::size_t rows, std::size_t cols) {
  if (rows == 0 || cols == 0) throw std::invalid_argument("grid needs positive dimensions");
  std::vector<Edge> edges;
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      auto v = static_cast<NodeId>(i * cols + j);
      if (j + 1 < cols) edges.push_back({v, v + 1, 1.0});
      if (i + 1 < rows) edges.push_back({v, static_cast<NodeId>(v + cols), 1.0});
    }
  }
  return Graph(rows * cols, std::move(edges));
}

/// Lattice with wraparound in both directions; both sides need at least 3
/// nodes or the wrap would duplicate an edge.
inline Graph torus_graph(std::size_t rows, std::size_t cols) {
  if (rows < 3 || cols < 3) throw std::invalid_argument("torus needs rows >= 3 and cols >= 3");
  std::vector<Edge> edges;
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      auto v = static_cast<NodeId>(i * cols + j);
      edges.push_back({v, static_cast<NodeId>(i * cols + (j + 1) % cols), 1.0});
      edges.push_back({v, static_cast<NodeId>(((i + 1) % rows) * cols + j), 1.0});
    }
  }
  return Graph(rows * cols, std::move(edges));
}

inline Graph complete_graph(std::size_t n) {
  std::vector<Edge> edges;
  for (NodeId u = 0; u < n; ++u)
    for (NodeId v = u + 1; v < n; ++v) edges.push_back({u, v, 1.0});
  return Graph(n, std::move(edges));
}

inline Graph cycle_graph(std::size_t n) {
  if (n < 3) throw std::invalid_argument("cycle needs at least 3 nodes");
  std::vector<Edge> edges;
  for (NodeId v = 0; v < n; ++v) edges.push_back({v, static_cast<NodeId>((v + 1) % n), 1.0});
  return Graph(n, std::move(edges));
}

/// Uniform labelled tree from a random Pruefer sequence.
inline Graph random_tree(std::size_t n, std::uint64_t seed) {
  if (n == 0) throw std::invalid_argument("tree needs at least one node");
  std::vector<Edge> edges;
  if (n == 2) edges.push_back({0, 1, 1.0});
  if (n > 2) {
    Rng rng(seed);
    std::vector<NodeId> code(n - 2);
    for (auto& c : code) c = static_cast<NodeId>(uniform_index(rng, n));
    std::vector<std::size_t> deg(n, 1);
    for (auto c : code) ++deg[c];
    std::set<NodeId> leaves;
    for (NodeId v = 0; v < n; ++v)
      if (deg[v] == 1) leaves.insert(v);
    for (auto c : code) {
      NodeId leaf = *leaves.begin();
      leaves.erase(leaves.begin());
      edges.push_back({leaf, c, 1.0});
      if (--deg[c] == 1) leaves.insert(c);
    }
    NodeId a = *leaves.begin();
    NodeId b = *std::next(leaves.begin());
    edges.push_back({a, b, 1.0});
  }
  return Graph(n, std::move(edges));
}

/// Uniform simple d-regular graph: configuration-model pairing, restarted
/// until the pairing has no loops or repeated pairs.
inline Graph random_regular(std::size_t n, std::size_t d, std::uint64_t seed) {
  if (d >= n) throw std::invalid_argument("degree must be smaller than the node count");
  if ((n * d) % 2 != 0) throw std::invalid_argument("n * degree must be even");
  Rng rng(seed);
  std::vector<NodeId> stubs;
  for (NodeId v = 0; v < n; ++v)
    for (std::size_t k = 0; k < d; ++k) stubs.push_back(v);
  constexpr int max_attempts = 1'000'000;
  for (int attempt = 0; attempt < max_attempts; ++attempt) {
    shuffle(stubs, rng);
    std::set<std::pair<NodeId, NodeId>> pairs;
    std::vector<Edge> edges;
    bool simple = true;
    for (std::size_t k = 0; k < stubs.size() && simple; k += 2) {
      NodeId a = std::min(stubs[k], stubs[k + 1]);
      NodeId b = std::max(stubs[k], stubs[k + 1]);
      simple = a != b && pairs.emplace(a, b).second;
      edges.push_back({a, b, 1.0});
    }
    if (simple) return Graph(n, std::move(edges));
  }
  throw std::runtime_error("could not sample a simple regular graph");
}

/// Renumbers nodes so that id == numeric token. Requires the tokens to be
/// exactly 0..n-1 in some order.
inline Graph with_numeric_ids(const Graph& g) {
  const std::size_t n = g.num_nodes();
  std::vector<NodeId> id(n);
  std::vector<char> used(n, 0);
  for (NodeId v = 0; v < n; ++v) {
    const std::string& tok = g.token(v);
    std::size_t pos = 0;
    unsigned long value = std::stoul(tok, &pos);
    if (pos != tok.size() || value >= n || used[value]) {
      throw std::invalid_argument("tokens are not a permutation of 0..n-1");
    }
    used[value] = 1;
    id[v] = static_cast<NodeId>(value);
  }
  std::vector<Edge> edges(g.edges().begin(), g.edges().end());
  for (Edge& e : edges) {
    e.u = id[e.u];
    e.v = id[e.v];
  }
  std::vector<std::string> tokens(n);
  for (NodeId v = 0; v < n; ++v) tokens[v] = std::to_string(v);
  return Graph(n, std::move(edges), std::move(tokens));
}

/// Zachary's karate club with the two post-split factions; node ids are the
/// 0-based member numbers.
inline BuiltinGraph karate_club() {
  Graph g = with_numeric_ids(load_edge_list(data::karate_edges));
  return {g, read_partition(data::karate_truth, g)};
}

/// Named graph factory used by the command line.
inline BuiltinGraph builtin_graph(const std::string& name, const BuiltinParams& p) {
  if (name == "karate") return karate_club();
  if (name == "grid") return {grid_graph(p.rows, p.cols), std::nullopt};
  if (name == "torus") return {torus_graph(p.rows, p.cols), std::nullopt};
  if (name == "complete") return {complete_graph(p.n), std::nullopt};
  if (name == "cycle") return {cycle_graph(p.n), std::nullopt};
  if (name == "tree_random") return {random_tree(p.n, p.seed), std::nullopt};
  if (name == "regular_random") return {random_regular(p.n, p.degree, p.seed), std::nullopt};
  throw std::invalid_argument("unknown builtin graph '" + name + "'");
}

}  // namespace loopmod
