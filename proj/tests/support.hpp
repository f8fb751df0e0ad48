#pragma once

// Fixtures and independent reference computations shared by the unit and
// acceptance tests. Nothing here calls into the solver or loop search under
// test.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <vector>

#include "loopmod/graph.hpp"

namespace loopmod::ref {

inline Graph make_graph(std::size_t n, const std::vector<std::pair<NodeId, NodeId>>& pairs,
                        const std::vector<double>& weights = {}) {
  std::vector<Edge> edges;
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    edges.push_back({pairs[k].first, pairs[k].second, weights.empty() ? 1.0 : weights[k]});
  }
  return Graph(n, std::move(edges));
}

inline Graph four_cycle(const std::vector<double>& weights = {}) {
  return make_graph(4, {{0, 1}, {1, 2}, {2, 3}, {3, 0}}, weights);
}

/// 4-cycle 0-1-2-3 with diagonal 0-2 as the last edge.
inline Graph square_with_diagonal() {
  return make_graph(4, {{0, 1}, {1, 2}, {2, 3}, {3, 0}, {0, 2}});
}

inline Graph path_graph(std::size_t n) {
  std::vector<std::pair<NodeId, NodeId>> pairs;
  for (NodeId v = 0; v + 1 < n; ++v) pairs.push_back({v, v + 1});
  return make_graph(n, pairs);
}

/// Triangles {0,1,2} and {3,4,5} joined by the edge 2-3.
inline Graph two_triangles() {
  return make_graph(6, {{0, 1}, {1, 2}, {0, 2}, {3, 4}, {4, 5}, {3, 5}, {2, 3}});
}

/// Cliques {0..k-1} and {k..2k-1} joined by the edge (k-1, k).
inline Graph two_cliques(NodeId k) {
  std::vector<std::pair<NodeId, NodeId>> pairs;
  for (NodeId base : {NodeId{0}, k}) {
    for (NodeId a = 0; a < k; ++a)
      for (NodeId b = a + 1; b < k; ++b) pairs.push_back({base + a, base + b});
  }
  pairs.push_back({k - 1, k});
  return make_graph(2 * k, pairs);
}

/// Connected random graph: a random spanning tree plus each remaining pair
/// with probability p. Weights are 1 unless `weighted`, then in [0.5, 2).
inline Graph random_connected(std::uint32_t seed, std::size_t n, double p, bool weighted = false) {
  std::mt19937 gen(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::set<std::pair<NodeId, NodeId>> pairs;
  for (NodeId v = 1; v < n; ++v) {
    auto parent = static_cast<NodeId>(std::uniform_int_distribution<NodeId>(0, v - 1)(gen));
    pairs.insert({parent, v});
  }
  for (NodeId a = 0; a < n; ++a)
    for (NodeId b = a + 1; b < n; ++b)
      if (!pairs.count({a, b}) && unit(gen) < p) pairs.insert({a, b});
  std::vector<Edge> edges;
  for (auto [a, b] : pairs) edges.push_back({a, b, weighted ? 0.5 + 1.5 * unit(gen) : 1.0});
  return Graph(n, std::move(edges));
}

/// Every simple loop as a sorted edge-index set, found by trying each cyclic
/// order of each node subset.
inline std::vector<std::vector<EdgeId>> loops_by_permutation(const Graph& g) {
  const std::size_t n = g.num_nodes();
  std::set<std::vector<EdgeId>> found;
  for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
    std::vector<NodeId> nodes;
    for (NodeId v = 0; v < n; ++v)
      if (mask >> v & 1u) nodes.push_back(v);
    if (nodes.size() < 3) continue;
    // Fix the first node; permute the rest.
    std::vector<NodeId> rest(nodes.begin() + 1, nodes.end());
    do {
      std::vector<EdgeId> edges;
      bool ok = true;
      NodeId prev = nodes[0];
      for (std::size_t i = 0; i <= rest.size() && ok; ++i) {
        NodeId next = i < rest.size() ? rest[i] : nodes[0];
        auto e = g.find_edge(prev, next);
        ok = e.has_value();
        if (ok) edges.push_back(*e);
        prev = next;
      }
      if (ok) {
        std::sort(edges.begin(), edges.end());
        found.insert(edges);
      }
    } while (std::next_permutation(rest.begin(), rest.end()));
  }
  return {found.begin(), found.end()};
}

struct DualAscentResult {
  double objective = 0.0;
  std::vector<double> rho;
  std::vector<double> lambda;
};

/// Reference QP solve by exact coordinate ascent on the dual
///   max  sum(lambda) - 1/4 sum_e (N^T lambda)_e^2 / w_e,  lambda >= 0,
/// with rho = N^T lambda / (2w).
inline DualAscentResult dual_coordinate_ascent(const std::vector<double>& w,
                                               const std::vector<std::vector<EdgeId>>& rows,
                                               int max_sweeps = 200000) {
  DualAscentResult out;
  out.rho.assign(w.size(), 0.0);
  out.lambda.assign(rows.size(), 0.0);
  std::vector<double> curvature(rows.size(), 0.0);
  for (std::size_t j = 0; j < rows.size(); ++j)
    for (EdgeId e : rows[j]) curvature[j] += 1.0 / (2.0 * w[e]);

  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double change = 0.0;
    for (std::size_t j = 0; j < rows.size(); ++j) {
      double len = 0.0;
      for (EdgeId e : rows[j]) len += out.rho[e];
      const double updated = std::max(0.0, out.lambda[j] + (1.0 - len) / curvature[j]);
      const double delta = updated - out.lambda[j];
      if (delta == 0.0) continue;
      out.lambda[j] = updated;
      for (EdgeId e : rows[j]) out.rho[e] += delta / (2.0 * w[e]);
      change = std::max(change, std::abs(delta));
    }
    if (change < 1e-14) break;
  }
  for (std::size_t e = 0; e < w.size(); ++e) out.objective += w[e] * out.rho[e] * out.rho[e];
  return out;
}

inline DualAscentResult reference_modulus(const Graph& g) {
  auto rows = loops_by_permutation(g);
  return dual_coordinate_ascent(g.weights(), rows);
}

/// Q = (1/2W) sum_ij (A_ij - k_i k_j / 2W) [c_i == c_j] from a dense
/// adjacency matrix.
inline double modularity_by_definition(const Graph& g, const std::vector<std::uint32_t>& labels) {
  const std::size_t n = g.num_nodes();
  std::vector<std::vector<double>> a(n, std::vector<double>(n, 0.0));
  for (const Edge& e : g.edges()) a[e.u][e.v] = a[e.v][e.u] = e.weight;
  std::vector<double> k(n, 0.0);
  double two_w = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) k[i] += a[i][j];
    two_w += k[i];
  }
  double q = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (labels[i] == labels[j]) q += a[i][j] - k[i] * k[j] / two_w;
  return q / two_w;
}

/// Best modularity over all two-block splits (one block may be empty).
inline std::pair<double, std::vector<std::uint32_t>> best_bisection(const Graph& g) {
  const std::size_t n = g.num_nodes();
  double best = -1.0;
  std::vector<std::uint32_t> arg;
  for (std::uint32_t mask = 0; mask < (1u << (n - 1)); ++mask) {
    std::vector<std::uint32_t> labels(n, 0);
    for (std::size_t v = 1; v < n; ++v) labels[v] = mask >> (v - 1) & 1u;
    double q = modularity_by_definition(g, labels);
    if (q > best + 1e-12) {
      best = q;
      arg = labels;
    }
  }
  return {best, arg};
}

/// Danon NMI from an explicit contingency table.
inline double nmi_by_definition(const std::vector<std::uint32_t>& a, const std::vector<std::uint32_t>& b) {
  const double n = static_cast<double>(a.size());
  std::map<std::pair<std::uint32_t, std::uint32_t>, double> joint;
  std::map<std::uint32_t, double> ra, rb;
  for (std::size_t i = 0; i < a.size(); ++i) {
    joint[{a[i], b[i]}] += 1;
    ra[a[i]] += 1;
    rb[b[i]] += 1;
  }
  double num = 0.0;
  for (auto& [key, nij] : joint) num += nij * std::log(nij * n / (ra[key.first] * rb[key.second]));
  double den = 0.0;
  for (auto& [_, c] : ra) den += c * std::log(c / n);
  for (auto& [_, c] : rb) den += c * std::log(c / n);
  return -2.0 * num / den;
}

}  // namespace loopmod::ref
