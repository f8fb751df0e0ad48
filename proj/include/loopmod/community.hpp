#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "loopmod/errors.hpp"
#include "loopmod/graph.hpp"
#include "loopmod/modulus.hpp"
#include "loopmod/random.hpp"

namespace loopmod {

struct WeightingPolicy {
  enum class Source { RhoStar, ExpectedUsage };

  Source source = Source::RhoStar;
  /// Added to every edge; nullopt means 1e-4 * max(source), or 1 when the
  /// source vanishes everywhere.
  std::optional<double> floor;
};

struct Score {
  double nmi = 0.0;
  double modularity = 0.0;
};

inline nlohmann::ordered_json to_json(const Score& s) {
  nlohmann::ordered_json j;
  j["nmi"] = s.nmi;
  j["modularity"] = s.modularity;
  return j;
}

/// The edge weights a policy would assign, before building a graph.
inline std::vector<double> reweighted_values(const Graph& g, const ModulusResult& r,
                                             const WeightingPolicy& policy) {
  const auto& source =
      policy.source == WeightingPolicy::Source::RhoStar ? r.rho_star : r.edge_usage;
  if (source.size() != g.num_edges()) {
    throw std::invalid_argument("modulus result has " + std::to_string(source.size()) +
                                " edges, graph has " + std::to_string(g.num_edges()));
  }
  double floor = 0.0;
  if (policy.floor) {
    floor = *policy.floor;
    if (!(floor >= 0.0) || !std::isfinite(floor)) throw std::invalid_argument("floor must be >= 0");
  } else {
    const double top = source.empty() ? 0.0 : *std::max_element(source.begin(), source.end());
    floor = top > 0.0 ? 1e-4 * top : 1.0;
  }
  std::vector<double> w(source.size());
  for (std::size_t e = 0; e < w.size(); ++e) w[e] = std::max(source[e], 0.0) + floor;
  return w;
}

/// Same topology, w'(e) = source(e) + floor. Throws std::invalid_argument
/// if a resulting weight is zero (bridge edges with a zero floor).
inline Graph reweight(const Graph& g, const ModulusResult& r, const WeightingPolicy& policy = {}) {
  return g.with_weights(reweighted_values(g, r, policy));
}

namespace detail {

// Weighted graph with self-loops, used by the aggregating heuristics.
struct WeightedAdjacency {
  std::vector<std::vector<std::pair<std::uint32_t, double>>> nbrs;  // j != i
  std::vector<double> self;                                          // internal weight, counted once
  std::vector<double> degree;
  double total = 0.0;  // 2W

  explicit WeightedAdjacency(const Graph& g)
      : nbrs(g.num_nodes()), self(g.num_nodes(), 0.0), degree(g.num_nodes(), 0.0) {
    for (const Edge& e : g.edges()) {
      nbrs[e.u].emplace_back(e.v, e.weight);
      nbrs[e.v].emplace_back(e.u, e.weight);
      degree[e.u] += e.weight;
      degree[e.v] += e.weight;
      total += 2.0 * e.weight;
    }
    for (auto& list : nbrs) std::sort(list.begin(), list.end());
  }

  WeightedAdjacency(std::size_t n) : nbrs(n), self(n, 0.0), degree(n, 0.0) {}

  std::size_t size() const { return nbrs.size(); }
};

inline double modularity_of(const WeightedAdjacency& a, const std::vector<std::uint32_t>& comm) {
  if (a.total <= 0.0) return 0.0;
  const std::size_t k = comm.empty() ? 0 : *std::max_element(comm.begin(), comm.end()) + 1;
  std::vector<double> in(k, 0.0);
  std::vector<double> tot(k, 0.0);
  for (std::uint32_t i = 0; i < a.size(); ++i) {
    in[comm[i]] += a.self[i];
    tot[comm[i]] += a.degree[i];
    for (auto [j, w] : a.nbrs[i]) {
      if (j > i && comm[j] == comm[i]) in[comm[i]] += w;
    }
  }
  const double half = 0.5 * a.total;
  double q = 0.0;
  for (std::size_t c = 0; c < k; ++c) q += in[c] / half - (tot[c] / a.total) * (tot[c] / a.total);
  return q;
}

}  // namespace detail

/// Newman modularity with weighted degrees. Zero for an edgeless graph.
inline double modularity(const Graph& g, const Partition& p) {
  if (p.size() != g.num_nodes()) throw std::invalid_argument("partition does not cover the graph");
  return detail::modularity_of(detail::WeightedAdjacency(g), p.canonical().labels);
}

/// Normalised mutual information with the Danon et al. normalisation,
/// natural logs, 0 log 0 = 0. Two single-community partitions score 1.
inline double nmi(const Partition& a, const Partition& b) {
  if (a.size() != b.size()) throw std::invalid_argument("partitions have different sizes");
  const std::size_t n = a.size();
  if (n == 0) return 1.0;
  std::map<std::pair<std::uint32_t, std::uint32_t>, double> joint;
  std::map<std::uint32_t, double> row;
  std::map<std::uint32_t, double> col;
  for (std::size_t i = 0; i < n; ++i) {
    joint[{a.labels[i], b.labels[i]}] += 1.0;
    row[a.labels[i]] += 1.0;
    col[b.labels[i]] += 1.0;
  }
  const double total = static_cast<double>(n);
  // Terms are sorted before summing so that nmi(a, b) == nmi(b, a) exactly.
  std::vector<double> terms;
  for (const auto& [key, nij] : joint) {
    terms.push_back(nij * std::log(nij * total / (row[key.first] * col[key.second])));
  }
  std::sort(terms.begin(), terms.end());
  double mutual = 0.0;
  for (double t : terms) mutual += t;
  double ha = 0.0;
  double hb = 0.0;
  for (const auto& [label, ni] : row) ha += ni * std::log(ni / total);
  for (const auto& [label, nj] : col) hb += nj * std::log(nj / total);
  const double denom = ha + hb;
  if (denom == 0.0) return 1.0;
  return std::clamp(-2.0 * mutual / denom, 0.0, 1.0);
}

struct FiedlerVector {
  Eigen::VectorXd vector;
  double eigenvalue = 0.0;
  double residual = 0.0;  // ||L x - lambda x|| / ||x||
};

/// Eigenpair of the second-smallest eigenvalue of L = D - W, unit norm,
/// oriented so its first entry above 1e-8 in magnitude is positive.
inline FiedlerVector fiedler_vector(const Graph& g) {
  const std::size_t n = g.num_nodes();
  if (n < 2) throw std::invalid_argument("spectral bisection needs at least two nodes");
  if (auto c = g.num_components(); c > 1) throw DisconnectedGraphError(c);
  Eigen::MatrixXd lap = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (const Edge& e : g.edges()) {
    lap(e.u, e.v) -= e.weight;
    lap(e.v, e.u) -= e.weight;
    lap(e.u, e.u) += e.weight;
    lap(e.v, e.v) += e.weight;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(lap);
  if (solver.info() != Eigen::Success) throw std::runtime_error("Laplacian eigensolve failed");
  FiedlerVector f;
  f.eigenvalue = solver.eigenvalues()[1];
  f.vector = solver.eigenvectors().col(1);
  f.vector -= Eigen::VectorXd::Constant(f.vector.size(), f.vector.mean());
  f.vector.normalize();
  for (Eigen::Index i = 0; i < f.vector.size(); ++i) {
    if (std::abs(f.vector[i]) > 1e-8) {
      if (f.vector[i] < 0) f.vector = -f.vector;
      break;
    }
  }
  f.residual = (lap * f.vector - f.eigenvalue * f.vector).norm();
  return f;
}

/// Sign split of the Fiedler vector. Entries within 1e-8 of zero join the
/// part of the smallest node id with a nonzero entry. Labels are canonical.
inline Partition fiedler_bisection(const Graph& g) {
  const FiedlerVector f = fiedler_vector(g);
  Partition p;
  p.labels.resize(g.num_nodes());
  for (std::size_t i = 0; i < g.num_nodes(); ++i) {
    p.labels[i] = f.vector[static_cast<Eigen::Index>(i)] < -1e-8 ? 1u : 0u;
  }
  return p.canonical();
}

/// Fiedler bisection of the 2-core. Pendant trees are peeled off, the core
/// is split by fiedler_bisection, and each peeled node takes the side of the
/// core node its tree hangs from. Falls back to fiedler_bisection when the
/// core has fewer than two nodes.
///
/// Tree edges lie on no loop, so after modulus reweighting they carry only
/// the floor weight and a plain Fiedler vector localises on them.
inline Partition core_fiedler_bisection(const Graph& g) {
  const std::size_t n = g.num_nodes();
  if (auto c = g.num_components(); c > 1) throw DisconnectedGraphError(c);
  std::vector<std::size_t> degree(n);
  std::vector<char> removed(n, 0);
  std::vector<NodeId> peeled;
  std::vector<NodeId> attach(n, 0);
  std::vector<NodeId> queue;
  for (NodeId v = 0; v < n; ++v) {
    degree[v] = g.degree(v);
    if (degree[v] == 1) queue.push_back(v);
  }
  while (!queue.empty()) {
    const NodeId v = queue.back();
    queue.pop_back();
    if (removed[v] || degree[v] != 1) continue;
    removed[v] = 1;
    peeled.push_back(v);
    for (const Incidence& inc : g.neighbors(v)) {
      if (removed[inc.node]) continue;
      attach[v] = inc.node;
      if (--degree[inc.node] == 1) queue.push_back(inc.node);
    }
  }

  std::vector<NodeId> core_id(n, 0);
  std::vector<NodeId> members;
  for (NodeId v = 0; v < n; ++v) {
    if (!removed[v]) {
      core_id[v] = static_cast<NodeId>(members.size());
      members.push_back(v);
    }
  }
  if (members.size() < 2) return fiedler_bisection(g);

  std::vector<Edge> edges;
  for (const Edge& e : g.edges()) {
    if (!removed[e.u] && !removed[e.v]) edges.push_back({core_id[e.u], core_id[e.v], e.weight});
  }
  const Partition core = fiedler_bisection(Graph(members.size(), std::move(edges)));
  Partition p;
  p.labels.assign(n, 0);
  for (std::size_t i = 0; i < members.size(); ++i) p.labels[members[i]] = core.labels[i];
  for (auto it = peeled.rbegin(); it != peeled.rend(); ++it) p.labels[*it] = p.labels[attach[*it]];
  return p.canonical();
}

/// Louvain local moving plus aggregation. Nodes are visited in a seeded
/// random order at every level; a level's sweeps stop once a full pass
/// gains less than 1e-10 in modularity.
inline Partition louvain(const Graph& g, std::uint64_t seed) {
  Rng rng(seed);
  detail::WeightedAdjacency level(g);
  std::vector<std::uint32_t> membership(g.num_nodes());
  for (std::uint32_t i = 0; i < membership.size(); ++i) membership[i] = i;
  if (level.total <= 0.0) return Partition{membership}.canonical();

  for (;;) {
    const std::size_t n = level.size();
    std::vector<std::uint32_t> comm(n);
    for (std::uint32_t i = 0; i < n; ++i) comm[i] = i;
    std::vector<double> tot = level.degree;
    std::vector<std::uint32_t> order(n);
    for (std::uint32_t i = 0; i < n; ++i) order[i] = i;
    shuffle(order, rng);

    std::vector<double> link(n, 0.0);
    std::vector<std::uint32_t> seen;
    bool moved_any = false;
    double q = detail::modularity_of(level, comm);
    for (;;) {
      for (std::uint32_t i : order) {
        const std::uint32_t home = comm[i];
        const double ki = level.degree[i];
        seen.clear();
        seen.push_back(home);
        for (auto [j, w] : level.nbrs[i]) {
          if (link[comm[j]] == 0.0 && comm[j] != home) seen.push_back(comm[j]);
          link[comm[j]] += w;
        }
        tot[home] -= ki;
        std::uint32_t best = home;
        double best_gain = link[home] - tot[home] * ki / level.total;
        for (std::uint32_t c : seen) {
          const double gain = link[c] - tot[c] * ki / level.total;
          if (gain > best_gain) {
            best_gain = gain;
            best = c;
          }
        }
        tot[best] += ki;
        comm[i] = best;
        if (best != home) moved_any = true;
        for (std::uint32_t c : seen) link[c] = 0.0;
      }
      const double q_next = detail::modularity_of(level, comm);
      const double gained = q_next - q;
      q = q_next;
      if (gained < 1e-10) break;
    }
    if (!moved_any) break;

    // Aggregate communities into nodes, numbered by first appearance.
    std::vector<std::uint32_t> relabel(n, static_cast<std::uint32_t>(-1));
    std::uint32_t k = 0;
    for (std::uint32_t i = 0; i < n; ++i) {
      if (relabel[comm[i]] == static_cast<std::uint32_t>(-1)) relabel[comm[i]] = k++;
    }
    if (k == n) break;
    for (auto& m : membership) m = relabel[comm[m]];

    detail::WeightedAdjacency next(k);
    next.total = level.total;
    std::vector<std::map<std::uint32_t, double>> acc(k);
    for (std::uint32_t i = 0; i < n; ++i) {
      const std::uint32_t ci = relabel[comm[i]];
      next.self[ci] += level.self[i];
      next.degree[ci] += level.degree[i];
      for (auto [j, w] : level.nbrs[i]) {
        const std::uint32_t cj = relabel[comm[j]];
        if (cj == ci) {
          if (j > i) next.self[ci] += w;
        } else {
          acc[ci][cj] += w;
        }
      }
    }
    for (std::uint32_t c = 0; c < k; ++c) next.nbrs[c].assign(acc[c].begin(), acc[c].end());
    level = std::move(next);
  }
  return Partition{membership}.canonical();
}

/// Clauset-Newman-Moore agglomeration: repeatedly merge the adjacent pair
/// with the largest modularity gain while that gain is positive. Ties go to
/// the lexicographically smallest (i, j), and j is merged into i.
inline Partition cnm_greedy(const Graph& g) {
  const std::size_t n = g.num_nodes();
  std::vector<std::uint32_t> owner(n);
  for (std::uint32_t i = 0; i < n; ++i) owner[i] = i;
  detail::WeightedAdjacency adj(g);
  if (adj.total <= 0.0) return Partition{owner}.canonical();

  std::vector<std::map<std::uint32_t, double>> e(n);  // e_ij, each edge split over both directions
  std::vector<double> a(n);
  std::vector<char> alive(n, 1);
  for (std::uint32_t i = 0; i < n; ++i) {
    a[i] = adj.degree[i] / adj.total;
    for (auto [j, w] : adj.nbrs[i]) e[i][j] += w / adj.total;
  }
  for (;;) {
    double best = 1e-14;
    std::uint32_t bi = 0;
    std::uint32_t bj = 0;
    bool found = false;
    for (std::uint32_t i = 0; i < n; ++i) {
      if (!alive[i]) continue;
      for (auto [j, eij] : e[i]) {
        if (j <= i) continue;
        const double dq = 2.0 * (eij - a[i] * a[j]);
        if (dq > best) {
          best = dq;
          bi = i;
          bj = j;
          found = true;
        }
      }
    }
    if (!found) break;
    for (auto [k, ejk] : e[bj]) {
      if (k == bi) continue;
      e[bi][k] += ejk;
      e[k].erase(bj);
      e[k][bi] += ejk;
    }
    e[bi].erase(bj);
    e[bj].clear();
    a[bi] += a[bj];
    alive[bj] = 0;
    for (auto& o : owner)
      if (o == bj) o = bi;
  }
  return Partition{owner}.canonical();
}

/// Edge probabilities giving expected degree `mean_degree` with a fraction
/// `mixing` of each node's edges leaving its block.
inline std::pair<double, double> mixing_probabilities(std::size_t n, std::size_t blocks,
                                                      double mean_degree, double mixing) {
  if (blocks == 0 || n % blocks != 0) throw std::invalid_argument("n must be divisible by blocks");
  const double size = static_cast<double>(n / blocks);
  const double outside = static_cast<double>(n) - size;
  const double p_in = size > 1 ? mean_degree * (1.0 - mixing) / (size - 1.0) : 0.0;
  const double p_out = outside > 0 ? mean_degree * mixing / outside : 0.0;
  if (p_in > 1.0 || p_out > 1.0 || p_in < 0.0 || p_out < 0.0) {
    throw std::invalid_argument("mean degree and mixing give a probability outside [0, 1]");
  }
  return {p_in, p_out};
}

/// Stochastic block model with equal contiguous blocks. Nodes left isolated
/// are tied to a random other node of their own block.
inline std::pair<Graph, Partition> planted_partition(std::size_t n, std::size_t blocks, double p_in,
                                                     double p_out, std::uint64_t seed) {
  if (blocks == 0 || n % blocks != 0) throw std::invalid_argument("n must be divisible by blocks");
  if (!(p_in >= 0.0 && p_in <= 1.0 && p_out >= 0.0 && p_out <= 1.0)) {
    throw std::invalid_argument("probabilities must lie in [0, 1]");
  }
  if (p_in == 0.0 && p_out == 0.0 && n > blocks) {
    throw std::invalid_argument("p_in = p_out = 0 gives no edges");
  }
  const std::size_t size = n / blocks;
  Rng rng(seed);
  std::vector<Edge> edges;
  std::vector<std::size_t> degree(n, 0);
  for (NodeId u = 0; u < n; ++u) {
    for (NodeId v = u + 1; v < n; ++v) {
      const double p = (u / size == v / size) ? p_in : p_out;
      if (uniform_real(rng) < p) {
        edges.push_back({u, v, 1.0});
        ++degree[u];
        ++degree[v];
      }
    }
  }
  if (size > 1) {
    for (NodeId v = 0; v < n; ++v) {
      if (degree[v] > 0) continue;
      const auto base = static_cast<NodeId>(v / size * size);
      auto other = static_cast<NodeId>(base + uniform_index(rng, size - 1));
      if (other >= v) ++other;
      edges.push_back({std::min(v, other), std::max(v, other), 1.0});
      ++degree[v];
      ++degree[other];
    }
  }
  Partition truth;
  truth.labels.resize(n);
  for (std::size_t v = 0; v < n; ++v) truth.labels[v] = static_cast<std::uint32_t>(v / size);
  return {Graph(n, std::move(edges)), truth};
}

}  // namespace loopmod
