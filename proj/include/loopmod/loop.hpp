#pragma once

#include <algorithm>
#include <compare>
#include <functional>
#include <limits>
#include <optional>
#include <queue>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "loopmod/errors.hpp"
#include "loopmod/graph.hpp"

namespace loopmod {

/// A simple loop in canonical form.
///
/// `nodes` lists the loop once around, starting at its smallest node id and
/// heading towards the smaller of that node's two loop neighbours, so equal
/// loops compare equal. `edges` holds the traversed edge indices, sorted.
struct Loop {
  std::vector<NodeId> nodes;
  std::vector<EdgeId> edges;

  std::size_t hop_length() const { return edges.size(); }

  friend bool operator==(const Loop& a, const Loop& b) { return a.nodes == b.nodes; }
  friend auto operator<=>(const Loop& a, const Loop& b) { return a.nodes <=> b.nodes; }
};

/// Builds the canonical loop for a cyclic node sequence (closing node not
/// repeated). Throws std::invalid_argument if the sequence is not a simple
/// loop of hop-length >= 3 in g.
inline Loop make_loop(const Graph& g, std::span<const NodeId> cycle) {
  const std::size_t r = cycle.size();
  if (r < 3) throw std::invalid_argument("a loop needs at least 3 nodes");
  std::vector<NodeId> sorted(cycle.begin(), cycle.end());
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    throw std::invalid_argument("loop repeats a node");
  }
  const auto start = static_cast<std::size_t>(std::min_element(cycle.begin(), cycle.end()) - cycle.begin());
  const NodeId next = cycle[(start + 1) % r];
  const NodeId prev = cycle[(start + r - 1) % r];
  const bool forward = next < prev;

  Loop loop;
  loop.nodes.reserve(r);
  for (std::size_t k = 0; k < r; ++k) {
    loop.nodes.push_back(forward ? cycle[(start + k) % r] : cycle[(start + r - k) % r]);
  }
  loop.edges.reserve(r);
  for (std::size_t k = 0; k < r; ++k) {
    auto e = g.find_edge(loop.nodes[k], loop.nodes[(k + 1) % r]);
    if (!e) {
      throw std::invalid_argument("nodes " + std::to_string(loop.nodes[k]) + " and " +
                                  std::to_string(loop.nodes[(k + 1) % r]) + " are not adjacent");
    }
    loop.edges.push_back(*e);
  }
  std::sort(loop.edges.begin(), loop.edges.end());
  return loop;
}

/// Sum of the density over the loop's edges.
inline double rho_length(const Loop& loop, std::span<const double> rho) {
  double total = 0.0;
  for (EdgeId e : loop.edges) total += rho[e];
  return total;
}

/// Number of shared edges.
inline std::size_t overlap(const Loop& a, const Loop& b) {
  std::size_t count = 0;
  auto i = a.edges.begin();
  auto j = b.edges.begin();
  while (i != a.edges.end() && j != b.edges.end()) {
    if (*i < *j) {
      ++i;
    } else if (*j < *i) {
      ++j;
    } else {
      ++count;
      ++i;
      ++j;
    }
  }
  return count;
}

/// Which loops belong to the family: all loops, those through a node, or
/// those through an edge, optionally restricted to hop-length <= max_hop.
struct FamilySelector {
  enum class Kind { All, ThroughNode, ThroughEdge };

  Kind kind = Kind::All;
  std::uint32_t target = 0;
  std::optional<std::size_t> max_hop;

  static FamilySelector all() { return {}; }
  static FamilySelector through_node(NodeId v) { return {Kind::ThroughNode, v, std::nullopt}; }
  static FamilySelector through_edge(EdgeId e) { return {Kind::ThroughEdge, e, std::nullopt}; }
  static FamilySelector hop_capped(std::size_t k) { return all().capped(k); }

  FamilySelector capped(std::size_t k) const {
    if (k < 3) throw std::invalid_argument("hop cap must be at least 3");
    FamilySelector out = *this;
    out.max_hop = k;
    return out;
  }

  void validate(const Graph& g) const {
    if (max_hop && *max_hop < 3) throw std::invalid_argument("hop cap must be at least 3");
    if (kind == Kind::ThroughNode && target >= g.num_nodes()) {
      throw std::invalid_argument("family node " + std::to_string(target) + " is out of range");
    }
    if (kind == Kind::ThroughEdge && target >= g.num_edges()) {
      throw std::invalid_argument("family edge " + std::to_string(target) + " is out of range");
    }
  }

  bool contains(const Loop& loop) const {
    if (max_hop && loop.hop_length() > *max_hop) return false;
    switch (kind) {
      case Kind::All:
        return true;
      case Kind::ThroughNode:
        return std::find(loop.nodes.begin(), loop.nodes.end(), target) != loop.nodes.end();
      case Kind::ThroughEdge:
        return std::binary_search(loop.edges.begin(), loop.edges.end(), target);
    }
    return false;
  }

  /// Edges e such that every family loop contains at least one of them.
  std::vector<EdgeId> candidate_edges(const Graph& g) const {
    std::vector<EdgeId> out;
    switch (kind) {
      case Kind::All:
        out.resize(g.num_edges());
        for (EdgeId e = 0; e < g.num_edges(); ++e) out[e] = e;
        break;
      case Kind::ThroughNode:
        for (const Incidence& inc : g.neighbors(target)) out.push_back(inc.edge);
        std::sort(out.begin(), out.end());
        break;
      case Kind::ThroughEdge:
        out.push_back(target);
        break;
    }
    return out;
  }

  std::string describe() const {
    std::string s;
    switch (kind) {
      case Kind::All: s = "all"; break;
      case Kind::ThroughNode: s = "node:" + std::to_string(target); break;
      case Kind::ThroughEdge: s = "edge:" + std::to_string(target); break;
    }
    if (max_hop) s = (kind == Kind::All ? "" : s + "+") + "maxhop:" + std::to_string(*max_hop);
    return s;
  }
};

struct LoopCandidate {
  Loop loop;
  double length = 0.0;
};

/// Order used for every tie-break: rho-length, then hop-length, then the
/// canonical node sequence.
inline bool shorter(const LoopCandidate& a, const LoopCandidate& b) {
  if (a.length != b.length) return a.length < b.length;
  if (a.loop.hop_length() != b.loop.hop_length()) return a.loop.hop_length() < b.loop.hop_length();
  return a.loop.nodes < b.loop.nodes;
}

namespace detail {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Removes repeated nodes from a u..v walk, keeping the first visit.
inline std::vector<NodeId> shortcut_walk(std::vector<NodeId> walk) {
  std::vector<NodeId> out;
  for (NodeId x : walk) {
    auto it = std::find(out.begin(), out.end(), x);
    if (it != out.end()) out.erase(std::next(it), out.end());
    else out.push_back(x);
  }
  return out;
}

class LoopSearch {
 public:
  LoopSearch(const Graph& g, std::span<const double> rho)
      : g_(g), rho_(rho), dist_(g.num_nodes(), kInf), hops_(g.num_nodes(), 0),
        pred_(g.num_nodes(), 0) {
    if (rho.size() != g.num_edges()) {
      throw std::invalid_argument("density has " + std::to_string(rho.size()) + " entries, graph has " +
                                  std::to_string(g.num_edges()) + " edges");
    }
  }

  /// rho-shortest simple loop through e (path in G - e closed by e) with
  /// length <= bound, or nothing.
  std::optional<LoopCandidate> through_edge(EdgeId e, std::optional<std::size_t> max_hop, double bound) {
    return max_hop ? layered(e, *max_hop - 1, bound) : dijkstra(e, bound);
  }

 private:
  LoopCandidate close(std::vector<NodeId> path) const {
    path = shortcut_walk(std::move(path));
    LoopCandidate c;
    c.loop = make_loop(g_, path);
    c.length = rho_length(c.loop, rho_);
    return c;
  }

  std::optional<LoopCandidate> dijkstra(EdgeId e, double bound) {
    const NodeId source = g_.edge(e).u;
    const NodeId target = g_.edge(e).v;
    const double closing = rho_[e];
    using Item = std::tuple<double, std::uint32_t, NodeId>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
    for (NodeId x : touched_) dist_[x] = kInf;
    touched_.clear();

    dist_[source] = 0.0;
    hops_[source] = 0;
    touched_.push_back(source);
    heap.emplace(0.0, 0, source);
    while (!heap.empty()) {
      auto [d, h, x] = heap.top();
      heap.pop();
      if (d != dist_[x] || h != hops_[x]) continue;
      if (d + closing > bound) return std::nullopt;
      if (x == target) {
        std::vector<NodeId> path;
        for (NodeId y = target; y != source; y = pred_[y]) path.push_back(y);
        path.push_back(source);
        return close(std::move(path));
      }
      for (const Incidence& inc : g_.neighbors(x)) {
        if (inc.edge == e) continue;
        const double nd = d + rho_[inc.edge];
        const std::uint32_t nh = h + 1;
        const NodeId y = inc.node;
        if (dist_[y] == kInf) touched_.push_back(y);
        if (nd < dist_[y] || (nd == dist_[y] && nh < hops_[y])) {
          dist_[y] = nd;
          hops_[y] = nh;
          pred_[y] = x;
          heap.emplace(nd, nh, y);
        }
      }
    }
    return std::nullopt;
  }

  // Shortest u-v walk in G - e with at most `budget` hops, by hop layers.
  std::optional<LoopCandidate> layered(EdgeId e, std::size_t budget, double bound) {
    const NodeId source = g_.edge(e).u;
    const NodeId target = g_.edge(e).v;
    const std::size_t n = g_.num_nodes();
    std::vector<double> best((budget + 1) * n, kInf);
    std::vector<NodeId> pred((budget + 1) * n, 0);
    best[source] = 0.0;
    for (std::size_t h = 0; h < budget; ++h) {
      for (NodeId x = 0; x < n; ++x) {
        const double d = best[h * n + x];
        if (d == kInf || x == target) continue;
        for (const Incidence& inc : g_.neighbors(x)) {
          if (inc.edge == e || inc.node == source) continue;
          const double nd = d + rho_[inc.edge];
          double& slot = best[(h + 1) * n + inc.node];
          if (nd < slot) {
            slot = nd;
            pred[(h + 1) * n + inc.node] = x;
          }
        }
      }
    }
    std::size_t best_h = 0;
    double best_d = kInf;
    for (std::size_t h = 2; h <= budget; ++h) {
      if (best[h * n + target] < best_d) {
        best_d = best[h * n + target];
        best_h = h;
      }
    }
    if (best_d == kInf || best_d + rho_[e] > bound) return std::nullopt;
    std::vector<NodeId> walk{target};
    NodeId x = target;
    for (std::size_t h = best_h; h > 0; --h) {
      x = pred[h * n + x];
      walk.push_back(x);
    }
    return close(std::move(walk));
  }

  const Graph& g_;
  std::span<const double> rho_;
  std::vector<double> dist_;
  std::vector<std::uint32_t> hops_;
  std::vector<NodeId> pred_;
  std::vector<NodeId> touched_;
};

}  // namespace detail

/// Globally rho-shortest loop of the family, or nothing if the family is
/// empty. Exact: for every candidate edge e = (u, v) the rho-shortest u-v
/// path in G - e closes a loop through e, and the best of those is taken.
inline std::optional<LoopCandidate> shortest_loop(const Graph& g, std::span<const double> rho,
                                                  const FamilySelector& family) {
  family.validate(g);
  detail::LoopSearch search(g, rho);
  std::optional<LoopCandidate> best;
  double bound = detail::kInf;
  for (EdgeId e : family.candidate_edges(g)) {
    auto c = search.through_edge(e, family.max_hop, bound);
    if (c && (!best || shorter(*c, *best))) {
      best = std::move(c);
      bound = best->length;
    }
  }
  return best;
}

/// Distinct loops of rho-length < bound found by the per-edge searches,
/// sorted shortest first. Used for batch constraint generation.
inline std::vector<LoopCandidate> short_loops_per_edge(const Graph& g, std::span<const double> rho,
                                                       const FamilySelector& family, double bound) {
  family.validate(g);
  detail::LoopSearch search(g, rho);
  std::vector<LoopCandidate> found;
  for (EdgeId e : family.candidate_edges(g)) {
    auto c = search.through_edge(e, family.max_hop, bound);
    if (c && c->length < bound) found.push_back(std::move(*c));
  }
  std::sort(found.begin(), found.end(), shorter);
  found.erase(std::unique(found.begin(), found.end(),
                          [](const LoopCandidate& a, const LoopCandidate& b) { return a.loop == b.loop; }),
              found.end());
  return found;
}

/// Every loop of the family in canonical order. Throws LoopCountOverflow
/// once more than max_count loops have been found.
inline std::vector<Loop> enumerate_loops(const Graph& g, const FamilySelector& family,
                                         std::size_t max_count) {
  family.validate(g);
  const std::size_t n = g.num_nodes();
  const std::size_t cap = family.max_hop.value_or(n);
  std::vector<Loop> loops;
  std::vector<NodeId> path;
  std::vector<EdgeId> path_edges;
  std::vector<char> on_path(n, 0);

  // Loops whose smallest node is s, walked from s towards the smaller neighbour.
  std::function<void(NodeId)> extend = [&](NodeId s) {
    const NodeId x = path.back();
    for (const Incidence& inc : g.neighbors(x)) {
      const NodeId y = inc.node;
      if (y == s && path.size() >= 3 && path[1] < x) {
        Loop loop;
        loop.nodes = path;
        loop.edges = path_edges;
        loop.edges.push_back(inc.edge);
        std::sort(loop.edges.begin(), loop.edges.end());
        if (family.contains(loop)) {
          if (loops.size() == max_count) throw LoopCountOverflow(max_count);
          loops.push_back(std::move(loop));
        }
        continue;
      }
      if (y <= s || on_path[y] || path.size() >= cap) continue;
      on_path[y] = 1;
      path.push_back(y);
      path_edges.push_back(inc.edge);
      extend(s);
      path.pop_back();
      path_edges.pop_back();
      on_path[y] = 0;
    }
  };

  for (NodeId s = 0; s < n; ++s) {
    path.assign(1, s);
    path_edges.clear();
    on_path[s] = 1;
    extend(s);
    on_path[s] = 0;
  }
  std::sort(loops.begin(), loops.end());
  return loops;
}

}  // namespace loopmod
