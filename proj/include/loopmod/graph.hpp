#pragma once

#include <algorithm>
#include <cctype>
#include <cerrno>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "loopmod/errors.hpp"

namespace loopmod {

using NodeId = std::uint32_t;
using EdgeId = std::uint32_t;

struct Edge {
  NodeId u;
  NodeId v;
  double weight = 1.0;
};

/// One entry of a node's adjacency list.
struct Incidence {
  NodeId node;
  EdgeId edge;
};

/// Simple undirected graph with positive edge weights.
///
/// Nodes are 0..n-1 and edges keep the index they were given at
/// construction. The graph is immutable once built; derived graphs
/// (e.g. reweighted copies) are new values.
class Graph {
 public:
  Graph() = default;

  /// Throws std::invalid_argument on self-loops, duplicate edges, out of
  /// range endpoints or weights that are not strictly positive and finite.
  Graph(std::size_t num_nodes, std::vector<Edge> edges, std::vector<std::string> tokens = {})
      : num_nodes_(num_nodes), edges_(std::move(edges)), tokens_(std::move(tokens)) {
    if (!tokens_.empty() && tokens_.size() != num_nodes_) {
      throw std::invalid_argument("token table size does not match node count");
    }
    adjacency_.assign(num_nodes_, {});
    index_.reserve(edges_.size());
    for (std::size_t k = 0; k < edges_.size(); ++k) {
      const Edge& e = edges_[k];
      if (e.u >= num_nodes_ || e.v >= num_nodes_) {
        throw std::invalid_argument("edge " + std::to_string(k) + " has an endpoint out of range");
      }
      if (e.u == e.v) {
        throw std::invalid_argument("edge " + std::to_string(k) + " is a self-loop");
      }
      if (!(e.weight > 0.0) || !std::isfinite(e.weight)) {
        throw std::invalid_argument("edge " + std::to_string(k) + " has a non-positive weight");
      }
      if (!index_.emplace(key(e.u, e.v), static_cast<EdgeId>(k)).second) {
        throw std::invalid_argument("edge " + std::to_string(k) + " duplicates an earlier edge");
      }
      adjacency_[e.u].push_back({e.v, static_cast<EdgeId>(k)});
      adjacency_[e.v].push_back({e.u, static_cast<EdgeId>(k)});
    }
    for (auto& list : adjacency_) {
      std::sort(list.begin(), list.end(),
                [](const Incidence& a, const Incidence& b) { return a.node < b.node; });
    }
  }

  std::size_t num_nodes() const { return num_nodes_; }
  std::size_t num_edges() const { return edges_.size(); }

  const Edge& edge(EdgeId e) const { return edges_[e]; }
  std::span<const Edge> edges() const { return edges_; }

  /// Neighbours of v sorted by node id.
  std::span<const Incidence> neighbors(NodeId v) const { return adjacency_[v]; }
  std::size_t degree(NodeId v) const { return adjacency_[v].size(); }

  std::optional<EdgeId> find_edge(NodeId u, NodeId v) const {
    auto it = index_.find(key(u, v));
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  std::vector<double> weights() const {
    std::vector<double> w(edges_.size());
    for (std::size_t k = 0; k < edges_.size(); ++k) w[k] = edges_[k].weight;
    return w;
  }

  /// Same topology and tokens, new weights.
  Graph with_weights(std::span<const double> weights) const {
    if (weights.size() != edges_.size()) {
      throw std::invalid_argument("weight vector has " + std::to_string(weights.size()) +
                                  " entries, graph has " + std::to_string(edges_.size()) +
                                  " edges");
    }
    std::vector<Edge> edges = edges_;
    for (std::size_t k = 0; k < edges.size(); ++k) edges[k].weight = weights[k];
    return Graph(num_nodes_, std::move(edges), tokens_);
  }

  /// Original input token for v, or its decimal id if the graph was generated.
  std::string token(NodeId v) const { return tokens_.empty() ? std::to_string(v) : tokens_[v]; }
  const std::vector<std::string>& tokens() const { return tokens_; }

  /// Component id per node, numbered in order of smallest member.
  std::vector<std::uint32_t> components() const {
    constexpr auto unset = static_cast<std::uint32_t>(-1);
    std::vector<std::uint32_t> comp(num_nodes_, unset);
    std::uint32_t next = 0;
    std::vector<NodeId> stack;
    for (NodeId s = 0; s < num_nodes_; ++s) {
      if (comp[s] != unset) continue;
      comp[s] = next;
      stack.push_back(s);
      while (!stack.empty()) {
        NodeId x = stack.back();
        stack.pop_back();
        for (const Incidence& inc : adjacency_[x]) {
          if (comp[inc.node] == unset) {
            comp[inc.node] = next;
            stack.push_back(inc.node);
          }
        }
      }
      ++next;
    }
    return comp;
  }

  std::size_t num_components() const {
    auto comp = components();
    return comp.empty() ? 0 : *std::max_element(comp.begin(), comp.end()) + 1;
  }

  friend bool operator==(const Graph& a, const Graph& b) {
    if (a.num_nodes_ != b.num_nodes_ || a.edges_.size() != b.edges_.size()) return false;
    for (std::size_t k = 0; k < a.edges_.size(); ++k) {
      const Edge& x = a.edges_[k];
      const Edge& y = b.edges_[k];
      if (x.u != y.u || x.v != y.v || x.weight != y.weight) return false;
    }
    return true;
  }

 private:
  static std::uint64_t key(NodeId u, NodeId v) {
    if (u > v) std::swap(u, v);
    return (static_cast<std::uint64_t>(u) << 32) | v;
  }

  std::size_t num_nodes_ = 0;
  std::vector<Edge> edges_;
  std::vector<std::string> tokens_;
  std::vector<std::vector<Incidence>> adjacency_;
  std::unordered_map<std::uint64_t, EdgeId> index_;
};

/// Community label per node.
struct Partition {
  std::vector<std::uint32_t> labels;

  std::size_t size() const { return labels.size(); }

  std::size_t num_communities() const {
    if (labels.empty()) return 0;
    return *std::max_element(labels.begin(), labels.end()) + 1;
  }

  /// Relabels communities 0,1,2,... in order of first appearance.
  Partition canonical() const {
    std::unordered_map<std::uint32_t, std::uint32_t> remap;
    Partition out;
    out.labels.reserve(labels.size());
    for (auto l : labels) {
      auto [it, inserted] = remap.emplace(l, static_cast<std::uint32_t>(remap.size()));
      out.labels.push_back(it->second);
    }
    return out;
  }

  friend bool operator==(const Partition&, const Partition&) = default;
};

namespace detail {

inline std::vector<std::string_view> split_fields(std::string_view line) {
  if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
  std::vector<std::string_view> fields;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    std::size_t j = i;
    while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
    if (j > i) fields.push_back(line.substr(i, j - i));
    i = j;
  }
  return fields;
}

template <typename Fn>
void for_each_line(std::string_view text, Fn&& fn) {
  std::size_t lineno = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    ++lineno;
    fn(lineno, text.substr(pos, end - pos));
    pos = end + 1;
  }
}

inline double parse_weight(std::string_view field, std::size_t lineno) {
  std::string s(field);
  char* end = nullptr;
  double w = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size()) throw ParseError(lineno, "bad weight '" + s + "'");
  if (!(w > 0.0) || !std::isfinite(w)) {
    throw ParseError(lineno, "weight must be positive and finite, got '" + s + "'");
  }
  return w;
}

inline std::uint64_t parse_positive_int(std::string_view field, std::size_t lineno) {
  std::string s(field);
  char* end = nullptr;
  errno = 0;
  unsigned long long v = std::strtoull(s.c_str(), &end, 10);
  if (s.empty() || end != s.c_str() + s.size() || errno != 0 || v == 0 || s[0] == '-') {
    throw ParseError(lineno, "expected a positive integer node id, got '" + s + "'");
  }
  return v;
}

inline std::string format_real(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace detail

/// Parses "u v" / "u v w" lines. Node tokens are arbitrary strings mapped to
/// ids in order of first appearance. A repeated pair keeps its first index
/// and takes the last weight given.
inline Graph load_edge_list(std::string_view text) {
  std::unordered_map<std::string, NodeId> ids;
  std::vector<std::string> tokens;
  std::vector<Edge> edges;
  std::unordered_map<std::uint64_t, std::size_t> seen;

  auto node_id = [&](std::string_view tok) {
    auto [it, inserted] = ids.emplace(std::string(tok), static_cast<NodeId>(tokens.size()));
    if (inserted) tokens.emplace_back(tok);
    return it->second;
  };

  detail::for_each_line(text, [&](std::size_t lineno, std::string_view line) {
    auto fields = detail::split_fields(line);
    if (fields.empty()) return;
    if (fields.size() < 2 || fields.size() > 3) {
      throw ParseError(lineno, "expected 'u v' or 'u v w'");
    }
    if (fields[0] == fields[1]) throw ParseError(lineno, "self-loop on '" + std::string(fields[0]) + "'");
    double w = fields.size() == 3 ? detail::parse_weight(fields[2], lineno) : 1.0;
    NodeId u = node_id(fields[0]);
    NodeId v = node_id(fields[1]);
    std::uint64_t k = (static_cast<std::uint64_t>(std::min(u, v)) << 32) | std::max(u, v);
    if (auto it = seen.find(k); it != seen.end()) {
      if (fields.size() == 3) edges[it->second].weight = w;
      return;
    }
    seen.emplace(k, edges.size());
    edges.push_back({u, v, w});
  });

  const std::size_t n = tokens.size();
  return Graph(n, std::move(edges), std::move(tokens));
}

/// One "u v w" line per edge in edge-index order, weights at 17 significant digits.
inline std::string write_weighted_edge_list(const Graph& g) {
  std::string out;
  for (const Edge& e : g.edges()) {
    out += g.token(e.u);
    out += ' ';
    out += g.token(e.v);
    out += ' ';
    out += detail::format_real(e.weight);
    out += '\n';
  }
  return out;
}

struct LfrData {
  Graph graph;
  Partition truth;
  std::vector<std::string> warnings;
};

/// Reads the LFR benchmark's network.dat / community.dat pair.
///
/// Ids are 1-based in both files and shifted to 0-based; the node count is
/// the largest id seen. Each undirected edge is normally listed in both
/// directions; one-sided listings are accepted and reported in `warnings`.
/// Overlapping-community lines keep their first label.
inline LfrData load_lfr(std::string_view network_text, std::string_view community_text) {
  std::vector<std::pair<std::uint64_t, std::uint64_t>> directed;
  std::uint64_t max_id = 0;
  detail::for_each_line(network_text, [&](std::size_t lineno, std::string_view line) {
    auto fields = detail::split_fields(line);
    if (fields.empty()) return;
    if (fields.size() < 2 || fields.size() > 3) throw ParseError(lineno, "expected 'u v' or 'u v w'");
    auto u = detail::parse_positive_int(fields[0], lineno);
    auto v = detail::parse_positive_int(fields[1], lineno);
    if (u == v) throw ParseError(lineno, "self-loop on node " + std::to_string(u));
    max_id = std::max({max_id, u, v});
    directed.emplace_back(u, v);
  });

  LfrData out;
  std::unordered_map<std::uint64_t, std::size_t> first_index;
  std::unordered_map<std::uint64_t, unsigned> direction_mask;
  std::vector<Edge> edges;
  for (auto [u, v] : directed) {
    auto a = std::min(u, v) - 1;
    auto b = std::max(u, v) - 1;
    std::uint64_t k = (a << 32) | b;
    direction_mask[k] |= (u < v) ? 1u : 2u;
    if (first_index.emplace(k, edges.size()).second) {
      edges.push_back({static_cast<NodeId>(a), static_cast<NodeId>(b), 1.0});
    }
  }
  for (const Edge& e : edges) {
    std::uint64_t k = (static_cast<std::uint64_t>(e.u) << 32) | e.v;
    if (direction_mask[k] != 3u) {
      out.warnings.push_back("edge " + std::to_string(e.u + 1) + " " + std::to_string(e.v + 1) +
                             " is listed in one direction only");
    }
  }

  const auto n = static_cast<std::size_t>(max_id);
  std::vector<std::string> tokens(n);
  for (std::size_t i = 0; i < n; ++i) tokens[i] = std::to_string(i + 1);
  out.graph = Graph(n, std::move(edges), std::move(tokens));

  constexpr auto unset = static_cast<std::uint32_t>(-1);
  std::vector<std::uint32_t> labels(n, unset);
  std::unordered_map<std::string, std::uint32_t> label_ids;
  detail::for_each_line(community_text, [&](std::size_t lineno, std::string_view line) {
    auto fields = detail::split_fields(line);
    if (fields.empty()) return;
    if (fields.size() < 2) throw ParseError(lineno, "expected 'node label'");
    auto node = detail::parse_positive_int(fields[0], lineno);
    if (node > n) {
      throw ParseError(lineno, "node " + std::to_string(node) + " does not appear in the network");
    }
    auto [it, inserted] =
        label_ids.emplace(std::string(fields[1]), static_cast<std::uint32_t>(label_ids.size()));
    if (labels[node - 1] == unset) labels[node - 1] = it->second;
  });
  for (std::size_t i = 0; i < n; ++i) {
    if (labels[i] == unset) {
      throw ParseError(0, "node " + std::to_string(i + 1) + " has no community");
    }
  }
  out.truth = Partition{std::move(labels)}.canonical();
  return out;
}

/// Reads "node label" lines against the graph's token table.
inline Partition read_partition(std::string_view text, const Graph& g) {
  std::unordered_map<std::string, NodeId> ids;
  for (NodeId v = 0; v < g.num_nodes(); ++v) ids.emplace(g.token(v), v);
  constexpr auto unset = static_cast<std::uint32_t>(-1);
  std::vector<std::uint32_t> labels(g.num_nodes(), unset);
  std::unordered_map<std::string, std::uint32_t> label_ids;
  detail::for_each_line(text, [&](std::size_t lineno, std::string_view line) {
    auto fields = detail::split_fields(line);
    if (fields.empty()) return;
    if (fields.size() != 2) throw ParseError(lineno, "expected 'node label'");
    auto node = ids.find(std::string(fields[0]));
    if (node == ids.end()) {
      throw ParseError(lineno, "unknown node '" + std::string(fields[0]) + "'");
    }
    auto [it, inserted] =
        label_ids.emplace(std::string(fields[1]), static_cast<std::uint32_t>(label_ids.size()));
    labels[node->second] = it->second;
  });
  for (NodeId v = 0; v < g.num_nodes(); ++v) {
    if (labels[v] == unset) throw ParseError(0, "node '" + g.token(v) + "' has no label");
  }
  return Partition{std::move(labels)}.canonical();
}

inline std::string write_partition(const Graph& g, const Partition& p) {
  std::string out;
  for (NodeId v = 0; v < g.num_nodes(); ++v) {
    out += g.token(v);
    out += ' ';
    out += std::to_string(p.labels.at(v));
    out += '\n';
  }
  return out;
}

}  // namespace loopmod
