#pragma once

#include <algorithm>
#include <cstddef>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "loopmod/errors.hpp"
#include "loopmod/graph.hpp"
#include "loopmod/loop.hpp"
#include "loopmod/qp.hpp"

namespace loopmod {

struct ModulusConfig {
  /// A loop is violated when its rho-length is below 1 - eps_tol.
  double eps_tol = 1e-6;
  FamilySelector family = FamilySelector::all();
  std::size_t max_iterations = 100'000;
  /// KKT tolerance handed to the QP.
  double qp_tol = 1e-8;
  /// Add every violated loop found by the per-edge searches instead of
  /// only the shortest one.
  bool batch = false;
};

/// 2-modulus of a loop family with its extremal density and the optimal
/// loop distribution.
///
/// `active_loops`, `lambda_star` and `mu_star` are aligned. Loops whose dual
/// weight is at most qp_tol * sum(lambda) are pruned before normalising, so
/// `mu_star` sums to one over the retained support.
struct ModulusResult {
  double mod_value = 0.0;
  std::vector<double> rho_star;
  std::vector<double> edge_usage;
  std::vector<Loop> active_loops;
  std::vector<double> lambda_star;
  std::vector<double> mu_star;
  double nu_star = 0.0;
  std::size_t iterations = 0;
  double tol = 0.0;
  /// Every loop generated as a constraint, active or not.
  std::size_t generated_loops = 0;
  /// rho*-length of the shortest family loop after the final solve; +inf
  /// for an empty family.
  double certificate = std::numeric_limits<double>::infinity();
  double kkt_residual = 0.0;
};

/// Thrown when constraint generation hits max_iterations. Carries the
/// state reached so far.
class IterationLimitError : public std::runtime_error {
 public:
  IterationLimitError(std::size_t limit, ModulusResult partial)
      : std::runtime_error("constraint generation did not converge within " + std::to_string(limit) +
                           " iterations"),
        partial_(std::move(partial)) {}

  const ModulusResult& partial() const { return partial_; }

 private:
  ModulusResult partial_;
};

namespace detail {

inline ModulusResult assemble(const Graph& g, const std::vector<Loop>& loops, const QPSolution& sol,
                              double tol) {
  ModulusResult r;
  r.tol = tol;
  r.generated_loops = loops.size();
  r.rho_star = sol.rho;
  r.mod_value = sol.objective;
  r.kkt_residual = sol.kkt_residual;

  const double total = std::accumulate(sol.lambda.begin(), sol.lambda.end(), 0.0);
  for (std::size_t j = 0; j < loops.size(); ++j) {
    if (sol.lambda[j] > tol * total) {
      r.active_loops.push_back(loops[j]);
      r.lambda_star.push_back(sol.lambda[j]);
    }
  }
  r.nu_star = std::accumulate(r.lambda_star.begin(), r.lambda_star.end(), 0.0);
  for (double l : r.lambda_star) r.mu_star.push_back(l / r.nu_star);

  r.edge_usage.assign(g.num_edges(), 0.0);
  if (r.mod_value > 0.0) {
    for (EdgeId e = 0; e < g.num_edges(); ++e) {
      r.edge_usage[e] = g.edge(e).weight * r.rho_star[e] / r.mod_value;
    }
  }
  return r;
}

inline ModulusResult empty_result(const Graph& g, double tol) {
  ModulusResult r;
  r.tol = tol;
  r.rho_star.assign(g.num_edges(), 0.0);
  r.edge_usage.assign(g.num_edges(), 0.0);
  return r;
}

}  // namespace detail

/// Mod_2 of a loop family by constraint generation.
///
/// Starts from the hop-shortest loop, then alternates a QP solve over the
/// loops collected so far with an exact search for the rho-shortest family
/// loop, adding it while its length is below 1 - eps_tol. The QP is warm
/// started: each new row continues the previous active set.
inline ModulusResult compute_modulus(const Graph& g, const ModulusConfig& config = {}) {
  if (!(config.eps_tol > 0.0 && config.eps_tol < 1.0)) {
    throw std::invalid_argument("eps_tol must lie in (0, 1)");
  }
  config.family.validate(g);
  const std::vector<double> ones(g.num_edges(), 1.0);
  auto first = shortest_loop(g, ones, config.family);
  if (!first) return detail::empty_result(g, config.eps_tol);

  ActiveSetQP qp(g.weights(), config.qp_tol);
  std::vector<Loop> loops;
  auto push = [&](Loop loop) {
    qp.add_row(loop.edges);
    loops.push_back(std::move(loop));
  };
  push(std::move(first->loop));

  const double threshold = 1.0 - config.eps_tol;
  std::size_t iterations = 0;
  for (;;) {
    qp.solve();
    ++iterations;
    QPSolution sol = qp.solution();
    if (sol.kkt_residual > config.qp_tol) {
      throw SolverError("QP did not reach the requested accuracy", sol.kkt_residual);
    }
    const auto& rho = sol.rho;
    auto next = shortest_loop(g, rho, config.family);
    if (!next || next->length >= threshold) {
      ModulusResult r = detail::assemble(g, loops, sol, config.qp_tol);
      r.iterations = iterations;
      r.tol = config.eps_tol;
      r.certificate = next ? next->length : std::numeric_limits<double>::infinity();
      return r;
    }
    if (iterations >= config.max_iterations) {
      ModulusResult partial = detail::assemble(g, loops, sol, config.qp_tol);
      partial.iterations = iterations;
      partial.tol = config.eps_tol;
      partial.certificate = next->length;
      throw IterationLimitError(config.max_iterations, std::move(partial));
    }
    if (config.batch) {
      for (auto& c : short_loops_per_edge(g, rho, config.family, threshold)) push(std::move(c.loop));
    } else {
      push(std::move(next->loop));
    }
  }
}

/// Mod_2 of an explicit loop list, solved in one QP.
inline ModulusResult modulus_of_loops(const Graph& g, const std::vector<Loop>& loops, double tol = 1e-8) {
  if (loops.empty()) return detail::empty_result(g, tol);
  QPProblem problem{g.weights(), {}};
  for (const Loop& l : loops) problem.rows.push_back(l.edges);
  QPSolution sol = solve(problem, tol);
  ModulusResult r = detail::assemble(g, loops, sol, tol);
  r.iterations = 1;
  return r;
}

/// Independent oracle: enumerates the whole family and solves the full QP.
/// Throws LoopCountOverflow past max_loops.
inline ModulusResult brute_force_modulus(const Graph& g, const FamilySelector& family,
                                         std::size_t max_loops = 20'000, double tol = 1e-8) {
  auto loops = enumerate_loops(g, family, max_loops);
  ModulusResult r = modulus_of_loops(g, loops, tol);
  if (!loops.empty()) {
    r.certificate = std::numeric_limits<double>::infinity();
    for (const Loop& l : loops) r.certificate = std::min(r.certificate, rho_length(l, r.rho_star));
  }
  return r;
}

/// C_loop = 9 Mod_2 / |E|. The uniform density 1/3 is admissible, so the
/// value is at most 1.
inline double loop_clustering(const Graph& g, const ModulusConfig& config = {}) {
  if (g.num_edges() == 0) throw std::invalid_argument("clustering needs at least one edge");
  return 9.0 * compute_modulus(g, config).mod_value / static_cast<double>(g.num_edges());
}

/// mu*^T C mu* over the retained support, C the loop overlap matrix. For
/// unit weights this equals 1 / Mod_2.
inline double min_expected_overlap(const ModulusResult& r) {
  if (!(r.mod_value > 0.0)) throw std::invalid_argument("expected overlap needs a positive modulus");
  double total = 0.0;
  for (std::size_t i = 0; i < r.active_loops.size(); ++i) {
    for (std::size_t j = 0; j < r.active_loops.size(); ++j) {
      total += r.mu_star[i] * r.mu_star[j] *
               static_cast<double>(overlap(r.active_loops[i], r.active_loops[j]));
    }
  }
  return total;
}

/// Mod_2 of the hop-capped subfamilies, one per cutoff.
inline std::vector<std::pair<std::size_t, double>> family_decomposition(
    const Graph& g, std::span<const std::size_t> hop_cutoffs, ModulusConfig config = {}) {
  std::vector<std::pair<std::size_t, double>> out;
  for (std::size_t i = 0; i < hop_cutoffs.size(); ++i) {
    if (hop_cutoffs[i] < 3) throw std::invalid_argument("hop cutoffs must be at least 3");
    if (i > 0 && hop_cutoffs[i] <= hop_cutoffs[i - 1]) {
      throw std::invalid_argument("hop cutoffs must be increasing");
    }
  }
  for (std::size_t k : hop_cutoffs) {
    config.family = config.family.capped(k);
    out.emplace_back(k, compute_modulus(g, config).mod_value);
  }
  return out;
}

/// {"mod", "rho", "usage", "active_loops", "lambda", "mu", "iterations", "tol"};
/// edge arrays in edge-index order.
inline nlohmann::ordered_json to_json(const ModulusResult& r) {
  nlohmann::ordered_json j;
  j["mod"] = r.mod_value;
  j["rho"] = r.rho_star;
  j["usage"] = r.edge_usage;
  auto loops = nlohmann::ordered_json::array();
  for (const Loop& l : r.active_loops) loops.push_back(l.nodes);
  j["active_loops"] = std::move(loops);
  j["lambda"] = r.lambda_star;
  j["mu"] = r.mu_star;
  j["iterations"] = r.iterations;
  j["tol"] = r.tol;
  return j;
}

}  // namespace loopmod
