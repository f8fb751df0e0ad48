// Command-line driver: loop modulus, loop clustering, modulus reweighting,
// community detection and the planted-partition benchmark.
//
// Standard output carries only machine-readable results; messages go to
// standard error. Exit codes: 2 bad input, 3 solver failure, 4 spectral
// bisection of a disconnected graph.

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "CLI11.hpp"
#include "loopmod/builtin.hpp"
#include "loopmod/community.hpp"
#include "loopmod/modulus.hpp"

namespace {

using namespace loopmod;
using Json = nlohmann::ordered_json;

constexpr int kExitInput = 2;
constexpr int kExitSolver = 3;
constexpr int kExitDisconnected = 4;

struct InputOptions {
  std::string path;
  std::string builtin;
  std::string lfr_communities;
  BuiltinParams params;
};

struct LoadedInput {
  Graph graph;
  std::optional<Partition> truth;
  std::string source_text;  // hashed into the run report
};

void add_input_options(CLI::App* cmd, InputOptions& in) {
  cmd->add_option("graph", in.path, "Edge list file ('u v' or 'u v w' per line)");
  cmd->add_option("--builtin", in.builtin,
                  "Builtin graph: karate, grid, torus, complete, cycle, tree_random, regular_random");
  cmd->add_option("--lfr", in.lfr_communities,
                  "Treat the graph file as an LFR network.dat with this community.dat");
  cmd->add_option("--rows", in.params.rows, "Rows for grid/torus");
  cmd->add_option("--cols", in.params.cols, "Columns for grid/torus");
  cmd->add_option("--n", in.params.n, "Node count for complete/cycle/tree_random/regular_random");
  cmd->add_option("--degree", in.params.degree, "Degree for regular_random");
  cmd->add_option("--seed", in.params.seed, "Seed for random builtins and Louvain");
}

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::invalid_argument("cannot read '" + path + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::invalid_argument("cannot write '" + path + "'");
  f << text;
}

LoadedInput load_input(const InputOptions& in) {
  if (in.path.empty() == in.builtin.empty()) {
    throw std::invalid_argument("give exactly one of a graph file or --builtin");
  }
  LoadedInput out;
  if (!in.builtin.empty()) {
    auto b = builtin_graph(in.builtin, in.params);
    out.graph = std::move(b.graph);
    out.truth = std::move(b.truth);
    const auto& p = in.params;
    out.source_text = "builtin:" + in.builtin + " rows=" + std::to_string(p.rows) +
                      " cols=" + std::to_string(p.cols) + " n=" + std::to_string(p.n) +
                      " degree=" + std::to_string(p.degree) + " seed=" + std::to_string(p.seed);
    return out;
  }
  out.source_text = read_file(in.path);
  if (!in.lfr_communities.empty()) {
    std::string communities = read_file(in.lfr_communities);
    auto lfr = load_lfr(out.source_text, communities);
    for (const auto& w : lfr.warnings) std::cerr << "warning: " << w << '\n';
    out.graph = std::move(lfr.graph);
    out.truth = std::move(lfr.truth);
    out.source_text += communities;
  } else {
    out.graph = load_edge_list(out.source_text);
  }
  return out;
}

std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string hex(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

NodeId lookup_node(const Graph& g, const std::string& token) {
  for (NodeId v = 0; v < g.num_nodes(); ++v)
    if (g.token(v) == token) return v;
  throw std::invalid_argument("unknown node '" + token + "'");
}

/// all | node:<id> | edge:<u>,<v> | maxhop:<k>, with an optional
/// "+maxhop:<k>" suffix on node/edge families.
FamilySelector parse_family(const std::string& text, const Graph& g) {
  std::string base = text;
  std::optional<std::size_t> cap;
  auto parse_cap = [](const std::string& s) -> std::size_t {
    std::size_t pos = 0;
    unsigned long k = std::stoul(s, &pos);
    if (pos != s.size()) throw std::invalid_argument("bad hop cap '" + s + "'");
    return k;
  };
  if (auto plus = text.find('+'); plus != std::string::npos) {
    std::string tail = text.substr(plus + 1);
    if (tail.rfind("maxhop:", 0) != 0) throw std::invalid_argument("bad family '" + text + "'");
    cap = parse_cap(tail.substr(7));
    base = text.substr(0, plus);
  }
  FamilySelector f;
  if (base == "all") {
    f = FamilySelector::all();
  } else if (base.rfind("node:", 0) == 0) {
    f = FamilySelector::through_node(lookup_node(g, base.substr(5)));
  } else if (base.rfind("edge:", 0) == 0) {
    std::string rest = base.substr(5);
    auto comma = rest.find(',');
    if (comma == std::string::npos) throw std::invalid_argument("edge family needs 'edge:<u>,<v>'");
    auto e = g.find_edge(lookup_node(g, rest.substr(0, comma)), lookup_node(g, rest.substr(comma + 1)));
    if (!e) throw std::invalid_argument("no edge " + rest);
    f = FamilySelector::through_edge(*e);
  } else if (base.rfind("maxhop:", 0) == 0) {
    f = FamilySelector::hop_capped(parse_cap(base.substr(7)));
  } else {
    throw std::invalid_argument("unknown family '" + text + "'");
  }
  if (cap) f = f.capped(*cap);
  return f;
}

std::string format_g(double x, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, x);
  return buf;
}

struct Reporter {
  std::string path;
  std::string command;
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();

  void write(const std::string& input, Json config, Json results) const {
    if (path.empty()) return;
    Json report;
    report["command"] = command;
    report["input_hash"] = hex(fnv1a(input));
    report["config"] = std::move(config);
    report["results"] = std::move(results);
    report["wall_time_s"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    write_file(path, report.dump(2) + "\n");
  }
};

ModulusConfig modulus_config(double tol, const FamilySelector& family) {
  ModulusConfig c;
  c.eps_tol = tol;
  c.family = family;
  return c;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

Partition run_method(const std::string& method, const Graph& g, std::uint64_t seed) {
  if (method == "fiedler") return core_fiedler_bisection(g);
  if (method == "louvain") return louvain(g, seed);
  if (method == "cnm") return cnm_greedy(g);
  throw std::invalid_argument("unknown method '" + method + "'");
}

std::string joined_args(int argc, char** argv) {
  std::string s;
  for (int i = 0; i < argc; ++i) {
    if (i) s += ' ';
    s += argv[i];
  }
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Loop modulus toolkit"};
  app.require_subcommand(1);

  InputOptions in;
  std::string family_spec = "all";
  double tol = 1e-6;
  std::string json_out;
  std::string report_out;
  std::optional<double> floor;
  std::string source = "rho";
  std::string out_path;
  std::string method = "fiedler";
  bool preweight = false;
  std::string truth_path;

  auto* modulus_cmd = app.add_subcommand("modulus", "Mod_2 of a loop family");
  add_input_options(modulus_cmd, in);
  modulus_cmd->add_option("--family", family_spec, "all | node:<id> | edge:<u>,<v> | maxhop:<k>");
  modulus_cmd->add_option("--tol", tol, "Admissibility tolerance");
  modulus_cmd->add_option("--json", json_out, "Write the modulus result as JSON");
  modulus_cmd->add_option("--report", report_out, "Write a run report as JSON");

  auto* clustering_cmd = app.add_subcommand("clustering", "Loop clustering coefficient, in percent");
  add_input_options(clustering_cmd, in);
  clustering_cmd->add_option("--tol", tol, "Admissibility tolerance");
  clustering_cmd->add_option("--report", report_out, "Write a run report as JSON");

  auto* reweight_cmd = app.add_subcommand("reweight", "Write the graph reweighted by rho*");
  add_input_options(reweight_cmd, in);
  reweight_cmd->add_option("--floor", floor, "Added to every weight (default 1e-4 * max)");
  reweight_cmd->add_option("--source", source, "rho | usage")->check(CLI::IsMember({"rho", "usage"}));
  reweight_cmd->add_option("--tol", tol, "Admissibility tolerance");
  reweight_cmd->add_option("-o,--output", out_path, "Weighted edge list to write")->required();
  reweight_cmd->add_option("--report", report_out, "Write a run report as JSON");

  auto* partition_cmd = app.add_subcommand("partition", "Community detection");
  add_input_options(partition_cmd, in);
  partition_cmd->add_option("--method", method, "fiedler | louvain | cnm")
      ->check(CLI::IsMember({"fiedler", "louvain", "cnm"}));
  partition_cmd->add_flag("--preweight", preweight, "Reweight by rho* before partitioning");
  partition_cmd->add_option("--floor", floor, "Floor for --preweight (default 1e-4 * max rho*)");
  partition_cmd->add_option("--tol", tol, "Admissibility tolerance for --preweight");
  partition_cmd->add_option("--truth", truth_path, "Ground-truth partition file ('node label')");
  partition_cmd->add_option("-o,--output", out_path, "Partition file to write");
  partition_cmd->add_option("--report", report_out, "Write a run report as JSON");

  std::size_t bench_nodes = 128;
  std::size_t bench_blocks = 4;
  double bench_degree = 5.0;
  std::string bench_mixing = "0.1,0.2,0.3";
  std::size_t bench_seeds = 20;
  std::string bench_methods = "louvain,cnm";
  auto* bench_cmd = app.add_subcommand("benchmark", "Raw vs preweighted NMI on planted partitions (CSV)");
  bench_cmd->add_option("--nodes", bench_nodes, "Nodes per graph");
  bench_cmd->add_option("--blocks", bench_blocks, "Number of planted blocks");
  bench_cmd->add_option("--degree", bench_degree, "Expected mean degree");
  bench_cmd->add_option("--mixing", bench_mixing, "Comma-separated mixing rates");
  bench_cmd->add_option("--seeds", bench_seeds, "Seeds 1..k per mixing rate");
  bench_cmd->add_option("--methods", bench_methods, "Comma-separated: louvain, cnm, fiedler");
  bench_cmd->add_option("--floor", floor, "Floor for preweighting (default 1e-4 * max rho*)");

  std::string truth_out;
  auto* builtin_cmd = app.add_subcommand("builtin", "Write a builtin graph as an edge list");
  builtin_cmd->add_option("name", in.builtin, "Builtin name")->required();
  builtin_cmd->add_option("--rows", in.params.rows);
  builtin_cmd->add_option("--cols", in.params.cols);
  builtin_cmd->add_option("--n", in.params.n);
  builtin_cmd->add_option("--degree", in.params.degree);
  builtin_cmd->add_option("--seed", in.params.seed);
  builtin_cmd->add_option("-o,--output", out_path, "Edge list to write")->required();
  builtin_cmd->add_option("--truth-out", truth_out, "Ground-truth partition to write, if any");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitInput;
  }

  Reporter reporter{report_out, joined_args(argc, argv)};
  try {
    if (*modulus_cmd) {
      LoadedInput input = load_input(in);
      const FamilySelector family = parse_family(family_spec, input.graph);
      ModulusResult r = compute_modulus(input.graph, modulus_config(tol, family));
      std::cout << format_g(r.mod_value, 6) << '\n';
      Json payload = to_json(r);
      if (!json_out.empty()) write_file(json_out, payload.dump() + "\n");
      reporter.write(input.source_text, Json{{"family", family.describe()}, {"tol", tol}}, payload);
    } else if (*clustering_cmd) {
      LoadedInput input = load_input(in);
      const double c = loop_clustering(input.graph, modulus_config(tol, FamilySelector::all()));
      std::cout << format_g(100.0 * c, 4) << "%\n";
      reporter.write(input.source_text, Json{{"tol", tol}}, Json{{"c_loop", c}});
    } else if (*reweight_cmd) {
      if (floor && !(*floor >= 0.0)) throw std::invalid_argument("--floor must be >= 0");
      LoadedInput input = load_input(in);
      ModulusResult r = compute_modulus(input.graph, modulus_config(tol, FamilySelector::all()));
      WeightingPolicy policy;
      policy.source = source == "usage" ? WeightingPolicy::Source::ExpectedUsage
                                        : WeightingPolicy::Source::RhoStar;
      policy.floor = floor;
      Graph weighted = reweight(input.graph, r, policy);
      write_file(out_path, write_weighted_edge_list(weighted));
      Json summary;
      summary["rho_min"] = r.rho_star.empty() ? 0.0 : *std::min_element(r.rho_star.begin(), r.rho_star.end());
      summary["rho_max"] = r.rho_star.empty() ? 0.0 : *std::max_element(r.rho_star.begin(), r.rho_star.end());
      summary["zero_count"] = std::count_if(r.rho_star.begin(), r.rho_star.end(),
                                            [](double x) { return x <= 0.0; });
      std::cout << summary.dump() << '\n';
      reporter.write(input.source_text, Json{{"source", source}, {"tol", tol}}, summary);
    } else if (*partition_cmd) {
      if (floor && !(*floor >= 0.0)) throw std::invalid_argument("--floor must be >= 0");
      LoadedInput input = load_input(in);
      std::optional<Partition> truth = input.truth;
      if (!truth_path.empty()) truth = read_partition(read_file(truth_path), input.graph);
      Graph g = input.graph;
      if (preweight) {
        ModulusResult r = compute_modulus(g, modulus_config(tol, FamilySelector::all()));
        g = reweight(g, r, WeightingPolicy{WeightingPolicy::Source::RhoStar, floor});
      }
      Partition p = run_method(method, g, in.params.seed);
      if (!out_path.empty()) write_file(out_path, write_partition(input.graph, p));
      Json score;
      if (truth) score["nmi"] = nmi(p, *truth);
      score["modularity"] = modularity(input.graph, p);
      std::cout << score.dump() << '\n';
      reporter.write(input.source_text,
                     Json{{"method", method}, {"preweight", preweight}, {"seed", in.params.seed}},
                     score);
    } else if (*bench_cmd) {
      const auto methods = split_list(bench_methods);
      const auto mixing_tokens = split_list(bench_mixing);
      if (methods.empty() || mixing_tokens.empty() || bench_seeds == 0) {
        throw std::invalid_argument("benchmark needs methods, mixing rates and seeds");
      }
      for (const auto& m : methods) {
        if (m != "louvain" && m != "cnm" && m != "fiedler") {
          throw std::invalid_argument("unknown method '" + m + "'");
        }
      }
      std::vector<double> mixings;
      for (const auto& t : mixing_tokens) mixings.push_back(std::stod(t));
      for (double mix : mixings) mixing_probabilities(bench_nodes, bench_blocks, bench_degree, mix);

      using Row = std::tuple<std::string, int, double, std::size_t, double>;
      std::vector<Row> rows;
      for (double mix : mixings) {
        auto [p_in, p_out] = mixing_probabilities(bench_nodes, bench_blocks, bench_degree, mix);
        for (std::size_t seed = 1; seed <= bench_seeds; ++seed) {
          auto [g, truth] = planted_partition(bench_nodes, bench_blocks, p_in, p_out, seed);
          ModulusResult r = compute_modulus(g);
          Graph weighted = reweight(g, r, WeightingPolicy{WeightingPolicy::Source::RhoStar, floor});
          for (const auto& m : methods) {
            rows.emplace_back(m, 0, mix, seed, nmi(run_method(m, g, seed), truth));
            rows.emplace_back(m, 1, mix, seed, nmi(run_method(m, weighted, seed), truth));
          }
        }
      }
      std::sort(rows.begin(), rows.end());
      std::cout << "method,preweighted,mixing,seed,nmi\n";
      for (const auto& [m, pre, mix, seed, score] : rows) {
        std::cout << m << ',' << pre << ',' << format_g(mix, 6) << ',' << seed << ','
                  << format_g(score, 10) << '\n';
      }
    } else if (*builtin_cmd) {
      auto b = builtin_graph(in.builtin, in.params);
      write_file(out_path, write_weighted_edge_list(b.graph));
      if (!truth_out.empty()) {
        if (!b.truth) throw std::invalid_argument("builtin '" + in.builtin + "' has no ground truth");
        write_file(truth_out, write_partition(b.graph, *b.truth));
      }
    }
  } catch (const DisconnectedGraphError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitDisconnected;
  } catch (const SolverError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitSolver;
  } catch (const IterationLimitError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitSolver;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInput;
  }
  return 0;
}
