#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#ifndef LOOPMOD_CLI_PATH
#error "LOOPMOD_CLI_PATH must point at the loopmod executable"
#endif

namespace fs = std::filesystem;

namespace {

struct CliResult {
  int status = -1;
  std::string out;
};

CliResult run(const std::string& args) {
  std::string cmd = std::string(LOOPMOD_CLI_PATH) + " " + args + " 2>/dev/null";
  CliResult r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, n);
  int raw = pclose(pipe);
  r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("loopmod_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path file(const std::string& name, const std::string& content = {}) {
    fs::path p = dir_ / name;
    if (!content.empty()) std::ofstream(p) << content;
    return p;
  }

  fs::path dir_;
};

}  // namespace

TEST_F(Cli, ModulusPrintsValue) {
  EXPECT_EQ(run("modulus --builtin complete --n 4").out, "0.666667\n");
  CliResult tree = run("modulus " + file("tree.txt", "0 1\n1 2\n1 3\n3 4\n").string());
  EXPECT_EQ(tree.status, 0);
  EXPECT_EQ(tree.out, "0\n");
}

TEST_F(Cli, ModulusJsonForKarate) {
  fs::path out = file("r.json");
  CliResult r = run("modulus --builtin karate --json " + out.string());
  ASSERT_EQ(r.status, 0);
  auto j = nlohmann::json::parse(slurp(out));
  EXPECT_EQ(j["rho"].size(), 78u);
  EXPECT_EQ(j["usage"].size(), 78u);
  EXPECT_EQ(j["tol"].get<double>(), 1e-6);
}

TEST_F(Cli, ModulusFamilies) {
  fs::path g = file("spd.txt", "0 1\n1 2\n2 3\n3 0\n0 2\n");
  EXPECT_EQ(run("modulus " + g.string()).out, "0.5\n");
  EXPECT_EQ(run("modulus " + g.string() + " --family maxhop:3").status, 0);
  EXPECT_EQ(run("modulus " + g.string() + " --family node:3").status, 0);
  EXPECT_EQ(run("modulus " + g.string() + " --family edge:0,2+maxhop:3").status, 0);
  EXPECT_EQ(run("modulus " + g.string() + " --family node:99").status, 2);
  EXPECT_EQ(run("modulus " + g.string() + " --family maxhop:2").status, 2);
  EXPECT_EQ(run("modulus " + g.string() + " --family sideways").status, 2);
}

TEST_F(Cli, Clustering) {
  EXPECT_EQ(run("clustering --builtin torus --rows 10 --cols 10").out, "56.25%\n");
  EXPECT_EQ(run("clustering --builtin complete --n 4").out, "100%\n");
}

TEST_F(Cli, ReweightFourCycle) {
  fs::path g = file("c4.txt", "0 1\n1 2\n2 3\n3 0\n");
  fs::path out = file("c4.w");
  CliResult r = run("reweight " + g.string() + " --floor 0 -o " + out.string());
  ASSERT_EQ(r.status, 0);
  std::istringstream lines(slurp(out));
  std::string u, v;
  double w;
  int count = 0;
  while (lines >> u >> v >> w) {
    EXPECT_NEAR(w, 0.25, 1e-9);
    ++count;
  }
  EXPECT_EQ(count, 4);
}

TEST_F(Cli, ReweightKarate) {
  fs::path out = file("k.w");
  CliResult r = run("reweight --builtin karate -o " + out.string());
  ASSERT_EQ(r.status, 0);
  auto summary = nlohmann::json::parse(r.out);
  const double floor = 1e-4 * summary["rho_max"].get<double>();
  std::istringstream lines(slurp(out));
  std::string u, v;
  double w;
  int count = 0;
  bool pendant_at_floor = false;
  while (lines >> u >> v >> w) {
    ++count;
    if (u == "0" && v == "11") pendant_at_floor = w == floor;
  }
  EXPECT_EQ(count, 78);
  EXPECT_TRUE(pendant_at_floor);
  EXPECT_EQ(run("reweight --builtin karate --floor -1 -o " + out.string()).status, 2);
}

TEST_F(Cli, PartitionKarate) {
  fs::path edges = file("karate.edges");
  fs::path truth = file("karate.truth");
  ASSERT_EQ(run("builtin karate -o " + edges.string() + " --truth-out " + truth.string()).status, 0);
  auto pre = nlohmann::json::parse(
      run("partition " + edges.string() + " --method fiedler --preweight --truth " + truth.string()).out);
  EXPECT_NEAR(pre["nmi"].get<double>(), 1.0, 1e-12);
  auto raw = nlohmann::json::parse(run("partition --builtin karate --method fiedler").out);
  EXPECT_LT(raw["nmi"].get<double>(), 1.0);
}

TEST_F(Cli, PartitionTwoCliques) {
  std::string text;
  for (int base : {0, 5})
    for (int a = 0; a < 5; ++a)
      for (int b = a + 1; b < 5; ++b) text += std::to_string(base + a) + " " + std::to_string(base + b) + "\n";
  text += "4 5\n";
  fs::path g = file("cliques.txt", text);
  fs::path parts = file("parts.txt");
  CliResult r = run("partition " + g.string() + " --method louvain -o " + parts.string());
  ASSERT_EQ(r.status, 0);
  std::istringstream lines(slurp(parts));
  std::string node;
  int label;
  std::set<int> labels;
  while (lines >> node >> label) labels.insert(label);
  EXPECT_EQ(labels.size(), 2u);
  auto score = nlohmann::json::parse(r.out);
  EXPECT_FALSE(score.contains("nmi"));
  EXPECT_TRUE(score.contains("modularity"));
}

TEST_F(Cli, PartitionFromLfrFiles) {
  fs::path net = file("network.dat", "1 2\n2 1\n2 3\n3 2\n1 3\n3 1\n4 5\n5 4\n5 6\n6 5\n4 6\n6 4\n3 4\n4 3\n");
  fs::path com = file("community.dat", "1 1\n2 1\n3 1\n4 2\n5 2\n6 2\n");
  auto score = nlohmann::json::parse(run("partition " + net.string() + " --lfr " + com.string() + " --method cnm").out);
  EXPECT_NEAR(score["nmi"].get<double>(), 1.0, 1e-12);
}

TEST_F(Cli, Benchmark) {
  CliResult r = run("benchmark --nodes 64 --blocks 4 --degree 5 --mixing 0.0,0.2 --seeds 3 --methods louvain,cnm");
  ASSERT_EQ(r.status, 0);
  std::istringstream lines(r.out);
  std::string line;
  std::getline(lines, line);
  EXPECT_EQ(line, "method,preweighted,mixing,seed,nmi");
  int rows = 0;
  while (std::getline(lines, line)) {
    ++rows;
    std::stringstream fields(line);
    std::string method, pre, mixing, seed, score;
    std::getline(fields, method, ',');
    std::getline(fields, pre, ',');
    std::getline(fields, mixing, ',');
    std::getline(fields, seed, ',');
    std::getline(fields, score, ',');
    if (mixing == "0") EXPECT_EQ(score, "1") << line;
  }
  EXPECT_EQ(rows, 2 * 2 * 2 * 3);
  EXPECT_EQ(run("benchmark --nodes 10 --blocks 3").status, 2);
  EXPECT_EQ(run("benchmark --methods magic --seeds 1").status, 2);
}

TEST_F(Cli, ExitCodes) {
  EXPECT_EQ(run("modulus " + (dir_ / "missing.txt").string()).status, 2);
  EXPECT_EQ(run("modulus " + file("bad.txt", "0 1 -3\n").string()).status, 2);
  EXPECT_EQ(run("modulus --builtin nope").status, 2);
  EXPECT_EQ(run("modulus").status, 2);
  EXPECT_EQ(run("").status, 2);
  EXPECT_EQ(run("modulus --tol abc --builtin karate").status, 2);
  EXPECT_EQ(run("partition " + file("two.txt", "0 1\n2 3\n").string() + " --method fiedler").status, 4);
  EXPECT_EQ(run("--help").status, 0);
}

TEST_F(Cli, Report) {
  fs::path report = file("report.json");
  ASSERT_EQ(run("modulus --builtin cycle --n 5 --report " + report.string()).status, 0);
  auto j = nlohmann::json::parse(slurp(report));
  for (const char* key : {"command", "input_hash", "config", "results", "wall_time_s"}) {
    EXPECT_TRUE(j.contains(key)) << key;
  }
  EXPECT_NEAR(j["results"]["mod"].get<double>(), 5.0 / 25.0, 1e-9);
}

TEST_F(Cli, RepeatedRunsAreIdentical) {
  for (const std::string args : {"modulus --builtin regular_random --n 30 --degree 3 --seed 4",
                                 "partition --builtin karate --method louvain --seed 5",
                                 "benchmark --nodes 32 --blocks 2 --mixing 0.2 --seeds 2"}) {
    EXPECT_EQ(run(args).out, run(args).out) << args;
  }
}
