#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include "v2x/errors.hpp"
#include "v2x/experiment.hpp"

using namespace v2x;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("v2x_test_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::vector<std::string>> rows(const std::string& csv) {
  std::vector<std::vector<std::string>> out;
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::istringstream ls(line);
    std::string c;
    while (std::getline(ls, c, ',')) cells.push_back(c);
    out.push_back(cells);
  }
  return out;
}

void expect_config_error(const std::string& text, const std::string& key) {
  try {
    parse_config(text);
    FAIL() << "accepted: " << text;
  } catch (const ConfigError& e) {
    EXPECT_EQ(std::string(e.what()).rfind(key + ":", 0), 0u) << e.what();
  }
}

ExperimentSpec small_spec(Scheme s, const fs::path& dir) {
  ExperimentSpec spec;
  spec.scheme = s;
  spec.sim.num_v2i = 2;
  spec.sim.num_v2v = 2;
  spec.sim.num_vehicles = 4;
  spec.eval_episodes = 5;
  spec.reward.calibration_steps = 100;
  spec.output_dir = dir.string();
  return spec;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(V2X_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(Config, EmptyDocumentGivesDefaults) {
  EXPECT_EQ(parse_config(""), ExperimentSpec{});
  EXPECT_EQ(parse_config("  \n"), ExperimentSpec{});
  EXPECT_EQ(parse_config("{}"), ExperimentSpec{});
  const ExperimentSpec d;
  EXPECT_EQ(d.sim.num_v2i, 4);
  EXPECT_EQ(d.sim.num_v2v, 4);
  EXPECT_EQ(d.payload_sizes_bytes(), (std::vector<int>{1060, 2120, 3180, 4240, 5300, 6360}));
}

TEST(Config, ErrorsNameTheKey) {
  expect_config_error(R"({"m_links": 0})", "m_links");
  expect_config_error(R"({"k_links": -1})", "k_links");
  expect_config_error(R"({"not_a_key": 1})", "not_a_key");
  expect_config_error(R"({"m_links": "four"})", "m_links");
  expect_config_error(R"({"eval_episodes": 0})", "eval_episodes");
  expect_config_error(R"({"scheme": "greedy"})", "scheme");
  expect_config_error(R"({"v2v_power_levels_dbm": [23, 10]})", "v2v_power_levels_dbm");
  expect_config_error(R"({"time_budget_ms": 10, "step_ms": 3})", "time_budget_ms");
  EXPECT_THROW(parse_config("{ not json"), ConfigError);
  EXPECT_THROW(parse_config("[1, 2]"), ConfigError);
}

TEST(Config, DumpParseRoundTrip) {
  ExperimentSpec s;
  s.scheme = Scheme::max_v2v;
  s.sim.num_v2i = 2;
  s.sim.carrier_ghz = 5.9;
  s.sim.early_exit = true;
  s.train.hidden_layers = {64, 32};
  s.reward.beta = 1.25e7;
  s.payload_multipliers = {2, 4};
  s.seed = 123456789012345ULL;
  s.output_dir = "somewhere/else";
  EXPECT_EQ(parse_config(dump_config(s)), s);
  EXPECT_EQ(parse_config(dump_config(ExperimentSpec{})), ExperimentSpec{});
}

TEST(Config, LoadsFromFile) {
  const fs::path dir = scratch("load");
  fs::create_directories(dir);
  std::ofstream(dir / "c.json") << R"({"k_links": 2, "seed": 9})";
  const ExperimentSpec s = load_config(dir / "c.json");
  EXPECT_EQ(s.sim.num_v2v, 2);
  EXPECT_EQ(s.seed, 9u);
  EXPECT_THROW(load_config(dir / "missing.json"), ConfigError);
  fs::remove_all(dir);
}

TEST(Csv, MetricsUseFullPrecision) {
  PayloadMetrics m;
  m.scheme = "random";
  m.payload_bytes = 1060;
  m.episodes = 3;
  m.v2i_sum_capacity_mean = 0.1;
  m.delivery_probability = 1.0 / 3.0;
  const std::string csv = metrics_csv({m});
  EXPECT_EQ(csv.rfind(kMetricsHeader, 0), 0u);
  EXPECT_NE(csv.find("0.10000000000000001"), std::string::npos);
  EXPECT_NE(csv.find("0.33333333333333331"), std::string::npos);
}

TEST(Svg, IsStandaloneDocument) {
  const std::string svg = svg_line_chart("t", "x", "y", {{"a", {0, 1, 2}, {1, 4, 9}}});
  EXPECT_EQ(svg.rfind("<svg", 0), 0u);
  EXPECT_NE(svg.find("</svg>"), std::string::npos);
  EXPECT_NE(svg.find("polyline"), std::string::npos);
}

TEST(Sweep, NoV2VDeliversNothingAtEveryPayload) {
  const fs::path dir = scratch("nov2v");
  ExperimentSpec spec = small_spec(Scheme::no_v2v, dir);
  const ExperimentResult r = run_experiment(spec);
  ASSERT_EQ(r.metrics.size(), 6u);
  for (const auto& m : r.metrics) EXPECT_EQ(m.delivery_probability, 0.0);
  const auto table = rows(slurp(dir / "metrics.csv"));
  ASSERT_EQ(table.size(), 6u);
  for (std::size_t i = 0; i < 6; ++i) {
    EXPECT_EQ(table[i][0], "nov2v");
    EXPECT_EQ(std::stoi(table[i][1]), 1060 * static_cast<int>(i + 1));
    EXPECT_EQ(std::stod(table[i][5]), 0.0);
  }
  for (const char* f : {"config.json", "reward.json", "metrics_v2i.svg", "metrics_delivery.svg",
                        "traces/nov2v_1060.csv", "traces/nov2v_6360.csv"})
    EXPECT_TRUE(fs::exists(dir / f)) << f;
  fs::remove_all(dir);
}

TEST(Sweep, RerunIsByteIdentical) {
  const fs::path a = scratch("det_a");
  const fs::path b = scratch("det_b");
  ExperimentSpec spec = small_spec(Scheme::random, a);
  spec.payload_multipliers = {1, 3};
  run_experiment(spec);
  spec.output_dir = b.string();
  run_experiment(spec);
  EXPECT_EQ(slurp(a / "metrics.csv"), slurp(b / "metrics.csv"));
  EXPECT_EQ(slurp(a / "traces/random_3180.csv"), slurp(b / "traces/random_3180.csv"));
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST(Sweep, DeliveryRecomputedFromTraceMatchesMetrics) {
  const fs::path dir = scratch("trace");
  ExperimentSpec spec = small_spec(Scheme::random, dir);
  spec.payload_multipliers = {2, 5};
  const ExperimentResult r = run_experiment(spec);
  for (std::size_t i = 0; i < r.metrics.size(); ++i) {
    const int bytes = r.metrics[i].payload_bytes;
    const auto trace = rows(slurp(dir / "traces" / ("random_" + std::to_string(bytes) + ".csv")));
    ASSERT_EQ(trace.size(), 5u * 100u * 2u);
    int delivered = 0, links = 0;
    for (const auto& row : trace) {
      if (std::stoi(row[1]) != 99) continue;
      ++links;
      if (std::stod(row[6]) == 0.0) ++delivered;
    }
    EXPECT_EQ(links, 10);
    EXPECT_EQ(delivered / static_cast<double>(links), r.metrics[i].delivery_probability);
  }
  fs::remove_all(dir);
}

TEST(Sweep, TrainThenEvaluateReusesCheckpoints) {
  const fs::path dir = scratch("stages");
  ExperimentSpec spec = small_spec(Scheme::marl, dir);
  spec.train.total_episodes = 3;
  spec.train.anneal_episodes = 2;
  spec.train.hidden_layers = {16};
  spec.payload_multipliers = {1};
  const ExperimentResult trained = run_experiment(spec, Stage::train);
  EXPECT_EQ(trained.training_log.size(), 3u);
  EXPECT_TRUE(fs::exists(dir / "checkpoints/agent_0.qnet"));
  EXPECT_TRUE(fs::exists(dir / "checkpoints/agent_1.qnet"));
  EXPECT_TRUE(fs::exists(dir / "training_log.csv"));
  EXPECT_FALSE(fs::exists(dir / "metrics.csv"));
  const ExperimentResult evaluated = run_experiment(spec, Stage::evaluate);
  EXPECT_EQ(evaluated.reward, trained.reward);
  ASSERT_EQ(evaluated.metrics.size(), 1u);

  const fs::path full_dir = scratch("stages_full");
  spec.output_dir = full_dir.string();
  const ExperimentResult full = run_experiment(spec);
  EXPECT_EQ(full.metrics, evaluated.metrics);
  fs::remove_all(dir);
  fs::remove_all(full_dir);
}

TEST(Sweep, FailedRunLeavesNoArtifacts) {
  const fs::path dir = scratch("rollback");
  ExperimentSpec spec = small_spec(Scheme::marl, dir / "nested");
  EXPECT_ANY_THROW(run_experiment(spec, Stage::evaluate));  // no checkpoints to read
  EXPECT_FALSE(fs::exists(dir));

  // An exhaustive search that is too large fails before any metrics exist.
  ExperimentSpec big = small_spec(Scheme::max_v2v, dir);
  big.sim.num_v2i = 4;
  big.sim.num_v2v = 8;
  big.sim.num_vehicles = 10;
  EXPECT_THROW(run_experiment(big), CapacityError);
  EXPECT_FALSE(fs::exists(dir));
}

TEST(Cli, ExitCodes) {
  const fs::path dir = scratch("cli");
  fs::create_directories(dir);
  std::ofstream(dir / "bad.json") << R"({"m_links": 0})";
  std::ofstream(dir / "big.json") << R"({"m_links": 4, "k_links": 8, "num_vehicles": 10, "eval_episodes": 1})";
  std::ofstream(dir / "ok.json") << R"({"m_links": 2, "k_links": 2, "num_vehicles": 4, "eval_episodes": 2,
                                       "calibration_steps": 50})";
  const std::string out = " --out " + (dir / "out").string();
  EXPECT_EQ(run_cli("baseline --scheme nov2v --payload-multiplier 1 --config " + (dir / "ok.json").string() + out), 0);
  EXPECT_EQ(run_cli("baseline --scheme random --config " + (dir / "bad.json").string() + out), 2);
  EXPECT_EQ(run_cli("baseline --scheme greedy" + out), 2);
  EXPECT_EQ(run_cli("baseline --scheme marl" + out), 2);
  EXPECT_EQ(run_cli("train --scheme random" + out), 2);
  EXPECT_EQ(run_cli("baseline --scheme maxv2v --config " + (dir / "big.json").string() + out), 3);
  EXPECT_EQ(run_cli("frobnicate"), 2);
  EXPECT_EQ(run_cli("validate-channel --episodes 200000"), 0);
  fs::remove_all(dir);
}
