#include <gtest/gtest.h>

#include <sstream>

#include "dsvd/experiment/runner.hpp"

using namespace dsvd;
using namespace dsvd::experiment;

namespace {

const char* kLocalizePaper = R"(
experiment = localize
seed = 1
trials = 100
[network]
nodes = 30
[consensus]
engine = ps
iterations = 30
[svt]
tau = 150
mu = 1.5
iterations = 200
[localize]
anchors = 5
missing = 0.1
)";

ExperimentConfig load_ok(const std::string& text) {
  const auto loaded = load_config(parse_config_text(text));
  EXPECT_TRUE(loaded.ok()) << (loaded.violations.empty() ? "" : loaded.violations.front());
  return loaded.config;
}

std::string csv_of(const RunOutput& out) {
  std::ostringstream s;
  write_csv(s, out.table);
  return s.str();
}

}  // namespace

TEST(Config, SectionsAndDottedKeysAgree) {
  const auto a = parse_config_text("[svt]\nmu = 2.5\n");
  const auto b = parse_config_text("svt.mu = 2.5\n");
  EXPECT_EQ(a, b);
  EXPECT_EQ(a.at("svt.mu"), "2.5");
}

TEST(Config, ListsAndComments) {
  const auto raw = parse_config_text("# comment\n; another\nsweep.d = 4, 9, 19\n");
  const auto cfg = load_config(raw).config;
  EXPECT_EQ(cfg.sweep.d, (std::vector<std::size_t>{4, 9, 19}));
}

TEST(Config, RepeatedScalarKeyIsAViolation) {
  // a repeated key accumulates values, which a scalar field then rejects
  const auto v = validate(parse_config_text("experiment = svd1\nseed = 1\nseed = 2\n"));
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0].rfind("seed:", 0), 0u);
}

TEST(Validate, PaperLocalizationDefaultsAreValid) {
  EXPECT_TRUE(validate(parse_config_text(kLocalizePaper)).empty());
}

TEST(Validate, NonPositiveStepSizeIsOneViolation) {
  auto raw = parse_config_text(kLocalizePaper);
  raw["svt.mu"] = "0";
  const auto v = validate(raw);
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0].rfind("svt.mu:", 0), 0u);
  raw["svt.mu"] = "-1.5";
  EXPECT_EQ(validate(raw).size(), 1u);
}

TEST(Validate, TruncationAtNodeCountIsOneViolation) {
  auto raw = parse_config_text(kLocalizePaper);
  raw["backend.algorithm"] = "dtra";
  raw["backend.d"] = "30";
  const auto v = validate(raw);
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0].rfind("backend.d:", 0), 0u);
}

TEST(Validate, ReportsEveryProblemWithItsKey) {
  const auto v = validate(parse_config_text("experiment = svd9\ntrials = many\nbogus = 1\n"));
  std::vector<std::string> keys;
  for (const auto& s : v) keys.push_back(s.substr(0, s.find(':')));
  EXPECT_NE(std::find(keys.begin(), keys.end(), "experiment"), keys.end());
  EXPECT_NE(std::find(keys.begin(), keys.end(), "seed"), keys.end());
  EXPECT_NE(std::find(keys.begin(), keys.end(), "trials"), keys.end());
  EXPECT_NE(std::find(keys.begin(), keys.end(), "bogus"), keys.end());
}

TEST(Validate, IterativeEngineNeedsIterations) {
  const auto v = validate(parse_config_text("experiment = svd2\nseed = 1\nconsensus.engine = ps\n"));
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0].rfind("consensus.iterations:", 0), 0u);
}

TEST(Validate, RejectsNegativeUnsigned) {
  const auto v = validate(parse_config_text("experiment = svd2\nseed = 1\nnetwork.nodes = -3\n"));
  ASSERT_FALSE(v.empty());
  EXPECT_EQ(v[0].rfind("network.nodes:", 0), 0u);
}

TEST(Runner, NumberFormatIsFixed) {
  EXPECT_EQ(format_number(0.1), "1.0000000000000001e-01");
  EXPECT_EQ(format_number(-2.5e-300), "-2.5000000000000000e-300");
}

TEST(Runner, EmptyTrialsGiveHeaderOnly) {
  const auto cfg = load_ok("experiment = svd1\nseed = 1\ntrials = 0\n");
  EXPECT_EQ(csv_of(run_experiment(cfg)),
            "trial,seed,algorithm,nodes,samples,d,sigma_rel_error,lowrank_rel_error,consensus_instances\n");
}

TEST(Runner, Svd1MatchesOracleAndCostFormula) {
  const auto cfg = load_ok("experiment = svd1\nseed = 4\ntrials = 3\nnetwork.nodes = 8\nsamples = 32\n");
  const auto out = run_experiment(cfg);
  ASSERT_EQ(out.table.rows.size(), 3u);
  for (const auto& row : out.table.rows) {
    EXPECT_LE(std::stod(row[out.table.column("sigma_rel_error")]), 1e-7);
    EXPECT_EQ(row[out.table.column("consensus_instances")], "512");  // 2NT
  }
}

TEST(Runner, Svd1PowerMethodCost) {
  const auto cfg = load_ok(
      "experiment = svd1\nseed = 4\ntrials = 1\nnetwork.nodes = 6\nsamples = 9\n"
      "backend.algorithm = dpm\nbackend.power_iterations = 3\n");
  const auto out = run_experiment(cfg);
  // N(TP+T+2) + PN(N-1)/2 + NT
  EXPECT_EQ(out.table.rows[0][out.table.column("consensus_instances")], std::to_string(6 * (27 + 9 + 2) + 45 + 54));
}

TEST(Runner, Svd2CostsPerBackend) {
  for (auto [alg, cost] : {std::pair{"dra", "205"}, {"dtra", "40"}, {"dpm", "130"}}) {
    const auto cfg = load_ok(std::string("experiment = svd2\nseed = 2\ntrials = 2\nsamples = 5\nbackend.algorithm = ") +
                             alg + "\n");
    const auto out = run_experiment(cfg);
    for (const auto& row : out.table.rows) EXPECT_EQ(row.back(), cost) << alg;
  }
}

TEST(Runner, RadarRowsCarryPerDetectionCost) {
  const auto cfg = load_ok(
      "experiment = radar_roc\nseed = 3\ntrials = 4\nconsensus.engine = ps\nconsensus.iterations = 100\n");
  const auto out = run_experiment(cfg);
  ASSERT_EQ(out.table.rows.size(), 4u * 2u * 4u);
  const std::map<std::string, std::string> cost = {{"centralized", "0"}, {"dra", "205"}, {"dtra", "40"}, {"dpm", "130"}};
  for (const auto& row : out.table.rows) EXPECT_EQ(row.back(), cost.at(row[2]));
}

TEST(Runner, SweepRowsPerDimension) {
  const auto cfg = load_ok(
      "experiment = truncation_sweep\nseed = 3\ntrials = 2\nnetwork.nodes = 12\nsamples = 40\nsweep.d = 4, 6\n"
      "sweep.delta = 0.01\n");
  const auto out = run_experiment(cfg);
  ASSERT_EQ(out.table.rows.size(), 4u);
  EXPECT_EQ(out.table.rows[1][3], "6");
  EXPECT_EQ(out.table.rows[1].back(), std::to_string(7 * 40));  // (d+1)T
  for (const auto& row : out.table.rows) EXPECT_LE(std::stod(row[4]), 1e-8);
}

TEST(Runner, ByteIdenticalAcrossThreadCounts) {
  const std::string base = "experiment = svd2\nseed = 8\ntrials = 6\nconsensus.engine = ps\nconsensus.iterations = 100\n";
  const auto one = load_ok(base + "threads = 1\n");
  const auto many = load_ok(base + "threads = 3\n");
  EXPECT_EQ(csv_of(run_experiment(one)), csv_of(run_experiment(many)));
}

TEST(Runner, LocalizeSmallRun) {
  const auto cfg = load_ok(
      "experiment = localize\nseed = 5\ntrials = 2\nnetwork.nodes = 16\nconsensus.engine = exact\n"
      "svt.iterations = 60\nlocalize.area = 5\n");
  const auto out = run_experiment(cfg);
  ASSERT_EQ(out.table.rows.size(), 2u);
  for (const auto& row : out.table.rows) EXPECT_LT(std::stod(row[out.table.column("eps_r")]), 0.5);
}

TEST(Runner, TrialFailureSurfaces) {
  EXPECT_THROW(run_trials<int>(4, 2, [](int k) -> int {
                 if (k == 2) throw NumericalError("boom");
                 return k;
               }),
               NumericalError);
}
