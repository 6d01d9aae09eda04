#include <gtest/gtest.h>

#include <sys/wait.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "mcls/cli.hpp"

using namespace mcls;
using namespace mcls::cli;

namespace {

std::string csv(const ResultTable& t) {
  std::ostringstream os;
  write_csv(os, t);
  return os.str();
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(MCLS_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

std::filesystem::path scratch(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "mcls_cli_test";
  std::filesystem::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST(SinIntegral, ClosedFormSmallDimensions) {
  EXPECT_NEAR(sin_sum_integral(1), 0.4596976941318602826, 1e-15);
  EXPECT_NEAR(sin_sum_integral(2), 0.77364454279011131791, 1e-15);
  EXPECT_NEAR(sin_sum_integral(10), -0.62993525905472629936, 1e-14);
}

TEST(Config, ParsesKeyValueFiles) {
  std::istringstream in("# comment\nseed = 7\n\n d = 3   # trailing\nn_grid=100, 1e3\n");
  const auto kv = parse_key_values(in);
  EXPECT_EQ(kv.at("seed"), "7");
  EXPECT_EQ(kv.at("d"), "3");
  ExperimentConfig c = default_config(Experiment::integrate);
  apply_overrides(c, kv);
  EXPECT_EQ(c.seed, 7u);
  EXPECT_EQ(c.d, 3u);
  EXPECT_EQ(c.n_grid, (std::vector<std::size_t>{100, 1000}));
  std::istringstream bad("no equals sign\n");
  EXPECT_THROW(parse_key_values(bad), ConfigError);
}

TEST(Config, RejectsBadValues) {
  ExperimentConfig c = default_config(Experiment::price);
  EXPECT_THROW(apply_overrides(c, {{"bogus", "1"}}), ConfigError);
  EXPECT_THROW(apply_overrides(c, {{"seed", "-3"}}), ConfigError);
  EXPECT_THROW(apply_overrides(c, {{"solver", "lu"}}), ConfigError);
  EXPECT_THROW(apply_overrides(c, {{"n_grid", "100,50"}}), ConfigError);
  EXPECT_THROW(apply_overrides(c, {{"maturity", "0"}}), ConfigError);
  EXPECT_THROW(apply_overrides(c, {{"model", "sabr"}}), ConfigError);
}

TEST(Config, CanonicalTextDeterminesHash) {
  ExperimentConfig a = default_config(Experiment::integrate);
  ExperimentConfig b = default_config(Experiment::integrate);
  EXPECT_EQ(config_hash(a), config_hash(b));
  b.out = "elsewhere.csv";
  EXPECT_EQ(config_hash(a), config_hash(b));
  b.seed += 1;
  EXPECT_NE(config_hash(a), config_hash(b));
  EXPECT_NE(default_config(Experiment::integrate).seed, default_config(Experiment::price).seed);
}

TEST(Config, ShortestRoundTripFormatting) {
  for (double v : {0.1, 1.0 / 3.0, 1e-300, 123456789.0, -2.5}) EXPECT_EQ(std::strtod(fmt(v).c_str(), nullptr), v);
  EXPECT_EQ(fmt(0.1), "0.1");
}

TEST(Experiments, IntegrateReplayIsBitIdentical) {
  ExperimentConfig c = default_config(Experiment::integrate);
  apply_overrides(c, {{"n_grid", "200,400"}, {"degree", "0,2"}});
  const std::string a = csv(run_experiment(c));
  const std::string b = csv(run_experiment(c));
  EXPECT_EQ(a, b);
  EXPECT_NE(a.find("config_hash"), std::string::npos);
}

TEST(Experiments, SinBenchmarkRowsHaveExpectedShape) {
  ExperimentConfig c = default_config(Experiment::sin_benchmark);
  apply_overrides(c, {{"n_grid", "500,2000"}, {"d", "2"}, {"degree", "3"}});
  const ResultTable t = run_experiment(c);
  ASSERT_EQ(t.rows.size(), 2u);
  EXPECT_EQ(t.header.size(), t.rows[0].size());
  EXPECT_TRUE(t.all_converged);
  const double mcls_err = std::stod(t.rows[1][6]);
  const double mc_err = std::stod(t.rows[1][7]);
  EXPECT_LT(mcls_err, mc_err);
}

TEST(Experiments, CostCurveIncludesMcAndSchedules) {
  ExperimentConfig c = default_config(Experiment::cost_curve);
  apply_overrides(c, {{"n_grid", "400"}, {"fixed_n", "10"}});
  const ResultTable t = run_experiment(c);
  ASSERT_EQ(t.rows.size(), 4u);
  EXPECT_EQ(std::count(t.header.begin(), t.header.end(), "flops"), 1);
  for (const auto& row : t.rows) EXPECT_EQ(row.size(), t.header.size());
  EXPECT_EQ(t.rows[0][1], "mc");
  EXPECT_EQ(t.rows[0][3], "400");
  EXPECT_EQ(t.rows[1][2], "10");
  EXPECT_EQ(t.rows[2][2], "20");
  EXPECT_EQ(t.rows[3][2], std::to_string(static_cast<std::size_t>(400.0 / std::log(400.0))));
}

TEST(Experiments, PriceBlackScholesCall) {
  ExperimentConfig c = default_config(Experiment::price);
  apply_overrides(c, {{"model", "bs"}, {"n_grid", "2000"}, {"degree", "3"}, {"maturity", "1"}});
  const ResultTable t = run_experiment(c);
  ASSERT_EQ(t.rows.size(), 1u);
  EXPECT_NEAR(std::stod(t.rows[0][3]), 0.08433318690109609, 1e-12);
  EXPECT_LT(std::stod(t.rows[0][4]), 5e-3);
}

TEST(Experiments, UnknownFunctionIsConfigError) {
  EXPECT_THROW(cube_integrand("tan", 2), ConfigError);
}

TEST(Binary, WritesCsvAndManifest) {
  const auto out = scratch("int.csv");
  ASSERT_EQ(run_cli("integrate --n-grid 100,200 --degree 1 --seed 5 --out " + out.string()), 0);
  const std::string body = read_file(out);
  const std::string manifest = read_file(out.string() + ".manifest");
  EXPECT_EQ(body.substr(0, 2), "N,");
  EXPECT_NE(manifest.find("seed=5"), std::string::npos);
  EXPECT_NE(manifest.find("git_describe="), std::string::npos);

  // Replaying with the same flags reproduces the CSV byte for byte.
  const auto again = scratch("int2.csv");
  ASSERT_EQ(run_cli("integrate --n-grid 100,200 --degree 1 --seed 5 --out " + again.string()), 0);
  EXPECT_EQ(read_file(again), body);
}

TEST(Binary, ConfigFileAndOverrides) {
  const auto cfg = scratch("run.cfg");
  {
    std::ofstream os(cfg);
    os << "function = poly\nd = 2\nn_grid = 50\ndegree = 2\n";
  }
  const auto out = scratch("cfg.csv");
  ASSERT_EQ(run_cli("integrate --config " + cfg.string() + " --seed 3 --out " + out.string()), 0);
  const std::string body = read_file(out);
  EXPECT_NE(body.find("50,2,5,"), std::string::npos);
}

TEST(Binary, ExitCodes) {
  EXPECT_EQ(run_cli("integrate --solver lu"), 2);
  EXPECT_EQ(run_cli("integrate --n-grid 10,5"), 2);
  EXPECT_EQ(run_cli("integrate --config /nonexistent/file.cfg"), 2);
  EXPECT_EQ(run_cli("integrate --set nonsense=1"), 2);
  EXPECT_EQ(run_cli("integrate --solver qr --storable-limit 10 --n-grid 200 --degree 2"), 2);
  // REK capped at 10 iterations stops before its convergence check.
  EXPECT_EQ(run_cli("integrate --solver rek --n-grid 300 --degree 3 --set rek_eps=1e-300 --set rek_max_iterations=10"),
            3);
  EXPECT_EQ(run_cli("sin-benchmark --n-grid 200 --degree 1 --out " + scratch("ok.csv").string()), 0);
}
