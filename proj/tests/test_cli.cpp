// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>

#include "favf/cli.hpp"
#include "favf/error.hpp"

namespace fs = std::filesystem;
using namespace favf;
using namespace favf::cli;
using nlohmann::json;

namespace {

int run_args(std::vector<std::string> args) {
  args.insert(args.begin(), "favf");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  return run(static_cast<int>(argv.size()), argv.data());
}

fs::path fresh_dir(const std::string& name) {
  const auto d = fs::temp_directory_path() / ("favf_cli_" + name);
  fs::remove_all(d);
  return d;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

std::string first_line(const fs::path& p) {
  std::ifstream in(p);
  std::string line;
  std::getline(in, line);
  return line;
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override { setenv("FAVF_LOG_LEVEL", "off", 1); }
};

}  // namespace

TEST_F(CliTest, DefaultsAreRecorded) {
  const auto c = parse_config(json::object());
  EXPECT_EQ(c.seed, 42u);
  EXPECT_EQ(c.horizons, (std::vector<int>{1, 7}));
  EXPECT_FALSE(c.defaulted.empty());
  EXPECT_NE(std::find(c.defaulted.begin(), c.defaulted.end(), "seed"), c.defaulted.end());
}

TEST_F(CliTest, UnknownAndInvalidFieldsAreConfigErrors) {
  EXPECT_THROW(parse_config(json{{"sed", 1}}), ConfigError);
  EXPECT_THROW(parse_config(json{{"forecast", {{"horizon", 1}}}}), ConfigError);
  EXPECT_THROW(parse_config(json{{"market", "fx"}}), ConfigError);
  EXPECT_THROW(parse_config(json{{"forecast", {{"models", {"garch"}}}}}), ConfigError);
  EXPECT_THROW(parse_config(json{{"inputs", {{"rv_panel", "/no/such/file.csv"}}}}), ConfigError);
  EXPECT_THROW(parse_config(json{{"backtest", {{"entry_z", 0.0}}}}), ConfigError);
  EXPECT_THROW(parse_config(json{{"seed", "abc"}}), ConfigError);
}

TEST_F(CliTest, HashIgnoresOutputDirectory) {
  const auto a = parse_config(json{{"output_dir", "x"}, {"seed", 3}});
  const auto b = parse_config(json{{"output_dir", "y"}, {"seed", 3}});
  const auto c = parse_config(json{{"output_dir", "x"}, {"seed", 4}});
  EXPECT_EQ(a.hash(), b.hash());
  EXPECT_NE(a.hash(), c.hash());
  EXPECT_EQ(a.hash().size(), 16u);
  EXPECT_EQ(provenance_header(a), "# favf version=0.1.0 config_hash=" + a.hash() + " seed=3\n");
}

TEST_F(CliTest, Fnv1aReferenceValues) {
  EXPECT_EQ(fnv1a64_hex(""), "cbf29ce484222325");
  EXPECT_EQ(fnv1a64_hex("a"), "af63dc4c8601ec8c");
}

TEST_F(CliTest, StagingCommitsOnlyOnRequest) {
  const auto out = fresh_dir("staging");
  {
    Staging s(out);
    std::ofstream(s.path("a.csv")) << "x\n";
  }
  EXPECT_FALSE(fs::exists(out / "a.csv"));
  {
    Staging s(out);
    std::ofstream(s.path("a.csv")) << "y\n";
    s.commit();
  }
  EXPECT_EQ(slurp(out / "a.csv"), "y\n");
  EXPECT_FALSE(fs::exists(out / ".favf-staging"));
  fs::remove_all(out);
}

TEST_F(CliTest, ExitCodes) {
  EXPECT_EQ(run_args({"--help"}), 0);
  EXPECT_EQ(run_args({}), 2);
  EXPECT_EQ(run_args({"nonsense"}), 2);
  EXPECT_EQ(run_args({"forecast", "--rv-panel", "/no/such.csv", "--out", fresh_dir("x").string()}), 2);
  EXPECT_EQ(run_args({"coint", "--out", fresh_dir("noprices").string()}), 2);

  // Constant prices are a computation error, not a usage error.
  const auto prices = fresh_dir("flat_prices.csv");
  {
    std::ofstream out(prices);
    out << "date,A,B\n";
    for (int d = 1; d <= 28; ++d) out << "2021-02-" << (d < 10 ? "0" : "") << d << ",10,20\n";
    for (int d = 1; d <= 31; ++d) out << "2021-03-" << (d < 10 ? "0" : "") << d << ",10,20\n";
    for (int d = 1; d <= 30; ++d) out << "2021-04-" << (d < 10 ? "0" : "") << d << ",10,20\n";
  }
  const auto out = fresh_dir("flat_out");
  EXPECT_EQ(run_args({"coint", "--prices", prices.string(), "--out", out.string()}), 1);
  EXPECT_FALSE(fs::exists(out / "coint.json"));
  fs::remove(prices);
  fs::remove_all(out);
}

TEST_F(CliTest, StagedCommandsChain) {
  const auto out = fresh_dir("chain");
  const auto cfg = out.string() + ".json";
  std::ofstream(cfg) << R"({"synth": {"kind": "pipeline", "T": 400}, "forecast": {"models": ["rw", "ar", "har"]}})";
  ASSERT_EQ(run_args({"synth", "-c", cfg, "--out", out.string()}), 0);
  ASSERT_TRUE(fs::exists(out / "rv_panel.csv"));
  ASSERT_TRUE(fs::exists(out / "prices.csv"));
  ASSERT_TRUE(fs::exists(out / "truth.json"));
  const auto rv = (out / "rv_panel.csv").string();
  const auto prices = (out / "prices.csv").string();

  ASSERT_EQ(run_args({"factors", "-c", cfg, "--rv-panel", rv, "--out", out.string()}), 0);
  EXPECT_TRUE(fs::exists(out / "loadings.csv"));
  ASSERT_EQ(run_args({"forecast", "-c", cfg, "--rv-panel", rv, "--horizon", "1", "--out", out.string()}), 0);
  const auto fc = (out / "forecasts.csv").string();
  ASSERT_EQ(run_args({"evaluate", "-c", cfg, "--forecasts", fc, "--out", out.string()}), 0);
  ASSERT_EQ(run_args({"coint", "-c", cfg, "--prices", prices, "--out", out.string()}), 0);
  ASSERT_EQ(run_args({"backtest", "-c", cfg, "--prices", prices, "--forecasts", fc, "--out", out.string()}), 0);

  const auto header = first_line(out / "metrics.csv");
  EXPECT_EQ(header.rfind("# favf version=0.1.0 config_hash=", 0), 0u);
  const auto coint = json::parse(slurp(out / "coint.json"));
  EXPECT_TRUE(coint.contains("johansen"));
  EXPECT_TRUE(fs::exists(out / "backtest_ar-aug.json"));
  EXPECT_TRUE(fs::exists(out / "backtest_metrics.csv"));
  for (const auto& e : fs::directory_iterator(out)) {
    if (e.path().extension() == ".csv") {
      EXPECT_EQ(first_line(e.path()).rfind("# favf", 0), 0u) << e.path();
    }
  }
  fs::remove_all(out);
  fs::remove(cfg);
}
