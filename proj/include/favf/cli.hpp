// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "favf/backtest.hpp"
#include "favf/models.hpp"
#include "favf/nnet.hpp"
#include "favf/synth.hpp"

namespace favf::cli {

inline constexpr const char* kVersion = "0.1.0";

enum class Market { equity, crypto };

struct SynthSettings {
  std::size_t T = 730;
  std::size_t p = 5;
  int k_true = 1;
  double factor_mean = 0.03;
  double factor_persistence = 0.9;
  double factor_innovation = 0.004;
  double loading_drift = 0.002;
  double noise_scale = 0.002;
  double mean_reversion = 0.1;
  double spread_vol = 0.02;
  double random_walk_vol = 0.03;
  double hedge_beta = 1.2;
};

struct RunConfig {
  std::uint64_t seed = 42;
  Market market = Market::crypto;
  std::filesystem::path output_dir = "favf_out";

  // Inputs; empty paths mean "not provided".
  std::filesystem::path rv_panel;
  std::map<std::string, std::filesystem::path> quotes;  // asset -> quote CSV
  std::filesystem::path prices;
  std::filesystem::path forecasts;
  int utc_offset_minutes = 0;

  std::vector<int> horizons{1, 7};
  std::vector<std::string> models{"rw", "ar", "har", "midas"};
  bool augment = true;  // run augmented variants next to the plain ones
  bool pooled = false;
  double start_fraction = 0.5;  // first out-of-sample origin as a fraction of rows

  // Factor settings. policy "auto" is dominant at h = 1 and the market's
  // cumulative-variance target otherwise.
  std::size_t factor_window = 60;
  std::string factor_policy = "auto";
  double factor_threshold = 0.9;
  int factor_count = 0;

  models::MidasSpec midas;
  nnet::LstmConfig lstm;

  std::string benchmark = "ind";
  std::string dm_loss = "mse";

  std::optional<int> adf_max_lag;
  int johansen_lag = 1;
  std::vector<std::string> coint_assets;  // empty = all price columns

  std::vector<std::string> pair;               // two price columns, a then b
  std::vector<std::string> backtest_models{};  // empty = every forecast model
  backtest::BacktestConfig backtest;
  std::optional<int> backtest_window;  // overrides the per-model 70/30 default
  int backtest_horizon = 1;

  std::string synth_kind = "pipeline";  // factor | forecastable | pair | system | pipeline
  SynthSettings synth;

  /// Fields that were not given and took their default value.
  std::vector<std::string> defaulted;
  /// Set by the pipeline so derived stage configs keep the caller's hash.
  std::optional<std::string> pinned_hash;

  nlohmann::json to_json() const;
  /// Hash of the canonical configuration without the output directory.
  std::string hash() const;
};

/// Parses and validates a configuration document. Unknown fields and bad
/// values raise ConfigError naming the field.
RunConfig parse_config(const nlohmann::json& doc);
RunConfig load_config(const std::filesystem::path& path);

std::string fnv1a64_hex(const std::string& text);

/// First line of every CSV artifact.
std::string provenance_header(const RunConfig& config);

/// Writes into a staging directory under the output directory and moves
/// every file into place only when commit() is called.
class Staging {
 public:
  explicit Staging(std::filesystem::path output_dir);
  ~Staging();
  Staging(const Staging&) = delete;
  Staging& operator=(const Staging&) = delete;

  std::filesystem::path path(const std::string& name) const;
  void commit();

 private:
  std::filesystem::path out_;
  std::filesystem::path dir_;
  bool committed_ = false;
};

/// Subcommand bodies. Each writes its artifacts through `stage`.
void cmd_rv(const RunConfig& c, Staging& stage);
void cmd_factors(const RunConfig& c, Staging& stage);
void cmd_forecast(const RunConfig& c, Staging& stage);
void cmd_evaluate(const RunConfig& c, Staging& stage);
void cmd_coint(const RunConfig& c, Staging& stage);
void cmd_backtest(const RunConfig& c, Staging& stage);
void cmd_synth(const RunConfig& c, Staging& stage);
void cmd_pipeline(const RunConfig& c, Staging& stage);

/// Full entry point; returns the process exit code.
int run(int argc, char** argv);

}  // namespace favf::cli
