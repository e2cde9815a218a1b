#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "stformer/data.hpp"
#include "stformer/evaluate.hpp"
#include "stformer/model_config.hpp"
#include "stformer/train.hpp"

namespace stformer {

struct DataConfig {
  std::string source = "synth";  // "csv" or "synth"
  std::string path;              // csv only
  std::string synth_kind = "sines";
  std::size_t variables = 7;     // synth only
  std::size_t length = 2000;     // synth only
  double noise = 0.05;
  double coupling = 0.1;
  double train_ratio = 0.7;
  double val_ratio = 0.1;
  double test_ratio = 0.2;
  std::size_t max_rows = 0;   // 0 reads every row
  std::size_t frequency = 0;  // 0 infers the seasonal period from the timestamps
};

struct EvalConfig {
  std::string split = "test";
  MetricScale scale = MetricScale::Normalized;
  /// Horizons trained and scored, one model each; empty means {model.K}.
  std::vector<std::size_t> horizons;
  bool m4_metrics = true;
  OwaBaseline baseline = OwaBaseline::SeasonalNaive;
};

/// Everything a run depends on. A single seed drives data synthesis,
/// parameter initialization, shuffling and dropout.
struct RunConfig {
  std::uint64_t seed = 0;
  DataConfig data;
  ModelConfig model;
  TrainConfig train;
  EvalConfig eval;

  nlohmann::json to_json() const;
  /// Strict parse: every key must be known. Missing keys keep their defaults.
  /// Throws ConfigError naming an unknown key and the closest valid one.
  static RunConfig from_json(const nlohmann::json& j);
  /// Reads a JSON config file; a missing or malformed file is a ConfigError.
  static RunConfig from_file(const std::filesystem::path& path);
  /// Every settable dotted key: "seed", "data.path", "model.F", ...
  static std::vector<std::string> keys();

  /// Sets one dotted field ("model.F", "train.lr", "seed") from its text form.
  void set(std::string_view key, std::string_view value);

  /// Copies the seed into the model and train sections and validates all of them.
  void resolve();

  SplitRatios ratios() const { return {data.train_ratio, data.val_ratio, data.test_ratio}; }
  Split eval_split() const;
  std::vector<std::size_t> eval_horizons() const;
  EvalOptions eval_options() const;
  /// Loads or synthesizes the dataset and checks it against model.M.
  ForecastDataset load_dataset() const;
};

nlohmann::json model_config_json(const ModelConfig& cfg);
/// Throws ConfigError on unknown keys, like RunConfig::from_json.
ModelConfig model_config_from_json(const nlohmann::json& j);

/// Edit distance between two keys.
std::size_t levenshtein(std::string_view a, std::string_view b);
/// Closest candidate by edit distance; empty when `candidates` is empty.
std::string nearest_key(std::string_view key, const std::vector<std::string>& candidates);

}  // namespace stformer
