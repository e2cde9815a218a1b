#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "stformer/data.hpp"
#include "stformer/model.hpp"
#include "stformer/train.hpp"

namespace stformer {

/// Maps a raw lookback window [M x T] to a raw forecast [M x K].
using Forecaster = std::function<Tensor(const Tensor& x_raw, std::size_t K)>;

enum class MetricScale { Normalized, Raw };
/// Reference forecaster of the OWA ratios.
enum class OwaBaseline { SeasonalNaive, Naive };

std::string_view metric_scale_name(MetricScale s);
MetricScale parse_metric_scale(std::string_view name);
std::string_view owa_baseline_name(OwaBaseline b);
OwaBaseline parse_owa_baseline(std::string_view name);

struct EvalOptions {
  Split split = Split::Test;
  /// Scale of mse and mae. smape, mase and owa always use raw values.
  MetricScale scale = MetricScale::Normalized;
  std::size_t stride = 1;
  bool m4_metrics = true;
  OwaBaseline baseline = OwaBaseline::SeasonalNaive;
};

struct HorizonMetrics {
  std::size_t horizon = 0;
  std::size_t windows = 0;
  double mse = 0.0;
  double mae = 0.0;
  std::optional<double> smape;
  std::optional<double> mase;
  std::optional<double> owa;
  /// Series (window, variable) left out of mase because their scale is zero.
  std::size_t flagged_series = 0;
};

struct MetricsReport {
  std::string run_id;
  std::string model;
  MetricScale scale = MetricScale::Normalized;
  std::vector<HorizonMetrics> horizons;
  double avg_mse = 0.0;
  double avg_mae = 0.0;
  std::optional<double> avg_smape, avg_mase, avg_owa;
  std::vector<std::string> warnings;
  double runtime_seconds = 0.0;
  nlohmann::json config = nlohmann::json::object();

  /// Recomputes the averages as the mean of the per-horizon entries.
  void finalize();
  nlohmann::json to_json() const;
  /// Aligned plain-text table, one row per horizon plus the average.
  std::string to_table() const;
  /// Writes `<stem>.json` and `<stem>.txt` into `dir`.
  void write(const std::filesystem::path& dir, const std::string& stem) const;
};

Forecaster model_forecaster(const ModelParams& params, const ModelConfig& cfg, const Normalizer& norm,
                            bool instance_norm);
/// Repeats the last observed value of each variable.
Forecaster naive_forecaster();
/// Repeats the last `m` observed values of each variable.
Forecaster seasonal_naive_forecaster(std::size_t m);

/// Scores `f` on the windows of `opts.split`. Returns nullopt and appends a
/// warning when the split holds no window of this size.
std::optional<HorizonMetrics> evaluate(const Forecaster& f, const ForecastDataset& ds,
                                       const Normalizer& norm, const WindowSpec& spec,
                                       const EvalOptions& opts, std::vector<std::string>& warnings);

/// 12 hex digits of FNV-1a over the serialized resolved configuration.
std::string make_run_id(const nlohmann::json& resolved);

struct AblationRow {
  AblationVariant variant = AblationVariant::Original;
  std::size_t param_count = 0;
  std::optional<std::uint64_t> data_checksum;
  std::optional<HorizonMetrics> metrics;
  std::optional<double> best_val_mse;
  double seconds = 0.0;
  std::string error;  // empty on success
};

struct AblationResult {
  std::vector<AblationRow> rows;  // in kAllVariants order
  std::optional<HorizonMetrics> naive;
  std::vector<std::string> warnings;
  nlohmann::json config = nlohmann::json::object();

  bool checksums_agree() const;
  nlohmann::json to_json() const;
  std::string to_table() const;
};

/// Trains and evaluates every variant with the same seed, data and window
/// order. A failing variant is recorded in its row; the others still run.
AblationResult run_ablation(const ForecastDataset& ds, const ModelConfig& base, const TrainConfig& tc,
                            const EvalOptions& opts);

}  // namespace stformer
