#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "stformer/data.hpp"
#include "stformer/model.hpp"
#include "stformer/normalizer.hpp"

namespace stformer {

struct TrainConfig {
  double lr = 5e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::size_t batch_size = 32;
  std::size_t max_steps = 1000;
  /// Validation MSE is computed every `eval_every` steps and after the last step.
  std::size_t eval_every = 100;
  /// Evaluations without improvement before stopping; 0 disables early stopping.
  std::size_t patience = 0;
  /// Global gradient-norm clip; 0 disables clipping.
  double grad_clip = 0.0;
  std::size_t stride = 1;
  /// Standardize each lookback window by its own statistics on top of the
  /// train-split normalizer.
  bool instance_norm = false;
  std::uint64_t seed = 0;

  /// Throws ConfigError listing every violated constraint.
  void validate() const;
};

struct HistoryRow {
  std::size_t step = 0;
  double train_loss = 0.0;
  std::optional<double> val_mse;
};

struct TrainResult {
  ModelParams params;  // best-validation snapshot, or the final state without validation windows
  Normalizer normalizer;
  std::vector<HistoryRow> history;
  std::size_t steps = 0;
  std::optional<std::size_t> best_step;
  std::optional<double> best_val_mse;
  bool stopped_early = false;
  /// FNV-1a over the series bytes and the window starts in consumption order.
  std::uint64_t data_checksum = 0;
  double seconds = 0.0;
  std::vector<std::string> warnings;
};

/// Called after every step with the step index (1-based) and batch loss.
using StepCallback = std::function<void(std::size_t step, double loss)>;

/// Adam on the mean-over-batch MSE of normalized targets. Windows are
/// visited in a seeded permutation, reshuffled every epoch.
///
/// Throws ConfigError when the train split has no window and NumericalError
/// naming the step and the last finite loss when training diverges.
TrainResult train(const ModelConfig& cfg, ModelParams params, const ForecastDataset& ds,
                  const TrainConfig& tc, const StepCallback& on_step = {});

/// Forecast of one normalized window [M x T] in normalized units.
Tensor predict_normalized(const Tensor& x, const ModelParams& params, const ModelConfig& cfg,
                          bool instance_norm);

/// Mean MSE over the windows of a split, in normalized units; nullopt when the split has none.
std::optional<double> split_mse(const ModelParams& params, const ModelConfig& cfg,
                                const ForecastDataset& ds, const Normalizer& norm, Split split,
                                std::size_t stride, bool instance_norm);

void write_history_csv(const std::vector<HistoryRow>& history, const std::filesystem::path& path);

/// 64-bit FNV-1a, chainable through `seed`.
std::uint64_t fnv1a(std::span<const unsigned char> bytes,
                    std::uint64_t seed = 0xcbf29ce484222325ULL);

}  // namespace stformer
