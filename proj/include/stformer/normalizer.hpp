#pragma once

#include <cstddef>
#include <vector>

#include "stformer/tensor.hpp"

namespace stformer {

/// Per-variable z-score statistics. Rows of every transformed tensor are
/// variables; columns are time steps.
class Normalizer {
 public:
  static constexpr double kStdFloor = 1e-8;

  Normalizer() = default;

  /// Fits on columns [begin, end) of `series` (the train split).
  static Normalizer fit(const Tensor& series, std::size_t begin, std::size_t end);
  /// Mean 0, std 1 for `m` variables.
  static Normalizer identity(std::size_t m);
  static Normalizer from_stats(std::vector<double> mean, std::vector<double> std);

  bool fitted() const { return !mean_.empty(); }
  std::size_t size() const { return mean_.size(); }
  const std::vector<double>& mean() const { return mean_; }
  const std::vector<double>& stddev() const { return std_; }

  /// Throws UsageError when unfitted, DimensionError on a row-count mismatch.
  Tensor transform(const Tensor& x) const;
  Tensor inverse(const Tensor& x) const;

 private:
  void check(const Tensor& x, const char* what) const;

  std::vector<double> mean_;
  std::vector<double> std_;
};

/// Statistics of one lookback window, used by per-window instance normalization.
struct InstanceStats {
  std::vector<double> mean;
  std::vector<double> std;
};

/// Standardizes each row of `x` by its own mean and std (floored like Normalizer).
InstanceStats instance_normalize(Tensor& x);
/// Undoes instance_normalize on a forecast with the same row count.
void instance_denormalize(Tensor& y, const InstanceStats& stats);

}  // namespace stformer
