#pragma once

#include <cstddef>
#include <span>

#include "stformer/tensor.hpp"

namespace stformer {

/// Mean squared / absolute error over all elements. DimensionError on a shape mismatch.
double mse(const Tensor& y, const Tensor& yhat);
double mae(const Tensor& y, const Tensor& yhat);

/// (200 / n) * sum |yhat - y| / (|y| + |yhat|); terms with 0 / 0 count as 0.
double smape(std::span<const double> y, std::span<const double> yhat);

/// mean |yhat - y| scaled by the in-sample seasonal-naive error
/// mean_{t >= m} |x_t - x_{t-m}|. Throws UsageError unless the in-sample
/// length exceeds m, MetricError when the scale is zero.
double mase(std::span<const double> y, std::span<const double> yhat,
            std::span<const double> insample, std::size_t m);

/// 0.5 * (smape / baseline_smape + mase / baseline_mase). MetricError unless
/// both baselines are positive.
double owa(double smape, double mase, double baseline_smape, double baseline_mase);

}  // namespace stformer
