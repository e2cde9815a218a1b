#include "stformer/metrics.hpp"

#include <cmath>
#include <string>

#include "stformer/error.hpp"

namespace stformer {

namespace {

void check_same(const Tensor& y, const Tensor& yhat, const char* what) {
  if (y.shape() != yhat.shape()) {
    throw DimensionError(std::string(what) + ": target " + shape_string(y.shape()) +
                         " and forecast " + shape_string(yhat.shape()) + " differ");
  }
  if (y.numel() == 0) throw DimensionError(std::string(what) + " of empty tensors");
}

void check_same(std::span<const double> y, std::span<const double> yhat, const char* what) {
  if (y.size() != yhat.size()) {
    throw DimensionError(std::string(what) + ": " + std::to_string(y.size()) + " targets but " +
                         std::to_string(yhat.size()) + " forecasts");
  }
  if (y.empty()) throw DimensionError(std::string(what) + " of an empty series");
}

}  // namespace

double mse(const Tensor& y, const Tensor& yhat) {
  check_same(y, yhat, "mse");
  double s = 0.0;
  for (std::size_t i = 0; i < y.numel(); ++i) s += (yhat[i] - y[i]) * (yhat[i] - y[i]);
  return s / static_cast<double>(y.numel());
}

double mae(const Tensor& y, const Tensor& yhat) {
  check_same(y, yhat, "mae");
  double s = 0.0;
  for (std::size_t i = 0; i < y.numel(); ++i) s += std::abs(yhat[i] - y[i]);
  return s / static_cast<double>(y.numel());
}

double smape(std::span<const double> y, std::span<const double> yhat) {
  check_same(y, yhat, "smape");
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double den = std::abs(y[i]) + std::abs(yhat[i]);
    if (den > 0.0) s += std::abs(yhat[i] - y[i]) / den;
  }
  return 200.0 * s / static_cast<double>(y.size());
}

double mase(std::span<const double> y, std::span<const double> yhat,
            std::span<const double> insample, std::size_t m) {
  check_same(y, yhat, "mase");
  if (m == 0) throw UsageError("mase seasonal period must be >= 1");
  if (insample.size() <= m) {
    throw UsageError("mase needs more than " + std::to_string(m) + " in-sample points, got " +
                     std::to_string(insample.size()));
  }
  double scale = 0.0;
  for (std::size_t t = m; t < insample.size(); ++t) scale += std::abs(insample[t] - insample[t - m]);
  scale /= static_cast<double>(insample.size() - m);
  if (!(scale > 0.0)) throw MetricError("mase undefined: in-sample seasonal-naive error is zero");
  double err = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) err += std::abs(yhat[i] - y[i]);
  return err / static_cast<double>(y.size()) / scale;
}

double owa(double smape_value, double mase_value, double baseline_smape, double baseline_mase) {
  if (!(baseline_smape > 0.0) || !(baseline_mase > 0.0)) {
    throw MetricError("owa undefined: baseline smape and mase must be positive");
  }
  return 0.5 * (smape_value / baseline_smape + mase_value / baseline_mase);
}

}  // namespace stformer
