#include "stformer/normalizer.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "stformer/error.hpp"

namespace stformer {

namespace {

void row_stats(const Tensor& x, std::size_t r, std::size_t begin, std::size_t end, double& mean,
               double& sd) {
  const double n = static_cast<double>(end - begin);
  mean = 0.0;
  for (std::size_t t = begin; t < end; ++t) mean += x.at(r, t);
  mean /= n;
  double var = 0.0;
  for (std::size_t t = begin; t < end; ++t) var += (x.at(r, t) - mean) * (x.at(r, t) - mean);
  sd = std::max(std::sqrt(var / n), Normalizer::kStdFloor);
}

}  // namespace

Normalizer Normalizer::fit(const Tensor& series, std::size_t begin, std::size_t end) {
  if (series.rank() != 2) throw DimensionError("normalizer expects a [M x N] series");
  if (begin >= end || end > series.cols()) {
    throw UsageError("normalizer fit range [" + std::to_string(begin) + ", " +
                     std::to_string(end) + ") is empty or outside " +
                     std::to_string(series.cols()) + " steps");
  }
  Normalizer n;
  n.mean_.resize(series.rows());
  n.std_.resize(series.rows());
  for (std::size_t r = 0; r < series.rows(); ++r) row_stats(series, r, begin, end, n.mean_[r], n.std_[r]);
  return n;
}

Normalizer Normalizer::identity(std::size_t m) {
  return from_stats(std::vector<double>(m, 0.0), std::vector<double>(m, 1.0));
}

Normalizer Normalizer::from_stats(std::vector<double> mean, std::vector<double> std) {
  if (mean.size() != std.size()) throw DimensionError("normalizer mean and std differ in length");
  Normalizer n;
  n.mean_ = std::move(mean);
  n.std_ = std::move(std);
  for (double& s : n.std_) s = std::max(s, kStdFloor);
  return n;
}

void Normalizer::check(const Tensor& x, const char* what) const {
  if (!fitted()) throw UsageError(std::string("normalizer used before fit (") + what + ")");
  if (x.rank() != 2 || x.rows() != mean_.size()) {
    throw DimensionError(std::string("normalizer ") + what + ": input " + shape_string(x.shape()) +
                         " does not have " + std::to_string(mean_.size()) + " rows");
  }
}

Tensor Normalizer::transform(const Tensor& x) const {
  check(x, "transform");
  Tensor out = x;
  for (std::size_t r = 0; r < x.rows(); ++r)
    for (std::size_t t = 0; t < x.cols(); ++t) out.at(r, t) = (x.at(r, t) - mean_[r]) / std_[r];
  return out;
}

Tensor Normalizer::inverse(const Tensor& x) const {
  check(x, "inverse");
  Tensor out = x;
  for (std::size_t r = 0; r < x.rows(); ++r)
    for (std::size_t t = 0; t < x.cols(); ++t) out.at(r, t) = x.at(r, t) * std_[r] + mean_[r];
  return out;
}

InstanceStats instance_normalize(Tensor& x) {
  if (x.rank() != 2 || x.cols() == 0) throw DimensionError("instance normalization expects [M x T]");
  InstanceStats s;
  s.mean.resize(x.rows());
  s.std.resize(x.rows());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    row_stats(x, r, 0, x.cols(), s.mean[r], s.std[r]);
    for (std::size_t t = 0; t < x.cols(); ++t) x.at(r, t) = (x.at(r, t) - s.mean[r]) / s.std[r];
  }
  return s;
}

void instance_denormalize(Tensor& y, const InstanceStats& stats) {
  if (y.rank() != 2 || y.rows() != stats.mean.size())
    throw DimensionError("instance statistics do not match forecast " + shape_string(y.shape()));
  for (std::size_t r = 0; r < y.rows(); ++r)
    for (std::size_t t = 0; t < y.cols(); ++t) y.at(r, t) = y.at(r, t) * stats.std[r] + stats.mean[r];
}

}  // namespace stformer
