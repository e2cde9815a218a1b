#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "stformer/tensor.hpp"

namespace stformer {

struct AdamConfig {
  double lr = 5e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Adam with bias correction. Gradients are passed to step() explicitly, in
/// the order of the parameter list given at construction.
class Adam {
 public:
  Adam(std::vector<Tensor*> params, AdamConfig cfg);

  /// One update; `grads[i]` must have the size of parameter i.
  void step(const std::vector<std::vector<double>>& grads);

  std::size_t steps() const { return t_; }
  const AdamConfig& config() const { return cfg_; }

 private:
  std::vector<Tensor*> params_;
  AdamConfig cfg_;
  std::vector<std::vector<double>> m_, v_;
  std::size_t t_ = 0;
};

/// Global L2 norm of the gradients.
double grad_norm(const std::vector<std::vector<double>>& grads);

/// Rescales the gradients so their global norm is at most `max_norm`; returns
/// the norm before clipping.
double clip_grad_norm(std::vector<std::vector<double>>& grads, double max_norm);

}  // namespace stformer
