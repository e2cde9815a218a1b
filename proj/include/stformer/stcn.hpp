#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "stformer/layers.hpp"

namespace stformer {

/// Optional dropout applied after each TCN activation during training.
struct DropoutContext {
  double rate = 0.0;
  Rng* rng = nullptr;

  bool active() const { return rate > 0.0 && rng != nullptr; }
};

/// One TCN layer: causal conv -> ReLU -> causal conv -> ReLU, plus the input.
/// Both convolutions share the layer's dilation and keep M channels, so the
/// residual is the identity.
struct TcnLayer {
  Conv conv1;
  Conv conv2;
  std::size_t dilation = 1;
  bool per_variable = false;  // kernels [M x 1 x k] instead of [M x M x k]
};

struct TcnParams {
  std::vector<TcnLayer> layers;

  /// Dilations 1, 2, 4, ... across `n_layers` layers.
  static TcnParams init(std::size_t channels, std::size_t n_layers, std::size_t kernel,
                        bool per_variable, Rng& rng);
  void visit(const std::string& prefix, const ParamVisitor& fn);
};

/// One SCN layer: three chained circular conv -> ReLU blocks of a common width.
struct ScnLayer {
  std::array<Conv, 3> blocks;
  std::size_t kernel = 1;
};

/// Convolution along the variable axis. Input channels are the time (or
/// feature) positions; the first block maps them to d_s channels.
struct ScnParams {
  std::vector<ScnLayer> layers;
  PaddingMode padding = PaddingMode::Circular;

  static ScnParams init(std::size_t in_channels, std::size_t d_s,
                        const std::vector<std::size_t>& kernels, PaddingMode padding, Rng& rng);
  void visit(const std::string& prefix, const ParamVisitor& fn);
};

struct StcnParams {
  TcnParams tcn;
  ScnParams scn;
  Affine mlp1;  // L_in -> F/2, temporal branch
  Affine mlp2;  // d_s -> F/2, sequence branch

  static StcnParams init(std::size_t M, std::size_t in_len, std::size_t F, std::size_t d_s,
                         std::size_t tcn_layers, std::size_t tcn_kernel, bool tcn_per_variable,
                         const std::vector<std::size_t>& scn_kernels, PaddingMode padding,
                         Rng& rng);
  void visit(const std::string& prefix, const ParamVisitor& fn);
};

/// x[M x L] -> [M x L]; output[:, t] depends on x[:, <= t] only.
Var tcn_forward(Var x, const TcnParams& p, DropoutContext drop = {});

/// x_t[L x M] -> [d_s x M]. Throws ConfigError if a kernel is wider than M.
Var scn_forward(Var x_t, const ScnParams& p);

/// x[M x L] -> [M x F]: temporal half from the TCN, sequence half from the SCN.
Var stcn_forward(Var x, const StcnParams& p, DropoutContext drop = {});

}  // namespace stformer
