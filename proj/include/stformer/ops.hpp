#pragma once

#include <cstddef>
#include <random>

#include "stformer/tape.hpp"

namespace stformer {

// Differentiable operations. None broadcast implicitly: element-wise ops need
// identical shapes, and adding a per-column bias is the explicit add_row_bias.

Var matmul(Var a, Var b);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var hadamard(Var a, Var b);
Var scale(Var a, double factor);

/// a[p x q] + bias[q] added to every row.
Var add_row_bias(Var a, Var bias);

/// x W + b for x[p x in], W[in x out], b[out].
Var affine(Var x, Var weight, Var bias);

/// max(0, x); the subgradient at exactly 0 is 0.
Var relu(Var a);

/// Row-wise softmax with max subtraction.
Var softmax_rows(Var a);

/// Per row: (x - mean) / sqrt(var + eps) * gain + bias, population variance.
Var layer_norm_rows(Var a, Var gain, Var bias, double eps);

/// x[C_in x L], w[C_out x C_in x k], b[C_out] -> [C_out x L]. Left zero padding
/// of (k-1)*dilation keeps output[:, t] a function of x[:, <= t] only.
/// With `depthwise`, w is [C x 1 x k] and channel c only reads input channel c.
Var causal_dilated_conv1d(Var x, Var w, Var b, std::size_t dilation, bool depthwise = false);

enum class PaddingMode { Circular, Zero };

/// Length-preserving convolution. Circular mode appends the first k-1
/// positions of x to its end before a valid convolution; Zero mode appends
/// zeros instead. Throws ConfigError when k > L.
Var circular_conv1d(Var x, Var w, Var b, PaddingMode mode = PaddingMode::Circular);

Var concat_cols(Var a, Var b);
Var transpose(Var a);

Var sum(Var a);
Var mean(Var a);

/// mean((pred - target)^2) over all elements.
Var mse_loss(Var pred, Var target);

/// Inverted dropout: zeroes entries with probability `rate` and rescales the rest.
/// rate == 0 returns `a` unchanged and draws nothing from `rng`.
Var dropout(Var a, double rate, std::mt19937_64& rng);

// Plain (non-recording) kernels shared with tests and evaluation paths.
namespace kernels {

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);

}  // namespace kernels

}  // namespace stformer
