#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "stformer/layers.hpp"

namespace stformer {

/// Single-head projections plus the post-residual layer norm. All projections
/// are [F x d_k] with d_k == F, since the attention output is added back onto x.
struct AttnParams {
  Tensor w_q;
  Tensor w_k;
  Tensor w_v;
  Norm norm;

  static AttnParams init(std::size_t F, Rng& rng);
  void visit(const std::string& prefix, const ParamVisitor& fn);
};

/// Parameters of one mask block: gate MLP (d_k -> d_a -> d_k), the feature map
/// W_i [d_k x d_k], and the hidden layer norm.
struct MaskBlock {
  Tensor w;
  Affine mlp3;
  Affine mlp4;
  Norm hidden_norm;
};

struct MaskBlockParams {
  Norm embed_norm;  // normalizes V before block 1
  std::vector<MaskBlock> blocks;

  static MaskBlockParams init(std::size_t d_k, std::size_t d_a, std::size_t n_blocks, Rng& rng);
  void visit(const std::string& prefix, const ParamVisitor& fn);
};

/// Iterated mask blocks over the value matrix v[M x d_k].
///
/// Each block gates its input with mlp4(relu(mlp3(source))), where `source`
/// is v unless `gate_source` is given, then applies relu(LayerNorm(. * W_i)).
/// Block 1 consumes LayerNorm(v); later blocks consume the previous output.
Var seq_mask(Var v, const MaskBlockParams& p, double eps,
             std::optional<Var> gate_source = std::nullopt);

/// softmax(Q K^T / sqrt(d_k)) for Q = x W_Q, K = x W_K.
Var attention_weights(Var x, const AttnParams& ap);

/// LayerNorm(softmax(Q K^T / sqrt(d_k)) V_n + x), V_n = seq_mask(x W_V).
/// With `gate_from_input`, mask gates are computed from x instead of x W_V.
Var masked_attention(Var x, const AttnParams& ap, const MaskBlockParams& mp, double eps,
                     bool gate_from_input = false);

/// Same as masked_attention with the raw values V = x W_V.
Var full_attention(Var x, const AttnParams& ap, double eps);

}  // namespace stformer
