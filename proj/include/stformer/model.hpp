#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "stformer/model_config.hpp"
#include "stformer/normalizer.hpp"
#include "stformer/seqmask.hpp"
#include "stformer/stcn.hpp"

namespace stformer {

/// Position-wise feed-forward sublayer with its add & norm.
struct FfnParams {
  Affine mlp5;  // F -> d_ff
  Affine mlp6;  // d_ff -> F
  Norm norm;
};

/// Parameters of one block. Which members are populated depends on the variant:
///   stcn       - Original, FullAttention, NoAttention
///   embed      - FfnForStcn, NoStcn (affine L_in -> F)
///   embed_ffn  - FfnForStcn (position-wise FFN after the embedding)
///   attn       - every variant but NoAttention
///   mask       - Original, FfnForStcn, NoStcn
///   bypass_norm - NoAttention (norm applied in place of attention)
struct BlockParams {
  std::optional<StcnParams> stcn;
  std::optional<Affine> embed;
  std::optional<std::pair<Affine, Affine>> embed_ffn;
  std::optional<AttnParams> attn;
  std::optional<MaskBlockParams> mask;
  std::optional<Norm> bypass_norm;
  FfnParams ffn;
};

struct ModelParams {
  std::vector<BlockParams> blocks;
  Affine head;  // F -> K

  void visit(const ParamVisitor& fn);
  /// Every tensor with its dotted name, in a fixed order.
  std::vector<std::pair<std::string, Tensor*>> named();
  std::vector<std::pair<std::string, const Tensor*>> named() const;
  std::size_t count() const;
};

/// Seeded initialization; same cfg and seed give bit-identical parameters.
ModelParams init_params(const ModelConfig& cfg, std::uint64_t seed);

/// Scalar parameter count implied by `cfg` (a pure function of the config).
std::size_t param_count(const ModelConfig& cfg);

/// Count of the mask-block parameters of one block: embedding norm plus n
/// blocks of W_i, mlp3, mlp4 and hidden norm.
std::size_t mask_param_count(const ModelConfig& cfg);

struct ForwardOptions {
  bool training = false;
  Rng* rng = nullptr;  // needed only when training with dropout
};

/// x[M x T] -> forecast [M x K] on the tape of x.
///
/// Throws NumericalError naming block and sublayer when an activation turns
/// non-finite, ConfigError when params do not match cfg.variant.
Var forward(Var x, const ModelParams& params, const ModelConfig& cfg, ForwardOptions opts = {});

/// Tape-free evaluation of one window.
Tensor predict(const Tensor& x, const ModelParams& params, const ModelConfig& cfg);

/// Forecast in raw units: z-scores `x_raw` with `norm`, runs the model and
/// maps the output back. With `instance_norm` the normalized window is also
/// standardized by its own statistics, which are restored on the output.
Tensor predict_window(const Tensor& x_raw, const ModelParams& params, const ModelConfig& cfg,
                      const Normalizer& norm, bool instance_norm = false);

}  // namespace stformer
