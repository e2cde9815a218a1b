#include "stformer/model.hpp"

#include <string>

#include "stformer/error.hpp"

namespace stformer {

namespace {

std::size_t affine_count(std::size_t in, std::size_t out) { return in * out + out; }
std::size_t conv_count(std::size_t in, std::size_t out, std::size_t k) { return out * in * k + out; }

std::size_t stcn_count(const ModelConfig& cfg, std::size_t in_len) {
  const std::size_t tcn_in = cfg.tcn_mixing == TcnMixing::PerVariable ? 1 : cfg.M;
  std::size_t n = 2 * cfg.tcn_layers * conv_count(tcn_in, cfg.M, cfg.tcn_kernel);
  std::size_t c_in = in_len;
  for (std::size_t k : cfg.scn_kernels) {
    for (int b = 0; b < 3; ++b) {
      n += conv_count(c_in, cfg.d_s, k);
      c_in = cfg.d_s;
    }
  }
  return n + affine_count(in_len, cfg.F / 2) + affine_count(cfg.d_s, cfg.F / 2);
}

void check_finite(Var v, std::size_t block, const char* sublayer) {
  if (!v.value().all_finite()) {
    throw NumericalError("non-finite activation in block " + std::to_string(block) +
                         ", sublayer " + sublayer);
  }
}

template <class T>
const T& require(const std::optional<T>& slot, std::size_t block, const char* what,
                 const ModelConfig& cfg) {
  if (!slot) {
    throw ConfigError("block " + std::to_string(block) + " has no " + what +
                      " parameters, required by variant " + std::string(variant_name(cfg.variant)));
  }
  return *slot;
}

}  // namespace

std::size_t mask_param_count(const ModelConfig& cfg) {
  const std::size_t d_k = cfg.F, d_a = cfg.mask_hidden();
  const std::size_t per_block = d_k * d_k + affine_count(d_k, d_a) + affine_count(d_a, d_k) + 2 * d_k;
  return 2 * d_k + cfg.n_mask_blocks * per_block;
}

std::size_t param_count(const ModelConfig& cfg) {
  cfg.validate();
  const std::size_t F = cfg.F, d_ff = cfg.ffn_hidden();
  std::size_t n = affine_count(F, cfg.K);
  for (std::size_t b = 0; b < cfg.n_blocks; ++b) {
    const std::size_t in_len = cfg.stcn_input_len(b);
    switch (cfg.variant) {
      case AblationVariant::FfnForStcn:
        n += affine_count(in_len, F) + affine_count(F, d_ff) + affine_count(d_ff, F);
        break;
      case AblationVariant::NoStcn:
        n += affine_count(in_len, F);
        break;
      default:
        n += stcn_count(cfg, in_len);
    }
    n += cfg.uses_attention() ? 3 * F * F + 2 * F : 2 * F;
    if (cfg.uses_mask()) n += mask_param_count(cfg);
    n += affine_count(F, d_ff) + affine_count(d_ff, F) + 2 * F;
  }
  return n;
}

ModelParams init_params(const ModelConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  Rng rng(seed);
  const std::size_t F = cfg.F, d_ff = cfg.ffn_hidden();
  ModelParams p;
  for (std::size_t b = 0; b < cfg.n_blocks; ++b) {
    const std::size_t in_len = cfg.stcn_input_len(b);
    BlockParams bp;
    if (cfg.uses_stcn()) {
      bp.stcn = StcnParams::init(cfg.M, in_len, F, cfg.d_s, cfg.tcn_layers, cfg.tcn_kernel,
                                 cfg.tcn_mixing == TcnMixing::PerVariable, cfg.scn_kernels,
                                 cfg.scn_padding, rng);
    } else {
      bp.embed = Affine::init(in_len, F, rng);
      if (cfg.variant == AblationVariant::FfnForStcn) {
        Affine in = Affine::init(F, d_ff, rng);
        Affine out = Affine::init(d_ff, F, rng);
        bp.embed_ffn.emplace(std::move(in), std::move(out));
      }
    }
    if (cfg.uses_attention()) {
      bp.attn = AttnParams::init(F, rng);
    } else {
      bp.bypass_norm = Norm::init(F);
    }
    if (cfg.uses_mask()) bp.mask = MaskBlockParams::init(F, cfg.mask_hidden(), cfg.n_mask_blocks, rng);
    bp.ffn.mlp5 = Affine::init(F, d_ff, rng);
    bp.ffn.mlp6 = Affine::init(d_ff, F, rng);
    bp.ffn.norm = Norm::init(F);
    p.blocks.push_back(std::move(bp));
  }
  p.head = Affine::init(F, cfg.K, rng);
  return p;
}

void ModelParams::visit(const ParamVisitor& fn) {
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    BlockParams& bp = blocks[b];
    const std::string base = "blocks." + std::to_string(b);
    if (bp.stcn) bp.stcn->visit(base + ".stcn", fn);
    if (bp.embed) bp.embed->visit(base + ".embed", fn);
    if (bp.embed_ffn) {
      bp.embed_ffn->first.visit(base + ".embed_ffn.in", fn);
      bp.embed_ffn->second.visit(base + ".embed_ffn.out", fn);
    }
    if (bp.attn) bp.attn->visit(base + ".attn", fn);
    if (bp.bypass_norm) bp.bypass_norm->visit(base + ".bypass_norm", fn);
    if (bp.mask) bp.mask->visit(base + ".mask", fn);
    bp.ffn.mlp5.visit(base + ".ffn.mlp5", fn);
    bp.ffn.mlp6.visit(base + ".ffn.mlp6", fn);
    bp.ffn.norm.visit(base + ".ffn.norm", fn);
  }
  head.visit("head", fn);
}

std::vector<std::pair<std::string, Tensor*>> ModelParams::named() {
  std::vector<std::pair<std::string, Tensor*>> out;
  visit([&](const std::string& name, Tensor& t) { out.emplace_back(name, &t); });
  return out;
}

std::vector<std::pair<std::string, const Tensor*>> ModelParams::named() const {
  std::vector<std::pair<std::string, const Tensor*>> out;
  // visit() only hands out references; nothing is written through them here.
  for (auto& [name, t] : const_cast<ModelParams*>(this)->named()) out.emplace_back(name, t);
  return out;
}

std::size_t ModelParams::count() const {
  std::size_t n = 0;
  for (const auto& [name, t] : named()) n += t->numel();
  return n;
}

Var forward(Var x, const ModelParams& params, const ModelConfig& cfg, ForwardOptions opts) {
  const Tensor& xv = x.value();
  if (xv.rank() != 2 || xv.rows() != cfg.M || xv.cols() != cfg.T) {
    throw DimensionError("model input " + shape_string(xv.shape()) + " does not match [" +
                         std::to_string(cfg.M) + "x" + std::to_string(cfg.T) + "]");
  }
  if (params.blocks.size() != cfg.n_blocks) {
    throw ConfigError("parameters hold " + std::to_string(params.blocks.size()) +
                      " blocks, config expects " + std::to_string(cfg.n_blocks));
  }
  const double eps = cfg.ln_eps;
  DropoutContext drop;
  if (opts.training && cfg.dropout > 0.0) {
    if (opts.rng == nullptr) throw UsageError("training forward with dropout needs an rng");
    drop = DropoutContext{cfg.dropout, opts.rng};
  }

  Var h = x;
  for (std::size_t b = 0; b < cfg.n_blocks; ++b) {
    const BlockParams& bp = params.blocks[b];

    Var e;
    if (cfg.uses_stcn()) {
      e = stcn_forward(h, require(bp.stcn, b, "STCN", cfg), drop);
    } else {
      e = require(bp.embed, b, "embedding", cfg).apply(h);
      if (cfg.variant == AblationVariant::FfnForStcn) {
        const auto& ffn = require(bp.embed_ffn, b, "embedding FFN", cfg);
        e = ffn.second.apply(relu(ffn.first.apply(e)));
      }
    }
    check_finite(e, b, cfg.uses_stcn() ? "stcn" : "embedding");

    Var a;
    switch (cfg.variant) {
      case AblationVariant::NoAttention:
        // Full-model parameter sets carry no bypass norm; the attention norm stands in.
        a = (bp.bypass_norm ? *bp.bypass_norm : require(bp.attn, b, "attention", cfg).norm)
                .apply(e, eps);
        break;
      case AblationVariant::FullAttention:
        a = full_attention(e, require(bp.attn, b, "attention", cfg), eps);
        break;
      default:
        a = masked_attention(e, require(bp.attn, b, "attention", cfg),
                             require(bp.mask, b, "mask block", cfg), eps,
                             cfg.mask_source == MaskSource::Stcn);
    }
    check_finite(a, b, "attention");

    Var f = bp.ffn.mlp6.apply(relu(bp.ffn.mlp5.apply(a)));
    h = bp.ffn.norm.apply(add(f, a), eps);
    check_finite(h, b, "ffn");
  }
  Var out = params.head.apply(h);
  check_finite(out, cfg.n_blocks, "projection");
  return out;
}

Tensor predict(const Tensor& x, const ModelParams& params, const ModelConfig& cfg) {
  Tape tape;
  return forward(tape.leaf(x), params, cfg).value();
}

Tensor predict_window(const Tensor& x_raw, const ModelParams& params, const ModelConfig& cfg,
                      const Normalizer& norm, bool instance_norm) {
  Tensor x = norm.transform(x_raw);
  if (!instance_norm) return norm.inverse(predict(x, params, cfg));
  const InstanceStats stats = instance_normalize(x);
  Tensor y = predict(x, params, cfg);
  instance_denormalize(y, stats);
  return norm.inverse(y);
}

}  // namespace stformer
