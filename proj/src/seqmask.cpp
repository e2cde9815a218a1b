#include "stformer/seqmask.hpp"

#include <cmath>
#include <string>

#include "stformer/error.hpp"

namespace stformer {

AttnParams AttnParams::init(std::size_t F, Rng& rng) {
  AttnParams p;
  p.w_q = uniform_init({F, F}, F, rng);
  p.w_k = uniform_init({F, F}, F, rng);
  p.w_v = uniform_init({F, F}, F, rng);
  p.norm = Norm::init(F);
  return p;
}

void AttnParams::visit(const std::string& prefix, const ParamVisitor& fn) {
  fn(prefix + ".w_q", w_q);
  fn(prefix + ".w_k", w_k);
  fn(prefix + ".w_v", w_v);
  norm.visit(prefix + ".norm", fn);
}

MaskBlockParams MaskBlockParams::init(std::size_t d_k, std::size_t d_a, std::size_t n_blocks,
                                      Rng& rng) {
  if (n_blocks == 0) throw ConfigError("sequence mask needs at least one block");
  MaskBlockParams p;
  p.embed_norm = Norm::init(d_k);
  for (std::size_t i = 0; i < n_blocks; ++i) {
    MaskBlock b;
    b.w = uniform_init({d_k, d_k}, d_k, rng);
    b.mlp3 = Affine::init(d_k, d_a, rng);
    b.mlp4 = Affine::init(d_a, d_k, rng);
    b.hidden_norm = Norm::init(d_k);
    p.blocks.push_back(std::move(b));
  }
  return p;
}

void MaskBlockParams::visit(const std::string& prefix, const ParamVisitor& fn) {
  embed_norm.visit(prefix + ".embed_norm", fn);
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    const std::string base = prefix + "." + std::to_string(i);
    fn(base + ".w", blocks[i].w);
    blocks[i].mlp3.visit(base + ".mlp3", fn);
    blocks[i].mlp4.visit(base + ".mlp4", fn);
    blocks[i].hidden_norm.visit(base + ".hidden_norm", fn);
  }
}

Var seq_mask(Var v, const MaskBlockParams& p, double eps, std::optional<Var> gate_source) {
  if (p.blocks.empty()) throw ConfigError("sequence mask needs at least one block (n >= 1)");
  const Var source = gate_source.value_or(v);
  Var h = p.embed_norm.apply(v, eps);
  for (const MaskBlock& block : p.blocks) {
    Var gate = block.mlp4.apply(relu(block.mlp3.apply(source)));
    h = relu(block.hidden_norm.apply(matmul(hadamard(h, gate), bind(block.w, h)), eps));
  }
  return h;
}

namespace {

void check_width(Var x, const AttnParams& ap) {
  const std::size_t F = x.value().cols();
  for (const Tensor* w : {&ap.w_q, &ap.w_k, &ap.w_v}) {
    if (w->rank() != 2 || w->dim(0) != F) {
      throw DimensionError("attention projection " + shape_string(w->shape()) +
                           " does not accept input " + shape_string(x.value().shape()));
    }
    if (w->dim(1) != F) {
      throw ConfigError("attention width d_k=" + std::to_string(w->dim(1)) + " must equal F=" +
                        std::to_string(F) + ": the residual O + x adds an [M x d_k] output to " +
                        "the [M x F] input");
    }
  }
}

Var attend(Var x, const AttnParams& ap, Var values, double eps) {
  Var o = matmul(attention_weights(x, ap), values);
  return ap.norm.apply(add(o, x), eps);
}

}  // namespace

Var attention_weights(Var x, const AttnParams& ap) {
  check_width(x, ap);
  Var q = matmul(x, bind(ap.w_q, x));
  Var k = matmul(x, bind(ap.w_k, x));
  const double d_k = static_cast<double>(ap.w_q.dim(1));
  return softmax_rows(scale(matmul(q, transpose(k)), 1.0 / std::sqrt(d_k)));
}

Var masked_attention(Var x, const AttnParams& ap, const MaskBlockParams& mp, double eps,
                     bool gate_from_input) {
  check_width(x, ap);
  Var v = matmul(x, bind(ap.w_v, x));
  Var v_n = gate_from_input ? seq_mask(v, mp, eps, x) : seq_mask(v, mp, eps);
  return attend(x, ap, v_n, eps);
}

Var full_attention(Var x, const AttnParams& ap, double eps) {
  check_width(x, ap);
  return attend(x, ap, matmul(x, bind(ap.w_v, x)), eps);
}

}  // namespace stformer
