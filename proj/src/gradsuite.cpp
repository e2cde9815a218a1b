#include "stformer/gradsuite.hpp"

#include <algorithm>
#include <functional>
#include <random>

#include "stformer/layers.hpp"
#include "stformer/model.hpp"
#include "stformer/ops.hpp"
#include "stformer/seqmask.hpp"
#include "stformer/stcn.hpp"

namespace stformer {

namespace {

constexpr double kEps = 1e-5;

Tensor uniform(Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Tensor t(std::move(shape));
  std::uniform_real_distribution<double> dist(lo, hi);
  for (auto& v : t.data()) v = dist(rng);
  return t;
}

bool is_bias(const std::string& name) {
  return name.size() >= 5 && name.compare(name.size() - 5, 5, ".bias") == 0;
}

// Collects a module's tensors and moves zero-initialized biases off the
// ReLU corners they would otherwise sit on.
template <typename Params>
std::vector<Tensor*> generic_point(Params& p, Rng& rng) {
  std::vector<Tensor*> out;
  p.visit("m", [&](const std::string& name, Tensor& t) {
    if (is_bias(name)) t = uniform(t.shape(), rng, -0.2, 0.2);
    out.push_back(&t);
  });
  return out;
}

// Random linear functional of a non-scalar output, so every output
// coordinate contributes with a distinct weight.
Var project(Var y, const Tensor& weights) { return sum(hadamard(y, y.tape().constant(weights))); }

GradSuiteEntry check(std::string name, std::string kind, const LossBuilder& f,
                     const std::vector<Tensor*>& params) {
  GradSuiteEntry e{std::move(name), std::move(kind), finite_diff_check(f, params), {}};
  e.audit = audit_gradcheck(e.result, f, params);
  return e;
}

using Unary = std::function<Var(Var)>;
using Binary = std::function<Var(Var, Var)>;

GradSuiteEntry unary_op(const std::string& name, Shape in, Shape out, const Unary& op, Rng& rng) {
  Tensor a = uniform(in, rng);
  Tensor w = uniform(out, rng);
  const bool scalar = shape_numel(out) == 1;
  LossBuilder f = [&, scalar](Tape& t) {
    Var y = op(t.leaf(static_cast<const Tensor&>(a)));
    return scalar ? y : project(y, w);
  };
  return check(name, "op", f, {&a});
}

GradSuiteEntry binary_op(const std::string& name, Shape sa, Shape sb, Shape out, const Binary& op,
                         Rng& rng) {
  Tensor a = uniform(sa, rng);
  Tensor b = uniform(sb, rng);
  Tensor w = uniform(out, rng);
  const bool scalar = shape_numel(out) == 1;
  LossBuilder f = [&, scalar](Tape& t) {
    Var y = op(t.leaf(static_cast<const Tensor&>(a)), t.leaf(static_cast<const Tensor&>(b)));
    return scalar ? y : project(y, w);
  };
  return check(name, "op", f, {&a, &b});
}

void op_entries(std::vector<GradSuiteEntry>& out, Rng& rng) {
  out.push_back(binary_op("matmul", {3, 4}, {4, 5}, {3, 5}, matmul, rng));
  out.push_back(binary_op("add", {3, 4}, {3, 4}, {3, 4}, add, rng));
  out.push_back(binary_op("sub", {3, 4}, {3, 4}, {3, 4}, sub, rng));
  out.push_back(binary_op("hadamard", {3, 4}, {3, 4}, {3, 4}, hadamard, rng));
  out.push_back(unary_op("scale", {3, 4}, {3, 4}, [](Var a) { return scale(a, -1.7); }, rng));
  out.push_back(binary_op("add_row_bias", {3, 4}, {4}, {3, 4}, add_row_bias, rng));
  out.push_back(unary_op("relu", {3, 4}, {3, 4}, relu, rng));
  out.push_back(unary_op("softmax_rows", {3, 5}, {3, 5}, softmax_rows, rng));
  out.push_back(binary_op("concat_cols", {3, 2}, {3, 3}, {3, 5}, concat_cols, rng));
  out.push_back(unary_op("transpose", {3, 4}, {4, 3}, [](Var a) { return transpose(a); }, rng));
  out.push_back(unary_op("sum", {3, 4}, {1}, sum, rng));
  out.push_back(unary_op("mean", {3, 4}, {1}, mean, rng));
  out.push_back(binary_op("mse_loss", {3, 4}, {3, 4}, {1}, mse_loss, rng));

  {
    Tensor x = uniform({3, 4}, rng), weight = uniform({4, 5}, rng), bias = uniform({5}, rng);
    Tensor w = uniform({3, 5}, rng);
    LossBuilder f = [&](Tape& t) {
      return project(affine(t.leaf(static_cast<const Tensor&>(x)), t.leaf(static_cast<const Tensor&>(weight)),
                            t.leaf(static_cast<const Tensor&>(bias))),
                     w);
    };
    out.push_back(check("affine", "op", f, {&x, &weight, &bias}));
  }
  {
    // The mask is redrawn from the same seed on every evaluation, so the
    // loss is a fixed linear map of the input.
    const std::uint64_t mask_seed = rng();
    out.push_back(unary_op(
        "dropout", {4, 5}, {4, 5},
        [mask_seed](Var a) {
          Rng mask(mask_seed);
          return dropout(a, 0.3, mask);
        },
        rng));
  }
  {
    Tensor x = uniform({3, 6}, rng), gain = uniform({6}, rng, 0.5, 1.5), bias = uniform({6}, rng);
    Tensor w = uniform({3, 6}, rng);
    LossBuilder f = [&](Tape& t) {
      return project(layer_norm_rows(t.leaf(static_cast<const Tensor&>(x)),
                                     t.leaf(static_cast<const Tensor&>(gain)),
                                     t.leaf(static_cast<const Tensor&>(bias)), kEps),
                     w);
    };
    out.push_back(check("layer_norm_rows", "op", f, {&x, &gain, &bias}));
  }
  for (bool depthwise : {false, true}) {
    Tensor x = uniform({3, 7}, rng), k = uniform({3, depthwise ? 1u : 3u, 2}, rng), b = uniform({3}, rng);
    Tensor w = uniform({3, 7}, rng);
    LossBuilder f = [&, depthwise](Tape& t) {
      return project(causal_dilated_conv1d(t.leaf(static_cast<const Tensor&>(x)),
                                           t.leaf(static_cast<const Tensor&>(k)),
                                           t.leaf(static_cast<const Tensor&>(b)), 2, depthwise),
                     w);
    };
    out.push_back(check(depthwise ? "causal_conv_depthwise" : "causal_conv", "op", f, {&x, &k, &b}));
  }
  for (PaddingMode mode : {PaddingMode::Circular, PaddingMode::Zero}) {
    Tensor x = uniform({4, 5}, rng), k = uniform({2, 4, 3}, rng), b = uniform({2}, rng);
    Tensor w = uniform({2, 5}, rng);
    LossBuilder f = [&, mode](Tape& t) {
      return project(circular_conv1d(t.leaf(static_cast<const Tensor&>(x)),
                                     t.leaf(static_cast<const Tensor&>(k)),
                                     t.leaf(static_cast<const Tensor&>(b)), mode),
                     w);
    };
    out.push_back(check(mode == PaddingMode::Circular ? "circular_conv" : "zero_padded_conv", "op", f,
                        {&x, &k, &b}));
  }
}

template <typename Params>
GradSuiteEntry module_entry(const std::string& name, Params& p, Shape in, Shape out,
                            const std::function<Var(Var)>& fwd, Rng& rng) {
  std::vector<Tensor*> params = generic_point(p, rng);
  Tensor x = uniform(in, rng);
  Tensor w = uniform(out, rng);
  params.push_back(&x);
  LossBuilder f = [&](Tape& t) { return project(fwd(t.leaf(static_cast<const Tensor&>(x))), w); };
  return check(name, "module", f, params);
}

void module_entries(std::vector<GradSuiteEntry>& out, Rng& rng) {
  const std::size_t M = 3, L = 8, F = 8, d_s = 4;
  for (bool per_var : {false, true}) {
    TcnParams p = TcnParams::init(M, 2, 2, per_var, rng);
    out.push_back(module_entry(per_var ? "tcn_per_variable" : "tcn", p, {M, L}, {M, L},
                               [&](Var x) { return tcn_forward(x, p); }, rng));
  }
  {
    ScnParams p = ScnParams::init(L, d_s, {3, 3}, PaddingMode::Circular, rng);
    out.push_back(module_entry("scn", p, {L, M}, {d_s, M}, [&](Var x) { return scn_forward(x, p); }, rng));
  }
  {
    StcnParams p = StcnParams::init(M, L, F, d_s, 2, 2, false, {3, 3}, PaddingMode::Circular, rng);
    out.push_back(module_entry("stcn", p, {M, L}, {M, F}, [&](Var x) { return stcn_forward(x, p); }, rng));
  }
  {
    MaskBlockParams p = MaskBlockParams::init(F, 2 * F, 2, rng);
    out.push_back(module_entry("seq_mask", p, {M, F}, {M, F}, [&](Var v) { return seq_mask(v, p, kEps); }, rng));
  }
  {
    struct Both {
      AttnParams attn;
      MaskBlockParams mask;
      void visit(const std::string& prefix, const ParamVisitor& fn) {
        attn.visit(prefix + ".attn", fn);
        mask.visit(prefix + ".mask", fn);
      }
    } p{AttnParams::init(F, rng), MaskBlockParams::init(F, 2 * F, 1, rng)};
    out.push_back(module_entry("masked_attention", p, {M, F}, {M, F},
                               [&](Var x) { return masked_attention(x, p.attn, p.mask, kEps); }, rng));
  }
  {
    AttnParams p = AttnParams::init(F, rng);
    out.push_back(module_entry("full_attention", p, {M, F}, {M, F},
                               [&](Var x) { return full_attention(x, p, kEps); }, rng));
  }
}

}  // namespace

ModelConfig gradcheck_toy_config(AblationVariant variant) {
  ModelConfig cfg;
  cfg.M = 3;
  cfg.T = 8;
  cfg.K = 2;
  cfg.F = 8;
  cfg.d_s = 4;
  cfg.n_blocks = 1;
  cfg.n_mask_blocks = 1;
  cfg.scn_kernels = {3, 3};
  cfg.variant = variant;
  return cfg;
}

GradSuiteEntry model_gradcheck(const ModelConfig& cfg, std::uint64_t seed) {
  ModelParams p = init_params(cfg, seed);
  Rng jitter(seed + 1);
  std::vector<Tensor*> params;
  for (auto& [name, t] : p.named()) {
    if (is_bias(name)) *t = uniform(t->shape(), jitter, -0.2, 0.2);
    params.push_back(t);
  }
  Rng rng(seed + 2);
  Tensor x = uniform({cfg.M, cfg.T}, rng);
  Tensor target = uniform({cfg.M, cfg.K}, rng);
  params.push_back(&x);
  LossBuilder f = [&](Tape& t) {
    return mse_loss(forward(t.leaf(static_cast<const Tensor&>(x)), p, cfg), t.constant(target));
  };
  return check("model." + std::string(variant_name(cfg.variant)), "model", f, params);
}

std::vector<GradSuiteEntry> run_grad_suite(const GradSuiteOptions& opts) {
  std::vector<GradSuiteEntry> out;
  Rng rng(opts.seed);
  if (opts.ops) op_entries(out, rng);
  if (opts.modules) module_entries(out, rng);
  if (opts.models) {
    for (AblationVariant v : kAllVariants) out.push_back(model_gradcheck(gradcheck_toy_config(v), opts.seed));
  }
  return out;
}

GradSweep sweep_model_gradcheck(AblationVariant variant, std::uint64_t first, std::size_t count,
                                double tol) {
  GradSweep s;
  s.variant = variant;
  const ModelConfig cfg = gradcheck_toy_config(variant);
  for (std::uint64_t seed = first; seed < first + count; ++seed) {
    const GradSuiteEntry e = model_gradcheck(cfg, seed);
    ++s.seeds;
    if (e.passed(tol)) ++s.passed;
    if (e.passed(tol) || e.explained()) ++s.explained;
    s.worst_rel_error = std::max(s.worst_rel_error, e.result.max_rel_error);
  }
  return s;
}

}  // namespace stformer
