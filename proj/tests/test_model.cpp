#include <gtest/gtest.h>

#include <algorithm>
#include <limits>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "stformer/error.hpp"
#include "stformer/gradcheck.hpp"
#include "stformer/model.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

namespace stformer {

// Found by argument-dependent lookup, so it lives outside the anonymous namespace.
void PrintTo(AblationVariant v, std::ostream* os) { *os << variant_name(v); }

namespace {

using test::random_tensor;

ModelConfig toy_config() {
  ModelConfig cfg;
  cfg.M = 3;
  cfg.T = 8;
  cfg.K = 2;
  cfg.F = 8;
  cfg.d_s = 4;
  cfg.n_blocks = 1;
  cfg.n_mask_blocks = 1;
  cfg.scn_kernels = {3, 3};
  return cfg;
}

std::vector<Tensor*> param_ptrs(ModelParams& p) {
  std::vector<Tensor*> out;
  for (auto& [name, t] : p.named()) out.push_back(t);
  return out;
}

void zero(Tensor& t) { std::fill(t.data().begin(), t.data().end(), 0.0); }

using oracle::config_grid;
using oracle::expected_shapes;
using oracle::shape_walk_count;

Tensor run(const Tensor& x, const ModelParams& p, const ModelConfig& cfg) {
  return predict(x, p, cfg);
}

// Gradient checks evaluate at a generic point: zero-initialized biases can
// leave a dead channel sitting exactly on a ReLU kink.
void jitter_biases(ModelParams& p, std::uint64_t seed) {
  Rng rng(seed);
  for (auto& [name, t] : p.named()) {
    if (name.size() >= 5 && name.compare(name.size() - 5, 5, ".bias") == 0)
      *t = random_tensor(t->shape(), rng, -0.2, 0.2);
  }
}

struct ModelCheck {
  GradCheckResult result;
  test::GradAudit audit;
};

// Gradient check on an MSE loss against a random target. The relative-error metric is
// reported as-is; every coordinate above tolerance must be accounted for by
// the audit (roundoff or a ReLU corner inside the finite-difference step).
ModelCheck model_gradcheck(const ModelConfig& cfg, std::uint64_t seed) {
  ModelParams p = init_params(cfg, seed);
  jitter_biases(p, seed + 1);
  Rng rng(seed + 2);
  Tensor x = random_tensor({cfg.M, cfg.T}, rng);
  Tensor target = random_tensor({cfg.M, cfg.K}, rng);
  std::vector<Tensor*> params = param_ptrs(p);
  params.push_back(&x);
  LossBuilder f = [&](Tape& t) {
    Var y = forward(t.leaf(static_cast<const Tensor&>(x)), p, cfg);
    return mse_loss(y, t.constant(target));
  };
  ModelCheck check{finite_diff_check(f, params), {}};
  check.audit = test::audit_gradcheck(check.result, f, params);
  return check;
}

void expect_gradients_agree(const ModelCheck& c, const std::string& what) {
  EXPECT_TRUE(c.result.finite) << what << ": " << c.result.failure;
  EXPECT_TRUE(c.audit.unexplained.empty())
      << what << ": " << c.audit.unexplained.size() << " unexplained, first "
      << c.audit.unexplained.front();
  ::testing::Test::RecordProperty(what + "_max_rel_error", std::to_string(c.result.max_rel_error));
}

// ---------------------------------------------------------------- forward

TEST(Model, DefaultConfigMapsLookbackToHorizon) {
  ModelConfig cfg;
  ModelParams p = init_params(cfg, 1);
  Rng rng(1);
  const Tensor out = run(random_tensor({7, 96}, rng), p, cfg);
  EXPECT_EQ(out.shape(), (Shape{7, 96}));
  EXPECT_TRUE(out.all_finite());
}

TEST(Model, ZeroWeightsGiveTheHeadBias) {
  ModelConfig cfg = toy_config();
  ModelParams p = init_params(cfg, 2);
  for (auto& [name, t] : p.named()) zero(*t);
  p.head.bias = Tensor::vector({0.25, -1.5});
  Rng rng(2);
  const Tensor out = run(random_tensor({3, 8}, rng), p, cfg);
  for (std::size_t m = 0; m < 3; ++m) {
    EXPECT_EQ(out.at(m, 0), 0.25);
    EXPECT_EQ(out.at(m, 1), -1.5);
  }
}

TEST(Model, WrongInputShapeIsRejected) {
  ModelConfig cfg = toy_config();
  ModelParams p = init_params(cfg, 3);
  EXPECT_THROW(run(Tensor({3, 9}), p, cfg), DimensionError);
  EXPECT_THROW(run(Tensor({2, 8}), p, cfg), DimensionError);
}

TEST(Model, MismatchedParametersAreAConfigError) {
  ModelConfig cfg = toy_config();
  ModelParams p = init_params(cfg, 4);
  ModelConfig other = cfg;
  other.variant = AblationVariant::NoStcn;
  EXPECT_THROW(run(Tensor({3, 8}), p, other), ConfigError);
  other = cfg;
  other.n_blocks = 2;
  EXPECT_THROW(run(Tensor({3, 8}), p, other), ConfigError);
}

TEST(Model, NonFiniteActivationNamesBlockAndSublayer) {
  ModelConfig cfg = toy_config();
  ModelParams p = init_params(cfg, 5);
  p.blocks[0].ffn.mlp5.bias[0] = std::numeric_limits<double>::infinity();
  Rng rng(5);
  try {
    run(random_tensor({3, 8}, rng), p, cfg);
    FAIL() << "expected NumericalError";
  } catch (const NumericalError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("block 0"), std::string::npos) << msg;
    EXPECT_NE(msg.find("ffn"), std::string::npos) << msg;
  }
}

TEST(Model, NoAttentionBypassesAttentionParameters) {
  ModelConfig cfg = toy_config();
  ModelParams p = init_params(cfg, 6);  // full Original parameter set
  jitter_biases(p, 7);
  ModelConfig bypass = cfg;
  bypass.variant = AblationVariant::NoAttention;
  Rng rng(6);
  Tensor x = random_tensor({3, 8}, rng);

  Tape tape;
  Var y = forward(tape.leaf(static_cast<const Tensor&>(x)), p, bypass);
  tape.backward(sum(hadamard(y, tape.constant(random_tensor({3, 2}, rng)))));
  bool norm_used = false;
  for (auto& [name, t] : p.named()) {
    auto g = tape.grad_of(*t);
    const bool attention = name.find(".attn.w_") != std::string::npos ||
                           name.find(".mask.") != std::string::npos;
    if (attention) {
      for (double v : g) EXPECT_EQ(v, 0.0) << name;
    }
    if (name.find(".attn.norm.") != std::string::npos)
      norm_used = norm_used || std::any_of(g.begin(), g.end(), [](double v) { return v != 0.0; });
  }
  EXPECT_TRUE(norm_used);

  // Same result as composing the blocks by hand with O_A = LayerNorm(h).
  const BlockParams& bp = p.blocks[0];
  Tape ref;
  Var h = stcn_forward(ref.leaf(static_cast<const Tensor&>(x)), *bp.stcn);
  Var a = bp.attn->norm.apply(h, cfg.ln_eps);
  Var o = bp.ffn.norm.apply(add(bp.ffn.mlp6.apply(relu(bp.ffn.mlp5.apply(a))), a), cfg.ln_eps);
  EXPECT_TRUE(p.head.apply(o).value().same_values(y.value()));
}

TEST(Model, SeededInitAndForwardAreDeterministic) {
  ModelConfig cfg = toy_config();
  ModelParams a = init_params(cfg, 42);
  ModelParams b = init_params(cfg, 42);
  ModelParams c = init_params(cfg, 43);
  auto na = a.named(), nb = b.named(), nc = c.named();
  ASSERT_EQ(na.size(), nb.size());
  bool any_diff = false;
  for (std::size_t i = 0; i < na.size(); ++i) {
    EXPECT_EQ(na[i].first, nb[i].first);
    EXPECT_TRUE(na[i].second->same_values(*nb[i].second)) << na[i].first;
    any_diff = any_diff || !na[i].second->same_values(*nc[i].second);
  }
  EXPECT_TRUE(any_diff);
  Rng rng(9);
  Tensor x = random_tensor({3, 8}, rng);
  EXPECT_TRUE(run(x, a, cfg).same_values(run(x, b, cfg)));
}

TEST(Model, DropoutOnlyActsInTraining) {
  ModelConfig cfg = toy_config();
  cfg.dropout = 0.3;
  ModelParams p = init_params(cfg, 10);
  Rng data(10);
  Tensor x = random_tensor({3, 8}, data);
  const Tensor eval = run(x, p, cfg);
  Rng r1(5), r2(5);
  Tape t1, t2;
  const Tensor tr1 = forward(t1.leaf(x), p, cfg, {true, &r1}).value();
  const Tensor tr2 = forward(t2.leaf(x), p, cfg, {true, &r2}).value();
  EXPECT_TRUE(tr1.same_values(tr2));
  EXPECT_FALSE(tr1.same_values(eval));
  Tape t3;
  EXPECT_THROW(forward(t3.leaf(x), p, cfg, {true, nullptr}), UsageError);
}

// ---------------------------------------------------------------- parameter count

TEST(ParamCount, HeadAloneForSmallSizes) {
  ModelConfig cfg = toy_config();
  cfg.F = 8;
  cfg.K = 4;
  ModelParams p = init_params(cfg, 11);
  EXPECT_EQ(p.head.weight.numel() + p.head.bias.numel(), 36u);
}

TEST(ParamCount, MatchesShapeWalkAcrossGrid) {
  for (const ModelConfig& cfg : config_grid(60, 12)) {
    const std::size_t oracle = shape_walk_count(cfg);
    EXPECT_EQ(param_count(cfg), oracle) << variant_name(cfg.variant);
    ModelParams p = init_params(cfg, 1);
    EXPECT_EQ(p.count(), oracle);
    std::vector<Shape> shapes;
    for (auto& [name, t] : p.named()) shapes.push_back(t->shape());
    EXPECT_EQ(shapes, expected_shapes(cfg)) << variant_name(cfg.variant);
  }
}

TEST(ParamCount, OriginalExceedsFullAttentionByTheMaskBlocks) {
  ModelConfig cfg;
  ModelConfig full = cfg;
  full.variant = AblationVariant::FullAttention;
  const std::size_t F = cfg.F, d_a = 2 * F, n = cfg.n_mask_blocks;
  const std::size_t per_block = 2 * F + n * (F * F + (F * d_a + d_a) + (d_a * F + F) + 2 * F);
  EXPECT_EQ(param_count(cfg) - param_count(full), cfg.n_blocks * per_block);
  EXPECT_EQ(mask_param_count(cfg), per_block);
}

TEST(ParamCount, InvalidConfigListsTheViolation) {
  ModelConfig cfg;
  cfg.F = 7;
  try {
    param_count(cfg);
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("F must be even"), std::string::npos) << e.what();
  }
  EXPECT_THROW(init_params(cfg, 0), ConfigError);
}

TEST(ParamCount, NamesAreUnique) {
  ModelParams p = init_params(ModelConfig{}, 13);
  std::vector<std::string> names;
  for (auto& [name, t] : p.named()) names.push_back(name);
  std::sort(names.begin(), names.end());
  EXPECT_EQ(std::adjacent_find(names.begin(), names.end()), names.end());
}

// ---------------------------------------------------------------- properties

TEST(ModelProperty, EveryGridConfigForwardsToHorizon) {
  std::size_t univariate = 0;
  for (const ModelConfig& cfg : config_grid(60, 14)) {
    ModelParams p = init_params(cfg, 3);
    Rng rng(cfg.M * 131 + cfg.T);
    const Tensor out = run(random_tensor({cfg.M, cfg.T}, rng), p, cfg);
    EXPECT_EQ(out.shape(), (Shape{cfg.M, cfg.K}));
    EXPECT_TRUE(out.all_finite());
    if (cfg.M == 1) ++univariate;
  }
  EXPECT_GT(univariate, 0u);
}

TEST(ModelProperty, UnivariateRunsEndToEnd) {
  ModelConfig cfg = toy_config();
  cfg.M = 1;
  cfg = cfg.with_clamped_scn_kernels();
  EXPECT_EQ(cfg.scn_kernels, (std::vector<std::size_t>{1, 1}));
  ModelParams p = init_params(cfg, 15);
  Rng rng(15);
  EXPECT_EQ(run(random_tensor({1, 8}, rng), p, cfg).shape(), (Shape{1, 2}));
  expect_gradients_agree(model_gradcheck(cfg, 15), "univariate");
}

TEST(ModelProperty, StackedBlocksConsumeFeatureWidth) {
  for (std::size_t blocks : {2u, 3u}) {
    ModelConfig cfg = toy_config();
    cfg.n_blocks = blocks;
    cfg.T = 13;  // differs from F, so a wrong block-2 input length would throw
    ModelParams p = init_params(cfg, 16);
    ASSERT_TRUE(p.blocks[1].stcn);
    EXPECT_EQ(p.blocks[1].stcn->mlp1.weight.rows(), cfg.F);
    Rng rng(16);
    EXPECT_EQ(run(random_tensor({3, 13}, rng), p, cfg).shape(), (Shape{3, 2}));
  }
}

TEST(ModelGradient, ToyConfigEndToEnd) {
  const ModelCheck c = model_gradcheck(toy_config(), 17);
  expect_gradients_agree(c, "toy");
  EXPECT_GT(c.result.coords_checked, 500u);
}

class VariantTest : public ::testing::TestWithParam<AblationVariant> {};

TEST_P(VariantTest, ProducesHorizonAndPassesGradientCheck) {
  ModelConfig cfg = toy_config();
  cfg.variant = GetParam();
  ModelParams p = init_params(cfg, 18);
  Rng rng(18);
  EXPECT_EQ(run(random_tensor({3, 8}, rng), p, cfg).shape(), (Shape{3, 2}));
  expect_gradients_agree(model_gradcheck(cfg, 19), std::string(variant_name(cfg.variant)));
}

INSTANTIATE_TEST_SUITE_P(AllVariants, VariantTest, ::testing::ValuesIn(kAllVariants),
                         [](const auto& info) { return std::string(variant_name(info.param)); });

TEST(ModelGradient, MaskFromStcnAndPerVariableTcn) {
  ModelConfig cfg = toy_config();
  cfg.mask_source = MaskSource::Stcn;
  cfg.tcn_mixing = TcnMixing::PerVariable;
  cfg.n_blocks = 2;
  expect_gradients_agree(model_gradcheck(cfg, 20), "mask_from_stcn");
}

}  // namespace
}  // namespace stformer
