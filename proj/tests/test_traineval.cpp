#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "stformer/checkpoint.hpp"
#include "stformer/error.hpp"
#include "stformer/evaluate.hpp"
#include "stformer/metrics.hpp"
#include "stformer/optim.hpp"
#include "stformer/run_config.hpp"
#include "stformer/train.hpp"
#include "test_util.hpp"

namespace stformer {
namespace {

using test::random_tensor;

template <typename E, typename F>
std::string error_text(F&& f) {
  try {
    f();
  } catch (const E& e) {
    return e.what();
  }
  ADD_FAILURE() << "expected exception not thrown";
  return {};
}

// ---------------------------------------------------------------- Adam

// Straight-line scalar Adam.
struct ScalarAdam {
  double lr, b1, b2, eps, m = 0.0, v = 0.0;
  int t = 0;
  double step(double p, double g) {
    ++t;
    m = b1 * m + (1.0 - b1) * g;
    v = b2 * v + (1.0 - b2) * g * g;
    const double mh = m / (1.0 - std::pow(b1, t));
    const double vh = v / (1.0 - std::pow(b2, t));
    return p - lr * mh / (std::sqrt(vh) + eps);
  }
};

TEST(Adam, MatchesScalarReferenceFor100Steps) {
  Tensor p = Tensor::vector({-1.5});
  Adam adam({&p}, {0.05, 0.9, 0.999, 1e-8});
  ScalarAdam ref{0.05, 0.9, 0.999, 1e-8};
  double q = -1.5;
  for (int i = 0; i < 100; ++i) {
    const double g = 2.0 * (p[0] - 3.0);
    adam.step({{g}});
    q = ref.step(q, 2.0 * (q - 3.0));
    ASSERT_NEAR(p[0], q, 1e-12) << "step " << i + 1;
  }
  EXPECT_EQ(adam.steps(), 100u);
}

TEST(Adam, ConvexLossDecreasesMonotonically) {
  Tensor p = Tensor::vector({0.0});
  Adam adam({&p}, {0.05, 0.9, 0.999, 1e-8});
  double prev = 9.0;
  for (int i = 0; i < 50; ++i) {
    adam.step({{2.0 * (p[0] - 3.0)}});
    const double loss = (p[0] - 3.0) * (p[0] - 3.0);
    EXPECT_LT(loss, prev) << "step " << i + 1;
    prev = loss;
  }
}

TEST(Adam, ZeroLearningRateLeavesParameters) {
  std::mt19937_64 rng(1);
  Tensor p = random_tensor({3, 4}, rng);
  const Tensor before = p;
  Adam adam({&p}, {0.0, 0.9, 0.999, 1e-8});
  for (int i = 0; i < 10; ++i) adam.step({std::vector<double>(12, 0.7)});
  EXPECT_TRUE(p.same_values(before));
}

TEST(Adam, RejectsBadSettings) {
  Tensor p({1});
  EXPECT_THROW(Adam({&p}, {-1e-3, 0.9, 0.999, 1e-8}), ConfigError);
  EXPECT_THROW(Adam({&p}, {1e-3, 1.0, 0.999, 1e-8}), ConfigError);
  Adam ok({&p}, {});
  EXPECT_THROW(ok.step({}), DimensionError);
}

TEST(Adam, ClipGradNorm) {
  std::vector<std::vector<double>> g{{3.0}, {4.0}};
  EXPECT_DOUBLE_EQ(clip_grad_norm(g, 1.0), 5.0);
  EXPECT_NEAR(grad_norm(g), 1.0, 1e-15);
  EXPECT_DOUBLE_EQ(g[0][0], 0.6);
  std::vector<std::vector<double>> small{{0.1}};
  clip_grad_norm(small, 1.0);
  EXPECT_EQ(small[0][0], 0.1);
}

// ---------------------------------------------------------------- metrics

TEST(Metrics, MseMaeHandValues) {
  const Tensor y = Tensor::vector({0, 0}), yhat = Tensor::vector({1, 3});
  EXPECT_EQ(mse(y, yhat), 5.0);
  EXPECT_EQ(mae(y, yhat), 2.0);
  EXPECT_EQ(mse(y, y), 0.0);
  EXPECT_EQ(mae(yhat, yhat), 0.0);
  EXPECT_THROW(mse(y, Tensor::vector({1, 2, 3})), DimensionError);
  EXPECT_THROW(mae(Tensor({2, 1}), Tensor({1, 2})), DimensionError);
}

TEST(Metrics, MseMaeAreNonnegative) {
  std::mt19937_64 rng(2);
  for (int i = 0; i < 100; ++i) {
    const Tensor a = random_tensor({4, 5}, rng, -10, 10), b = random_tensor({4, 5}, rng, -10, 10);
    EXPECT_GE(mse(a, b), 0.0);
    EXPECT_GE(mae(a, b), 0.0);
  }
}

TEST(Metrics, SmapeHandValue) {
  const std::vector<double> y{100}, yhat{110};
  EXPECT_NEAR(smape(y, yhat), 2000.0 / 210.0, 1e-9);
  const std::vector<double> zeros{0, 0}, mixed{0, 1};
  EXPECT_EQ(smape(zeros, zeros), 0.0);                // 0 / 0 terms count as 0
  EXPECT_NEAR(smape(zeros, mixed), 100.0, 1e-12);     // (200 / 2) * (0 + 1)
  EXPECT_THROW(smape(y, zeros), DimensionError);
}

TEST(Metrics, SmapeIsSymmetric) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> d(-5, 5);
  for (int i = 0; i < 200; ++i) {
    std::vector<double> a(7), b(7);
    for (auto& v : a) v = d(rng);
    for (auto& v : b) v = d(rng);
    EXPECT_EQ(smape(a, b), smape(b, a));
  }
}

TEST(Metrics, MaseHandValue) {
  const std::vector<double> insample{1, 2, 3}, y{1, 2, 3}, yhat{2, 2, 2};
  EXPECT_NEAR(mase(y, yhat, insample, 1), 2.0 / 3.0, 1e-9);
  const std::vector<double> flat{4, 4, 4};
  EXPECT_THROW(mase(y, yhat, flat, 1), MetricError);
  EXPECT_THROW(mase(y, yhat, insample, 3), UsageError);
}

TEST(Metrics, OwaOfTheBaselineIsOne) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> d(1e-3, 1e3);
  for (int i = 0; i < 200; ++i) {
    const double s = d(rng), m = d(rng);
    EXPECT_EQ(owa(s, m, s, m), 1.0);
  }
  EXPECT_NEAR(owa(10, 1, 20, 4), 0.5 * (0.5 + 0.25), 1e-15);
  EXPECT_THROW(owa(1, 1, 0, 1), MetricError);
  EXPECT_THROW(owa(1, 1, 1, -1), MetricError);
}

// ---------------------------------------------------------------- train

ModelConfig tiny_model(std::size_t M = 2) {
  ModelConfig cfg;
  cfg.M = M;
  cfg.T = 12;
  cfg.K = 4;
  cfg.F = 8;
  cfg.d_s = 4;
  cfg.n_blocks = 1;
  cfg.n_mask_blocks = 1;
  cfg.tcn_layers = 2;
  cfg.scn_kernels = {std::min<std::size_t>(M, 3), std::min<std::size_t>(M, 3)};
  return cfg;
}

TrainConfig tiny_train(std::size_t steps = 20) {
  TrainConfig tc;
  tc.lr = 1e-2;
  tc.batch_size = 4;
  tc.max_steps = steps;
  tc.eval_every = 5;
  tc.seed = 9;
  return tc;
}

ForecastDataset tiny_data(std::size_t M = 2, std::size_t N = 200) { return synth(SynthKind::Sines, M, N, 5); }

TEST(Train, ZeroLearningRateLeavesParameters) {
  const ModelConfig cfg = tiny_model();
  const ModelParams init = init_params(cfg, 1);
  TrainConfig tc = tiny_train(7);
  tc.lr = 0.0;
  const TrainResult r = train(cfg, init, tiny_data(), tc);
  const auto a = init.named();
  const auto b = r.params.named();
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_TRUE(a[i].second->same_values(*b[i].second)) << a[i].first;
}

TEST(Train, SeededRunsAreBitIdentical) {
  const ModelConfig cfg = tiny_model();
  const ForecastDataset ds = tiny_data();
  const TrainResult a = train(cfg, init_params(cfg, 3), ds, tiny_train());
  const TrainResult b = train(cfg, init_params(cfg, 3), ds, tiny_train());
  EXPECT_EQ(serialize_checkpoint({cfg, a.params, a.normalizer}), serialize_checkpoint({cfg, b.params, b.normalizer}));
  EXPECT_EQ(a.data_checksum, b.data_checksum);
  ASSERT_EQ(a.history.size(), b.history.size());
  for (std::size_t i = 0; i < a.history.size(); ++i) EXPECT_EQ(a.history[i].train_loss, b.history[i].train_loss);
  TrainConfig other = tiny_train();
  other.seed = 10;
  EXPECT_NE(train(cfg, init_params(cfg, 3), ds, other).data_checksum, a.data_checksum);
}

TEST(Train, LossFallsOnNoiselessSines) {
  const ModelConfig cfg = tiny_model();
  SynthOptions o;
  o.noise = 0.0;
  const ForecastDataset ds = synth(SynthKind::Sines, 2, 200, 5, o);
  const TrainResult r = train(cfg, init_params(cfg, 4), ds, tiny_train(150));
  EXPECT_LT(r.history.back().train_loss, 0.2 * r.history.front().train_loss);
}

TEST(Train, ReturnsTheBestValidationCheckpoint) {
  const ModelConfig cfg = tiny_model();
  const ForecastDataset ds = tiny_data();
  TrainConfig tc = tiny_train(60);
  tc.lr = 5e-2;  // large enough for validation error to move both ways
  tc.patience = 3;
  const TrainResult r = train(cfg, init_params(cfg, 5), ds, tc);
  ASSERT_TRUE(r.best_val_mse.has_value());
  for (const HistoryRow& h : r.history)
    if (h.val_mse) EXPECT_LE(*r.best_val_mse, *h.val_mse);
  const auto again = split_mse(r.params, cfg, ds, r.normalizer, Split::Val, 1, false);
  EXPECT_EQ(*again, *r.best_val_mse);
}

TEST(Train, EarlyStoppingHonoursPatience) {
  const ModelConfig cfg = tiny_model();
  TrainConfig tc = tiny_train(400);
  tc.lr = 0.0;  // validation never improves after the first evaluation
  tc.patience = 2;
  const TrainResult r = train(cfg, init_params(cfg, 6), tiny_data(), tc);
  EXPECT_TRUE(r.stopped_early);
  EXPECT_EQ(r.steps, 15u);  // evaluations at 5, 10, 15
  EXPECT_EQ(r.best_step, 5u);
}

TEST(Train, DivergenceNamesStepAndLastFiniteLoss) {
  const ModelConfig cfg = tiny_model();
  TrainConfig tc = tiny_train(50);
  tc.lr = 1e300;
  const std::string msg = error_text<NumericalError>([&] { train(cfg, init_params(cfg, 7), tiny_data(), tc); });
  EXPECT_NE(msg.find("diverged at step"), std::string::npos) << msg;
  EXPECT_NE(msg.find("last finite loss"), std::string::npos) << msg;
}

TEST(Train, PreconditionsAreConfigErrors) {
  const ModelConfig cfg = tiny_model();
  EXPECT_THROW(train(cfg, init_params(cfg, 1), tiny_data(2, 15), tiny_train()), ConfigError);  // no train window
  EXPECT_THROW(train(cfg, init_params(cfg, 1), tiny_data(3), tiny_train()), ConfigError);      // M mismatch
  TrainConfig bad = tiny_train();
  bad.batch_size = 0;
  EXPECT_THROW(train(cfg, init_params(cfg, 1), tiny_data(), bad), ConfigError);
}

TEST(Train, WithoutValidationKeepsFinalParameters) {
  const ModelConfig cfg = tiny_model();
  SynthOptions o;
  o.ratios = {0.8, 0.0, 0.2};
  const ForecastDataset ds = synth(SynthKind::Sines, 2, 200, 5, o);
  const TrainResult r = train(cfg, init_params(cfg, 8), ds, tiny_train(5));
  EXPECT_FALSE(r.best_val_mse.has_value());
  EXPECT_EQ(r.steps, 5u);
  EXPECT_FALSE(r.warnings.empty());
}

TEST(Train, HistoryCsv) {
  const std::vector<HistoryRow> h{{1, 0.5, std::nullopt}, {2, 0.25, 0.125}};
  const auto path = std::filesystem::temp_directory_path() / "stformer_history_test.csv";
  write_history_csv(h, path);
  std::ifstream in(path);
  std::string all((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  std::filesystem::remove(path);
  EXPECT_EQ(all, "step,train_loss,val_mse\n1,0.5,\n2,0.25,0.125\n");
}

// ---------------------------------------------------------------- evaluate

TEST(Evaluate, NaiveOnARampByHand) {
  ForecastDataset ds;
  ds.series = Tensor::matrix({{0, 1, 2, 3, 4, 5}});
  ds.names = {"x"};
  ds.set_split_ratios({0.0, 0.0, 1.0});
  EvalOptions o;
  o.scale = MetricScale::Raw;
  o.m4_metrics = false;
  std::vector<std::string> w;
  const auto h = evaluate(naive_forecaster(), ds, Normalizer::identity(1), {2, 1, 1}, o, w);
  ASSERT_TRUE(h);
  EXPECT_EQ(h->windows, 4u);
  EXPECT_EQ(h->mse, 1.0);
  EXPECT_EQ(h->mae, 1.0);
}

TEST(Evaluate, MemorizedSinesScoreNearZero) {
  SynthOptions o;
  o.noise = 0.0;
  const ForecastDataset ds = synth(SynthKind::Sines, 3, 600, 2, o);
  const Normalizer norm = ds.fit_normalizer();
  std::vector<std::string> w;
  const auto perfect = evaluate(seasonal_naive_forecaster(24), ds, norm, {48, 24, 1}, {}, w);
  const auto naive = evaluate(naive_forecaster(), ds, norm, {48, 24, 1}, {}, w);
  ASSERT_TRUE(perfect && naive);
  EXPECT_LT(perfect->mse, 1e-6);
  EXPECT_GT(naive->mse, 0.0);
}

TEST(Evaluate, OwaAgainstItsOwnBaselineIsOne) {
  const ForecastDataset ds = synth(SynthKind::TrendSeason, 2, 500, 3);
  const Normalizer norm = ds.fit_normalizer();
  std::vector<std::string> w;
  const auto h = evaluate(seasonal_naive_forecaster(24), ds, norm, {48, 24, 4}, {}, w);
  ASSERT_TRUE(h && h->owa);
  EXPECT_EQ(*h->owa, 1.0);
  EvalOptions naive_base;
  naive_base.baseline = OwaBaseline::Naive;
  EXPECT_EQ(*evaluate(naive_forecaster(), ds, norm, {48, 24, 4}, naive_base, w)->owa, 1.0);
}

TEST(Evaluate, HorizonBeyondTheDataIsSkippedWithAWarning) {
  const ForecastDataset ds = tiny_data(2, 100);
  std::vector<std::string> w;
  EXPECT_FALSE(evaluate(naive_forecaster(), ds, ds.fit_normalizer(), {24, 96, 1}, {}, w).has_value());
  ASSERT_EQ(w.size(), 1u);
  EXPECT_NE(w[0].find("horizon 96 skipped"), std::string::npos);
}

TEST(Evaluate, ShortLookbackSkipsScaledMetrics) {
  const ForecastDataset ds = tiny_data(2, 300);
  std::vector<std::string> w;
  const auto h = evaluate(naive_forecaster(), ds, ds.fit_normalizer(), {12, 4, 1}, {}, w);
  ASSERT_TRUE(h);
  EXPECT_FALSE(h->mase.has_value());
  EXPECT_FALSE(w.empty());
}

TEST(Evaluate, FlatInSampleSeriesAreFlagged) {
  ForecastDataset ds;
  Tensor s({2, 60});
  for (std::size_t t = 0; t < 60; ++t) {
    s.at(0, t) = 1.0 + static_cast<double>(t % 5);
    s.at(1, t) = 7.0;
  }
  ds.series = s;
  ds.names = {"a", "b"};
  ds.frequency = 1;
  ds.set_split_ratios({0.0, 0.0, 1.0});
  std::vector<std::string> w;
  const auto h = evaluate(naive_forecaster(), ds, Normalizer::identity(2), {8, 2, 1}, {}, w);
  ASSERT_TRUE(h && h->mase);
  EXPECT_EQ(h->flagged_series, h->windows);  // every window of the constant variable
}

TEST(Evaluate, ModelForecasterChecksTheHorizon) {
  const ModelConfig cfg = tiny_model();
  const ModelParams p = init_params(cfg, 1);
  const Forecaster f = model_forecaster(p, cfg, Normalizer::identity(2), false);
  EXPECT_EQ(f(Tensor({2, 12}), 4).shape(), (Shape{2, 4}));
  EXPECT_THROW(f(Tensor({2, 12}), 5), DimensionError);
}

TEST(Report, AveragesAreThePerHorizonMean) {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> d(0.0, 3.0);
  MetricsReport r;
  for (std::size_t k : {96, 192, 336, 720}) {
    HorizonMetrics h;
    h.horizon = k;
    h.mse = d(rng);
    h.mae = d(rng);
    h.smape = d(rng);
    h.mase = d(rng);
    h.owa = d(rng);
    r.horizons.push_back(h);
  }
  r.finalize();
  double mse_sum = 0, mae_sum = 0, owa_sum = 0;
  for (const auto& h : r.horizons) {
    mse_sum += h.mse;
    mae_sum += h.mae;
    owa_sum += *h.owa;
  }
  EXPECT_NEAR(r.avg_mse, mse_sum / 4, 1e-12);
  EXPECT_NEAR(r.avg_mae, mae_sum / 4, 1e-12);
  EXPECT_NEAR(*r.avg_owa, owa_sum / 4, 1e-12);
  const auto j = r.to_json();
  EXPECT_EQ(j.at("horizons").size(), 4u);
  EXPECT_EQ(j.at("scale"), "normalized");
  EXPECT_DOUBLE_EQ(j.at("average").at("mse").get<double>(), r.avg_mse);
  const std::string table = r.to_table();
  EXPECT_NE(table.find("720"), std::string::npos);
  EXPECT_NE(table.find("avg"), std::string::npos);
}

TEST(Report, RunIdIsStableAndSensitive) {
  RunConfig a;
  RunConfig b = a;
  EXPECT_EQ(make_run_id(a.to_json()), make_run_id(b.to_json()));
  EXPECT_EQ(make_run_id(a.to_json()).size(), 12u);
  b.train.lr = 1e-3;
  EXPECT_NE(make_run_id(a.to_json()), make_run_id(b.to_json()));
}

// ---------------------------------------------------------------- ablation

TEST(Ablation, FiveRowsSharedDataAndMaskParameterGap) {
  ModelConfig cfg = tiny_model(3);
  const ForecastDataset ds = tiny_data(3, 200);
  const AblationResult r = run_ablation(ds, cfg, tiny_train(6), {});
  ASSERT_EQ(r.rows.size(), 5u);
  for (std::size_t i = 0; i < 5; ++i) {
    EXPECT_EQ(r.rows[i].variant, kAllVariants[i]);
    EXPECT_TRUE(r.rows[i].error.empty()) << r.rows[i].error;
    EXPECT_TRUE(r.rows[i].metrics.has_value());
  }
  EXPECT_TRUE(r.checksums_agree());
  EXPECT_EQ(r.rows[0].param_count - r.rows[1].param_count, cfg.n_blocks * mask_param_count(cfg));
  const auto j = r.to_json();
  std::vector<std::string> designs;
  for (const auto& row : j.at("rows")) designs.push_back(row.at("design"));
  EXPECT_EQ(designs, (std::vector<std::string>{"Original", "Replace", "Replace", "w/o", "w/o"}));
  EXPECT_NE(r.to_table().find("checksums agree"), std::string::npos);
}

TEST(Ablation, FailuresAreRecordedNotThrown) {
  const ModelConfig cfg = tiny_model(3);
  const AblationResult r = run_ablation(tiny_data(2, 200), cfg, tiny_train(2), {});
  ASSERT_EQ(r.rows.size(), 5u);
  for (const auto& row : r.rows) EXPECT_NE(row.error.find("variables"), std::string::npos) << row.error;
  EXPECT_FALSE(r.checksums_agree());
}

// ---------------------------------------------------------------- checkpoint

Checkpoint sample_checkpoint() {
  ModelConfig cfg = tiny_model();
  cfg.seed = 77;
  Checkpoint ck{cfg, init_params(cfg, 77), Normalizer::from_stats({1.5, -2.0}, {0.3, 4.0}), true,
                RunConfig{}.to_json()};
  std::mt19937_64 rng(3);
  for (auto& [name, t] : ck.params.named())
    for (double& v : t->data()) v = std::ldexp(std::uniform_real_distribution<double>(-1, 1)(rng), -20);
  return ck;
}

TEST(Checkpoint, RoundTripIsBitExact) {
  const Checkpoint ck = sample_checkpoint();
  const std::string bytes = serialize_checkpoint(ck);
  const Checkpoint back = deserialize_checkpoint(bytes);
  EXPECT_EQ(serialize_checkpoint(back), bytes);
  EXPECT_EQ(back.model, ck.model);
  EXPECT_TRUE(back.instance_norm);
  EXPECT_EQ(back.normalizer.mean(), ck.normalizer.mean());
  const auto a = ck.params.named(), b = back.params.named();
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_TRUE(a[i].second->same_values(*b[i].second)) << a[i].first;
}

TEST(Checkpoint, FileRoundTrip) {
  const Checkpoint ck = sample_checkpoint();
  const auto path = std::filesystem::temp_directory_path() / "stformer_test.ckpt";
  save_checkpoint(ck, path);
  const Checkpoint back = load_checkpoint(path);
  std::filesystem::remove(path);
  EXPECT_EQ(serialize_checkpoint(back), serialize_checkpoint(ck));
  EXPECT_THROW(load_checkpoint(path), ConfigError);
}

TEST(Checkpoint, VersionMismatchNamesBoth) {
  std::string bytes = serialize_checkpoint(sample_checkpoint());
  bytes[8] = 7;
  const std::string msg = error_text<IntegrityError>([&] { deserialize_checkpoint(bytes, "old.ckpt"); });
  EXPECT_NE(msg.find("expected 1, found 7"), std::string::npos) << msg;
}

TEST(Checkpoint, CorruptionIsDetected) {
  const std::string good = serialize_checkpoint(sample_checkpoint());
  std::string flipped = good;
  flipped[good.size() / 2] ^= 0x10;
  EXPECT_NE(error_text<IntegrityError>([&] { deserialize_checkpoint(flipped); }).find("checksum"),
            std::string::npos);
  EXPECT_THROW(deserialize_checkpoint(good.substr(0, good.size() - 9)), IntegrityError);
  EXPECT_THROW(deserialize_checkpoint("hello world, not a checkpoint"), IntegrityError);
  EXPECT_THROW(deserialize_checkpoint(""), IntegrityError);
}

// ---------------------------------------------------------------- run config

TEST(RunConfig, JsonRoundTrip) {
  RunConfig a;
  a.seed = 42;
  a.model.F = 16;
  a.model.variant = AblationVariant::NoStcn;
  a.train.lr = 1e-3;
  a.eval.horizons = {96, 192};
  a.eval.scale = MetricScale::Raw;
  const RunConfig b = RunConfig::from_json(a.to_json());
  EXPECT_EQ(b.to_json(), a.to_json());
  EXPECT_EQ(b.model.seed, 42u);
  EXPECT_EQ(b.train.seed, 42u);
}

TEST(RunConfig, UnknownKeySuggestsTheNearest) {
  const std::string msg = error_text<ConfigError>([] {
    RunConfig::from_json(nlohmann::json::parse(R"({"model": {"FF": 8}})"));
  });
  EXPECT_NE(msg.find("'model.FF'"), std::string::npos) << msg;
  EXPECT_NE(msg.find("did you mean 'model.F'"), std::string::npos) << msg;
  const std::string top = error_text<ConfigError>([] {
    RunConfig::from_json(nlohmann::json::parse(R"({"traen": {}})"));
  });
  EXPECT_NE(top.find("did you mean 'train'"), std::string::npos) << top;
}

TEST(RunConfig, WrongTypesAreRejected) {
  EXPECT_THROW(RunConfig::from_json(nlohmann::json::parse(R"({"model": {"F": -8}})")), ConfigError);
  EXPECT_THROW(RunConfig::from_json(nlohmann::json::parse(R"({"train": {"lr": "fast"}})")), ConfigError);
  EXPECT_THROW(RunConfig::from_json(nlohmann::json::parse(R"({"model": {"variant": "bogus"}})")), ConfigError);
  EXPECT_THROW(RunConfig::from_json(nlohmann::json::parse(R"([1, 2])")), ConfigError);
}

TEST(RunConfig, DottedOverrides) {
  RunConfig r = RunConfig::from_json(nlohmann::json::parse(R"({"train": {"lr": 0.0005}})"));
  r.set("train.lr", "0.001");
  EXPECT_EQ(r.train.lr, 0.001);
  r.set("model.scn_kernels", "1,1");
  EXPECT_EQ(r.model.scn_kernels, (std::vector<std::size_t>{1, 1}));
  r.set("model.variant", "full_attention");
  EXPECT_EQ(r.model.variant, AblationVariant::FullAttention);
  r.set("seed", "5");
  EXPECT_EQ(r.train.seed, 5u);
  EXPECT_NE(error_text<ConfigError>([&] { r.set("train.lrr", "1"); }).find("did you mean 'train.lr'"),
            std::string::npos);
  EXPECT_THROW(r.set("model.F", "eight"), ConfigError);
}

TEST(RunConfig, ResolveValidatesEverySection) {
  RunConfig r;
  r.resolve();
  r.model.F = 7;
  EXPECT_THROW(r.resolve(), ConfigError);
  r = RunConfig{};
  r.data.source = "csv";
  EXPECT_THROW(r.resolve(), ConfigError);
  r.data.path = "/nonexistent.csv";
  r.resolve();
  EXPECT_THROW(r.load_dataset(), ConfigError);
  r = RunConfig{};
  r.data.synth_kind = "square";
  EXPECT_THROW(r.resolve(), ConfigError);
}

TEST(RunConfig, Levenshtein) {
  EXPECT_EQ(levenshtein("kitten", "sitting"), 3u);
  EXPECT_EQ(levenshtein("", "abc"), 3u);
  EXPECT_EQ(levenshtein("same", "same"), 0u);
  EXPECT_EQ(nearest_key("batchsize", {"lr", "batch_size", "seed"}), "batch_size");
}

}  // namespace
}  // namespace stformer
