#include "stformer/train.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "stformer/error.hpp"
#include "stformer/optim.hpp"

namespace stformer {

void TrainConfig::validate() const {
  std::vector<std::string> bad;
  if (!(lr >= 0.0) || !std::isfinite(lr)) bad.push_back("lr must be finite and >= 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0)) bad.push_back("beta1 must lie in [0, 1)");
  if (!(beta2 >= 0.0 && beta2 < 1.0)) bad.push_back("beta2 must lie in [0, 1)");
  if (!(eps > 0.0)) bad.push_back("eps must be > 0");
  if (batch_size == 0) bad.push_back("batch_size must be >= 1");
  if (eval_every == 0) bad.push_back("eval_every must be >= 1");
  if (!(grad_clip >= 0.0)) bad.push_back("grad_clip must be >= 0");
  if (stride == 0) bad.push_back("stride must be >= 1");
  if (bad.empty()) return;
  std::string msg = "invalid train config:";
  for (const auto& b : bad) msg += "\n  - " + b;
  throw ConfigError(msg);
}

std::uint64_t fnv1a(std::span<const unsigned char> bytes, std::uint64_t h) {
  for (unsigned char b : bytes) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  return h;
}

namespace {

template <typename T>
std::uint64_t hash_value(const T& v, std::uint64_t h) {
  return fnv1a({reinterpret_cast<const unsigned char*>(&v), sizeof v}, h);
}

struct Prepared {
  Tensor x;
  Tensor y;
};

// Normalized input and target, with the window's own statistics applied on top when asked.
Prepared prepare(const Window& w, const Normalizer& norm, bool instance_norm) {
  Prepared p{norm.transform(w.x), norm.transform(w.y)};
  if (instance_norm) {
    const InstanceStats s = instance_normalize(p.x);
    for (std::size_t r = 0; r < p.y.rows(); ++r)
      for (std::size_t t = 0; t < p.y.cols(); ++t) p.y.at(r, t) = (p.y.at(r, t) - s.mean[r]) / s.std[r];
  }
  return p;
}

// Fisher-Yates driven by raw engine output, so the order does not depend on
// the standard library's distribution implementations.
void shuffle(std::vector<std::size_t>& idx, Rng& rng) {
  for (std::size_t i = idx.size(); i > 1; --i) std::swap(idx[i - 1], idx[rng() % i]);
}

std::string format_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

Tensor predict_normalized(const Tensor& x, const ModelParams& params, const ModelConfig& cfg,
                          bool instance_norm) {
  if (!instance_norm) return predict(x, params, cfg);
  Tensor z = x;
  const InstanceStats s = instance_normalize(z);
  Tensor y = predict(z, params, cfg);
  instance_denormalize(y, s);
  return y;
}

std::optional<double> split_mse(const ModelParams& params, const ModelConfig& cfg,
                                const ForecastDataset& ds, const Normalizer& norm, Split split,
                                std::size_t stride, bool instance_norm) {
  const auto ws = windows(ds, {cfg.T, cfg.K, stride}, split);
  if (ws.empty()) return std::nullopt;
  double total = 0.0;
  for (const Window& w : ws) {
    const Tensor x = norm.transform(w.x);
    const Tensor y = norm.transform(w.y);
    const Tensor yhat = predict_normalized(x, params, cfg, instance_norm);
    double s = 0.0;
    for (std::size_t i = 0; i < y.numel(); ++i) s += (yhat[i] - y[i]) * (yhat[i] - y[i]);
    total += s / static_cast<double>(y.numel());
  }
  return total / static_cast<double>(ws.size());
}

TrainResult train(const ModelConfig& cfg, ModelParams params, const ForecastDataset& ds,
                  const TrainConfig& tc, const StepCallback& on_step) {
  cfg.validate();
  tc.validate();
  if (ds.variables() != cfg.M) {
    throw ConfigError("model expects M = " + std::to_string(cfg.M) + " variables but the dataset has " +
                      std::to_string(ds.variables()));
  }
  const auto start = std::chrono::steady_clock::now();
  const WindowSpec spec{cfg.T, cfg.K, tc.stride};
  const auto train_windows = windows(ds, spec, Split::Train);
  if (train_windows.empty()) {
    throw ConfigError("train split of " + std::to_string(ds.range(Split::Train).size()) +
                      " steps holds no window of T + K = " + std::to_string(cfg.T + cfg.K));
  }

  TrainResult result;
  result.normalizer = ds.fit_normalizer();
  std::vector<Prepared> data;
  data.reserve(train_windows.size());
  for (const Window& w : train_windows) data.push_back(prepare(w, result.normalizer, tc.instance_norm));
  const bool has_val = window_count(ds.range(Split::Val).size(), spec) > 0;
  if (!has_val) result.warnings.push_back("validation split holds no window; keeping the final parameters");

  std::vector<Tensor*> ptrs;
  for (auto& [name, t] : params.named()) ptrs.push_back(t);
  Adam adam(ptrs, {tc.lr, tc.beta1, tc.beta2, tc.eps});
  std::vector<std::vector<double>> grads(ptrs.size());
  for (std::size_t i = 0; i < ptrs.size(); ++i) grads[i].assign(ptrs[i]->numel(), 0.0);

  Rng rng(tc.seed);
  std::uint64_t checksum = fnv1a({reinterpret_cast<const unsigned char*>(ds.series.data().data()),
                                  ds.series.numel() * sizeof(double)});
  std::vector<std::size_t> order(data.size());
  std::size_t cursor = order.size();  // forces a shuffle before the first batch
  double last_finite = std::numeric_limits<double>::quiet_NaN();
  std::size_t since_best = 0;
  std::optional<ModelParams> best;

  for (std::size_t step = 1; step <= tc.max_steps; ++step) {
    for (auto& g : grads) std::fill(g.begin(), g.end(), 0.0);
    std::vector<std::size_t> batch;
    while (batch.size() < tc.batch_size && batch.size() < data.size()) {
      if (cursor == order.size()) {
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        shuffle(order, rng);
        cursor = 0;
      }
      batch.push_back(order[cursor++]);
    }
    const double inv_b = 1.0 / static_cast<double>(batch.size());
    double loss = 0.0;
    try {
      for (std::size_t idx : batch) {
        checksum = hash_value(static_cast<std::uint64_t>(train_windows[idx].start), checksum);
        Tape tape;
        ForwardOptions fo{true, &rng};
        Var out = forward(tape.constant(data[idx].x), params, cfg, fo);
        Var l = mse_loss(out, tape.constant(data[idx].y));
        loss += l.value().item() * inv_b;
        tape.backward(l);
        for (std::size_t i = 0; i < ptrs.size(); ++i) {
          const auto g = tape.grad_of(*ptrs[i]);
          for (std::size_t j = 0; j < g.size(); ++j) grads[i][j] += g[j] * inv_b;
        }
      }
    } catch (const NumericalError& e) {
      throw NumericalError("training diverged at step " + std::to_string(step) + " (" + e.what() +
                           "); last finite loss " + format_double(last_finite));
    }
    if (!std::isfinite(loss) || !std::isfinite(grad_norm(grads))) {
      throw NumericalError("training diverged at step " + std::to_string(step) + ": loss " +
                           format_double(loss) + ", last finite loss " + format_double(last_finite));
    }
    last_finite = loss;
    if (tc.grad_clip > 0.0) clip_grad_norm(grads, tc.grad_clip);
    adam.step(grads);
    result.steps = step;
    if (on_step) on_step(step, loss);

    HistoryRow row{step, loss, std::nullopt};
    if (has_val && (step % tc.eval_every == 0 || step == tc.max_steps)) {
      row.val_mse = split_mse(params, cfg, ds, result.normalizer, Split::Val, tc.stride, tc.instance_norm);
      if (!result.best_val_mse || *row.val_mse < *result.best_val_mse) {
        result.best_val_mse = row.val_mse;
        result.best_step = step;
        best = params;
        since_best = 0;
      } else {
        ++since_best;
      }
    }
    result.history.push_back(row);
    if (tc.patience > 0 && since_best >= tc.patience) {
      result.stopped_early = true;
      break;
    }
  }

  result.params = best ? std::move(*best) : std::move(params);
  result.data_checksum = checksum;
  result.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

void write_history_csv(const std::vector<HistoryRow>& history, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << "step,train_loss,val_mse\n";
  for (const HistoryRow& r : history) {
    out << r.step << ',' << format_double(r.train_loss) << ',';
    if (r.val_mse) out << format_double(*r.val_mse);
    out << '\n';
  }
}

}  // namespace stformer
