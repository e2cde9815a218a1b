#include "stformer/evaluate.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "stformer/error.hpp"
#include "stformer/metrics.hpp"

namespace stformer {

using nlohmann::json;

std::string_view metric_scale_name(MetricScale s) {
  return s == MetricScale::Normalized ? "normalized" : "raw";
}

MetricScale parse_metric_scale(std::string_view name) {
  if (name == "normalized") return MetricScale::Normalized;
  if (name == "raw") return MetricScale::Raw;
  throw ConfigError("unknown metric scale '" + std::string(name) + "' (expected normalized or raw)");
}

std::string_view owa_baseline_name(OwaBaseline b) {
  return b == OwaBaseline::SeasonalNaive ? "seasonal_naive" : "naive";
}

OwaBaseline parse_owa_baseline(std::string_view name) {
  if (name == "seasonal_naive") return OwaBaseline::SeasonalNaive;
  if (name == "naive") return OwaBaseline::Naive;
  throw ConfigError("unknown owa baseline '" + std::string(name) + "' (expected seasonal_naive or naive)");
}

namespace {

Tensor seasonal_extend(const Tensor& x, std::size_t m, std::size_t K) {
  if (x.cols() < m) throw DimensionError("seasonal naive needs a lookback of at least " + std::to_string(m));
  Tensor y({x.rows(), K});
  const std::size_t T = x.cols();
  for (std::size_t r = 0; r < x.rows(); ++r)
    for (std::size_t k = 0; k < K; ++k) y.at(r, k) = x.at(r, T - m + k % m);
  return y;
}

}  // namespace

Forecaster model_forecaster(const ModelParams& params, const ModelConfig& cfg, const Normalizer& norm,
                            bool instance_norm) {
  return [&params, cfg, norm, instance_norm](const Tensor& x, std::size_t K) {
    if (K != cfg.K) {
      throw DimensionError("model predicts " + std::to_string(cfg.K) + " steps, asked for " + std::to_string(K));
    }
    return predict_window(x, params, cfg, norm, instance_norm);
  };
}

Forecaster seasonal_naive_forecaster(std::size_t m) {
  if (m == 0) throw ConfigError("seasonal period must be >= 1");
  return [m](const Tensor& x, std::size_t K) { return seasonal_extend(x, m, K); };
}

Forecaster naive_forecaster() { return seasonal_naive_forecaster(1); }

namespace {

std::string fmt(double v, int precision = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", precision, v);
  return buf;
}

std::string fmt(const std::optional<double>& v) { return v ? fmt(*v) : "-"; }

json opt_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json horizon_json(const HorizonMetrics& h) {
  return {{"horizon", h.horizon}, {"windows", h.windows}, {"mse", h.mse}, {"mae", h.mae},
          {"smape", opt_json(h.smape)}, {"mase", opt_json(h.mase)}, {"owa", opt_json(h.owa)},
          {"flagged_series", h.flagged_series}};
}

std::string render(const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> width;
  for (const auto& r : rows) {
    width.resize(std::max(width.size(), r.size()), 0);
    for (std::size_t c = 0; c < r.size(); ++c) width[c] = std::max(width[c], r[c].size());
  }
  std::string out;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t c = 0; c < rows[i].size(); ++c) {
      const std::string& cell = rows[i][c];
      out += c == 0 ? cell + std::string(width[c] - cell.size(), ' ')
                    : "  " + std::string(width[c] - cell.size(), ' ') + cell;
    }
    out += '\n';
    if (i == 0) {
      std::size_t total = 0;
      for (std::size_t c = 0; c < width.size(); ++c) total += width[c] + (c ? 2 : 0);
      out += std::string(total, '-') + '\n';
    }
  }
  return out;
}

}  // namespace

std::optional<HorizonMetrics> evaluate(const Forecaster& f, const ForecastDataset& ds,
                                       const Normalizer& norm, const WindowSpec& spec,
                                       const EvalOptions& opts, std::vector<std::string>& warnings) {
  const auto ws = windows(ds, spec, opts.split);
  if (ws.empty()) {
    warnings.push_back("horizon " + std::to_string(spec.horizon) + " skipped: " +
                       std::string(split_name(opts.split)) + " split of " +
                       std::to_string(ds.range(opts.split).size()) + " steps holds no window of " +
                       std::to_string(spec.lookback + spec.horizon));
    return std::nullopt;
  }
  const std::size_t m = ds.frequency.value_or(1);
  const std::size_t base_m = opts.baseline == OwaBaseline::SeasonalNaive ? m : 1;
  bool m4 = opts.m4_metrics;
  if (m4 && spec.lookback <= m) {
    warnings.push_back("smape/mase/owa skipped for horizon " + std::to_string(spec.horizon) +
                       ": lookback " + std::to_string(spec.lookback) +
                       " does not exceed the seasonal period " + std::to_string(m));
    m4 = false;
  }

  HorizonMetrics h;
  h.horizon = spec.horizon;
  h.windows = ws.size();
  double sq = 0.0, ab = 0.0;
  std::size_t count = 0;
  double s_sum = 0.0, m_sum = 0.0, bs_sum = 0.0, bm_sum = 0.0;
  std::size_t s_n = 0, m_n = 0;
  for (const Window& w : ws) {
    Tensor yhat = f(w.x, spec.horizon);
    if (yhat.shape() != w.y.shape()) {
      throw DimensionError("forecast " + shape_string(yhat.shape()) + " does not match target " +
                           shape_string(w.y.shape()));
    }
    const Tensor& y_cmp = opts.scale == MetricScale::Raw ? w.y : norm.transform(w.y);
    const Tensor yhat_cmp = opts.scale == MetricScale::Raw ? yhat : norm.transform(yhat);
    for (std::size_t i = 0; i < y_cmp.numel(); ++i) {
      const double d = yhat_cmp[i] - y_cmp[i];
      sq += d * d;
      ab += std::abs(d);
    }
    count += y_cmp.numel();
    if (!m4) continue;
    const Tensor base = seasonal_extend(w.x, base_m, spec.horizon);
    const std::size_t K = spec.horizon, T = spec.lookback;
    for (std::size_t r = 0; r < w.y.rows(); ++r) {
      const std::span<const double> y{&w.y.data()[r * K], K};
      const std::span<const double> p{&yhat.data()[r * K], K};
      const std::span<const double> b{&base.data()[r * K], K};
      const std::span<const double> ins{&w.x.data()[r * T], T};
      s_sum += smape(y, p);
      bs_sum += smape(y, b);
      ++s_n;
      try {
        const double mv = mase(y, p, ins, m);
        const double bv = mase(y, b, ins, m);
        m_sum += mv;
        bm_sum += bv;
        ++m_n;
      } catch (const MetricError&) {
        ++h.flagged_series;
      }
    }
  }
  h.mse = sq / static_cast<double>(count);
  h.mae = ab / static_cast<double>(count);
  if (m4) {
    h.smape = s_sum / static_cast<double>(s_n);
    const double base_smape = bs_sum / static_cast<double>(s_n);
    if (h.flagged_series > 0) {
      warnings.push_back(std::to_string(h.flagged_series) + " series flagged for horizon " +
                         std::to_string(spec.horizon) + ": zero in-sample seasonal-naive error, excluded from mase");
    }
    if (m_n > 0) {
      h.mase = m_sum / static_cast<double>(m_n);
      const double base_mase = bm_sum / static_cast<double>(m_n);
      try {
        h.owa = owa(*h.smape, *h.mase, base_smape, base_mase);
      } catch (const MetricError& e) {
        warnings.push_back("owa for horizon " + std::to_string(spec.horizon) + ": " + e.what());
      }
    }
  }
  return h;
}

void MetricsReport::finalize() {
  avg_mse = avg_mae = 0.0;
  avg_smape.reset();
  avg_mase.reset();
  avg_owa.reset();
  if (horizons.empty()) return;
  auto mean_of = [this](auto get) -> std::optional<double> {
    double s = 0.0;
    std::size_t n = 0;
    for (const auto& h : horizons)
      if (const std::optional<double> v = get(h)) {
        s += *v;
        ++n;
      }
    return n ? std::optional<double>(s / static_cast<double>(n)) : std::nullopt;
  };
  avg_mse = *mean_of([](const HorizonMetrics& h) { return std::optional<double>(h.mse); });
  avg_mae = *mean_of([](const HorizonMetrics& h) { return std::optional<double>(h.mae); });
  avg_smape = mean_of([](const HorizonMetrics& h) { return h.smape; });
  avg_mase = mean_of([](const HorizonMetrics& h) { return h.mase; });
  avg_owa = mean_of([](const HorizonMetrics& h) { return h.owa; });
}

json MetricsReport::to_json() const {
  json hs = json::array();
  for (const auto& h : horizons) hs.push_back(horizon_json(h));
  return {{"run_id", run_id},
          {"model", model},
          {"scale", metric_scale_name(scale)},
          {"horizons", hs},
          {"average",
           {{"mse", avg_mse}, {"mae", avg_mae}, {"smape", opt_json(avg_smape)},
            {"mase", opt_json(avg_mase)}, {"owa", opt_json(avg_owa)}}},
          {"warnings", warnings},
          {"runtime_seconds", runtime_seconds},
          {"config", config}};
}

std::string MetricsReport::to_table() const {
  std::vector<std::vector<std::string>> rows{{"horizon", "windows", "mse", "mae", "smape", "mase", "owa"}};
  for (const auto& h : horizons) {
    rows.push_back({std::to_string(h.horizon), std::to_string(h.windows), fmt(h.mse), fmt(h.mae),
                    fmt(h.smape), fmt(h.mase), fmt(h.owa)});
  }
  rows.push_back({"avg", "", fmt(avg_mse), fmt(avg_mae), fmt(avg_smape), fmt(avg_mase), fmt(avg_owa)});
  std::string out = "run " + run_id + "  model " + model + "  scale " +
                    std::string(metric_scale_name(scale)) + "  runtime " + fmt(runtime_seconds, 4) + " s\n";
  out += render(rows);
  for (const auto& w : warnings) out += "warning: " + w + "\n";
  return out;
}

void MetricsReport::write(const std::filesystem::path& dir, const std::string& stem) const {
  std::ofstream j(dir / (stem + ".json"));
  std::ofstream t(dir / (stem + ".txt"));
  if (!j || !t) throw Error("cannot write report '" + (dir / stem).string() + "'");
  j << to_json().dump(2) << '\n';
  t << to_table();
}

std::string make_run_id(const json& resolved) {
  const std::string text = resolved.dump();
  const std::uint64_t h = fnv1a({reinterpret_cast<const unsigned char*>(text.data()), text.size()});
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf, 12);
}

bool AblationResult::checksums_agree() const {
  std::optional<std::uint64_t> first;
  for (const auto& r : rows) {
    if (!r.data_checksum) return false;
    if (first && *first != *r.data_checksum) return false;
    first = r.data_checksum;
  }
  return first.has_value();
}

json AblationResult::to_json() const {
  json out = json::array();
  for (const auto& r : rows) {
    const VariantLabel l = variant_label(r.variant);
    char sum[17];
    if (r.data_checksum) std::snprintf(sum, sizeof sum, "%016llx", static_cast<unsigned long long>(*r.data_checksum));
    out.push_back({{"variant", variant_name(r.variant)},
                   {"design", l.design},
                   {"temporal", l.temporal},
                   {"attention", l.attention},
                   {"param_count", r.param_count},
                   {"data_checksum", r.data_checksum ? json(sum) : json(nullptr)},
                   {"metrics", r.metrics ? horizon_json(*r.metrics) : json(nullptr)},
                   {"best_val_mse", opt_json(r.best_val_mse)},
                   {"seconds", r.seconds},
                   {"error", r.error.empty() ? json(nullptr) : json(r.error)}});
  }
  return {{"rows", out},
          {"naive", naive ? horizon_json(*naive) : json(nullptr)},
          {"checksums_agree", checksums_agree()},
          {"warnings", warnings},
          {"config", config}};
}

std::string AblationResult::to_table() const {
  std::vector<std::vector<std::string>> grid{
      {"design", "temporal", "attention", "params", "mse", "mae", "smape", "mase", "owa"}};
  for (const auto& r : rows) {
    const VariantLabel l = variant_label(r.variant);
    std::vector<std::string> row{std::string(l.design), std::string(l.temporal), std::string(l.attention),
                                 std::to_string(r.param_count)};
    if (r.metrics) {
      for (const std::string& s : {fmt(r.metrics->mse), fmt(r.metrics->mae), fmt(r.metrics->smape),
                                   fmt(r.metrics->mase), fmt(r.metrics->owa)})
        row.push_back(s);
    } else {
      row.push_back("failed: " + r.error);
    }
    grid.push_back(std::move(row));
  }
  if (naive) {
    grid.push_back({"naive", "-", "-", "0", fmt(naive->mse), fmt(naive->mae), fmt(naive->smape),
                    fmt(naive->mase), fmt(naive->owa)});
  }
  std::string out = render(grid);
  out += std::string("data checksums ") + (checksums_agree() ? "agree" : "DIFFER") + "\n";
  for (const auto& w : warnings) out += "warning: " + w + "\n";
  return out;
}

AblationResult run_ablation(const ForecastDataset& ds, const ModelConfig& base, const TrainConfig& tc,
                            const EvalOptions& opts) {
  AblationResult result;
  const WindowSpec spec{base.T, base.K, opts.stride};
  const Normalizer norm = ds.fit_normalizer();
  result.naive = evaluate(naive_forecaster(), ds, norm, spec, opts, result.warnings);
  for (AblationVariant v : kAllVariants) {
    AblationRow row;
    row.variant = v;
    const auto start = std::chrono::steady_clock::now();
    try {
      ModelConfig cfg = base;
      cfg.variant = v;
      cfg.validate();
      row.param_count = param_count(cfg);
      TrainResult tr = train(cfg, init_params(cfg, cfg.seed), ds, tc);
      row.data_checksum = tr.data_checksum;
      row.best_val_mse = tr.best_val_mse;
      std::vector<std::string> warnings;
      row.metrics = evaluate(model_forecaster(tr.params, cfg, tr.normalizer, tc.instance_norm), ds,
                             tr.normalizer, spec, opts, warnings);
      for (auto& w : warnings) result.warnings.push_back(std::string(variant_name(v)) + ": " + w);
    } catch (const Error& e) {
      row.error = e.what();
    }
    row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    result.rows.push_back(std::move(row));
  }
  return result;
}

}  // namespace stformer
