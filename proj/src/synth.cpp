#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "stformer/data.hpp"
#include "stformer/error.hpp"

namespace stformer {

namespace {

constexpr std::int64_t kSynthEpoch = 1577836800;  // 2020-01-01 00:00:00 UTC
constexpr std::int64_t kHour = 3600;

std::string key(std::size_t var, const char* what) { return "v" + std::to_string(var) + "." + what; }

void fill_sines(ForecastDataset& ds, std::mt19937_64& rng, double noise) {
  static constexpr std::size_t kPeriods[] = {6, 8, 12, 24};  // all divide 24
  std::uniform_int_distribution<std::size_t> pick(0, 3);
  std::uniform_real_distribution<double> amp(0.5, 1.5), phase(0.0, 2.0 * std::numbers::pi),
      offset(-0.5, 0.5);
  std::normal_distribution<double> eps(0.0, 1.0);
  for (std::size_t m = 0; m < ds.variables(); ++m) {
    const double p1 = static_cast<double>(kPeriods[pick(rng)]);
    const double p2 = static_cast<double>(kPeriods[pick(rng)]);
    const double a1 = amp(rng), a2 = 0.5 * amp(rng), f1 = phase(rng), f2 = phase(rng);
    const double c = offset(rng);
    ds.generator[key(m, "period1")] = p1;
    ds.generator[key(m, "period2")] = p2;
    ds.generator[key(m, "amp1")] = a1;
    ds.generator[key(m, "amp2")] = a2;
    ds.generator[key(m, "phase1")] = f1;
    ds.generator[key(m, "phase2")] = f2;
    ds.generator[key(m, "offset")] = c;
    for (std::size_t t = 0; t < ds.steps(); ++t) {
      const double tt = static_cast<double>(t);
      double v = c + a1 * std::sin(2.0 * std::numbers::pi * tt / p1 + f1) +
                 a2 * std::sin(2.0 * std::numbers::pi * tt / p2 + f2);
      if (noise > 0.0) v += noise * eps(rng);
      ds.series.at(m, t) = v;
    }
  }
  ds.frequency = 24;
}

void fill_ar1(ForecastDataset& ds, std::mt19937_64& rng, double noise, double coupling) {
  const std::size_t M = ds.variables();
  if (coupling < 0.0 || coupling >= 0.2) {
    throw ConfigError("ar1 coupling must lie in [0, 0.2) to keep the process stable, got " +
                      std::to_string(coupling));
  }
  std::uniform_real_distribution<double> phi_dist(0.4, 0.8), unit(0.0, 1.0);
  std::normal_distribution<double> eps(0.0, 1.0);
  // A = diag(phi) + off-diagonal rows scaled to total `coupling`; row sums stay below 1.
  std::vector<double> a(M * M, 0.0);
  for (std::size_t i = 0; i < M; ++i) {
    a[i * M + i] = phi_dist(rng);
    ds.generator[key(i, "phi")] = a[i * M + i];
    if (M == 1) continue;
    double total = 0.0;
    std::vector<double> w(M, 0.0);
    for (std::size_t j = 0; j < M; ++j)
      if (j != i) total += (w[j] = unit(rng));
    for (std::size_t j = 0; j < M; ++j) {
      if (j == i) continue;
      a[i * M + j] = total > 0.0 ? coupling * w[j] / total : 0.0;
      ds.generator["a." + std::to_string(i) + "." + std::to_string(j)] = a[i * M + j];
    }
  }
  std::vector<double> prev(M), cur(M);
  for (std::size_t i = 0; i < M; ++i) prev[i] = eps(rng);
  for (std::size_t t = 0; t < ds.steps(); ++t) {
    for (std::size_t i = 0; i < M; ++i) {
      double v = 0.0;
      for (std::size_t j = 0; j < M; ++j) v += a[i * M + j] * prev[j];
      cur[i] = v + noise * eps(rng);
      ds.series.at(i, t) = cur[i];
    }
    prev = cur;
  }
  ds.generator["coupling"] = coupling;
  ds.frequency = 1;
}

void fill_trend_season(ForecastDataset& ds, std::mt19937_64& rng, double noise) {
  std::uniform_real_distribution<double> level(-1.0, 1.0), slope(-2e-3, 2e-3), amp(0.5, 1.5),
      phase(0.0, 2.0 * std::numbers::pi);
  std::normal_distribution<double> eps(0.0, 1.0);
  for (std::size_t m = 0; m < ds.variables(); ++m) {
    const double l = level(rng), s = slope(rng), a = amp(rng), f = phase(rng);
    ds.generator[key(m, "level")] = l;
    ds.generator[key(m, "slope")] = s;
    ds.generator[key(m, "amp")] = a;
    ds.generator[key(m, "phase")] = f;
    for (std::size_t t = 0; t < ds.steps(); ++t) {
      const double tt = static_cast<double>(t);
      double v = l + s * tt + a * std::sin(2.0 * std::numbers::pi * tt / 24.0 + f);
      if (noise > 0.0) v += noise * eps(rng);
      ds.series.at(m, t) = v;
    }
  }
  ds.generator["season_period"] = 24;
  ds.frequency = 24;
}

}  // namespace

std::string_view synth_kind_name(SynthKind k) {
  switch (k) {
    case SynthKind::Sines: return "sines";
    case SynthKind::Ar1: return "ar1";
    case SynthKind::TrendSeason: return "trend_season";
  }
  return "?";
}

SynthKind parse_synth_kind(std::string_view name) {
  for (SynthKind k : {SynthKind::Sines, SynthKind::Ar1, SynthKind::TrendSeason})
    if (synth_kind_name(k) == name) return k;
  throw UsageError("unknown synthetic kind '" + std::string(name) +
                   "' (expected sines, ar1 or trend_season)");
}

ForecastDataset synth(SynthKind kind, std::size_t M, std::size_t N, std::uint64_t seed,
                      const SynthOptions& options) {
  if (M == 0 || N == 0) throw ConfigError("synthetic data needs M >= 1 and N >= 1");
  if (!(options.noise >= 0.0)) throw ConfigError("synthetic noise must be >= 0");
  ForecastDataset ds;
  ds.series = Tensor({M, N});
  for (std::size_t m = 0; m < M; ++m) ds.names.push_back("v" + std::to_string(m));
  ds.timestamps.reserve(N);
  for (std::size_t t = 0; t < N; ++t)
    ds.timestamps.push_back(format_timestamp(kSynthEpoch + static_cast<std::int64_t>(t) * kHour));
  ds.step_seconds = kHour;

  std::mt19937_64 rng(seed);
  switch (kind) {
    case SynthKind::Sines: fill_sines(ds, rng, options.noise); break;
    case SynthKind::Ar1: fill_ar1(ds, rng, options.noise, options.coupling); break;
    case SynthKind::TrendSeason: fill_trend_season(ds, rng, options.noise); break;
  }
  ds.generator["seed"] = static_cast<double>(seed);
  ds.generator["noise"] = options.noise;
  ds.set_split_ratios(options.ratios);
  return ds;
}

}  // namespace stformer
