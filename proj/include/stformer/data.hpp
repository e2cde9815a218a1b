#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "stformer/normalizer.hpp"
#include "stformer/tensor.hpp"

namespace stformer {

enum class Split { Train, Val, Test };

std::string_view split_name(Split s);

/// Half-open column range [begin, end) of the series.
struct SplitRange {
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t size() const { return end - begin; }
};

struct SplitRatios {
  double train = 0.7;
  double val = 0.1;
  double test = 0.2;
};

/// Chronological split of n steps: floor(train * n), floor(val * n), and the rest.
std::array<SplitRange, 3> chronological_splits(std::size_t n, const SplitRatios& ratios);

struct ForecastDataset {
  std::vector<std::string> names;
  Tensor series;                        // [M x N] raw values
  std::vector<std::string> timestamps;  // one per step; may be empty
  std::optional<std::int64_t> step_seconds;  // inferred spacing of the timestamps
  std::optional<std::size_t> frequency;      // seasonal period m, used by MASE
  std::array<SplitRange, 3> splits{};
  /// Generative parameters of synthetic data, by name; empty for loaded files.
  std::map<std::string, double> generator;

  std::size_t variables() const { return series.rows(); }
  std::size_t steps() const { return series.cols(); }
  SplitRange range(Split s) const { return splits[static_cast<std::size_t>(s)]; }

  /// Recomputes the splits; throws ConfigError unless the ratios are
  /// nonnegative and sum to 1 within 1e-9.
  void set_split_ratios(const SplitRatios& ratios);
  /// Keeps the first `n` steps and recomputes the splits with `ratios`.
  void truncate(std::size_t n, const SplitRatios& ratios);
  /// Train-split z-score statistics.
  Normalizer fit_normalizer() const;
};

struct CsvSchema {
  char delimiter = ',';
  SplitRatios ratios;
  /// Read at most this many data rows.
  std::optional<std::size_t> max_rows;
  /// Seasonal period override; otherwise inferred from the timestamp spacing.
  std::optional<std::size_t> frequency;
};

/// Reads an ETT-style CSV: header row, timestamp column, then one numeric
/// column per variable. Throws ParseError with line and column on malformed
/// input (ragged rows, missing or non-numeric cells, empty file).
ForecastDataset load_csv(const std::filesystem::path& path, const CsvSchema& schema = {});
ForecastDataset parse_csv(std::string_view text, const CsvSchema& schema = {},
                          std::string_view source = "<memory>");

/// Writes the same layout; values use the shortest decimal form that reads
/// back to the identical double.
std::string to_csv(const ForecastDataset& ds);
void write_csv(const ForecastDataset& ds, const std::filesystem::path& path);

/// Seconds since the epoch for "YYYY-MM-DD[ HH:MM[:SS]]" (also with a 'T' separator).
std::optional<std::int64_t> parse_timestamp(std::string_view text);
std::string format_timestamp(std::int64_t seconds);
/// Seasonal period implied by a sampling interval: 24 for hourly, 96 for
/// 15-minute, 7 for daily, and so on; nullopt when no convention applies.
std::optional<std::size_t> seasonal_period(std::int64_t step_seconds);

struct WindowSpec {
  std::size_t lookback = 96;  // T
  std::size_t horizon = 96;   // K
  std::size_t stride = 1;
};

struct Window {
  Tensor x;  // [M x T]
  Tensor y;  // [M x K]
  std::size_t start = 0;  // column of x[:, 0] in the full series
};

/// floor((len - T - K) / stride) + 1 when len >= T + K, else 0.
std::size_t window_count(std::size_t len, const WindowSpec& spec);

/// Windows lying entirely inside `split`, in increasing start order.
std::vector<Window> windows(const ForecastDataset& ds, const WindowSpec& spec, Split split);
std::vector<Window> windows(const Tensor& series, SplitRange range, const WindowSpec& spec);

enum class SynthKind { Sines, Ar1, TrendSeason };

std::string_view synth_kind_name(SynthKind k);
/// Throws UsageError naming the accepted kinds.
SynthKind parse_synth_kind(std::string_view name);

struct SynthOptions {
  double noise = 0.05;     // std of additive Gaussian noise
  double coupling = 0.1;   // ar1: total off-diagonal weight per row
  SplitRatios ratios;
};

/// Seeded synthetic dataset with hourly timestamps from 2020-01-01.
///   sines        - two integer-period sinusoids per variable plus noise
///   ar1          - x_t = A x_{t-1} + e_t with A = diag(phi) + coupling
///   trend_season - linear trend plus a daily (24-step) season plus noise
/// The parameters drawn are stored in ForecastDataset::generator.
ForecastDataset synth(SynthKind kind, std::size_t M, std::size_t N, std::uint64_t seed,
                      const SynthOptions& options = {});

}  // namespace stformer
