#include "stformer/data.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "stformer/error.hpp"

namespace stformer {

std::string_view split_name(Split s) {
  switch (s) {
    case Split::Train: return "train";
    case Split::Val: return "val";
    case Split::Test: return "test";
  }
  return "?";
}

std::array<SplitRange, 3> chronological_splits(std::size_t n, const SplitRatios& r) {
  const double total = r.train + r.val + r.test;
  if (r.train < 0 || r.val < 0 || r.test < 0 || std::abs(total - 1.0) > 1e-9) {
    throw ConfigError("split ratios must be nonnegative and sum to 1, got " +
                      std::to_string(r.train) + "/" + std::to_string(r.val) + "/" +
                      std::to_string(r.test));
  }
  const auto n_train = static_cast<std::size_t>(std::floor(r.train * static_cast<double>(n)));
  const auto n_val = static_cast<std::size_t>(std::floor(r.val * static_cast<double>(n)));
  return {SplitRange{0, n_train}, SplitRange{n_train, n_train + n_val},
          SplitRange{n_train + n_val, n}};
}

void ForecastDataset::set_split_ratios(const SplitRatios& ratios) {
  splits = chronological_splits(steps(), ratios);
}

void ForecastDataset::truncate(std::size_t n, const SplitRatios& ratios) {
  if (n < steps()) {
    Tensor cut({variables(), n});
    for (std::size_t r = 0; r < variables(); ++r)
      for (std::size_t t = 0; t < n; ++t) cut.at(r, t) = series.at(r, t);
    series = std::move(cut);
    if (timestamps.size() > n) timestamps.resize(n);
  }
  set_split_ratios(ratios);
}

Normalizer ForecastDataset::fit_normalizer() const {
  const SplitRange train = range(Split::Train);
  return Normalizer::fit(series, train.begin, train.end);
}

// ---------------------------------------------------------------- timestamps

namespace {

bool read_int(std::string_view& s, std::size_t digits, int& out) {
  if (s.size() < digits) return false;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + digits, out);
  if (ec != std::errc() || ptr != s.data() + digits) return false;
  s.remove_prefix(digits);
  return true;
}

bool expect(std::string_view& s, char c) {
  if (s.empty() || s.front() != c) return false;
  s.remove_prefix(1);
  return true;
}

}  // namespace

std::optional<std::int64_t> parse_timestamp(std::string_view s) {
  using namespace std::chrono;
  int y = 0, mo = 0, d = 0, hh = 0, mm = 0, ss = 0;
  if (!read_int(s, 4, y) || !expect(s, '-') || !read_int(s, 2, mo) || !expect(s, '-') ||
      !read_int(s, 2, d)) {
    return std::nullopt;
  }
  if (!s.empty()) {
    if (s.front() != ' ' && s.front() != 'T') return std::nullopt;
    s.remove_prefix(1);
    if (!read_int(s, 2, hh) || !expect(s, ':') || !read_int(s, 2, mm)) return std::nullopt;
    if (!s.empty() && (!expect(s, ':') || !read_int(s, 2, ss))) return std::nullopt;
    if (!s.empty()) return std::nullopt;
  }
  const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
  if (!ymd.ok() || hh > 23 || mm > 59 || ss > 59) return std::nullopt;
  const auto tp = sys_days{ymd} + hours{hh} + minutes{mm} + seconds{ss};
  return duration_cast<seconds>(tp.time_since_epoch()).count();
}

std::string format_timestamp(std::int64_t secs) {
  using namespace std::chrono;
  const sys_seconds tp{seconds{secs}};
  const auto day_start = floor<days>(tp);
  const year_month_day ymd{day_start};
  const long sod = static_cast<long>((tp - day_start).count());
  char buf[64];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u %02ld:%02ld:%02ld", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()), sod / 3600,
                sod / 60 % 60, sod % 60);
  return buf;
}

std::optional<std::size_t> seasonal_period(std::int64_t step) {
  switch (step) {
    case 600: return 144;     // 10 minutes, daily cycle
    case 900: return 96;      // 15 minutes
    case 1800: return 48;     // 30 minutes
    case 3600: return 24;     // hourly
    case 86400: return 7;     // daily, weekly cycle
    case 604800: return 52;   // weekly, yearly cycle
    default: return std::nullopt;
  }
}

// ---------------------------------------------------------------- CSV

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_fields(std::string_view line, char delim) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (true) {
    const std::size_t next = line.find(delim, pos);
    out.push_back(trim(line.substr(pos, next == std::string_view::npos ? next : next - pos)));
    if (next == std::string_view::npos) break;
    pos = next + 1;
  }
  return out;
}

}  // namespace

ForecastDataset parse_csv(std::string_view text, const CsvSchema& schema, std::string_view source) {
  const std::string where(source);
  if (text.substr(0, 3) == "\xEF\xBB\xBF") text.remove_prefix(3);

  std::vector<std::string_view> lines;
  for (std::size_t pos = 0; pos < text.size();) {
    const std::size_t nl = text.find('\n', pos);
    lines.push_back(text.substr(pos, nl == std::string_view::npos ? nl : nl - pos));
    if (nl == std::string_view::npos) break;
    pos = nl + 1;
  }
  while (!lines.empty() && trim(lines.back()).empty()) lines.pop_back();
  if (lines.empty()) throw ParseError(where + ": empty file");

  const auto header = split_fields(lines[0], schema.delimiter);
  if (header.size() < 2) {
    throw ParseError(where + ":1: expected a timestamp column and at least one variable, found " +
                     std::to_string(header.size()) + " column");
  }
  const std::size_t M = header.size() - 1;
  std::size_t rows = lines.size() - 1;
  if (schema.max_rows) rows = std::min(rows, *schema.max_rows);
  if (rows == 0) throw ParseError(where + ": no data rows after the header");

  ForecastDataset ds;
  for (std::size_t c = 1; c < header.size(); ++c) ds.names.emplace_back(header[c]);
  ds.series = Tensor({M, rows});
  ds.timestamps.reserve(rows);

  for (std::size_t r = 0; r < rows; ++r) {
    const std::size_t line_no = r + 2;
    const std::string at = where + ":" + std::to_string(line_no);
    if (trim(lines[r + 1]).empty()) throw ParseError(at + ": empty line");
    const auto fields = split_fields(lines[r + 1], schema.delimiter);
    if (fields.size() != header.size()) {
      throw ParseError(at + ": expected " + std::to_string(header.size()) + " fields, found " +
                       std::to_string(fields.size()));
    }
    ds.timestamps.emplace_back(fields[0]);
    for (std::size_t c = 1; c < fields.size(); ++c) {
      const std::string cell = at + ", column " + std::to_string(c + 1) + " (" + ds.names[c - 1] + ")";
      const std::string_view f = fields[c];
      if (f.empty()) throw ParseError(cell + ": missing value");
      double v = 0.0;
      const char* first = f.data() + (f.front() == '+' ? 1 : 0);
      auto [ptr, ec] = std::from_chars(first, f.data() + f.size(), v);
      if (ec != std::errc() || ptr != f.data() + f.size()) {
        throw ParseError(cell + ": not a number: '" + std::string(f) + "'");
      }
      if (!std::isfinite(v)) throw ParseError(cell + ": non-finite value '" + std::string(f) + "'");
      ds.series.at(c - 1, r) = v;
    }
  }

  // Regular spacing gives the sampling interval and, by convention, the season.
  if (rows >= 2) {
    std::optional<std::int64_t> prev = parse_timestamp(ds.timestamps[0]);
    std::optional<std::int64_t> step;
    bool regular = prev.has_value();
    for (std::size_t r = 1; r < rows && regular; ++r) {
      const auto cur = parse_timestamp(ds.timestamps[r]);
      if (!cur || *cur <= *prev || (step && *cur - *prev != *step)) regular = false;
      else step = *cur - *prev;
      prev = cur;
    }
    if (regular) ds.step_seconds = step;
  }
  ds.frequency = schema.frequency;
  if (!ds.frequency && ds.step_seconds) ds.frequency = seasonal_period(*ds.step_seconds);

  ds.set_split_ratios(schema.ratios);
  return ds;
}

ForecastDataset load_csv(const std::filesystem::path& path, const CsvSchema& schema) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_csv(buf.str(), schema, path.string());
}

std::string to_csv(const ForecastDataset& ds) {
  std::string out = "date";
  for (const auto& n : ds.names) out += "," + n;
  out += "\n";
  char buf[64];
  for (std::size_t t = 0; t < ds.steps(); ++t) {
    out += t < ds.timestamps.size() ? ds.timestamps[t] : std::to_string(t);
    for (std::size_t r = 0; r < ds.variables(); ++r) {
      auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, ds.series.at(r, t));
      out += ',';
      out.append(buf, ptr);
    }
    out += '\n';
  }
  return out;
}

void write_csv(const ForecastDataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << to_csv(ds);
  if (!out) throw Error("write failed for '" + path.string() + "'");
}

// ---------------------------------------------------------------- windows

std::size_t window_count(std::size_t len, const WindowSpec& spec) {
  if (spec.lookback == 0 || spec.horizon == 0 || spec.stride == 0) {
    throw ConfigError("window lookback, horizon and stride must all be >= 1");
  }
  const std::size_t span = spec.lookback + spec.horizon;
  return len < span ? 0 : (len - span) / spec.stride + 1;
}

std::vector<Window> windows(const Tensor& series, SplitRange range, const WindowSpec& spec) {
  if (range.end > series.cols() || range.begin > range.end) {
    throw UsageError("split range exceeds the series length " + std::to_string(series.cols()));
  }
  const std::size_t n = window_count(range.size(), spec);
  const std::size_t M = series.rows(), T = spec.lookback, K = spec.horizon;
  std::vector<Window> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t s = range.begin + i * spec.stride;
    Window w{Tensor({M, T}), Tensor({M, K}), s};
    for (std::size_t r = 0; r < M; ++r) {
      for (std::size_t t = 0; t < T; ++t) w.x.at(r, t) = series.at(r, s + t);
      for (std::size_t t = 0; t < K; ++t) w.y.at(r, t) = series.at(r, s + T + t);
    }
    out.push_back(std::move(w));
  }
  return out;
}

std::vector<Window> windows(const ForecastDataset& ds, const WindowSpec& spec, Split split) {
  return windows(ds.series, ds.range(split), spec);
}

}  // namespace stformer
