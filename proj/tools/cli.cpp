#include "cli.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <sstream>

#include <nlohmann/json.hpp>

#include "stformer/checkpoint.hpp"
#include "stformer/data.hpp"
#include "stformer/error.hpp"
#include "stformer/evaluate.hpp"
#include "stformer/gradsuite.hpp"
#include "stformer/model.hpp"
#include "stformer/run_config.hpp"
#include "stformer/train.hpp"

namespace stformer::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Globals {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> lr;
  std::string run_id;
  std::string out_dir = "runs";
  bool force = false;
  std::vector<std::pair<std::string, CLI::Option*>> overrides;
  std::map<std::string, std::string> values;
};

// Output directory for one run. Artifacts are written into a hidden sibling
// and renamed into place by commit(); a failed run leaves nothing behind.
class RunDir {
 public:
  RunDir(fs::path final_dir, bool force) : final_(std::move(final_dir)) {
    if (fs::exists(final_) && !force) {
      throw ConfigError("output '" + final_.string() + "' already exists; pass --force to overwrite it");
    }
    const fs::path parent = final_.has_parent_path() ? final_.parent_path() : fs::path(".");
    if (!fs::exists(parent)) {
      fs::create_directories(parent);
      created_parent_ = parent;
    }
    staging_ = parent / ("." + final_.filename().string() + ".partial");
    fs::remove_all(staging_);
    fs::create_directory(staging_);
  }

  RunDir(const RunDir&) = delete;
  RunDir& operator=(const RunDir&) = delete;

  ~RunDir() {
    if (committed_) return;
    std::error_code ec;
    fs::remove_all(staging_, ec);
    if (created_parent_ && fs::is_empty(*created_parent_, ec)) fs::remove(*created_parent_, ec);
  }

  const fs::path& staging() const { return staging_; }
  fs::path file(const std::string& name) const { return staging_ / name; }
  const fs::path& final_path() const { return final_; }

  void commit() {
    fs::remove_all(final_);
    fs::rename(staging_, final_);
    committed_ = true;
  }

 private:
  fs::path final_;
  fs::path staging_;
  std::optional<fs::path> created_parent_;
  bool committed_ = false;
};

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw Error("cannot write '" + path.string() + "'");
}

// Writes next to `path` and renames, so a reader never sees half a file.
void write_text_atomic(const fs::path& path, const std::string& text, bool force) {
  if (fs::exists(path) && !force) {
    throw ConfigError("output '" + path.string() + "' already exists; pass --force to overwrite it");
  }
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".partial";
  write_text(tmp, text);
  fs::rename(tmp, path);
}

RunConfig load_config(const Globals& g, const json* base = nullptr) {
  RunConfig rc;
  if (!g.config.empty()) {
    rc = RunConfig::from_file(g.config);
  } else if (base) {
    rc = RunConfig::from_json(*base);
  }
  if (g.seed) rc.set("seed", std::to_string(*g.seed));
  if (g.lr) rc.set("train.lr", *g.lr);
  for (const auto& [key, opt] : g.overrides) {
    if (opt->count() > 0) rc.set(key, g.values.at(key));
  }
  rc.resolve();
  return rc;
}

std::string run_id_for(const Globals& g, const std::string& command, const json& resolved) {
  if (!g.run_id.empty()) {
    if (g.run_id.find('/') != std::string::npos || g.run_id == "." || g.run_id == "..") {
      throw ConfigError("--run-id must be a plain directory name, got '" + g.run_id + "'");
    }
    return g.run_id;
  }
  return command + "-" + make_run_id({{"command", command}, {"config", resolved}});
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::string model_label(const ModelConfig& cfg) { return "stformer/" + std::string(variant_name(cfg.variant)); }

// ------------------------------------------------------------------ train

int cmd_train(const Globals& g, std::ostream& out) {
  const auto start = std::chrono::steady_clock::now();
  const RunConfig rc = load_config(g);
  const ForecastDataset ds = rc.load_dataset();
  const json resolved = rc.to_json();
  RunDir dir(fs::path(g.out_dir) / run_id_for(g, "train", resolved), g.force);

  MetricsReport report;
  report.run_id = dir.final_path().filename().string();
  report.model = model_label(rc.model);
  report.scale = rc.eval.scale;
  report.config = resolved;
  const EvalOptions opts = rc.eval_options();

  for (std::size_t K : rc.eval_horizons()) {
    ModelConfig mc = rc.model;
    mc.K = K;
    mc.validate();
    const std::string tag = "h" + std::to_string(K);
    auto progress = [&](std::size_t step, double loss) {
      if (step % rc.train.eval_every == 0 || step == rc.train.max_steps) {
        out << tag << " step " << step << "/" << rc.train.max_steps << " loss " << loss << "\n";
      }
    };
    TrainResult tr = train(mc, init_params(mc, mc.seed), ds, rc.train, progress);
    for (const auto& w : tr.warnings) report.warnings.push_back(tag + ": " + w);

    Checkpoint ck{mc, tr.params, tr.normalizer, rc.train.instance_norm, resolved};
    save_checkpoint(ck, dir.file("model_" + tag + ".ckpt"));
    write_history_csv(tr.history, dir.file("history_" + tag + ".csv"));

    const Forecaster f = model_forecaster(tr.params, mc, tr.normalizer, rc.train.instance_norm);
    const auto hm = evaluate(f, ds, tr.normalizer, {mc.T, K, opts.stride}, opts, report.warnings);
    if (hm) report.horizons.push_back(*hm);
  }

  report.runtime_seconds = seconds_since(start);
  report.finalize();
  report.write(dir.staging(), "report");
  write_text(dir.file("config.json"), resolved.dump(2) + "\n");
  dir.commit();
  out << report.to_table() << "wrote " << dir.final_path().string() << "\n";
  return kOk;
}

// --------------------------------------------------------------- evaluate

int cmd_evaluate(const Globals& g, const std::string& checkpoint, std::ostream& out) {
  const auto start = std::chrono::steady_clock::now();
  const Checkpoint ck = load_checkpoint(checkpoint);
  RunConfig rc = load_config(g, &ck.run_config);
  rc.model = ck.model;
  const ForecastDataset ds = rc.load_dataset();
  const json resolved = rc.to_json();
  const EvalOptions opts = rc.eval_options();

  MetricsReport report;
  report.model = model_label(ck.model);
  report.scale = opts.scale;
  report.config = resolved;
  report.config["checkpoint"] = checkpoint;
  const Normalizer& norm = ck.normalizer;
  const WindowSpec spec{ck.model.T, ck.model.K, opts.stride};
  const Forecaster f = model_forecaster(ck.params, ck.model, ck.normalizer, ck.instance_norm);
  if (const auto hm = evaluate(f, ds, norm, spec, opts, report.warnings)) report.horizons.push_back(*hm);
  std::vector<std::string> ignored;
  const auto naive = evaluate(naive_forecaster(), ds, norm, spec, opts, ignored);

  RunDir dir(fs::path(g.out_dir) / run_id_for(g, "evaluate", report.config), g.force);
  report.run_id = dir.final_path().filename().string();
  report.runtime_seconds = seconds_since(start);
  report.finalize();
  report.write(dir.staging(), "report");
  write_text(dir.file("config.json"), resolved.dump(2) + "\n");
  dir.commit();
  out << report.to_table();
  if (naive) out << "repeat-last-value baseline: mse " << naive->mse << "  mae " << naive->mae << "\n";
  out << "wrote " << dir.final_path().string() << "\n";
  return kOk;
}

// --------------------------------------------------------------- forecast

// Header of extrapolated timestamps, then one row per variable.
std::string forecast_csv(const ForecastDataset& ds, const Tensor& y) {
  const std::size_t K = y.cols();
  std::optional<std::int64_t> last;
  if (!ds.timestamps.empty() && ds.step_seconds) last = parse_timestamp(ds.timestamps.back());
  std::ostringstream csv;
  csv << "variable";
  for (std::size_t k = 1; k <= K; ++k) {
    if (last) {
      csv << "," << format_timestamp(*last + static_cast<std::int64_t>(k) * *ds.step_seconds);
    } else {
      csv << ",t+" << k;
    }
  }
  csv << "\n" << std::setprecision(17);
  for (std::size_t i = 0; i < y.rows(); ++i) {
    csv << ds.names[i];
    for (std::size_t k = 0; k < K; ++k) csv << "," << y.at(i, k);
    csv << "\n";
  }
  return csv.str();
}

int cmd_forecast(const Globals& g, const std::string& checkpoint, const std::string& output,
                 std::ostream& out) {
  const Checkpoint ck = load_checkpoint(checkpoint);
  RunConfig rc = load_config(g, &ck.run_config);
  rc.model = ck.model;
  const ForecastDataset ds = rc.load_dataset();
  const std::size_t T = ck.model.T, N = ds.steps();
  if (N < T) {
    throw DimensionError("forecast needs " + std::to_string(T) + " observed steps, the dataset has " +
                         std::to_string(N));
  }
  Tensor x({ds.variables(), T});
  for (std::size_t i = 0; i < ds.variables(); ++i)
    for (std::size_t t = 0; t < T; ++t) x.at(i, t) = ds.series.at(i, N - T + t);
  const Tensor y = predict_window(x, ck.params, ck.model, ck.normalizer, ck.instance_norm);
  if (!y.all_finite()) throw NumericalError("forecast produced non-finite values");
  const std::string csv = forecast_csv(ds, y);

  if (!output.empty()) {
    write_text_atomic(output, csv, g.force);
    out << "wrote " << output << "\n";
    return kOk;
  }
  json id = rc.to_json();
  id["checkpoint"] = checkpoint;
  RunDir dir(fs::path(g.out_dir) / run_id_for(g, "forecast", id), g.force);
  write_text(dir.file("forecast.csv"), csv);
  dir.commit();
  out << "wrote " << (dir.final_path() / "forecast.csv").string() << "\n";
  return kOk;
}

// ------------------------------------------------------------------ ablate

int cmd_ablate(const Globals& g, std::ostream& out, std::ostream& err) {
  const RunConfig rc = load_config(g);
  const ForecastDataset ds = rc.load_dataset();
  const json resolved = rc.to_json();
  RunDir dir(fs::path(g.out_dir) / run_id_for(g, "ablate", resolved), g.force);

  AblationResult res = run_ablation(ds, rc.model, rc.train, rc.eval_options());
  res.config = resolved;
  write_text(dir.file("ablation.json"), res.to_json().dump(2) + "\n");
  write_text(dir.file("ablation.txt"), res.to_table());
  write_text(dir.file("config.json"), resolved.dump(2) + "\n");
  dir.commit();
  out << res.to_table() << "wrote " << dir.final_path().string() << "\n";

  int code = kOk;
  for (const auto& row : res.rows) {
    if (!row.error.empty()) {
      err << "error [runtime]: " << variant_name(row.variant) << ": " << row.error << "\n";
      code = kRuntimeError;
    }
  }
  return code;
}

// --------------------------------------------------------------- gradcheck

int cmd_gradcheck(const Globals& g, double tol, std::size_t sweep, std::ostream& out) {
  const RunConfig rc = load_config(g);
  GradSuiteOptions opts;
  opts.seed = rc.seed;
  opts.tol = tol;
  const auto entries = run_grad_suite(opts);

  bool ok = true;
  out << std::left << std::setw(26) << "check" << std::setw(8) << "kind" << std::setw(14) << "max_rel_err"
      << "result\n";
  for (const auto& e : entries) {
    std::string verdict = "PASS";
    if (!e.passed(tol)) {
      if (e.explained()) {
        verdict = "AUDITED (" + std::to_string(e.audit.roundoff) + " roundoff, " +
                  std::to_string(e.audit.kink) + " relu corner)";
      } else {
        verdict = "FAIL";
        ok = false;
      }
    }
    std::ostringstream err_text;
    err_text << std::scientific << std::setprecision(3) << e.result.max_rel_error;
    out << std::setw(26) << e.name << std::setw(8) << e.kind << std::setw(14) << err_text.str() << verdict << "\n";
    if (!e.result.finite) out << "  " << e.result.failure << "\n";
    for (const auto& u : e.audit.unexplained) out << "  unexplained: " << u << "\n";
  }
  if (sweep > 0) {
    out << "model sweep over seeds " << rc.seed << ".." << rc.seed + sweep - 1 << "\n";
    for (AblationVariant v : kAllVariants) {
      const GradSweep s = sweep_model_gradcheck(v, rc.seed, sweep, tol);
      out << "  " << std::setw(16) << variant_name(v) << s.passed << "/" << s.seeds << " below tol, "
          << s.explained << "/" << s.seeds << " passed or fully audited\n";
      if (s.explained != s.seeds) ok = false;
    }
  }
  out << (ok ? "gradcheck passed" : "gradcheck FAILED") << " (tol " << tol << ", h 1e-05)\n";
  return ok ? kOk : kRuntimeError;
}

// ------------------------------------------------------------------- synth

int cmd_synth(const Globals& g, const std::string& output, std::ostream& out) {
  RunConfig rc = load_config(g);
  rc.data.source = "synth";
  rc.model.M = rc.data.variables;
  const ForecastDataset ds = rc.load_dataset();
  const std::string csv = to_csv(ds);
  if (!output.empty()) {
    write_text_atomic(output, csv, g.force);
    out << "wrote " << output << "\n";
    return kOk;
  }
  const json resolved = rc.to_json();
  RunDir dir(fs::path(g.out_dir) / run_id_for(g, "synth", resolved), g.force);
  write_text(dir.file("data.csv"), csv);
  write_text(dir.file("generator.json"), json(ds.generator).dump(2) + "\n");
  write_text(dir.file("config.json"), resolved.dump(2) + "\n");
  dir.commit();
  out << "wrote " << (dir.final_path() / "data.csv").string() << "\n";
  return kOk;
}

int report_error(std::ostream& err, const char* category, const std::exception& e, int code) {
  err << "error [" << category << "]: " << e.what() << "\n";
  return code;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Spatial-temporal transformer forecasting: train, evaluate, forecast, ablate, verify.", "stformer"};
  Globals g;
  if (const char* env = std::getenv("STFORMER_OUT_DIR"); env && *env) g.out_dir = env;

  app.add_option("--config", g.config, "JSON run config; flags override its values");
  app.add_option("--seed", g.seed, "Seed for data synthesis, initialization, shuffling and dropout");
  app.add_option("--run-id", g.run_id, "Output directory name (default: derived from the resolved config)");
  app.add_option("--out-dir", g.out_dir, "Parent directory of run outputs (env STFORMER_OUT_DIR)");
  app.add_flag("--force", g.force, "Overwrite existing outputs");
  app.add_option("--lr", g.lr, "Alias of --train.lr");
  for (const std::string& key : RunConfig::keys()) {
    if (key == "seed") continue;
    CLI::Option* opt = app.add_option("--" + key, g.values[key], "Override " + key)->group("Config overrides");
    g.overrides.emplace_back(key, opt);
  }
  app.require_subcommand(1);
  app.allow_extras();

  auto* train_cmd = app.add_subcommand("train", "Train one model per horizon; write checkpoints, history and a report");
  auto* eval_cmd = app.add_subcommand("evaluate", "Score a checkpoint on a split");
  auto* fc_cmd = app.add_subcommand("forecast", "Forecast the K steps after the end of the dataset");
  auto* ablate_cmd = app.add_subcommand("ablate", "Train and score the five ablation designs");
  auto* grad_cmd = app.add_subcommand("gradcheck", "Finite-difference check of every op, module and variant");
  auto* synth_cmd = app.add_subcommand("synth", "Write a seeded synthetic dataset as CSV");
  for (auto* sub : {train_cmd, eval_cmd, fc_cmd, ablate_cmd, grad_cmd, synth_cmd}) sub->fallthrough();

  std::string checkpoint, output;
  for (auto* sub : {eval_cmd, fc_cmd}) sub->add_option("--checkpoint", checkpoint, "Checkpoint file")->required();
  for (auto* sub : {fc_cmd, synth_cmd}) sub->add_option("--output", output, "Write the CSV here instead of the run directory");
  double tol = 1e-4;
  std::size_t sweep = 0;
  grad_cmd->add_option("--tol", tol, "Maximum relative error");
  grad_cmd->add_option("--sweep", sweep, "Also check the full model over this many seeds per variant");

  std::vector<const char*> argv{"stformer"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kConfigError;
  }

  try {
    if (const auto extras = app.remaining(true); !extras.empty()) {
      const std::string& arg = extras.front();
      if (arg.rfind("--", 0) != 0) throw ConfigError("unexpected argument '" + arg + "'");
      const std::string name = arg.substr(0, arg.find('='));
      std::vector<std::string> known;
      for (const CLI::App* a : {&app, app.get_subcommands().front()})
        for (const CLI::Option* o : a->get_options())
          for (const auto& n : o->get_lnames()) known.push_back("--" + n);
      throw ConfigError("unknown option '" + name + "'; did you mean '" + nearest_key(name, known) + "'?");
    }
    if (*train_cmd) return cmd_train(g, out);
    if (*eval_cmd) return cmd_evaluate(g, checkpoint, out);
    if (*fc_cmd) return cmd_forecast(g, checkpoint, output, out);
    if (*ablate_cmd) return cmd_ablate(g, out, err);
    if (*grad_cmd) return cmd_gradcheck(g, tol, sweep, out);
    if (*synth_cmd) return cmd_synth(g, output, out);
  } catch (const ConfigError& e) {
    return report_error(err, "config", e, kConfigError);
  } catch (const UsageError& e) {
    return report_error(err, "config", e, kConfigError);
  } catch (const ParseError& e) {
    return report_error(err, "data", e, kDataError);
  } catch (const IntegrityError& e) {
    return report_error(err, "data", e, kDataError);
  } catch (const DimensionError& e) {
    return report_error(err, "data", e, kDataError);
  } catch (const std::exception& e) {
    return report_error(err, "runtime", e, kRuntimeError);
  }
  return kConfigError;
}

}  // namespace stformer::cli
