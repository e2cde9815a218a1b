#include "stformer/run_config.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <sstream>

#include "stformer/error.hpp"

namespace stformer {

using nlohmann::json;

std::size_t levenshtein(std::string_view a, std::string_view b) {
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

std::string nearest_key(std::string_view key, const std::vector<std::string>& candidates) {
  std::string best;
  std::size_t best_d = std::numeric_limits<std::size_t>::max();
  for (const auto& c : candidates) {
    const std::size_t d = levenshtein(key, c);
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  return best;
}

namespace {

std::vector<std::string> keys_of(const json& obj, const std::string& prefix) {
  std::vector<std::string> out;
  for (const auto& [k, v] : obj.items()) out.push_back(prefix + k);
  return out;
}

[[noreturn]] void unknown_key(const std::string& key, const std::vector<std::string>& valid) {
  throw ConfigError("unknown config key '" + key + "'; did you mean '" + nearest_key(key, valid) + "'?");
}

const char* type_word(const json& proto) {
  if (proto.is_number_unsigned()) return "a nonnegative integer";
  if (proto.is_number()) return "a number";
  if (proto.is_boolean()) return "true or false";
  if (proto.is_string()) return "a string";
  if (proto.is_array()) return "a list of nonnegative integers";
  return "an object";
}

bool compatible(const json& proto, const json& v) {
  if (proto.is_number_unsigned()) return v.is_number_unsigned();
  if (proto.is_number()) return v.is_number();
  if (proto.is_boolean()) return v.is_boolean();
  if (proto.is_string()) return v.is_string();
  if (proto.is_array()) {
    return v.is_array() && std::all_of(v.begin(), v.end(), [](const json& e) { return e.is_number_unsigned(); });
  }
  return v.is_object();
}

// Overlays `in` onto `proto`, rejecting keys `proto` lacks and values of the wrong type.
void merge_strict(json& proto, const json& in, const std::string& prefix) {
  if (!in.is_object()) throw ConfigError("config " + (prefix.empty() ? std::string("root") : "section '" + prefix + "'") + " must be an object");
  for (const auto& [k, v] : in.items()) {
    const std::string full = prefix.empty() ? k : prefix + "." + k;
    if (!proto.contains(k)) {
      std::vector<std::string> valid = keys_of(proto, prefix.empty() ? "" : prefix + ".");
      if (prefix.empty()) {
        for (const auto& [sec, body] : proto.items())
          if (body.is_object())
            for (const auto& [f, _] : body.items()) valid.push_back(sec + "." + f);
      }
      unknown_key(full, valid);
    }
    json& slot = proto[k];
    if (slot.is_object()) {
      merge_strict(slot, v, full);
      continue;
    }
    if (!compatible(slot, v)) {
      throw ConfigError("config key '" + full + "' must be " + type_word(slot) + ", got " + v.dump());
    }
    slot = v;
  }
}

std::size_t u(const json& j, const char* k) { return j.at(k).get<std::size_t>(); }
double d(const json& j, const char* k) { return j.at(k).get<double>(); }
std::string s(const json& j, const char* k) { return j.at(k).get<std::string>(); }

}  // namespace

json model_config_json(const ModelConfig& c) {
  return {{"M", c.M},
          {"T", c.T},
          {"K", c.K},
          {"F", c.F},
          {"d_s", c.d_s},
          {"d_a", c.d_a},
          {"d_ff", c.d_ff},
          {"n_mask_blocks", c.n_mask_blocks},
          {"n_blocks", c.n_blocks},
          {"tcn_layers", c.tcn_layers},
          {"tcn_kernel", c.tcn_kernel},
          {"tcn_mixing", tcn_mixing_name(c.tcn_mixing)},
          {"scn_kernels", c.scn_kernels},
          {"scn_padding", padding_name(c.scn_padding)},
          {"mask_source", mask_source_name(c.mask_source)},
          {"dropout", c.dropout},
          {"ln_eps", c.ln_eps},
          {"variant", variant_name(c.variant)}};
}

namespace {

ModelConfig model_from_merged(const json& j) {
  ModelConfig c;
  c.M = u(j, "M");
  c.T = u(j, "T");
  c.K = u(j, "K");
  c.F = u(j, "F");
  c.d_s = u(j, "d_s");
  c.d_a = u(j, "d_a");
  c.d_ff = u(j, "d_ff");
  c.n_mask_blocks = u(j, "n_mask_blocks");
  c.n_blocks = u(j, "n_blocks");
  c.tcn_layers = u(j, "tcn_layers");
  c.tcn_kernel = u(j, "tcn_kernel");
  c.tcn_mixing = parse_tcn_mixing(s(j, "tcn_mixing"));
  c.scn_kernels = j.at("scn_kernels").get<std::vector<std::size_t>>();
  c.scn_padding = parse_padding(s(j, "scn_padding"));
  c.mask_source = parse_mask_source(s(j, "mask_source"));
  c.dropout = d(j, "dropout");
  c.ln_eps = d(j, "ln_eps");
  c.variant = parse_variant(s(j, "variant"));
  return c;
}

}  // namespace

ModelConfig model_config_from_json(const json& in) {
  json merged = model_config_json(ModelConfig{});
  merge_strict(merged, in, "model");
  return model_from_merged(merged);
}

json RunConfig::to_json() const {
  const DataConfig& dc = data;
  const TrainConfig& tc = train;
  return {{"seed", seed},
          {"data",
           {{"source", dc.source},
            {"path", dc.path},
            {"synth_kind", dc.synth_kind},
            {"variables", dc.variables},
            {"length", dc.length},
            {"noise", dc.noise},
            {"coupling", dc.coupling},
            {"train_ratio", dc.train_ratio},
            {"val_ratio", dc.val_ratio},
            {"test_ratio", dc.test_ratio},
            {"max_rows", dc.max_rows},
            {"frequency", dc.frequency}}},
          {"model", model_config_json(model)},
          {"train",
           {{"lr", tc.lr},
            {"beta1", tc.beta1},
            {"beta2", tc.beta2},
            {"eps", tc.eps},
            {"batch_size", tc.batch_size},
            {"max_steps", tc.max_steps},
            {"eval_every", tc.eval_every},
            {"patience", tc.patience},
            {"grad_clip", tc.grad_clip},
            {"stride", tc.stride},
            {"instance_norm", tc.instance_norm}}},
          {"eval",
           {{"split", eval.split},
            {"scale", metric_scale_name(eval.scale)},
            {"horizons", eval.horizons},
            {"m4_metrics", eval.m4_metrics},
            {"baseline", owa_baseline_name(eval.baseline)}}}};
}

RunConfig RunConfig::from_json(const json& in) {
  json j = RunConfig{}.to_json();
  merge_strict(j, in, "");
  RunConfig r;
  r.seed = j.at("seed").get<std::uint64_t>();
  const json& jd = j.at("data");
  r.data.source = s(jd, "source");
  r.data.path = s(jd, "path");
  r.data.synth_kind = s(jd, "synth_kind");
  r.data.variables = u(jd, "variables");
  r.data.length = u(jd, "length");
  r.data.noise = d(jd, "noise");
  r.data.coupling = d(jd, "coupling");
  r.data.train_ratio = d(jd, "train_ratio");
  r.data.val_ratio = d(jd, "val_ratio");
  r.data.test_ratio = d(jd, "test_ratio");
  r.data.max_rows = u(jd, "max_rows");
  r.data.frequency = u(jd, "frequency");
  r.model = model_from_merged(j.at("model"));
  const json& jt = j.at("train");
  r.train.lr = d(jt, "lr");
  r.train.beta1 = d(jt, "beta1");
  r.train.beta2 = d(jt, "beta2");
  r.train.eps = d(jt, "eps");
  r.train.batch_size = u(jt, "batch_size");
  r.train.max_steps = u(jt, "max_steps");
  r.train.eval_every = u(jt, "eval_every");
  r.train.patience = u(jt, "patience");
  r.train.grad_clip = d(jt, "grad_clip");
  r.train.stride = u(jt, "stride");
  r.train.instance_norm = jt.at("instance_norm").get<bool>();
  const json& je = j.at("eval");
  r.eval.split = s(je, "split");
  r.eval.scale = parse_metric_scale(s(je, "scale"));
  r.eval.horizons = je.at("horizons").get<std::vector<std::size_t>>();
  r.eval.m4_metrics = je.at("m4_metrics").get<bool>();
  r.eval.baseline = parse_owa_baseline(s(je, "baseline"));
  r.model.seed = r.train.seed = r.seed;
  return r;
}

std::vector<std::string> RunConfig::keys() {
  std::vector<std::string> out{"seed"};
  const json defaults = RunConfig{}.to_json();
  for (const auto& [sec, body] : defaults.items())
    if (body.is_object())
      for (const auto& [f, _] : body.items()) out.push_back(sec + "." + f);
  return out;
}

RunConfig RunConfig::from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return from_json(json::parse(buf.str()));
  } catch (const json::parse_error& e) {
    throw ConfigError("config '" + path.string() + "' is not valid JSON: " + e.what());
  }
}

void RunConfig::set(std::string_view key, std::string_view value) {
  json j = to_json();
  const std::string k(key);
  const auto dot = k.find('.');
  json* slot = nullptr;
  const std::vector<std::string> valid = keys();
  if (dot == std::string::npos) {
    if (k != "seed") unknown_key(k, valid);
    slot = &j["seed"];
  } else {
    const std::string sec = k.substr(0, dot), field = k.substr(dot + 1);
    if (!j.contains(sec) || !j[sec].is_object() || !j[sec].contains(field)) unknown_key(k, valid);
    slot = &j[sec][field];
  }
  const std::string text(value);
  json parsed;
  if (slot->is_string()) {
    parsed = text;
  } else if (slot->is_array()) {
    std::string body = text;
    if (body.empty() || body.front() != '[') body = "[" + body + "]";
    parsed = json::parse(body, nullptr, false);
  } else {
    parsed = json::parse(text, nullptr, false);
  }
  if (parsed.is_discarded() || !compatible(*slot, parsed)) {
    throw ConfigError("value '" + text + "' for '" + k + "' is not " + type_word(*slot));
  }
  *slot = parsed;
  *this = from_json(j);
}

Split RunConfig::eval_split() const {
  if (eval.split == "train") return Split::Train;
  if (eval.split == "val") return Split::Val;
  if (eval.split == "test") return Split::Test;
  throw ConfigError("unknown eval.split '" + eval.split + "' (expected train, val or test)");
}

std::vector<std::size_t> RunConfig::eval_horizons() const {
  return eval.horizons.empty() ? std::vector<std::size_t>{model.K} : eval.horizons;
}

EvalOptions RunConfig::eval_options() const {
  EvalOptions o;
  o.split = eval_split();
  o.scale = eval.scale;
  o.stride = train.stride;
  o.m4_metrics = eval.m4_metrics;
  o.baseline = eval.baseline;
  return o;
}

void RunConfig::resolve() {
  model.seed = train.seed = seed;
  if (data.source != "csv" && data.source != "synth") {
    throw ConfigError("data.source must be csv or synth, got '" + data.source + "'");
  }
  if (data.source == "csv" && data.path.empty()) throw ConfigError("data.path is required when data.source is csv");
  if (data.source == "synth") {
    try {
      parse_synth_kind(data.synth_kind);
    } catch (const UsageError& e) {
      throw ConfigError(std::string("data.synth_kind: ") + e.what());
    }
    if (data.variables == 0 || data.length == 0) throw ConfigError("data.variables and data.length must be >= 1");
  }
  if (!(data.noise >= 0.0)) throw ConfigError("data.noise must be >= 0");
  chronological_splits(0, ratios());
  model.validate();
  train.validate();
  eval_split();
  for (std::size_t h : eval_horizons())
    if (h == 0) throw ConfigError("eval.horizons entries must be >= 1");
}

ForecastDataset RunConfig::load_dataset() const {
  ForecastDataset ds;
  if (data.source == "csv") {
    if (!std::filesystem::exists(data.path)) {
      throw ConfigError("data.path '" + data.path + "' does not exist");
    }
    CsvSchema schema;
    schema.ratios = ratios();
    if (data.max_rows) schema.max_rows = data.max_rows;
    if (data.frequency) schema.frequency = data.frequency;
    ds = load_csv(data.path, schema);
  } else {
    SynthOptions o;
    o.noise = data.noise;
    o.coupling = data.coupling;
    o.ratios = ratios();
    ds = synth(parse_synth_kind(data.synth_kind), data.variables, data.length, seed, o);
    if (data.frequency) ds.frequency = data.frequency;
  }
  if (ds.variables() != model.M) {
    throw ConfigError("model.M = " + std::to_string(model.M) + " but the dataset has " +
                      std::to_string(ds.variables()) + " variables");
  }
  return ds;
}

}  // namespace stformer
