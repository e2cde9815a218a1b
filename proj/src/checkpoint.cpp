#include "stformer/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include "stformer/error.hpp"
#include "stformer/run_config.hpp"
#include "stformer/train.hpp"

namespace stformer {

using nlohmann::json;

namespace {

constexpr char kMagic[8] = {'S', 'T', 'F', 'C', 'K', 'P', 'T', '\0'};

// Fixed-width little-endian encoding, independent of the host byte order.
template <typename T>
void put(std::string& out, T v) {
  std::uint64_t bits = 0;
  if constexpr (std::is_same_v<T, double>) {
    std::memcpy(&bits, &v, sizeof v);
  } else {
    bits = static_cast<std::uint64_t>(v);
  }
  for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
}

class Reader {
 public:
  Reader(const std::string& bytes, std::size_t end, std::string source)
      : bytes_(bytes), end_(end), source_(std::move(source)) {}

  template <typename T>
  T get() {
    need(sizeof(T));
    std::uint64_t bits = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i)
      bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    pos_ += sizeof(T);
    if constexpr (std::is_same_v<T, double>) {
      double v;
      std::memcpy(&v, &bits, sizeof v);
      return v;
    } else {
      return static_cast<T>(bits);
    }
  }

  std::string text(std::size_t n) {
    need(n);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  std::size_t pos() const { return pos_; }

 private:
  void need(std::size_t n) const {
    if (n > end_ - pos_) throw IntegrityError(source_ + ": checkpoint is truncated");
  }

  const std::string& bytes_;
  std::size_t end_;
  std::string source_;
  std::size_t pos_ = 0;
};

std::uint64_t checksum(const std::string& bytes, std::size_t n) {
  return fnv1a({reinterpret_cast<const unsigned char*>(bytes.data()), n});
}

void put_tensor(std::string& out, const std::string& name, const Tensor& t) {
  put<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
  out += name;
  put<std::uint32_t>(out, static_cast<std::uint32_t>(t.rank()));
  for (std::size_t d : t.shape()) put<std::uint64_t>(out, d);
  for (double v : t.data()) put<double>(out, v);
}

}  // namespace

std::string serialize_checkpoint(const Checkpoint& ck) {
  const json header = {{"model", model_config_json(ck.model)},
                       {"model_seed", ck.model.seed},
                       {"instance_norm", ck.instance_norm},
                       {"run_config", ck.run_config}};
  const std::string header_text = header.dump();

  std::string out(kMagic, sizeof kMagic);
  put<std::uint32_t>(out, Checkpoint::kVersion);
  put<std::uint64_t>(out, header_text.size());
  out += header_text;

  const auto named = ck.params.named();
  put<std::uint64_t>(out, named.size() + 2);
  const std::size_t m = ck.normalizer.size();
  put_tensor(out, "normalizer.mean", Tensor({m}, ck.normalizer.mean()));
  put_tensor(out, "normalizer.std", Tensor({m}, ck.normalizer.stddev()));
  for (const auto& [name, t] : named) put_tensor(out, name, *t);
  put<std::uint64_t>(out, checksum(out, out.size()));
  return out;
}

Checkpoint deserialize_checkpoint(const std::string& bytes, const std::string& source) {
  if (bytes.size() < sizeof kMagic + 4 + 8 || std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0) {
    throw IntegrityError(source + ": not a checkpoint file (bad magic)");
  }
  Reader version_reader(bytes, bytes.size(), source);
  version_reader.text(sizeof kMagic);
  const auto version = version_reader.get<std::uint32_t>();
  if (version != Checkpoint::kVersion) {
    throw IntegrityError(source + ": checkpoint version mismatch: expected " +
                         std::to_string(Checkpoint::kVersion) + ", found " + std::to_string(version));
  }
  const std::size_t body = bytes.size() - 8;
  Reader tail(bytes, bytes.size(), source);
  tail.text(body);
  const auto stored = tail.get<std::uint64_t>();
  const auto actual = checksum(bytes, body);
  if (stored != actual) {
    std::ostringstream msg;
    msg << source << ": checkpoint checksum mismatch: expected " << std::hex << stored << ", found " << actual;
    throw IntegrityError(msg.str());
  }

  Reader in(bytes, body, source);
  in.text(sizeof kMagic);
  in.get<std::uint32_t>();
  const std::string header_text = in.text(in.get<std::uint64_t>());
  const json header = json::parse(header_text, nullptr, false);
  if (header.is_discarded() || !header.is_object()) throw IntegrityError(source + ": corrupt checkpoint header");

  Checkpoint ck;
  try {
    ck.model = model_config_from_json(header.at("model"));
    ck.model.seed = header.at("model_seed").get<std::uint64_t>();
    ck.instance_norm = header.at("instance_norm").get<bool>();
    ck.run_config = header.at("run_config");
    ck.model.validate();
  } catch (const json::exception& e) {
    throw IntegrityError(source + ": checkpoint header: " + e.what());
  } catch (const ConfigError& e) {
    throw IntegrityError(source + ": checkpoint model config: " + e.what());
  }

  std::map<std::string, Tensor> tensors;
  const auto count = in.get<std::uint64_t>();
  for (std::uint64_t i = 0; i < count; ++i) {
    const std::string name = in.text(in.get<std::uint32_t>());
    Shape shape(in.get<std::uint32_t>());
    for (auto& d : shape) d = in.get<std::uint64_t>();
    std::vector<double> data(shape_numel(shape));
    for (auto& v : data) v = in.get<double>();
    tensors.emplace(name, Tensor(shape, std::move(data)));
  }
  if (in.pos() != body) throw IntegrityError(source + ": trailing bytes after the tensors");

  auto take = [&](const std::string& name) {
    auto it = tensors.find(name);
    if (it == tensors.end()) throw IntegrityError(source + ": checkpoint lacks tensor '" + name + "'");
    Tensor t = std::move(it->second);
    tensors.erase(it);
    return t;
  };
  const Tensor mean = take("normalizer.mean"), sd = take("normalizer.std");
  ck.normalizer = Normalizer::from_stats(mean.values(), sd.values());

  ck.params = init_params(ck.model, ck.model.seed);
  for (auto& [name, t] : ck.params.named()) {
    Tensor stored_t = take(name);
    if (stored_t.shape() != t->shape()) {
      throw IntegrityError(source + ": tensor '" + name + "' has shape " + shape_string(stored_t.shape()) +
                           ", the model config implies " + shape_string(t->shape()));
    }
    *t = std::move(stored_t);
  }
  if (!tensors.empty()) throw IntegrityError(source + ": unexpected tensor '" + tensors.begin()->first + "'");
  return ck;
}

void save_checkpoint(const Checkpoint& ck, const std::filesystem::path& path) {
  const std::string bytes = serialize_checkpoint(ck);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write checkpoint '" + path.string() + "'");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("write failed for checkpoint '" + path.string() + "'");
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open checkpoint '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return deserialize_checkpoint(buf.str(), path.string());
}

}  // namespace stformer
