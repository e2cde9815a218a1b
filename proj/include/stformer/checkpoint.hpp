#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "stformer/model.hpp"
#include "stformer/normalizer.hpp"

namespace stformer {

/// Binary container: magic, format version, a JSON header (model config,
/// instance-norm flag and the resolved run config), named float64 tensors
/// and a trailing FNV-1a checksum. Writing then reading is bit-exact.
struct Checkpoint {
  static constexpr std::uint32_t kVersion = 1;

  ModelConfig model;
  ModelParams params;
  Normalizer normalizer;
  bool instance_norm = false;
  nlohmann::json run_config = nlohmann::json::object();
};

std::string serialize_checkpoint(const Checkpoint& ck);
/// Throws IntegrityError on a bad magic, a version other than kVersion
/// (naming both), a checksum mismatch, truncation or tensors that do not
/// match the stored model config.
Checkpoint deserialize_checkpoint(const std::string& bytes, const std::string& source = "<memory>");

void save_checkpoint(const Checkpoint& ck, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace stformer
