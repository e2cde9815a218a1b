#include "stformer/model_config.hpp"

#include <algorithm>
#include <string>

#include "stformer/error.hpp"

namespace stformer {

std::string_view variant_name(AblationVariant v) {
  switch (v) {
    case AblationVariant::Original: return "original";
    case AblationVariant::FullAttention: return "full_attention";
    case AblationVariant::FfnForStcn: return "ffn_for_stcn";
    case AblationVariant::NoAttention: return "no_attention";
    case AblationVariant::NoStcn: return "no_stcn";
  }
  return "unknown";
}

AblationVariant parse_variant(std::string_view name) {
  for (auto v : kAllVariants)
    if (variant_name(v) == name) return v;
  throw ConfigError("unknown variant '" + std::string(name) +
                    "' (expected original, full_attention, ffn_for_stcn, no_attention, no_stcn)");
}

VariantLabel variant_label(AblationVariant v) {
  switch (v) {
    case AblationVariant::Original: return {"Original", "STCN", "SeqMask"};
    case AblationVariant::FullAttention: return {"Replace", "STCN", "Full attention"};
    case AblationVariant::FfnForStcn: return {"Replace", "FFN", "SeqMask"};
    case AblationVariant::NoAttention: return {"w/o", "STCN", "w/o"};
    case AblationVariant::NoStcn: return {"w/o", "w/o", "SeqMask"};
  }
  return {"?", "?", "?"};
}

std::string_view tcn_mixing_name(TcnMixing m) {
  return m == TcnMixing::Full ? "full" : "per_variable";
}

TcnMixing parse_tcn_mixing(std::string_view name) {
  if (name == "full") return TcnMixing::Full;
  if (name == "per_variable") return TcnMixing::PerVariable;
  throw ConfigError("unknown tcn_mixing '" + std::string(name) + "' (expected full or per_variable)");
}

std::string_view mask_source_name(MaskSource s) {
  return s == MaskSource::Value ? "value" : "stcn";
}

MaskSource parse_mask_source(std::string_view name) {
  if (name == "value") return MaskSource::Value;
  if (name == "stcn") return MaskSource::Stcn;
  throw ConfigError("unknown mask_source '" + std::string(name) + "' (expected value or stcn)");
}

std::string_view padding_name(PaddingMode p) {
  return p == PaddingMode::Circular ? "circular" : "zero";
}

PaddingMode parse_padding(std::string_view name) {
  if (name == "circular") return PaddingMode::Circular;
  if (name == "zero") return PaddingMode::Zero;
  throw ConfigError("unknown scn_padding '" + std::string(name) + "' (expected circular or zero)");
}

bool ModelConfig::uses_stcn() const {
  return variant != AblationVariant::FfnForStcn && variant != AblationVariant::NoStcn;
}

bool ModelConfig::uses_attention() const { return variant != AblationVariant::NoAttention; }

bool ModelConfig::uses_mask() const {
  return variant != AblationVariant::FullAttention && variant != AblationVariant::NoAttention;
}

void ModelConfig::validate() const {
  auto fail = [](const std::string& what) { throw ConfigError("invalid model config: " + what); };
  if (M < 1) fail("M must be >= 1");
  if (T < 1) fail("T must be >= 1");
  if (K < 1) fail("K must be >= 1");
  if (F < 2 || F % 2 != 0) fail("F must be even and >= 2 (STCN splits it into two halves), got " + std::to_string(F));
  if (d_s < 1) fail("d_s must be >= 1");
  if (n_mask_blocks < 1) fail("n_mask_blocks must be >= 1");
  if (n_blocks < 1) fail("n_blocks must be >= 1");
  if (tcn_layers < 1) fail("tcn_layers must be >= 1");
  if (tcn_kernel < 1) fail("tcn_kernel must be >= 1");
  if (tcn_layers > 30) fail("tcn_layers must be <= 30");
  if (scn_kernels.empty()) fail("scn_kernels must list at least one layer");
  for (std::size_t w : scn_kernels) {
    if (w < 1) fail("scn kernel widths must be >= 1");
    if (w > M) {
      fail("scn kernel width " + std::to_string(w) + " exceeds M=" + std::to_string(M) +
           "; use width <= M (width 1 for a univariate series)");
    }
  }
  if (!(dropout >= 0.0 && dropout < 1.0)) fail("dropout must be in [0, 1)");
  if (!(ln_eps > 0.0)) fail("ln_eps must be positive");
}

ModelConfig ModelConfig::with_clamped_scn_kernels() const {
  ModelConfig out = *this;
  for (auto& w : out.scn_kernels) w = std::max<std::size_t>(1, std::min(w, M));
  return out;
}

}  // namespace stformer
