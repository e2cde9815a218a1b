#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "stformer/ops.hpp"

namespace stformer {

/// Architecture variants compared in the ablation grid.
enum class AblationVariant {
  Original,       // STCN + sequence-guided mask attention
  FullAttention,  // STCN + plain attention (mask blocks bypassed)
  FfnForStcn,     // affine embedding + position-wise FFN in place of STCN
  NoAttention,    // STCN, attention sublayer removed
  NoStcn,         // single affine embedding in place of STCN
};

inline constexpr std::array<AblationVariant, 5> kAllVariants = {
    AblationVariant::Original, AblationVariant::FullAttention, AblationVariant::FfnForStcn,
    AblationVariant::NoAttention, AblationVariant::NoStcn};

std::string_view variant_name(AblationVariant v);
AblationVariant parse_variant(std::string_view name);

/// Row labels of the ablation grid: design group, temporal component, attention component.
struct VariantLabel {
  std::string_view design;
  std::string_view temporal;
  std::string_view attention;
};
VariantLabel variant_label(AblationVariant v);

/// Where each mask block derives its gate from: the value projection, or the
/// STCN output that feeds the attention sublayer.
enum class MaskSource { Value, Stcn };

/// TCN channel coupling: full [M x M x k] kernels, or one kernel per variable
/// so each series is convolved only with its own history.
enum class TcnMixing { Full, PerVariable };

std::string_view tcn_mixing_name(TcnMixing m);
TcnMixing parse_tcn_mixing(std::string_view name);
std::string_view mask_source_name(MaskSource s);
MaskSource parse_mask_source(std::string_view name);
std::string_view padding_name(PaddingMode p);
PaddingMode parse_padding(std::string_view name);

struct ModelConfig {
  std::size_t M = 7;   // variables
  std::size_t T = 96;  // lookback
  std::size_t K = 96;  // horizon
  std::size_t F = 64;  // embedding size; also the attention width
  std::size_t d_s = 32;
  std::size_t d_a = 0;   // mask hidden width; 0 means 2F
  std::size_t d_ff = 0;  // FFN hidden width; 0 means 2F
  std::size_t n_mask_blocks = 2;
  std::size_t n_blocks = 2;
  std::size_t tcn_layers = 3;
  std::size_t tcn_kernel = 3;
  TcnMixing tcn_mixing = TcnMixing::Full;
  std::vector<std::size_t> scn_kernels = {3, 5};
  PaddingMode scn_padding = PaddingMode::Circular;
  MaskSource mask_source = MaskSource::Value;
  double dropout = 0.0;
  double ln_eps = 1e-5;
  AblationVariant variant = AblationVariant::Original;
  std::uint64_t seed = 0;

  std::size_t mask_hidden() const { return d_a ? d_a : 2 * F; }
  std::size_t ffn_hidden() const { return d_ff ? d_ff : 2 * F; }
  /// Dilation of TCN layer `layer`: 1, 2, 4, ...
  std::size_t dilation(std::size_t layer) const { return std::size_t{1} << layer; }
  /// Input length seen by the STCN of block `block`: T first, F afterwards.
  std::size_t stcn_input_len(std::size_t block) const { return block == 0 ? T : F; }

  bool uses_stcn() const;
  bool uses_attention() const;
  bool uses_mask() const;

  /// Throws ConfigError naming the first violated invariant.
  void validate() const;

  /// Copy with every SCN kernel width reduced to at most M (width 1 when M == 1).
  ModelConfig with_clamped_scn_kernels() const;

  bool operator==(const ModelConfig&) const = default;
};

}  // namespace stformer
