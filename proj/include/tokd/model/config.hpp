#pragma once

#include <string>
#include <string_view>

#include "tokd/blocks/blocks.hpp"

namespace tokd {

enum class PerceptualKind : std::uint8_t { Off = 0, GradientL1 = 1 };

std::string_view perceptual_name(PerceptualKind kind);
PerceptualKind parse_perceptual(std::string_view name);

struct ModelConfig {
  std::size_t d_model = 128;
  std::size_t n_layers = 6;
  std::size_t n_heads = 4;
  std::size_t patch = 8;
  std::size_t image_height = 64;
  std::size_t image_width = 64;
  std::size_t ffn_mult = 4;
  /// Width of the role style vectors; 0 means d_model.
  std::size_t d_style = 0;
  BlockVariant variant = BlockVariant::Plain;
  double lambda_perceptual = 0.5;
  PerceptualKind perceptual = PerceptualKind::Off;
  double ln_eps = 1e-5;

  /// Throws ConfigError on any inconsistent setting.
  void validate() const;

  std::size_t style_width() const { return d_style == 0 ? d_model : d_style; }
  std::size_t tokens_per_view() const { return (image_height / patch) * (image_width / patch); }
  BlockDims block_dims() const;

  /// key=value lines, one per field, fixed order.
  std::string to_text() const;
  /// Accepts the output of to_text; unknown keys are a ConfigError, missing keys keep defaults.
  static ModelConfig from_text(std::string_view text);
  /// Applies a single key=value setting.
  void set(std::string_view key, std::string_view value);

  /// d=16, L=2, 2 heads, 16x16 images.
  static ModelConfig tiny();
  /// d=128, L=6, 4 heads, 64x64 images.
  static ModelConfig desk();
  /// d=1024, L=24, 16 heads, 256x256 images. Used for counting only.
  static ModelConfig full();
  static ModelConfig preset(std::string_view name);

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

}  // namespace tokd
