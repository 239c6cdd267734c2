#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "tokd/numeric/image.hpp"

namespace tokd {

/// Degradation families standing in for generated-view artifacts.
enum ArtifactComponent : std::uint8_t {
  kArtifactBlock = 1,   // 4x4 block averaging, like coarse compression
  kArtifactBlur = 2,    // Gaussian blur inside a few random patches
  kArtifactChroma = 4,  // red/blue channel misregistration
  kArtifactNoise = 8,   // per-pixel Gaussian noise
  kArtifactAll = 15,
};

struct ArtifactProfile {
  double severity = 0.0;
  std::uint8_t components = kArtifactAll;
  std::uint64_t seed = 0;

  /// Throws ArgumentError unless severity is in [0, 1] and components are known flags.
  void validate() const;

  friend bool operator==(const ArtifactProfile&, const ArtifactProfile&) = default;
};

/// "block,blur,chroma,noise" style list; "none" for an empty set.
std::string components_to_string(std::uint8_t components);
std::uint8_t parse_components(std::string_view text);

/// Applies each enabled degradation, blended in by severity, clamping to [0, 1].
/// Severity 0 returns an exact copy.
Image inject_artifacts(const Image& img, const ArtifactProfile& profile);

}  // namespace tokd
