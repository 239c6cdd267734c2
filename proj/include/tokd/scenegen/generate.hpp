#pragma once

#include <string>
#include <vector>

#include "tokd/datapipe/dataset.hpp"
#include "tokd/scenegen/render.hpp"

namespace tokd {

struct GenerationConfig {
  std::size_t scenes = 8;
  std::size_t views = 8;
  int width = 64;
  int height = 64;
  double fov_deg = 50.0;
  std::uint64_t seed = 1;
  /// Share of scenes materialized as synthetic (one conditioned view, the rest artifact-injected).
  double synthetic_fraction = 0.0;
  double severity = 0.5;
  std::uint8_t components = kArtifactAll;
  std::size_t conditioned_views = 1;
  double orbit_radius = 4.0;
  double spline_scale = 1.0;
  std::string id_prefix = "scene_";

  /// Throws ConfigError on inconsistent settings.
  void validate() const;
};

/// Whether scene `index` is synthetic: spreads round(fraction * scenes) synthetic scenes evenly.
bool is_synthetic_index(std::size_t index, double fraction);

/// Scene `index` of the dataset, a pure function of (cfg, index).
///
/// View 0 sits on an orbit around the scene looking at its center; the other
/// views follow a random spline around it. Real scenes keep every view clean.
/// Synthetic scenes keep the first `conditioned_views` views clean and inject
/// artifacts into the rest with a per-scene profile.
SceneRecord generate_scene(const GenerationConfig& cfg, std::size_t index);

/// All scenes; scenes are independent and generated in parallel.
std::vector<SceneRecord> generate_dataset(const GenerationConfig& cfg);

}  // namespace tokd
