#pragma once

#include <vector>

#include "tokd/geometry/camera.hpp"
#include "tokd/numeric/image.hpp"
#include "tokd/numeric/rng.hpp"

namespace tokd {

struct Sphere {
  Vec3 center = Vec3::Zero();
  double radius = 1.0;
  Vec3 albedo = Vec3::Constant(0.5);
};

/// Lambertian spheres over an optional horizontal ground plane (world y up),
/// lit by one directional light.
struct SceneSpec {
  Vec3 background = Vec3(0.6, 0.7, 0.9);
  std::vector<Sphere> spheres;
  bool has_ground = true;
  double ground_height = -1.0;
  Vec3 ground_albedo = Vec3::Constant(0.5);
  /// Unit vector pointing toward the light.
  Vec3 light_dir = Vec3(0.0, 1.0, 0.0);

  /// Throws ArgumentError on a non-positive radius, albedo outside [0, 1] or a non-unit light.
  void validate() const;
};

/// Ambient term added to every lit surface.
inline constexpr double kAmbient = 0.1;

/// One primary ray per pixel center; shading albedo * max(0, n.l) + ambient,
/// clamped to [0, 1]; background where nothing is hit.
Image render(const SceneSpec& scene, const Intrinsics& intr, const Pose& pose);

/// 1-3 spheres near the origin resting above the ground at y = -1.
SceneSpec random_scene(Rng& rng);

}  // namespace tokd
