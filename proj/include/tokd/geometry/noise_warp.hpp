#pragma once

#include <cstdint>
#include <vector>

#include "tokd/geometry/camera.hpp"
#include "tokd/numeric/rng.hpp"
#include "tokd/numeric/tensor.hpp"

namespace tokd {

struct NoiseWarpConfig {
  /// Weight of the transported noise where no correspondence exists.
  double alpha = 0.5;
  /// Depth of the fronto-parallel proxy plane, in the first camera's frame.
  double plane_depth = 4.0;
  /// Divide blended pixels by sqrt(alpha^2 + (1 - alpha)^2).
  bool renormalize = true;

  void validate() const;
};

struct WarpedNoise {
  Tensor<double> noise;               // H x W x C
  std::vector<std::uint8_t> overlap;  // H x W, 1 where the pixel was transported from view 1

  std::size_t overlap_count() const;
};

/// Transports view-1 noise into view 2.
///
/// Each view-2 pixel center is cast onto the plane z = plane_depth of camera
/// 1 and projected into view 1. Inside view 1 the nearest noise sample is
/// copied verbatim. Elsewhere the output is alpha * n1[same pixel] + (1 - alpha)
/// * fresh, with fresh standard normal noise keyed by pixel and
/// channel so the result is independent of evaluation order.
///
/// Throws GeometryError when camera 2 sits on or beyond the plane.
WarpedNoise warp_noise(const Tensor<double>& n1, const Pose& pose1, const Pose& pose2, const Intrinsics& intr,
                       const NoiseWarpConfig& cfg, const Rng& rng);

}  // namespace tokd
