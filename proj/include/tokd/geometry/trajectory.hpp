#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "tokd/geometry/camera.hpp"
#include "tokd/numeric/rng.hpp"

namespace tokd {

/// Uniform Catmull-Rom segment between p1 and p2, t in [0, 1].
Vec3 catmull_rom(const Vec3& p0, const Vec3& p1, const Vec3& p2, const Vec3& p3, double t);

/// n positions along a Catmull-Rom spline that passes through all four
/// control points (end tangents from reflected phantom points), sampled at
/// uniform parameter spacing from the first to the last control point.
std::vector<Vec3> spline_positions(const std::array<Vec3, 4>& control, std::size_t n);

/// Samples four control points uniformly inside a ball of radius `scale`
/// around the anchor camera center, walks the spline through them, and aims
/// every camera at `look_target`.
std::vector<Pose> sample_spline_trajectory(const Pose& anchor, std::size_t n, double scale, Rng& rng,
                                           const Vec3& look_target);

}  // namespace tokd
