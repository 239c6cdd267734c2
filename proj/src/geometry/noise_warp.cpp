#include "tokd/geometry/noise_warp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "tokd/numeric/errors.hpp"

namespace tokd {

void NoiseWarpConfig::validate() const {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ArgumentError("noise warp: alpha must lie in [0, 1]");
  if (!(plane_depth > 0.0)) throw ArgumentError("noise warp: plane depth must be positive");
}

std::size_t WarpedNoise::overlap_count() const {
  return static_cast<std::size_t>(std::count(overlap.begin(), overlap.end(), std::uint8_t{1}));
}

WarpedNoise warp_noise(const Tensor<double>& n1, const Pose& pose1, const Pose& pose2, const Intrinsics& intr,
                       const NoiseWarpConfig& cfg, const Rng& rng) {
  cfg.validate();
  intr.validate();
  if (n1.rank() != 3 || n1.dim(0) != static_cast<std::size_t>(intr.height) ||
      n1.dim(1) != static_cast<std::size_t>(intr.width)) {
    throw DimensionError("noise warp: noise " + shape_string(n1.shape()) + " does not match a " +
                         std::to_string(intr.height) + "x" + std::to_string(intr.width) + " camera");
  }
  const std::size_t h = n1.dim(0), w = n1.dim(1), ch = n1.dim(2);

  // Camera-2 coordinates to camera-1 coordinates.
  const Pose rel = relative_pose(pose2, pose1);
  const double offset = cfg.plane_depth - rel.translation.z();
  if (!(offset > 0.0)) {
    throw GeometryError("noise warp: proxy plane at depth " + std::to_string(cfg.plane_depth) +
                        " is behind the second camera");
  }

  const double blend_norm = cfg.renormalize ? std::sqrt(cfg.alpha * cfg.alpha + (1.0 - cfg.alpha) * (1.0 - cfg.alpha))
                                            : 1.0;
  WarpedNoise out{Tensor<double>(n1.shape()), std::vector<std::uint8_t>(h * w, 0)};
  const auto rows = static_cast<std::ptrdiff_t>(h);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t y = 0; y < rows; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      const Vec3 ray = rel.rotation * intr.pixel_direction(static_cast<int>(x), static_cast<int>(y));
      double u1 = -1.0, v1 = -1.0;
      bool hit = false;
      if (ray.z() > 0.0) {
        const Vec3 p = rel.translation + (offset / ray.z()) * ray;
        u1 = intr.fx * p.x() / p.z() + intr.cx;
        v1 = intr.fy * p.y() / p.z() + intr.cy;
        hit = std::isfinite(u1) && std::isfinite(v1);
      }
      const std::size_t idx = static_cast<std::size_t>(y) * w + x;
      double* dst = out.noise.data() + idx * ch;
      if (hit && u1 >= 0.0 && u1 < static_cast<double>(w) && v1 >= 0.0 && v1 < static_cast<double>(h)) {
        const auto su = static_cast<std::size_t>(u1), sv = static_cast<std::size_t>(v1);
        std::copy_n(n1.data() + (sv * w + su) * ch, ch, dst);
        out.overlap[idx] = 1;
        continue;
      }
      // No correspondence: the nearest valid view-1 sample is the one at the same pixel.
      const double* src = n1.data() + idx * ch;
      for (std::size_t c = 0; c < ch; ++c) {
        const double fresh = rng.normal_at(idx * ch + c);
        dst[c] = (cfg.alpha * src[c] + (1.0 - cfg.alpha) * fresh) / blend_norm;
      }
    }
  }
  return out;
}

}  // namespace tokd
