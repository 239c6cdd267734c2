#include "tokd/geometry/plucker.hpp"

#include <Eigen/Geometry>

namespace tokd {

PluckerMap plucker_map(const Intrinsics& intr, const Pose& pose) {
  intr.validate();
  pose.validate();
  const auto h = static_cast<std::size_t>(intr.height), w = static_cast<std::size_t>(intr.width);
  PluckerMap map{Tensor<double>({h, w, 6})};
  const Vec3 origin = pose.center();
  const Mat3 cam_to_world = pose.rotation.transpose();
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      const Vec3 d = (cam_to_world * intr.pixel_direction(static_cast<int>(x), static_cast<int>(y))).normalized();
      const Vec3 m = origin.cross(d);
      double* px = map.data.data() + (y * w + x) * 6;
      for (int c = 0; c < 3; ++c) {
        px[c] = d[c];
        px[3 + c] = m[c];
      }
    }
  }
  return map;
}

}  // namespace tokd
