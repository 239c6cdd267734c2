#pragma once

#include "tokd/geometry/camera.hpp"
#include "tokd/numeric/tensor.hpp"

namespace tokd {

/// Per-pixel Plücker ray coordinates, H x W x 6: unit world direction d in
/// channels 0-2 and moment m = o x d in channels 3-5 (o the camera center).
struct PluckerMap {
  Tensor<double> data;

  std::size_t height() const { return data.dim(0); }
  std::size_t width() const { return data.dim(1); }
  const double* at(std::size_t y, std::size_t x) const { return data.data() + (y * width() + x) * 6; }
};

PluckerMap plucker_map(const Intrinsics& intr, const Pose& pose);

}  // namespace tokd
