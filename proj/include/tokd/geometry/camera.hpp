#pragma once

#include <Eigen/Core>

namespace tokd {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Pinhole intrinsics in pixels. Pixel (u, v) has its center at (u + 0.5, v + 0.5).
struct Intrinsics {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 1;
  int height = 1;

  /// Throws GeometryError when focal lengths or principal point are out of range.
  void validate() const;

  /// Unnormalized camera-frame direction through the center of pixel (u, v).
  Vec3 pixel_direction(int u, int v) const;

  /// Focal length chosen for a horizontal field of view, principal point at the image center.
  static Intrinsics from_fov(int width, int height, double horizontal_fov_rad);

  friend bool operator==(const Intrinsics&, const Intrinsics&) = default;
};

/// World-to-camera rigid transform: x_cam = rotation * x_world + translation.
struct Pose {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  static Pose identity() { return {}; }

  /// Camera center in world coordinates, -R^T t.
  Vec3 center() const { return -rotation.transpose() * translation; }
  Vec3 to_camera(const Vec3& world) const { return rotation * world + translation; }
  Vec3 to_world(const Vec3& cam) const { return rotation.transpose() * (cam - translation); }

  /// Throws GeometryError unless R^T R = I and det R = +1 within `tol`.
  void validate(double tol = 1e-6) const;

  friend bool operator==(const Pose& a, const Pose& b) {
    return a.rotation == b.rotation && a.translation == b.translation;
  }
};

/// Transform taking camera-a coordinates to camera-b coordinates.
Pose relative_pose(const Pose& a, const Pose& b);

/// Applies `first`, then `second` (both as camera-to-camera transforms).
Pose compose(const Pose& first, const Pose& second);

/// Camera at `eye` looking at `target`; image y points along -`up`.
Pose look_at(const Vec3& eye, const Vec3& target, const Vec3& up = Vec3::UnitY());

}  // namespace tokd
