#include "tokd/geometry/camera.hpp"

#include <cmath>
#include <string>

#include <Eigen/Geometry>

#include "tokd/numeric/errors.hpp"

namespace tokd {

void Intrinsics::validate() const {
  if (width <= 0 || height <= 0) throw GeometryError("intrinsics: image extents must be positive");
  if (!(fx > 0.0) || !(fy > 0.0)) throw GeometryError("intrinsics: focal lengths must be positive");
  if (!(cx >= 0.0 && cx < width) || !(cy >= 0.0 && cy < height)) {
    throw GeometryError("intrinsics: principal point (" + std::to_string(cx) + ", " + std::to_string(cy) +
                        ") outside the image");
  }
}

Vec3 Intrinsics::pixel_direction(int u, int v) const {
  return {(u + 0.5 - cx) / fx, (v + 0.5 - cy) / fy, 1.0};
}

Intrinsics Intrinsics::from_fov(int width, int height, double horizontal_fov_rad) {
  const double f = 0.5 * width / std::tan(0.5 * horizontal_fov_rad);
  return {f, f, 0.5 * width, 0.5 * height, width, height};
}

void Pose::validate(double tol) const {
  if (!rotation.allFinite() || !translation.allFinite()) throw GeometryError("pose: non-finite entries");
  const double ortho = (rotation.transpose() * rotation - Mat3::Identity()).cwiseAbs().maxCoeff();
  if (ortho > tol) throw GeometryError("pose: rotation is not orthonormal (deviation " + std::to_string(ortho) + ")");
  const double det = rotation.determinant();
  if (std::abs(det - 1.0) > tol) throw GeometryError("pose: rotation determinant is " + std::to_string(det));
}

Pose relative_pose(const Pose& a, const Pose& b) {
  Pose rel;
  rel.rotation = b.rotation * a.rotation.transpose();
  rel.translation = b.translation - rel.rotation * a.translation;
  return rel;
}

Pose compose(const Pose& first, const Pose& second) {
  Pose out;
  out.rotation = second.rotation * first.rotation;
  out.translation = second.rotation * first.translation + second.translation;
  return out;
}

Pose look_at(const Vec3& eye, const Vec3& target, const Vec3& up) {
  const Vec3 forward = (target - eye).normalized();
  Vec3 right = (-up).cross(forward);
  if (right.norm() < 1e-9) right = Vec3::UnitZ().cross(forward);
  right.normalize();
  const Vec3 down = forward.cross(right);
  Pose pose;
  pose.rotation.row(0) = right.transpose();
  pose.rotation.row(1) = down.transpose();
  pose.rotation.row(2) = forward.transpose();
  pose.translation = -pose.rotation * eye;
  return pose;
}

}  // namespace tokd
