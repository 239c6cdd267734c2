#include "tokd/geometry/trajectory.hpp"

#include <cmath>

#include "tokd/numeric/errors.hpp"

namespace tokd {

Vec3 catmull_rom(const Vec3& p0, const Vec3& p1, const Vec3& p2, const Vec3& p3, double t) {
  const double t2 = t * t, t3 = t2 * t;
  return 0.5 * ((2.0 * p1) + (-p0 + p2) * t + (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3) * t2 +
                (-p0 + 3.0 * p1 - 3.0 * p2 + p3) * t3);
}

std::vector<Vec3> spline_positions(const std::array<Vec3, 4>& control, std::size_t n) {
  if (n == 0) throw ArgumentError("spline_positions: n must be at least 1");
  const std::array<Vec3, 6> pts{2.0 * control[0] - control[1], control[0], control[1],
                                control[2],                    control[3], 2.0 * control[3] - control[2]};
  std::vector<Vec3> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double s = n == 1 ? 0.0 : 3.0 * static_cast<double>(i) / static_cast<double>(n - 1);
    const std::size_t seg = std::min<std::size_t>(static_cast<std::size_t>(s), 2);
    const double t = s - static_cast<double>(seg);
    out.push_back(catmull_rom(pts[seg], pts[seg + 1], pts[seg + 2], pts[seg + 3], t));
  }
  return out;
}

namespace {

Vec3 sample_in_ball(Rng& rng, double radius) {
  Vec3 dir(rng.normal(), rng.normal(), rng.normal());
  while (dir.norm() < 1e-12) dir = Vec3(rng.normal(), rng.normal(), rng.normal());
  return dir.normalized() * (radius * std::cbrt(rng.uniform()));
}

}  // namespace

std::vector<Pose> sample_spline_trajectory(const Pose& anchor, std::size_t n, double scale, Rng& rng,
                                           const Vec3& look_target) {
  if (n == 0) throw ArgumentError("sample_spline_trajectory: n must be at least 1");
  if (!(scale > 0.0)) throw ArgumentError("sample_spline_trajectory: scale must be positive");
  const Vec3 center = anchor.center();
  std::array<Vec3, 4> control;
  for (auto& c : control) c = center + sample_in_ball(rng, scale);
  std::vector<Pose> poses;
  poses.reserve(n);
  for (const Vec3& p : spline_positions(control, n)) poses.push_back(look_at(p, look_target));
  return poses;
}

}  // namespace tokd
