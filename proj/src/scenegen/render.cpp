#include "tokd/scenegen/render.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "tokd/numeric/errors.hpp"

namespace tokd {

void SceneSpec::validate() const {
  auto in_unit = [](const Vec3& c) { return (c.array() >= 0.0).all() && (c.array() <= 1.0).all(); };
  for (const auto& s : spheres) {
    if (!(s.radius > 0.0)) throw ArgumentError("scene: sphere radius must be positive");
    if (!in_unit(s.albedo)) throw ArgumentError("scene: sphere albedo outside [0, 1]");
  }
  if (!in_unit(ground_albedo) || !in_unit(background)) throw ArgumentError("scene: colour outside [0, 1]");
  if (std::abs(light_dir.norm() - 1.0) > 1e-9) throw ArgumentError("scene: light direction must be unit length");
}

namespace {

struct Hit {
  double t = std::numeric_limits<double>::infinity();
  Vec3 normal = Vec3::Zero();
  Vec3 albedo = Vec3::Zero();
};

constexpr double kMinT = 1e-9;

void intersect_sphere(const Sphere& s, const Vec3& o, const Vec3& d, Hit& hit) {
  const Vec3 oc = o - s.center;
  const double b = oc.dot(d);
  const double c = oc.squaredNorm() - s.radius * s.radius;
  const double disc = b * b - c;
  if (disc < 0.0) return;
  const double root = std::sqrt(disc);
  double t = -b - root;
  if (t <= kMinT) t = -b + root;
  if (t <= kMinT || t >= hit.t) return;
  hit.t = t;
  hit.normal = (o + t * d - s.center) / s.radius;
  hit.albedo = s.albedo;
}

}  // namespace

Image render(const SceneSpec& scene, const Intrinsics& intr, const Pose& pose) {
  scene.validate();
  intr.validate();
  const int w = intr.width, h = intr.height;
  Image img(static_cast<std::size_t>(h), static_cast<std::size_t>(w), 3);
  const Vec3 o = pose.center();
  const Mat3 rt = pose.rotation.transpose();
#pragma omp parallel for schedule(static)
  for (int v = 0; v < h; ++v) {
    for (int u = 0; u < w; ++u) {
      const Vec3 d = (rt * intr.pixel_direction(u, v)).normalized();
      Hit hit;
      for (const auto& s : scene.spheres) intersect_sphere(s, o, d, hit);
      if (scene.has_ground && std::abs(d.y()) > 1e-12) {
        const double t = (scene.ground_height - o.y()) / d.y();
        if (t > kMinT && t < hit.t) {
          hit.t = t;
          hit.normal = Vec3::UnitY();
          hit.albedo = scene.ground_albedo;
        }
      }
      Vec3 colour = scene.background;
      if (std::isfinite(hit.t)) {
        const double lambert = std::max(0.0, hit.normal.dot(scene.light_dir));
        colour = (hit.albedo * lambert).array() + kAmbient;
        colour = colour.cwiseMin(1.0).cwiseMax(0.0);
      }
      for (int c = 0; c < 3; ++c) img.at(static_cast<std::size_t>(v), static_cast<std::size_t>(u), c) = colour[c];
    }
  }
  return img;
}

SceneSpec random_scene(Rng& rng) {
  SceneSpec scene;
  auto colour = [&rng](double lo, double hi) { return Vec3(rng.uniform(lo, hi), rng.uniform(lo, hi), rng.uniform(lo, hi)); };
  scene.background = colour(0.3, 0.9);
  scene.ground_height = -1.0;
  scene.ground_albedo = colour(0.2, 0.8);
  const std::size_t count = 1 + rng.below(3);
  for (std::size_t i = 0; i < count; ++i) {
    Sphere s;
    s.radius = rng.uniform(0.35, 0.8);
    s.center = Vec3(rng.uniform(-1.0, 1.0), scene.ground_height + s.radius + rng.uniform(0.0, 0.5),
                    rng.uniform(-1.0, 1.0));
    s.albedo = colour(0.15, 0.95);
    scene.spheres.push_back(s);
  }
  const double azimuth = rng.uniform(0.0, 2.0 * M_PI);
  const double elevation = rng.uniform(0.4, 1.3);
  scene.light_dir = Vec3(std::cos(elevation) * std::cos(azimuth), std::sin(elevation),
                         std::cos(elevation) * std::sin(azimuth))
                        .normalized();
  return scene;
}

}  // namespace tokd
