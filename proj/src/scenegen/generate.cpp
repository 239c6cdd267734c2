#include "tokd/scenegen/generate.hpp"

#include <cmath>
#include <cstdio>
#include <exception>

#include "tokd/datapipe/image_io.hpp"
#include "tokd/geometry/trajectory.hpp"
#include "tokd/numeric/errors.hpp"

namespace tokd {

void GenerationConfig::validate() const {
  if (scenes == 0) throw ConfigError("generation: scenes must be positive");
  if (views < 3) throw ConfigError("generation: need at least 3 views per scene");
  if (width <= 0 || height <= 0) throw ConfigError("generation: image size must be positive");
  if (!(fov_deg > 0.0 && fov_deg < 180.0)) throw ConfigError("generation: fov_deg must be in (0, 180)");
  if (!(synthetic_fraction >= 0.0 && synthetic_fraction <= 1.0)) {
    throw ConfigError("generation: synthetic_fraction must be in [0, 1]");
  }
  if (!(severity >= 0.0 && severity <= 1.0)) throw ConfigError("generation: severity must be in [0, 1]");
  if (conditioned_views == 0 || conditioned_views >= views) {
    throw ConfigError("generation: conditioned_views must be in [1, views)");
  }
  if (!(orbit_radius > 2.5)) throw ConfigError("generation: orbit_radius must exceed 2.5");
  if (!(spline_scale > 0.0 && spline_scale < orbit_radius - 2.0)) {
    throw ConfigError("generation: spline_scale must be positive and keep cameras outside the scene");
  }
}

bool is_synthetic_index(std::size_t index, double fraction) {
  const auto before = static_cast<long long>(std::floor(static_cast<double>(index) * fraction + 1e-9));
  const auto after = static_cast<long long>(std::floor(static_cast<double>(index + 1) * fraction + 1e-9));
  return after > before;
}

namespace {

constexpr double kTargetHeight = -0.4;

std::string scene_id(const GenerationConfig& cfg, std::size_t index) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04zu", index);
  return cfg.id_prefix + buf;
}

}  // namespace

SceneRecord generate_scene(const GenerationConfig& cfg, std::size_t index) {
  cfg.validate();
  Rng rng = Rng(cfg.seed).split(index);
  Rng scene_rng = rng.split(0), camera_rng = rng.split(1);
  const SceneSpec scene = random_scene(scene_rng);
  const Intrinsics intr = Intrinsics::from_fov(cfg.width, cfg.height, cfg.fov_deg * M_PI / 180.0);
  const Vec3 target(0.0, kTargetHeight, 0.0);

  const double azimuth = camera_rng.uniform(0.0, 2.0 * M_PI);
  const double elevation = camera_rng.uniform(0.15, 0.45);
  const Vec3 eye(cfg.orbit_radius * std::cos(elevation) * std::cos(azimuth),
                 kTargetHeight + cfg.orbit_radius * std::sin(elevation),
                 cfg.orbit_radius * std::cos(elevation) * std::sin(azimuth));
  const Pose anchor = look_at(eye, target);
  std::vector<Pose> poses{anchor};
  for (const Pose& p : sample_spline_trajectory(anchor, cfg.views - 1, cfg.spline_scale, camera_rng, target)) {
    poses.push_back(p);
  }

  SceneRecord rec;
  rec.id = scene_id(cfg, index);
  rec.kind = is_synthetic_index(index, cfg.synthetic_fraction) ? SceneKind::Synthetic : SceneKind::Real;
  if (rec.kind == SceneKind::Synthetic) {
    rec.artifacts = ArtifactProfile{cfg.severity, cfg.components, rng.split(2).next_u64()};
  } else {
    rec.artifacts = ArtifactProfile{0.0, 0, 0};
  }
  for (std::size_t k = 0; k < poses.size(); ++k) {
    CameraView v;
    v.intrinsics = intr;
    v.pose = poses[k];
    Image img = render(scene, intr, poses[k]);
    if (rec.kind == SceneKind::Real) {
      v.role = ViewRole::Clean;
    } else if (k < cfg.conditioned_views) {
      v.role = ViewRole::Conditioned;
    } else {
      v.role = ViewRole::Generated;
      ArtifactProfile view_profile = rec.artifacts;
      view_profile.seed = Rng(rec.artifacts.seed).split(k).next_u64();
      img = inject_artifacts(img, view_profile);
      v.artifact_severity = view_profile.severity;
    }
    v.image = quantize8(img);
    rec.views.push_back(std::move(v));
  }
  return rec;
}

std::vector<SceneRecord> generate_dataset(const GenerationConfig& cfg) {
  cfg.validate();
  std::vector<SceneRecord> out(cfg.scenes);
  std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic)
  for (std::size_t i = 0; i < cfg.scenes; ++i) {
    try {
      out[i] = generate_scene(cfg, i);
    } catch (...) {
#pragma omp critical
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

}  // namespace tokd
