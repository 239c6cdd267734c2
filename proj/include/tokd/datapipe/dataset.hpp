#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "tokd/geometry/camera.hpp"
#include "tokd/numeric/image.hpp"
#include "tokd/scenegen/artifacts.hpp"

namespace tokd {

/// clean: rendered view of a real scene. conditioned: the clean anchor of a
/// synthetic scene. generated: a synthetic view carrying artifacts.
enum class ViewRole : std::uint8_t { Clean, Conditioned, Generated };

std::string_view role_name(ViewRole role);
ViewRole parse_role(std::string_view name);

struct CameraView {
  Intrinsics intrinsics;
  Pose pose;
  Image image;
  ViewRole role = ViewRole::Clean;
  /// Severity of the artifacts injected into this view (0 for clean views).
  double artifact_severity = 0.0;

  friend bool operator==(const CameraView&, const CameraView&) = default;
};

enum class SceneKind : std::uint8_t { Real, Synthetic };

struct SceneRecord {
  std::string id;
  SceneKind kind = SceneKind::Real;
  std::vector<CameraView> views;
  ArtifactProfile artifacts;

  std::vector<std::size_t> conditioned_indices() const;
  std::vector<std::size_t> generated_indices() const;

  /// Throws ValidationError: fewer than 3 views, a synthetic scene without a
  /// conditioned view, or role tags inconsistent with the scene kind.
  void validate() const;

  friend bool operator==(const SceneRecord&, const SceneRecord&) = default;
};

/// Writes <dir>/view_<k>.ppm, cameras.txt and meta.txt.
void save_scene(const std::filesystem::path& dir, const SceneRecord& rec);

/// Throws IoError naming a missing or unreadable file, FormatError on a
/// malformed manifest or a manifest/image count mismatch, ValidationError on
/// an improper rotation or invalid intrinsics.
SceneRecord load_scene(const std::filesystem::path& dir);

/// <root>/scenes/<id>/ for every record.
void save_dataset(const std::filesystem::path& root, const std::vector<SceneRecord>& scenes);

/// All scenes under <root>/scenes, sorted by directory name.
std::vector<SceneRecord> load_dataset(const std::filesystem::path& root);

}  // namespace tokd
