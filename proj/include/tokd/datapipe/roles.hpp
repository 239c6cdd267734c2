#pragma once

#include <string_view>
#include <vector>

#include "tokd/datapipe/dataset.hpp"
#include "tokd/model/model.hpp"
#include "tokd/numeric/rng.hpp"

namespace tokd {

/// Source/target views drawn from one scene (indices into scene->views).
struct TrainExample {
  const SceneRecord* scene = nullptr;
  std::vector<std::size_t> sources;
  std::size_t target = 0;

  const CameraView& target_view() const { return scene->views[target]; }
  const CameraView& source_view(std::size_t i) const { return scene->views[sources[i]]; }
};

enum class RoleScheme : std::uint8_t { Naive, CleanTarget };

std::string_view scheme_name(RoleScheme s);
RoleScheme parse_scheme(std::string_view name);

/// Target: a conditioned view. Sources: k distinct generated views.
/// Throws DataError when the scene has fewer than k generated views or no conditioned view.
TrainExample assign_roles_clean_target(const SceneRecord& rec, std::size_t k, Rng& rng);

/// k + 1 distinct views drawn uniformly; the first draw is the target.
/// Throws DataError when k + 1 exceeds the view count.
TrainExample assign_roles_naive(const SceneRecord& rec, std::size_t k, Rng& rng);

/// Scheme dispatch for mixed datasets: real scenes have no generated views,
/// so both schemes draw them uniformly.
TrainExample sample_example(const SceneRecord& rec, std::size_t k, RoleScheme scheme, Rng& rng);

/// Deterministic evaluation split: the first conditioned view (view 0 when
/// there is none) as target, the first k other views as sources.
TrainExample evaluation_example(const SceneRecord& rec, std::size_t k);

/// Model inputs for an example: posed sources, target rays and target image.
struct ExampleTensors {
  std::vector<SourceView> sources;
  PluckerMap target_rays;
  Image target;
};

ExampleTensors example_tensors(const TrainExample& ex);

}  // namespace tokd
