#include "tokd/datapipe/roles.hpp"

#include <algorithm>
#include <numeric>

#include "tokd/geometry/plucker.hpp"
#include "tokd/numeric/errors.hpp"

namespace tokd {

std::string_view scheme_name(RoleScheme s) { return s == RoleScheme::CleanTarget ? "clean-target" : "naive"; }

RoleScheme parse_scheme(std::string_view name) {
  if (name == "naive") return RoleScheme::Naive;
  if (name == "clean-target") return RoleScheme::CleanTarget;
  throw ConfigError("unknown role scheme '" + std::string(name) + "'");
}

namespace {

/// First `count` entries of a seeded partial Fisher-Yates shuffle of `pool`.
std::vector<std::size_t> draw_distinct(std::vector<std::size_t> pool, std::size_t count, Rng& rng) {
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t j = i + rng.below(pool.size() - i);
    std::swap(pool[i], pool[j]);
  }
  pool.resize(count);
  return pool;
}

}  // namespace

TrainExample assign_roles_clean_target(const SceneRecord& rec, std::size_t k, Rng& rng) {
  const auto generated = rec.generated_indices();
  const auto conditioned = rec.conditioned_indices();
  if (conditioned.empty()) throw DataError("scene " + rec.id + ": no conditioned view to use as target");
  if (k == 0 || generated.size() < k) {
    throw DataError("scene " + rec.id + ": " + std::to_string(k) + " sources requested, " +
                    std::to_string(generated.size()) + " generated views available");
  }
  TrainExample ex;
  ex.scene = &rec;
  ex.target = conditioned[rng.below(conditioned.size())];
  ex.sources = draw_distinct(generated, k, rng);
  return ex;
}

TrainExample assign_roles_naive(const SceneRecord& rec, std::size_t k, Rng& rng) {
  if (k == 0 || k + 1 > rec.views.size()) {
    throw DataError("scene " + rec.id + ": " + std::to_string(k) + " sources plus a target need more than " +
                    std::to_string(rec.views.size()) + " views");
  }
  std::vector<std::size_t> all(rec.views.size());
  std::iota(all.begin(), all.end(), 0);
  const auto picked = draw_distinct(std::move(all), k + 1, rng);
  TrainExample ex;
  ex.scene = &rec;
  ex.target = picked.front();
  ex.sources.assign(picked.begin() + 1, picked.end());
  return ex;
}

TrainExample sample_example(const SceneRecord& rec, std::size_t k, RoleScheme scheme, Rng& rng) {
  if (scheme == RoleScheme::CleanTarget && rec.kind == SceneKind::Synthetic) {
    return assign_roles_clean_target(rec, k, rng);
  }
  return assign_roles_naive(rec, k, rng);
}

TrainExample evaluation_example(const SceneRecord& rec, std::size_t k) {
  if (k == 0 || k + 1 > rec.views.size()) {
    throw DataError("scene " + rec.id + ": cannot evaluate with " + std::to_string(k) + " sources");
  }
  const auto conditioned = rec.conditioned_indices();
  TrainExample ex;
  ex.scene = &rec;
  ex.target = conditioned.empty() ? 0 : conditioned.front();
  for (std::size_t i = 0; i < rec.views.size() && ex.sources.size() < k; ++i)
    if (i != ex.target) ex.sources.push_back(i);
  return ex;
}

ExampleTensors example_tensors(const TrainExample& ex) {
  ExampleTensors out;
  for (std::size_t i = 0; i < ex.sources.size(); ++i) {
    const CameraView& v = ex.source_view(i);
    out.sources.push_back(SourceView{v.image, plucker_map(v.intrinsics, v.pose)});
  }
  const CameraView& t = ex.target_view();
  out.target_rays = plucker_map(t.intrinsics, t.pose);
  out.target = t.image;
  return out;
}

}  // namespace tokd
