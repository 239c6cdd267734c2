#pragma once

#include <doctest.h>

#include <filesystem>
#include <string>

#include "tokd/geometry/plucker.hpp"
#include "tokd/model/model.hpp"
#include "tokd/numeric/rng.hpp"
#include "tokd/numeric/tensor.hpp"

namespace tokd::test {

template <typename T = double>
inline Tensor<T> random_tensor(Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Tensor<T> t(std::move(shape));
  for (auto& v : t.values()) v = static_cast<T>(rng.uniform(lo, hi));
  return t;
}

inline Image random_image(std::size_t h, std::size_t w, Rng& rng) {
  Image img(h, w, 3);
  for (auto& v : img.values()) v = rng.uniform();
  return img;
}

/// Random posed sources and a target ray map at the config's image size.
struct ViewFixture {
  std::vector<SourceView> sources;
  PluckerMap target;
  Image target_image;
};

inline ViewFixture random_views(const ModelConfig& cfg, std::size_t k, Rng& rng) {
  const int w = static_cast<int>(cfg.image_width), h = static_cast<int>(cfg.image_height);
  const Intrinsics intr = Intrinsics::from_fov(w, h, 0.9);
  auto random_pose = [&] {
    const Vec3 eye(rng.uniform(2.5, 4.0), rng.uniform(-0.5, 1.0), rng.uniform(-1.0, 1.0));
    return look_at(eye, Vec3(rng.uniform(-0.2, 0.2), 0.0, 0.0));
  };
  ViewFixture f;
  for (std::size_t i = 0; i < k; ++i) {
    f.sources.push_back(SourceView{random_image(cfg.image_height, cfg.image_width, rng), plucker_map(intr, random_pose())});
  }
  f.target = plucker_map(intr, random_pose());
  f.target_image = random_image(cfg.image_height, cfg.image_width, rng);
  return f;
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("tokd_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace tokd::test
