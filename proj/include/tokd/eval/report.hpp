#pragma once

#include <string>
#include <vector>

#include "tokd/datapipe/dataset.hpp"
#include "tokd/model/config.hpp"
#include "tokd/numeric/params.hpp"

namespace tokd {

struct SceneMetric {
  std::string id;
  double psnr = 0;
  double ssim = 0;
};

struct MetricReport {
  std::vector<SceneMetric> scenes;
  double mean_psnr = 0;
  double mean_ssim = 0;
  std::string config_hash;

  std::size_t count() const { return scenes.size(); }
  /// Header "scene,psnr,ssim,config_hash", one row per scene, then a "mean" row.
  std::string to_csv() const;
};

/// FNV-1a over the config text, as 16 hex digits.
std::string config_hash(const ModelConfig& cfg);

/// Scores the evaluation example of every scene (target: first conditioned view or view 0).
template <typename T>
MetricReport evaluate(const ParamStore<T>& params, const ModelConfig& cfg, const std::vector<SceneRecord>& scenes,
                      std::size_t sources);

double median(std::vector<double> values);

}  // namespace tokd
