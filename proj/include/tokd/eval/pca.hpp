#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "tokd/model/config.hpp"
#include "tokd/model/model.hpp"
#include "tokd/numeric/image.hpp"

namespace tokd {

struct PcaFit {
  Eigen::VectorXd mean;            // [d]
  Eigen::MatrixXd components;      // [d, k], columns by decreasing variance
  Eigen::VectorXd explained;       // [k] variances along the components
  Eigen::MatrixXd projections;     // [n, k] centered tokens in the component basis
};

/// Principal components of the rows of `tokens`. Throws ArgumentError for
/// fewer than 3 rows or k above the feature width.
PcaFit pca_fit(const Tensor<double>& tokens, std::size_t k = 3);

/// Cosine similarity between the mean source token and the mean target token.
double source_target_cosine(const Tensor<double>& tokens, std::span<const std::uint8_t> delta);

struct PcaDump {
  std::vector<double> cosine;  // one per block
  std::vector<Image> source_images;
  std::vector<Image> target_images;
};

/// Per block: joint PCA over source and target tokens, projection onto the
/// top three components, per-channel min-max scaling to [0, 1], and one
/// p x p colour block per token laid out on the patch grid (source views side
/// by side). Writes layer_<l>_src.ppm, layer_<l>_tgt.ppm and cosine.csv when
/// `out_dir` is non-empty.
PcaDump pca_dump(const FeatureCapture<double>& features, const ModelConfig& cfg,
                 const std::filesystem::path& out_dir = {});

}  // namespace tokd
