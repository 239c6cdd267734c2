#pragma once

#include <functional>
#include <span>
#include <vector>

#include "tokd/geometry/plucker.hpp"
#include "tokd/model/config.hpp"
#include "tokd/numeric/image.hpp"
#include "tokd/numeric/params.hpp"

namespace tokd {

/// One posed input image.
struct SourceView {
  Image image;
  PluckerMap rays;
};

/// Patchified network inputs for one target view, in the working precision.
template <typename T>
struct ModelInputs {
  Tensor<T> source_features;  // [n_src, 9p^2]
  Tensor<T> target_rays;      // [n_tgt, 6p^2]
  std::vector<std::uint8_t> delta;
  std::vector<std::int32_t> view_index;
};

/// Checks view count and extents against the config, then patchifies.
/// Throws ArgumentError without sources and DimensionError on size mismatch.
template <typename T>
ModelInputs<T> prepare_inputs(std::span<const SourceView> sources, const PluckerMap& target_rays,
                              const ModelConfig& cfg);

/// Registers every parameter of the model in a fixed order.
template <typename T>
ParamStore<T> init_params(const ModelConfig& cfg, std::uint64_t seed);

/// Records the forward pass on `params.graph()`; returns the [H, W, 3] prediction.
/// When `features` is given, the embedder output and every block output are appended.
template <typename T>
Var<T> forward_graph(ParamBinder<T>& params, const ModelInputs<T>& inputs, const ModelConfig& cfg,
                     std::vector<Var<T>>* features = nullptr);

template <typename T>
Tensor<T> forward(const ParamStore<T>& params, std::span<const SourceView> sources, const PluckerMap& target_rays,
                  const ModelConfig& cfg);

template <typename T>
struct FeatureCapture {
  Tensor<T> prediction;
  Tensor<T> embedded;             // tokens entering block 0
  std::vector<Tensor<T>> layers;  // output tokens of each block
  std::vector<std::uint8_t> delta;
};

template <typename T>
FeatureCapture<T> forward_with_features(const ParamStore<T>& params, std::span<const SourceView> sources,
                                        const PluckerMap& target_rays, const ModelConfig& cfg);

/// Replacement for the built-in perceptual term: (prediction, target) -> scalar.
template <typename T>
using PerceptualHook = std::function<Var<T>(Var<T>, const Tensor<T>&)>;

/// MSE + lambda * perceptual. The perceptual term comes from `hook` when set,
/// otherwise from cfg.perceptual (Off contributes nothing).
template <typename T>
Var<T> loss_graph(Var<T> prediction, const Tensor<T>& target, const ModelConfig& cfg,
                  const PerceptualHook<T>& hook = {});

/// Loss between two images, evaluated in 64-bit.
double loss(const Image& prediction, const Image& target, const ModelConfig& cfg);

template <typename T>
struct LossAndGrad {
  T loss = 0;
  Tensor<T> prediction;
  std::uint64_t flops = 0;
};

/// One forward/backward pass; gradients are added into `grads` scaled by `weight`.
template <typename T>
LossAndGrad<T> loss_and_gradients(const ParamStore<T>& params, std::span<const SourceView> sources,
                                  const PluckerMap& target_rays, const Image& target, const ModelConfig& cfg,
                                  ParamStore<T>& grads, T weight = T(1), const PerceptualHook<T>& hook = {});

/// Converts an [H, W, 3] prediction tensor to an image.
template <typename T>
Image to_image(const Tensor<T>& prediction);

}  // namespace tokd
