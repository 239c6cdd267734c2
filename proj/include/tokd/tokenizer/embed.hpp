#pragma once

#include <cstdint>
#include <vector>

#include "tokd/numeric/autodiff.hpp"
#include "tokd/tokenizer/patch.hpp"

namespace tokd {

template <typename T>
struct LinearWeights {
  Var<T> weight;  // [in, out]
  Var<T> bias;    // [out]
};

/// Source and target tokens processed jointly by the transformer.
template <typename T>
struct TokenBatch {
  Var<T> tokens;                        // [n, d]
  std::vector<std::uint8_t> delta;      // role indicator per token
  std::vector<std::int32_t> view_index; // source image index, kTargetView for targets

  std::size_t size() const { return delta.size(); }
  std::size_t source_count() const;
  std::size_t target_count() const { return size() - source_count(); }
};

/// Row-wise concatenation [image patch, Plücker patch] -> [n, 9p^2].
template <typename T>
Tensor<T> source_features(const Tensor<T>& image_patches, const Tensor<T>& plucker_patches);

/// One affine map over concatenated image and ray patches.
template <typename T>
Var<T> embed_source(Graph<T>& graph, const Tensor<T>& image_patches, const Tensor<T>& plucker_patches,
                    const LinearWeights<T>& w);

/// Affine map over target ray patches only.
template <typename T>
Var<T> embed_target(Graph<T>& graph, const Tensor<T>& plucker_patches, const LinearWeights<T>& w);

/// Affine map to 3p^2 values followed by a sigmoid.
template <typename T>
Var<T> detokenize(Var<T> tokens, const LinearWeights<T>& w);

}  // namespace tokd
