#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "tokd/numeric/autodiff.hpp"

namespace tokd {

/// Per-element FLOP charges used by the graph instrumentation and by the
/// analytic counter, so the two agree by construction on primitive costs.
/// Matrix products always cost 2*m*n*k.
namespace flop_cost {
inline constexpr std::uint64_t kAdd = 1;
inline constexpr std::uint64_t kScale = 1;
inline constexpr std::uint64_t kLayerNorm = 8;
inline constexpr std::uint64_t kGelu = 8;
inline constexpr std::uint64_t kSigmoid = 4;
inline constexpr std::uint64_t kSoftmax = 5;
/// Sum of squares, root and division for one query/key component.
inline constexpr std::uint64_t kQkNormalize = 3;
inline constexpr std::uint64_t kMse = 3;
inline constexpr std::uint64_t kGradientL1 = 5;
}  // namespace flop_cost

/// Weights of one multi-head self-attention layer with QK-Norm.
template <typename T>
struct AttentionWeights {
  Var<T> qkv_weight;   // [d, 3d]
  Var<T> qkv_bias;     // [3d]
  Var<T> temperature;  // [heads]
  Var<T> out_weight;   // [d, d]
  Var<T> out_bias;     // [d]
};

namespace ops {

/// x[..., in] * weight[in, out] (+ bias[out]).
template <typename T>
Var<T> linear(Var<T> x, Var<T> weight, std::optional<Var<T>> bias = std::nullopt);
template <typename T>
Var<T> linear(Var<T> x, Var<T> weight, Var<T> bias) {
  return linear(x, weight, std::optional<Var<T>>(bias));
}

template <typename T>
Var<T> add(Var<T> a, Var<T> b);
template <typename T>
Var<T> mul(Var<T> a, Var<T> b);
template <typename T>
Var<T> scale(Var<T> x, T factor);
template <typename T>
Var<T> sum(Var<T> x);

/// Normalizes over the trailing axis, then applies gain and bias.
template <typename T>
Var<T> layer_norm(Var<T> x, Var<T> gain, Var<T> bias, T eps);

/// Exact (erf) GELU.
template <typename T>
Var<T> gelu(Var<T> x);
template <typename T>
Var<T> sigmoid(Var<T> x);
/// Softmax over the trailing axis.
template <typename T>
Var<T> softmax_rows(Var<T> x);

/// Attention core on packed projections qkv[n, 3d] (columns q | k | v, heads
/// contiguous inside each block). Per head, q and k are L2-normalized and the
/// logits are temperature[h] * <q_i, k_j>; full non-causal softmax over keys.
template <typename T>
Var<T> qknorm_attention(Var<T> qkv, Var<T> temperature, std::size_t heads);

/// Multi-head self-attention: qkv projection, QK-Norm attention core and
/// output projection. Throws ConfigError when d is not divisible by heads.
template <typename T>
Var<T> mhsa_qknorm(Var<T> x, const AttentionWeights<T>& w, std::size_t heads);

/// Attention probabilities of one head, for inspection (rows sum to one).
template <typename T>
Tensor<T> attention_probabilities(const Tensor<T>& qkv, const Tensor<T>& temperature, std::size_t heads,
                                  std::size_t head);

/// Row-selected modulation (1 + sigma[role]) * x + mu[role], where role is
/// the per-row indicator. sigma and mu are [roles, d] tables; mu is optional.
template <typename T>
Var<T> modulate(Var<T> x, Var<T> sigma, std::optional<Var<T>> mu, std::span<const std::uint8_t> role);

template <typename T>
Var<T> concat_rows(const std::vector<Var<T>>& parts);
template <typename T>
Var<T> slice_rows(Var<T> x, std::size_t begin, std::size_t end);

/// out[j] = x[source[j]] with output shape `shape`; the gradient scatters back.
/// `source` must be a permutation-like index list into x.
template <typename T>
Var<T> gather(Var<T> x, Shape shape, std::vector<std::size_t> source);

/// Mean squared error against a constant target of the same shape.
template <typename T>
Var<T> mse(Var<T> pred, const Tensor<T>& target);

/// Mean absolute difference between horizontal and vertical finite-difference
/// image gradients of pred[H, W, C] and target[H, W, C], averaged over both axes.
template <typename T>
Var<T> gradient_l1(Var<T> pred, const Tensor<T>& target);

}  // namespace ops
}  // namespace tokd
