#pragma once

#include <cstdint>

#include "tokd/model/config.hpp"

namespace tokd {

struct ModelCost {
  std::uint64_t params = 0;
  /// Forward FLOPs for one target view, with the charges used by the graph instrumentation.
  std::uint64_t forward_flops = 0;
};

/// Closed-form parameter and forward-FLOP counts for `sources` source views.
ModelCost count_params_flops(const ModelConfig& cfg, std::size_t sources = 2);

/// Parameters of one affine map.
constexpr std::uint64_t linear_params(std::uint64_t in, std::uint64_t out, bool bias = true) {
  return in * out + (bias ? out : 0);
}

}  // namespace tokd
