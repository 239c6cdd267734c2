#pragma once

#include <cstdint>
#include <vector>

#include "tokd/numeric/tensor.hpp"

namespace tokd {

/// Non-overlapping p x p patches of an H x W x C array, one row per patch.
///
/// Patches are ordered row-major over the (H/p) x (W/p) grid; inside a patch
/// elements are ordered (row, column, channel).
template <typename T>
struct PatchGrid {
  Tensor<T> patches;  // [(H/p)(W/p), p*p*C]
  std::size_t patch = 0;
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t channels = 0;

  std::size_t grid_rows() const { return height / patch; }
  std::size_t grid_cols() const { return width / patch; }
  std::size_t count() const { return grid_rows() * grid_cols(); }
};

/// Throws DimensionError unless H and W are divisible by p.
template <typename T>
PatchGrid<T> patchify(const Tensor<T>& image, std::size_t p);

template <typename T>
Tensor<T> unpatchify(const PatchGrid<T>& grid);

/// For every element of the H x W x C image, the flat index of the patch
/// element it comes from. Drives the differentiable unpatchify gather.
std::vector<std::size_t> unpatchify_source_index(std::size_t height, std::size_t width, std::size_t channels,
                                                 std::size_t p);

/// Role indicator carried by every token: 0 for source tokens, 1 for target tokens.
inline constexpr std::uint8_t kSourceRole = 0;
inline constexpr std::uint8_t kTargetRole = 1;
/// view_index of target tokens.
inline constexpr std::int32_t kTargetView = -1;

extern template struct PatchGrid<float>;
extern template struct PatchGrid<double>;

}  // namespace tokd
