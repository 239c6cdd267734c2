#include "tokd/tokenizer/patch.hpp"

#include <string>

#include "tokd/numeric/errors.hpp"

namespace tokd {
namespace {

void check_divisible(std::size_t h, std::size_t w, std::size_t p) {
  if (p == 0 || h % p != 0 || w % p != 0) {
    throw DimensionError("patchify: " + std::to_string(h) + "x" + std::to_string(w) +
                         " image is not divisible into patches of size " + std::to_string(p));
  }
}

// Flat image index of element e of patch k.
std::size_t image_index(std::size_t k, std::size_t e, std::size_t w, std::size_t c, std::size_t p) {
  const std::size_t gc = w / p;
  const std::size_t py = k / gc, px = k % gc;
  const std::size_t ch = e % c, within = e / c;
  const std::size_t dy = within / p, dx = within % p;
  return ((py * p + dy) * w + (px * p + dx)) * c + ch;
}

}  // namespace

template <typename T>
PatchGrid<T> patchify(const Tensor<T>& image, std::size_t p) {
  if (image.rank() != 3) throw DimensionError("patchify: expected H x W x C, got " + shape_string(image.shape()));
  const std::size_t h = image.dim(0), w = image.dim(1), c = image.dim(2);
  check_divisible(h, w, p);
  const std::size_t count = (h / p) * (w / p), len = p * p * c;
  PatchGrid<T> grid{Tensor<T>({count, len}), p, h, w, c};
  for (std::size_t k = 0; k < count; ++k)
    for (std::size_t e = 0; e < len; ++e) grid.patches[k * len + e] = image[image_index(k, e, w, c, p)];
  return grid;
}

template <typename T>
Tensor<T> unpatchify(const PatchGrid<T>& grid) {
  check_divisible(grid.height, grid.width, grid.patch);
  const std::size_t len = grid.patch * grid.patch * grid.channels;
  if (grid.patches.shape() != Shape{grid.count(), len}) {
    throw DimensionError("unpatchify: patch array " + shape_string(grid.patches.shape()) + " does not match grid");
  }
  Tensor<T> image({grid.height, grid.width, grid.channels});
  for (std::size_t k = 0; k < grid.count(); ++k)
    for (std::size_t e = 0; e < len; ++e)
      image[image_index(k, e, grid.width, grid.channels, grid.patch)] = grid.patches[k * len + e];
  return image;
}

std::vector<std::size_t> unpatchify_source_index(std::size_t height, std::size_t width, std::size_t channels,
                                                 std::size_t p) {
  check_divisible(height, width, p);
  const std::size_t count = (height / p) * (width / p), len = p * p * channels;
  std::vector<std::size_t> source(height * width * channels);
  for (std::size_t k = 0; k < count; ++k)
    for (std::size_t e = 0; e < len; ++e) source[image_index(k, e, width, channels, p)] = k * len + e;
  return source;
}

template struct PatchGrid<float>;
template struct PatchGrid<double>;
template PatchGrid<float> patchify(const Tensor<float>&, std::size_t);
template PatchGrid<double> patchify(const Tensor<double>&, std::size_t);
template Tensor<float> unpatchify(const PatchGrid<float>&);
template Tensor<double> unpatchify(const PatchGrid<double>&);

}  // namespace tokd
