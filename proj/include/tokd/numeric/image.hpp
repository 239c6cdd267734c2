#pragma once

#include <span>

#include "tokd/numeric/tensor.hpp"

namespace tokd {

/// Row-major H x W x C image with values nominally in [0, 1].
class Image {
 public:
  Image() = default;
  Image(std::size_t height, std::size_t width, std::size_t channels, double fill = 0.0)
      : pixels_({height, width, channels}, fill) {}
  explicit Image(Tensor<double> pixels);

  std::size_t height() const { return pixels_.empty() ? 0 : pixels_.dim(0); }
  std::size_t width() const { return pixels_.empty() ? 0 : pixels_.dim(1); }
  std::size_t channels() const { return pixels_.empty() ? 0 : pixels_.dim(2); }
  std::size_t size() const { return pixels_.numel(); }

  double& at(std::size_t y, std::size_t x, std::size_t c) { return pixels_[(y * width() + x) * channels() + c]; }
  double at(std::size_t y, std::size_t x, std::size_t c) const { return pixels_[(y * width() + x) * channels() + c]; }

  std::span<double> values() { return pixels_.values(); }
  std::span<const double> values() const { return pixels_.values(); }
  const Tensor<double>& tensor() const { return pixels_; }

  bool same_extent(const Image& other) const { return pixels_.shape() == other.pixels_.shape(); }

  friend bool operator==(const Image&, const Image&) = default;

 private:
  Tensor<double> pixels_;
};

}  // namespace tokd
