#pragma once

#include "tokd/numeric/image.hpp"

namespace tokd {

/// Returned for identical images.
inline constexpr double kPsnrCap = 99.0;

/// 10 log10(1 / MSE) for images in [0, 1]; kPsnrCap when MSE is 0.
/// Throws DimensionError on a shape mismatch.
double psnr(const Image& a, const Image& b);

struct SsimOptions {
  std::size_t window = 8;
  double k1 = 0.01;
  double k2 = 0.03;
};

/// Mean SSIM over every window x window position (stride 1, uniform weights,
/// population statistics) of the channel-mean grayscale images.
/// Throws ArgumentError when the image is smaller than the window.
double ssim(const Image& a, const Image& b, const SsimOptions& opt = {});

}  // namespace tokd
