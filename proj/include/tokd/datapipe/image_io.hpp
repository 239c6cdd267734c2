#pragma once

#include <filesystem>

#include "tokd/numeric/image.hpp"

namespace tokd {

/// Rounds every value to the nearest multiple of 1/255 after clamping to [0, 1].
/// Quantized images survive a PPM roundtrip bitwise.
Image quantize8(const Image& img);

/// Binary PPM (P6, maxval 255). Requires 3 channels.
void write_ppm(const std::filesystem::path& path, const Image& img);

/// Throws IoError when the file cannot be opened and FormatError on a bad header or short data.
Image read_ppm(const std::filesystem::path& path);

}  // namespace tokd
