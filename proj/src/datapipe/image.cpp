#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>
#include <vector>

#include "tokd/datapipe/image_io.hpp"
#include "tokd/numeric/errors.hpp"

namespace tokd {

Image::Image(Tensor<double> pixels) : pixels_(std::move(pixels)) {
  if (pixels_.rank() != 3) throw DimensionError("image must be H x W x C, got " + shape_string(pixels_.shape()));
}

namespace {

unsigned char to_byte(double v) { return static_cast<unsigned char>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0)); }

}  // namespace

Image quantize8(const Image& img) {
  Image out = img;
  for (double& v : out.values()) v = to_byte(v) / 255.0;
  return out;
}

void write_ppm(const std::filesystem::path& path, const Image& img) {
  if (img.channels() != 3) throw DimensionError("write_ppm: expected 3 channels");
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot write " + path.string());
  os << "P6\n" << img.width() << " " << img.height() << "\n255\n";
  std::vector<unsigned char> bytes(img.size());
  std::transform(img.values().begin(), img.values().end(), bytes.begin(), to_byte);
  os.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!os) throw IoError("short write to " + path.string());
}

Image read_ppm(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open image " + path.string());
  std::string magic;
  long w = 0, h = 0, maxval = 0;
  is >> magic >> w >> h >> maxval;
  if (!is || magic != "P6" || w <= 0 || h <= 0 || maxval != 255) {
    throw FormatError("bad PPM header in " + path.string());
  }
  is.get();  // single whitespace after maxval
  Image img(static_cast<std::size_t>(h), static_cast<std::size_t>(w), 3);
  std::vector<unsigned char> bytes(img.size());
  is.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (is.gcount() != static_cast<std::streamsize>(bytes.size())) {
    throw FormatError("truncated pixel data in " + path.string());
  }
  std::transform(bytes.begin(), bytes.end(), img.values().begin(), [](unsigned char b) { return b / 255.0; });
  return img;
}

}  // namespace tokd
