#include "tokd/scenegen/artifacts.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include "tokd/numeric/errors.hpp"
#include "tokd/numeric/rng.hpp"

namespace tokd {

namespace {

constexpr std::array<std::pair<std::uint8_t, std::string_view>, 4> kNames{{
    {kArtifactBlock, "block"},
    {kArtifactBlur, "blur"},
    {kArtifactChroma, "chroma"},
    {kArtifactNoise, "noise"},
}};

constexpr std::size_t kBlockSize = 4;
constexpr double kBlurSigma = 1.5;
constexpr int kBlurRadius = 3;
constexpr std::size_t kBlurPatches = 4;
constexpr int kChromaShift = 2;
constexpr double kNoiseStd = 0.2;

void blend_into(Image& img, const Image& degraded, double s) {
  auto out = img.values();
  auto deg = degraded.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::clamp((1.0 - s) * out[i] + s * deg[i], 0.0, 1.0);
}

Image block_average(const Image& img) {
  Image out = img;
  const std::size_t h = img.height(), w = img.width(), ch = img.channels();
  for (std::size_t by = 0; by < h; by += kBlockSize) {
    for (std::size_t bx = 0; bx < w; bx += kBlockSize) {
      const std::size_t ey = std::min(by + kBlockSize, h), ex = std::min(bx + kBlockSize, w);
      for (std::size_t c = 0; c < ch; ++c) {
        double sum = 0.0;
        for (std::size_t y = by; y < ey; ++y)
          for (std::size_t x = bx; x < ex; ++x) sum += img.at(y, x, c);
        const double mean = sum / static_cast<double>((ey - by) * (ex - bx));
        for (std::size_t y = by; y < ey; ++y)
          for (std::size_t x = bx; x < ex; ++x) out.at(y, x, c) = mean;
      }
    }
  }
  return out;
}

Image gaussian_blur(const Image& img) {
  std::array<double, 2 * kBlurRadius + 1> k{};
  double norm = 0.0;
  for (int i = -kBlurRadius; i <= kBlurRadius; ++i) {
    k[i + kBlurRadius] = std::exp(-0.5 * i * i / (kBlurSigma * kBlurSigma));
    norm += k[i + kBlurRadius];
  }
  for (double& v : k) v /= norm;
  const int h = static_cast<int>(img.height()), w = static_cast<int>(img.width());
  const std::size_t ch = img.channels();
  Image tmp = img, out = img;
  auto clampi = [](int v, int hi) { return std::clamp(v, 0, hi - 1); };
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (std::size_t c = 0; c < ch; ++c) {
        double acc = 0.0;
        for (int i = -kBlurRadius; i <= kBlurRadius; ++i) acc += k[i + kBlurRadius] * img.at(y, clampi(x + i, w), c);
        tmp.at(y, x, c) = acc;
      }
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (std::size_t c = 0; c < ch; ++c) {
        double acc = 0.0;
        for (int i = -kBlurRadius; i <= kBlurRadius; ++i) acc += k[i + kBlurRadius] * tmp.at(clampi(y + i, h), x, c);
        out.at(y, x, c) = acc;
      }
  return out;
}

/// Blur restricted to a few square patches a quarter of the image wide.
Image patch_blur(const Image& img, Rng rng) {
  const Image blurred = gaussian_blur(img);
  Image out = img;
  const std::size_t h = img.height(), w = img.width();
  const std::size_t ph = std::max<std::size_t>(1, h / 4), pw = std::max<std::size_t>(1, w / 4);
  for (std::size_t p = 0; p < kBlurPatches; ++p) {
    const std::size_t y0 = rng.below(h - ph + 1), x0 = rng.below(w - pw + 1);
    for (std::size_t y = y0; y < y0 + ph; ++y)
      for (std::size_t x = x0; x < x0 + pw; ++x)
        for (std::size_t c = 0; c < img.channels(); ++c) out.at(y, x, c) = blurred.at(y, x, c);
  }
  return out;
}

Image chroma_shift(const Image& img) {
  Image out = img;
  if (img.channels() < 3) return out;
  const int w = static_cast<int>(img.width());
  for (std::size_t y = 0; y < img.height(); ++y)
    for (int x = 0; x < w; ++x) {
      out.at(y, x, 0) = img.at(y, std::clamp(x - kChromaShift, 0, w - 1), 0);
      out.at(y, x, 2) = img.at(y, std::clamp(x + kChromaShift, 0, w - 1), 2);
    }
  return out;
}

}  // namespace

void ArtifactProfile::validate() const {
  if (!(severity >= 0.0 && severity <= 1.0)) throw ArgumentError("artifact severity must be in [0, 1]");
  if (components & ~kArtifactAll) throw ArgumentError("unknown artifact component flags");
}

std::string components_to_string(std::uint8_t components) {
  std::string out;
  for (const auto& [flag, name] : kNames) {
    if (!(components & flag)) continue;
    if (!out.empty()) out += ",";
    out += name;
  }
  return out.empty() ? "none" : out;
}

std::uint8_t parse_components(std::string_view text) {
  if (text == "none" || text.empty()) return 0;
  if (text == "all") return kArtifactAll;
  std::uint8_t flags = 0;
  while (!text.empty()) {
    const std::size_t comma = text.find(',');
    const std::string_view item = text.substr(0, comma);
    auto it = std::find_if(kNames.begin(), kNames.end(), [&](const auto& e) { return e.second == item; });
    if (it == kNames.end()) throw ArgumentError("unknown artifact component '" + std::string(item) + "'");
    flags |= it->first;
    if (comma == std::string_view::npos) break;
    text.remove_prefix(comma + 1);
  }
  return flags;
}

Image inject_artifacts(const Image& img, const ArtifactProfile& profile) {
  profile.validate();
  Image out = img;
  const double s = profile.severity;
  if (s == 0.0 || profile.components == 0) return out;
  const Rng rng(profile.seed);
  if (profile.components & kArtifactBlock) blend_into(out, block_average(out), s);
  if (profile.components & kArtifactBlur) blend_into(out, patch_blur(out, rng.split(1)), s);
  if (profile.components & kArtifactChroma) blend_into(out, chroma_shift(out), s);
  if (profile.components & kArtifactNoise) {
    const Rng noise = rng.split(2);
    auto v = out.values();
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = std::clamp(v[i] + kNoiseStd * s * noise.normal_at(i), 0.0, 1.0);
  }
  return out;
}

}  // namespace tokd
