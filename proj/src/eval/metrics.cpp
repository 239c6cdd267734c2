#include "tokd/eval/metrics.hpp"

#include <cmath>
#include <vector>

#include "tokd/numeric/errors.hpp"

namespace tokd {

namespace {

void require_same(const Image& a, const Image& b, const char* what) {
  if (!a.same_extent(b)) {
    throw DimensionError(std::string(what) + ": " + shape_string(a.tensor().shape()) + " vs " +
                         shape_string(b.tensor().shape()));
  }
}

std::vector<double> grayscale(const Image& img) {
  const std::size_t c = img.channels();
  std::vector<double> g(img.height() * img.width());
  for (std::size_t i = 0; i < g.size(); ++i) {
    double s = 0.0;
    for (std::size_t k = 0; k < c; ++k) s += img.values()[i * c + k];
    g[i] = s / static_cast<double>(c);
  }
  return g;
}

}  // namespace

double psnr(const Image& a, const Image& b) {
  require_same(a, b, "psnr");
  double se = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a.values()[i] - b.values()[i];
    se += d * d;
  }
  const double mse = se / static_cast<double>(a.size());
  if (mse == 0.0) return kPsnrCap;
  return std::min(kPsnrCap, -10.0 * std::log10(mse));
}

double ssim(const Image& a, const Image& b, const SsimOptions& opt) {
  require_same(a, b, "ssim");
  const std::size_t h = a.height(), w = a.width(), win = opt.window;
  if (win == 0 || h < win || w < win) {
    throw ArgumentError("ssim: image " + std::to_string(h) + "x" + std::to_string(w) + " smaller than window " +
                        std::to_string(win));
  }
  const std::vector<double> ga = grayscale(a), gb = grayscale(b);
  const double c1 = opt.k1 * opt.k1, c2 = opt.k2 * opt.k2;
  const double n = static_cast<double>(win * win);
  double total = 0.0;
  for (std::size_t y = 0; y + win <= h; ++y) {
    for (std::size_t x = 0; x + win <= w; ++x) {
      double sa = 0, sb = 0, saa = 0, sbb = 0, sab = 0;
      for (std::size_t dy = 0; dy < win; ++dy)
        for (std::size_t dx = 0; dx < win; ++dx) {
          const double va = ga[(y + dy) * w + x + dx], vb = gb[(y + dy) * w + x + dx];
          sa += va;
          sb += vb;
          saa += va * va;
          sbb += vb * vb;
          sab += va * vb;
        }
      const double ma = sa / n, mb = sb / n;
      const double va = saa / n - ma * ma, vb = sbb / n - mb * mb, cov = sab / n - ma * mb;
      total += ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
    }
  }
  return total / static_cast<double>((h - win + 1) * (w - win + 1));
}

}  // namespace tokd
