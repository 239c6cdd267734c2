#include "tokd/eval/report.hpp"

#include <algorithm>
#include <cstdio>

#include "tokd/datapipe/roles.hpp"
#include "tokd/eval/metrics.hpp"
#include "tokd/model/model.hpp"
#include "tokd/numeric/errors.hpp"

namespace tokd {

std::string MetricReport::to_csv() const {
  std::string out = "scene,psnr,ssim,config_hash\n";
  char buf[256];
  for (const auto& s : scenes) {
    std::snprintf(buf, sizeof buf, "%s,%.6f,%.6f,%s\n", s.id.c_str(), s.psnr, s.ssim, config_hash.c_str());
    out += buf;
  }
  std::snprintf(buf, sizeof buf, "mean,%.6f,%.6f,%s\n", mean_psnr, mean_ssim, config_hash.c_str());
  out += buf;
  return out;
}

std::string config_hash(const ModelConfig& cfg) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : cfg.to_text()) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

template <typename T>
MetricReport evaluate(const ParamStore<T>& params, const ModelConfig& cfg, const std::vector<SceneRecord>& scenes,
                      std::size_t sources) {
  if (scenes.empty()) throw DataError("evaluate: no scenes");
  MetricReport report;
  report.config_hash = config_hash(cfg);
  report.scenes.resize(scenes.size());
  for (std::size_t i = 0; i < scenes.size(); ++i) {
    const ExampleTensors ex = example_tensors(evaluation_example(scenes[i], sources));
    const Image pred = to_image(forward(params, ex.sources, ex.target_rays, cfg));
    report.scenes[i] = SceneMetric{scenes[i].id, psnr(pred, ex.target), ssim(pred, ex.target)};
  }
  for (const auto& s : report.scenes) {
    report.mean_psnr += s.psnr;
    report.mean_ssim += s.ssim;
  }
  report.mean_psnr /= static_cast<double>(report.count());
  report.mean_ssim /= static_cast<double>(report.count());
  return report;
}

double median(std::vector<double> values) {
  if (values.empty()) throw ArgumentError("median of an empty list");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

template MetricReport evaluate(const ParamStore<float>&, const ModelConfig&, const std::vector<SceneRecord>&,
                               std::size_t);
template MetricReport evaluate(const ParamStore<double>&, const ModelConfig&, const std::vector<SceneRecord>&,
                               std::size_t);

}  // namespace tokd
