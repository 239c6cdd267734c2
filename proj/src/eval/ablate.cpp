#include "tokd/eval/ablate.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>

#include "tokd/datapipe/roles.hpp"
#include "tokd/eval/pca.hpp"
#include "tokd/eval/report.hpp"
#include "tokd/numeric/errors.hpp"
#include "tokd/trainer/train.hpp"

namespace tokd {

std::string_view regime_name(DataRegime r) {
  switch (r) {
    case DataRegime::RealOnly:
      return "real-only";
    case DataRegime::NaiveSynthetic:
      return "naive-synthetic";
    case DataRegime::CleanTargetSynthetic:
      return "clean-target-synthetic";
  }
  return "?";
}

DataRegime parse_regime(std::string_view name) {
  if (name == "real-only") return DataRegime::RealOnly;
  if (name == "naive-synthetic") return DataRegime::NaiveSynthetic;
  if (name == "clean-target-synthetic") return DataRegime::CleanTargetSynthetic;
  throw ConfigError("unknown data regime '" + std::string(name) + "'");
}

AblationConfig AblationConfig::desk() {
  AblationConfig c;
  c.model = ModelConfig::desk();
  c.model.d_model = 64;
  c.model.n_layers = 4;
  c.model.n_heads = 4;
  c.model.image_height = 32;
  c.model.image_width = 32;
  c.train = TrainHyper::desk();
  c.train.log_scenes = 2;
  return c;
}

GenerationConfig AblationConfig::generation(DataRegime regime) const {
  GenerationConfig g;
  g.scenes = train_scenes;
  g.views = 8;
  g.width = static_cast<int>(model.image_width);
  g.height = static_cast<int>(model.image_height);
  g.seed = data_seed;
  g.synthetic_fraction = regime == DataRegime::RealOnly ? 0.0 : synthetic_fraction;
  g.severity = severity;
  return g;
}

GenerationConfig AblationConfig::heldout_generation() const {
  GenerationConfig g = generation(DataRegime::RealOnly);
  g.scenes = heldout_scenes;
  g.views = 3;
  g.seed = heldout_seed;
  g.id_prefix = "heldout_";
  return g;
}

double AblationRun::late_cosine(std::size_t count) const {
  if (layer_cosine.empty()) return 0.0;
  count = std::min(count, layer_cosine.size());
  double s = 0.0;
  for (std::size_t i = layer_cosine.size() - count; i < layer_cosine.size(); ++i) s += layer_cosine[i];
  return s / static_cast<double>(count);
}

namespace {

std::string run_tag(BlockVariant v, DataRegime r, std::uint64_t seed) {
  return std::string(variant_name(v)) + "_" + std::string(regime_name(r)) + "_s" + std::to_string(seed);
}

}  // namespace

AblationRun run_ablation_cell(const AblationConfig& cfg, BlockVariant variant, DataRegime regime, std::uint64_t seed) {
  const auto t0 = std::chrono::steady_clock::now();
  const std::vector<SceneRecord> data = generate_dataset(cfg.generation(regime));
  const std::vector<SceneRecord> heldout = generate_dataset(cfg.heldout_generation());

  ModelConfig model = cfg.model;
  model.variant = variant;
  TrainHyper hp = cfg.train;
  hp.seed = seed;
  hp.scheme = regime == DataRegime::CleanTargetSynthetic ? RoleScheme::CleanTarget : RoleScheme::Naive;

  TrainOptions opt;
  const std::string tag = run_tag(variant, regime, seed);
  if (!cfg.out_dir.empty()) opt.out_dir = cfg.out_dir / "runs" / tag;
  const TrainResult<float> res = train(data, hp, initial_checkpoint<float>(model, hp), opt);

  AblationRun run;
  run.variant = variant;
  run.regime = regime;
  run.seed = seed;
  const MetricReport ema = evaluate(res.checkpoint.ema, model, heldout, hp.sources);
  run.heldout_psnr = ema.mean_psnr;
  run.heldout_ssim = ema.mean_ssim;
  run.heldout_psnr_raw = evaluate(res.checkpoint.params, model, heldout, hp.sources).mean_psnr;
  run.final_loss = res.log.empty() ? 0.0 : res.log.back().loss;

  const ParamStore<double> ema64 = res.checkpoint.ema.cast<double>();
  const std::size_t n_feat = std::min(cfg.feature_scenes, heldout.size());
  for (std::size_t i = 0; i < n_feat; ++i) {
    const ExampleTensors ex = example_tensors(evaluation_example(heldout[i], hp.sources));
    const FeatureCapture<double> feats = forward_with_features(ema64, ex.sources, ex.target_rays, model);
    const std::filesystem::path dump_dir =
        (i == 0 && !cfg.out_dir.empty()) ? cfg.out_dir / "pca" / tag : std::filesystem::path();
    const PcaDump dump = pca_dump(feats, model, dump_dir);
    if (run.layer_cosine.empty()) run.layer_cosine.assign(dump.cosine.size(), 0.0);
    for (std::size_t l = 0; l < dump.cosine.size(); ++l) run.layer_cosine[l] += dump.cosine[l] / static_cast<double>(n_feat);
  }
  run.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return run;
}

std::vector<AblationRun> run_ablation(const AblationConfig& cfg, const std::function<void(const AblationRun&)>& on_run) {
  if (cfg.seeds.empty() || cfg.variants.empty() || cfg.regimes.empty()) throw ConfigError("ablation: empty grid");
  std::vector<AblationRun> runs;
  for (DataRegime r : cfg.regimes)
    for (BlockVariant v : cfg.variants)
      for (std::uint64_t s : cfg.seeds) {
        runs.push_back(run_ablation_cell(cfg, v, r, s));
        if (on_run) on_run(runs.back());
      }
  return runs;
}

double cell_median_psnr(const std::vector<AblationRun>& runs, BlockVariant variant, DataRegime regime) {
  std::vector<double> v;
  for (const auto& r : runs)
    if (r.variant == variant && r.regime == regime) v.push_back(r.heldout_psnr);
  if (v.empty()) throw ArgumentError("ablation: no runs for the requested cell");
  return median(v);
}

std::string ablation_csv(const std::vector<AblationRun>& runs) {
  std::string out = "variant,regime,median_psnr,median_ssim,median_late_cosine,seeds,psnr_per_seed\n";
  std::vector<std::pair<BlockVariant, DataRegime>> cells;
  for (const auto& r : runs) {
    const std::pair<BlockVariant, DataRegime> key{r.variant, r.regime};
    if (std::find(cells.begin(), cells.end(), key) == cells.end()) cells.push_back(key);
  }
  std::sort(cells.begin(), cells.end());
  char buf[128];
  for (const auto& [variant, regime] : cells) {
    std::vector<double> p, s, c;
    std::string per_seed;
    for (const auto& r : runs) {
      if (r.variant != variant || r.regime != regime) continue;
      p.push_back(r.heldout_psnr);
      s.push_back(r.heldout_ssim);
      c.push_back(r.late_cosine());
      std::snprintf(buf, sizeof buf, "%s%.4f", per_seed.empty() ? "" : ";", r.heldout_psnr);
      per_seed += buf;
    }
    std::snprintf(buf, sizeof buf, ",%.4f,%.4f,%.4f,%zu,", median(p), median(s), median(c), p.size());
    out += std::string(variant_name(variant)) + "," + std::string(regime_name(regime)) + buf + per_seed + "\n";
  }
  return out;
}

}  // namespace tokd
