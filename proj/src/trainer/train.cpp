#include "tokd/trainer/train.hpp"

#include <cmath>
#include <fstream>

#include "tokd/datapipe/roles.hpp"
#include "tokd/eval/metrics.hpp"
#include "tokd/numeric/errors.hpp"

namespace fs = std::filesystem;

namespace tokd {

namespace {

constexpr std::uint64_t kBatchStream = 0x5eed;

template <typename T>
PerceptualHook<T> convert_hook(const PerceptualHook<float>& hook) {
  if constexpr (std::is_same_v<T, float>) {
    return hook;
  } else {
    if (hook) throw ArgumentError("train: a custom perceptual hook requires 32-bit training");
    return {};
  }
}

void append_row(const fs::path& file, const MetricsRow& row) {
  const bool fresh = !fs::exists(file);
  std::ofstream os(file, std::ios::app);
  if (!os) throw IoError("cannot append to " + file.string());
  if (fresh) os << kMetricsHeader << "\n";
  char buf[256];
  std::snprintf(buf, sizeof buf, "%zu,%.9g,%.9g,%.6f,%.6f\n", row.step, row.lr, row.loss, row.psnr_raw, row.psnr_ema);
  os << buf;
}

}  // namespace

template <typename T>
Checkpoint<T> initial_checkpoint(const ModelConfig& cfg, const TrainHyper& hp) {
  hp.validate();
  Checkpoint<T> ckpt;
  ckpt.config = cfg;
  ckpt.rng = Rng(hp.seed, kBatchStream).state();
  ckpt.params = init_params<T>(cfg, hp.seed);
  ckpt.ema = ckpt.params;
  ckpt.adam_m = ckpt.params.zeros_like();
  ckpt.adam_v = ckpt.params.zeros_like();
  return ckpt;
}

template <typename T>
double mean_psnr(const ParamStore<T>& params, const ModelConfig& cfg, const std::vector<SceneRecord>& scenes,
                 std::size_t sources, std::size_t limit) {
  const std::size_t n = limit == 0 ? scenes.size() : std::min(limit, scenes.size());
  if (n == 0) throw DataError("mean_psnr: no scenes");
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const ExampleTensors ex = example_tensors(evaluation_example(scenes[i], sources));
    total += psnr(to_image(forward(params, ex.sources, ex.target_rays, cfg)), ex.target);
  }
  return total / static_cast<double>(n);
}

template <typename T>
TrainResult<T> train(const std::vector<SceneRecord>& data, const TrainHyper& hp, Checkpoint<T> start,
                     const TrainOptions& opt) {
  hp.validate();
  if (data.empty()) throw DataError("train: empty dataset");
  const ModelConfig& cfg = start.config;
  cfg.validate();
  const std::size_t end = opt.stop_after == 0 ? hp.adam.total_steps : std::min(opt.stop_after, hp.adam.total_steps);
  if (start.step > end) throw ArgumentError("train: checkpoint step is past the requested end");

  OptimState<T> state{start.adam_m.size() ? start.adam_m : start.params.zeros_like(),
                      start.adam_v.size() ? start.adam_v : start.params.zeros_like(), start.step, hp.adam};
  const Rng batch_root(start.rng);
  const PerceptualHook<T> hook = convert_hook<T>(opt.perceptual_hook);
  const fs::path metrics_file = opt.out_dir.empty() ? fs::path() : opt.out_dir / "metrics.csv";
  const fs::path ckpt_file = opt.out_dir.empty() ? fs::path() : opt.out_dir / "checkpoint.tokd";
  if (!opt.out_dir.empty()) fs::create_directories(opt.out_dir);

  TrainResult<T> result;
  auto snapshot = [&]() {
    start.adam_m = state.m;
    start.adam_v = state.v;
    start.step = state.step;
  };

  ParamStore<T> grads = start.params.zeros_like();
  double loss_acc = 0.0;
  std::size_t loss_count = 0;
  const T weight = static_cast<T>(1.0 / static_cast<double>(hp.batch));
  for (std::size_t step = start.step; step < end; ++step) {
    Rng rng = batch_root.split(step);
    grads.set_zero();
    double batch_loss = 0.0;
    for (std::size_t b = 0; b < hp.batch; ++b) {
      const SceneRecord& scene = data[rng.below(data.size())];
      const ExampleTensors ex = example_tensors(sample_example(scene, hp.sources, hp.scheme, rng));
      const auto out = loss_and_gradients(start.params, ex.sources, ex.target_rays, ex.target, cfg, grads, weight, hook);
      batch_loss += static_cast<double>(out.loss);
    }
    batch_loss /= static_cast<double>(hp.batch);
    if (!std::isfinite(batch_loss)) {
      throw NumericError("train: non-finite loss at step " + std::to_string(step + 1));
    }
    if (hp.clip_grad_norm > 0.0) {
      const double norm = grad_norm(grads);
      if (norm > hp.clip_grad_norm) {
        const double s = hp.clip_grad_norm / norm;
        for (auto& g : grads.entries())
          for (auto& v : g.value.values()) v = static_cast<T>(v * s);
      }
    }
    const double lr = lr_at(step + 1, hp.adam);
    adamw_step(start.params, grads, state, lr);
    ema_update(start.ema, start.params, hp.adam.ema_decay);
    loss_acc += batch_loss;
    ++loss_count;

    const std::size_t done = step + 1;
    if (done % hp.log_every == 0 || done == end) {
      MetricsRow row;
      row.step = done;
      row.lr = lr;
      row.loss = loss_acc / static_cast<double>(loss_count);
      row.psnr_raw = mean_psnr(start.params, cfg, data, hp.sources, hp.log_scenes);
      row.psnr_ema = mean_psnr(start.ema, cfg, data, hp.sources, hp.log_scenes);
      loss_acc = 0.0;
      loss_count = 0;
      result.log.push_back(row);
      if (!metrics_file.empty()) append_row(metrics_file, row);
      if (opt.on_log) opt.on_log(row);
    }
    if (!ckpt_file.empty() && (done % hp.checkpoint_every == 0 || done == end)) {
      snapshot();
      save_checkpoint(start, ckpt_file);
    }
  }
  snapshot();
  result.checkpoint = std::move(start);
  return result;
}

template Checkpoint<float> initial_checkpoint(const ModelConfig&, const TrainHyper&);
template Checkpoint<double> initial_checkpoint(const ModelConfig&, const TrainHyper&);
template TrainResult<float> train(const std::vector<SceneRecord>&, const TrainHyper&, Checkpoint<float>,
                                  const TrainOptions&);
template TrainResult<double> train(const std::vector<SceneRecord>&, const TrainHyper&, Checkpoint<double>,
                                   const TrainOptions&);
template double mean_psnr(const ParamStore<float>&, const ModelConfig&, const std::vector<SceneRecord>&, std::size_t,
                          std::size_t);
template double mean_psnr(const ParamStore<double>&, const ModelConfig&, const std::vector<SceneRecord>&,
                          std::size_t, std::size_t);

}  // namespace tokd
