#pragma once

#include <filesystem>
#include <functional>
#include <vector>

#include "tokd/datapipe/dataset.hpp"
#include "tokd/model/checkpoint.hpp"
#include "tokd/model/model.hpp"
#include "tokd/trainer/hyper.hpp"

namespace tokd {

struct MetricsRow {
  std::size_t step = 0;
  double lr = 0;
  double loss = 0;
  double psnr_raw = 0;
  double psnr_ema = 0;
};

inline constexpr const char* kMetricsHeader = "step,lr,loss,psnr_raw,psnr_ema";

struct TrainOptions {
  /// Receives metrics.csv and checkpoint.tokd; empty keeps everything in memory.
  std::filesystem::path out_dir;
  /// Stop after this many completed steps (0 runs to total_steps). The
  /// schedule still spans total_steps, so a later resume continues the same run.
  std::size_t stop_after = 0;
  /// Called after every logged row.
  std::function<void(const MetricsRow&)> on_log;
  PerceptualHook<float> perceptual_hook;
};

template <typename T>
struct TrainResult {
  Checkpoint<T> checkpoint;
  std::vector<MetricsRow> log;
};

/// Fresh checkpoint at step 0 (parameters, EMA copy, zero moments).
template <typename T>
Checkpoint<T> initial_checkpoint(const ModelConfig& cfg, const TrainHyper& hp);

/// Runs AdamW from `start` (fresh or resumed) to the configured end.
///
/// Step s draws its batch from an RNG stream keyed by (seed, s) alone, so a
/// resumed run repeats the uninterrupted trajectory exactly. A non-finite loss
/// or gradient throws NumericError; the last checkpoint written to out_dir is
/// left in place.
template <typename T>
TrainResult<T> train(const std::vector<SceneRecord>& data, const TrainHyper& hp, Checkpoint<T> start,
                     const TrainOptions& opt = {});

/// Mean PSNR of the evaluation example of each listed scene.
template <typename T>
double mean_psnr(const ParamStore<T>& params, const ModelConfig& cfg, const std::vector<SceneRecord>& scenes,
                 std::size_t sources, std::size_t limit = 0);

}  // namespace tokd
