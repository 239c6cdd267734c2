#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "tokd/model/config.hpp"
#include "tokd/scenegen/generate.hpp"
#include "tokd/trainer/hyper.hpp"

namespace tokd {

/// Training data regimes of the ablation grid.
///  - real-only: every training scene clean
///  - naive-synthetic: a share of scenes synthetic, roles drawn uniformly
///  - clean-target-synthetic: same data, conditioned view always the target
enum class DataRegime : std::uint8_t { RealOnly, NaiveSynthetic, CleanTargetSynthetic };

std::string_view regime_name(DataRegime r);
DataRegime parse_regime(std::string_view name);

struct AblationConfig {
  ModelConfig model;
  TrainHyper train;
  std::size_t train_scenes = 64;
  std::size_t heldout_scenes = 16;
  std::vector<std::uint64_t> seeds{0, 1, 2};
  std::vector<BlockVariant> variants{BlockVariant::Plain, BlockVariant::TokD, BlockVariant::TokDPlus};
  std::vector<DataRegime> regimes{DataRegime::RealOnly, DataRegime::NaiveSynthetic,
                                  DataRegime::CleanTargetSynthetic};
  double synthetic_fraction = 0.5;
  double severity = 0.5;
  std::uint64_t data_seed = 1;
  std::uint64_t heldout_seed = 1001;
  /// Held-out scenes whose features feed the cosine statistic.
  std::size_t feature_scenes = 4;
  /// Receives per-run PCA dumps and checkpoints when non-empty.
  std::filesystem::path out_dir;

  /// Desk-scale grid: 32x32 images, p=8, d=64, 4 layers, 2000 steps, batch 4.
  static AblationConfig desk();
  GenerationConfig generation(DataRegime regime) const;
  GenerationConfig heldout_generation() const;
};

struct AblationRun {
  BlockVariant variant = BlockVariant::Plain;
  DataRegime regime = DataRegime::RealOnly;
  std::uint64_t seed = 0;
  double heldout_psnr = 0;
  double heldout_ssim = 0;
  double heldout_psnr_raw = 0;
  double final_loss = 0;
  /// Source-target cosine of each block output, averaged over feature scenes.
  std::vector<double> layer_cosine;
  double seconds = 0;

  /// Mean cosine over the last `count` blocks.
  double late_cosine(std::size_t count = 2) const;
};

/// Trains and scores every (variant, regime, seed) combination.
std::vector<AblationRun> run_ablation(const AblationConfig& cfg,
                                      const std::function<void(const AblationRun&)>& on_run = {});

/// One run of the grid.
AblationRun run_ablation_cell(const AblationConfig& cfg, BlockVariant variant, DataRegime regime, std::uint64_t seed);

/// One row per (variant, regime): medians over seeds plus the per-seed PSNRs.
std::string ablation_csv(const std::vector<AblationRun>& runs);

/// Median held-out PSNR of the runs matching (variant, regime).
double cell_median_psnr(const std::vector<AblationRun>& runs, BlockVariant variant, DataRegime regime);

}  // namespace tokd
