#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "tokd/datapipe/roles.hpp"
#include "tokd/model/config.hpp"
#include "tokd/trainer/optim.hpp"

namespace tokd {

struct TrainHyper {
  AdamWHyper adam;
  std::size_t batch = 64;
  /// Source views per example.
  std::size_t sources = 2;
  std::uint64_t seed = 0;
  RoleScheme scheme = RoleScheme::CleanTarget;
  std::size_t log_every = 100;
  std::size_t checkpoint_every = 1000;
  /// Training scenes whose evaluation example is scored at every log step.
  std::size_t log_scenes = 4;
  /// Global gradient-norm clip; 0 disables clipping.
  double clip_grad_norm = 0.0;

  void validate() const;

  /// 100k steps, batch 64, warmup 2500, peak lr 2e-4.
  static TrainHyper full();
  /// 2k steps, batch 4, warmup 100, peak lr 3e-3.
  static TrainHyper desk();
  static TrainHyper preset(std::string_view name);

  std::string to_text() const;
  /// Returns false when `key` is not a training key.
  bool set(std::string_view key, std::string_view value);

  friend bool operator==(const TrainHyper&, const TrainHyper&) = default;
};

/// Model and training settings from one key=value file. Keys are the union of
/// ModelConfig and TrainHyper keys plus `model_preset` / `train_preset`, which
/// must come first when present. Throws ConfigError on unknown keys.
struct RunConfig {
  ModelConfig model = ModelConfig::desk();
  TrainHyper train = TrainHyper::desk();

  std::string to_text() const;
  static RunConfig from_text(std::string_view text);
  static RunConfig load(const std::filesystem::path& path);
  void set(std::string_view key, std::string_view value);
};

}  // namespace tokd
