#pragma once

#include <filesystem>
#include <string>

#include "tokd/model/config.hpp"
#include "tokd/numeric/params.hpp"
#include "tokd/numeric/rng.hpp"

namespace tokd {

/// Trained weights with their EMA shadow, optimizer moments and the position
/// in the training run. Layout is documented in docs/formats.md.
template <typename T>
struct Checkpoint {
  ModelConfig config;
  std::uint64_t step = 0;
  Rng::State rng;
  ParamStore<T> params;
  ParamStore<T> ema;
  /// Adam moments; empty for inference-only checkpoints.
  ParamStore<T> adam_m;
  ParamStore<T> adam_v;
};

inline constexpr char kCheckpointMagic[8] = {'T', 'O', 'K', 'D', '0', '0', '0', '1'};

template <typename T>
std::string serialize_checkpoint(const Checkpoint<T>& ckpt);

/// Throws FormatError on a malformed buffer, including parameters that do not
/// match the layout implied by the stored config.
template <typename T>
Checkpoint<T> deserialize_checkpoint(std::string_view bytes);

/// Writes through a temporary file and renames, so an interrupted save never
/// replaces a good checkpoint.
template <typename T>
void save_checkpoint(const Checkpoint<T>& ckpt, const std::filesystem::path& path);

template <typename T>
Checkpoint<T> load_checkpoint(const std::filesystem::path& path);

}  // namespace tokd
