#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "tokd/numeric/params.hpp"
#include "tokd/numeric/rng.hpp"
#include "tokd/tokenizer/embed.hpp"

namespace tokd {

/// Transformer block family.
///  - Plain:    x += SelfAttn(x);  x += FFN(LN(x))
///  - TokD:     role-dependent pre-modulation in front of both sublayers
///  - TokDPlus: pre-modulation plus role-dependent post-scaling of both
///              residual branches
enum class BlockVariant : std::uint8_t { Plain = 0, TokD = 1, TokDPlus = 2 };

std::string_view variant_name(BlockVariant v);
/// Accepts "plain", "tokd", "tokd-plus" (case-insensitive). Throws ConfigError.
BlockVariant parse_variant(std::string_view name);

struct BlockDims {
  std::size_t d_model = 0;
  std::size_t heads = 1;
  std::size_t ffn_hidden = 0;
  std::size_t d_style = 0;
  std::size_t n_layers = 1;  // used to scale residual-branch initialization
  double ln_eps = 1e-5;
};

/// The four places a role-dependent modulation can act inside one block.
enum class ModSite : std::uint8_t { AttnPre, FfnPre, AttnPost, FfnPost };

std::string_view site_name(ModSite site);
bool site_has_shift(ModSite site);
bool variant_uses_site(BlockVariant v, ModSite site);

/// "blocks.<layer>.<suffix>"
std::string block_param_name(std::size_t layer, std::string_view suffix);

/// Style table ("style.embed", one row per role) and its projection.
template <typename T>
void register_style_params(ParamStore<T>& store, const BlockDims& dims, Rng& rng);

/// Attention, FFN and layer-norm weights of one block, plus the modulation
/// heads the variant needs. Modulation heads start at zero, so every variant
/// initially computes exactly the plain block.
template <typename T>
void register_block_params(ParamStore<T>& store, std::size_t layer, const BlockDims& dims, BlockVariant variant,
                           Rng& rng);

/// style = Linear(Embed(role)) for both roles, [2, d_style].
template <typename T>
Var<T> style_vectors(ParamBinder<T>& params);

/// Per-role modulation parameters of one site, each [2, d_model].
template <typename T>
struct ModulationTable {
  Var<T> sigma;
  std::optional<Var<T>> mu;
};

template <typename T>
ModulationTable<T> modulation_table(ParamBinder<T>& params, Var<T> style, std::size_t layer, ModSite site);

template <typename T>
TokenBatch<T> plain_block(const TokenBatch<T>& x, ParamBinder<T>& params, std::size_t layer, const BlockDims& dims);

template <typename T>
TokenBatch<T> tokd_block(const TokenBatch<T>& x, Var<T> style, ParamBinder<T>& params, std::size_t layer,
                         const BlockDims& dims);

template <typename T>
TokenBatch<T> tokd_plus_block(const TokenBatch<T>& x, Var<T> style, ParamBinder<T>& params, std::size_t layer,
                              const BlockDims& dims);

/// Dispatches on the variant; `style` is required unless the variant is Plain.
template <typename T>
TokenBatch<T> apply_block(BlockVariant variant, const TokenBatch<T>& x, std::optional<Var<T>> style,
                          ParamBinder<T>& params, std::size_t layer, const BlockDims& dims);

}  // namespace tokd
