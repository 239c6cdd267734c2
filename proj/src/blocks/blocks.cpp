#include "tokd/blocks/blocks.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "tokd/numeric/errors.hpp"
#include "tokd/numeric/ops.hpp"

namespace tokd {

std::string_view variant_name(BlockVariant v) {
  switch (v) {
    case BlockVariant::Plain:
      return "plain";
    case BlockVariant::TokD:
      return "tokd";
    case BlockVariant::TokDPlus:
      return "tokd-plus";
  }
  return "?";
}

BlockVariant parse_variant(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
  if (lower == "plain") return BlockVariant::Plain;
  if (lower == "tokd") return BlockVariant::TokD;
  if (lower == "tokd-plus" || lower == "tokdplus") return BlockVariant::TokDPlus;
  throw ConfigError("unknown block variant '" + std::string(name) + "'");
}

std::string_view site_name(ModSite site) {
  switch (site) {
    case ModSite::AttnPre:
      return "attn_pre";
    case ModSite::FfnPre:
      return "ffn_pre";
    case ModSite::AttnPost:
      return "attn_post";
    case ModSite::FfnPost:
      return "ffn_post";
  }
  return "?";
}

bool site_has_shift(ModSite site) { return site == ModSite::AttnPre || site == ModSite::FfnPre; }

bool variant_uses_site(BlockVariant v, ModSite site) {
  switch (v) {
    case BlockVariant::Plain:
      return false;
    case BlockVariant::TokD:
      return site_has_shift(site);
    case BlockVariant::TokDPlus:
      return true;
  }
  return false;
}

std::string block_param_name(std::size_t layer, std::string_view suffix) {
  return "blocks." + std::to_string(layer) + "." + std::string(suffix);
}

namespace {

constexpr ModSite kSites[] = {ModSite::AttnPre, ModSite::FfnPre, ModSite::AttnPost, ModSite::FfnPost};

template <typename T>
Tensor<T> normal_tensor(Shape shape, double std, Rng& rng) {
  Tensor<T> t(std::move(shape));
  for (auto& v : t.values()) v = static_cast<T>(std * rng.normal());
  return t;
}

std::string site_param(std::size_t layer, ModSite site, std::string_view part) {
  return block_param_name(layer, "mod." + std::string(site_name(site)) + "." + std::string(part));
}

}  // namespace

template <typename T>
void register_style_params(ParamStore<T>& store, const BlockDims& dims, Rng& rng) {
  const std::size_t ds = dims.d_style;
  store.add("style.embed", normal_tensor<T>({2, ds}, 1.0, rng));
  store.add("style.proj.weight", normal_tensor<T>({ds, ds}, 1.0 / std::sqrt(static_cast<double>(ds)), rng));
  store.add("style.proj.bias", Tensor<T>({ds}));
}

template <typename T>
void register_block_params(ParamStore<T>& store, std::size_t layer, const BlockDims& dims, BlockVariant variant,
                           Rng& rng) {
  const std::size_t d = dims.d_model, hidden = dims.ffn_hidden;
  if (d == 0 || dims.heads == 0 || d % dims.heads != 0) {
    throw ConfigError("block: width " + std::to_string(d) + " not divisible by " + std::to_string(dims.heads) +
                      " heads");
  }
  const double in_std = 1.0 / std::sqrt(static_cast<double>(d));
  const double residual_scale = 1.0 / std::sqrt(2.0 * static_cast<double>(std::max<std::size_t>(dims.n_layers, 1)));
  const double head_dim = static_cast<double>(d / dims.heads);
  auto name = [layer](std::string_view s) { return block_param_name(layer, s); };

  store.add(name("attn.qkv.weight"), normal_tensor<T>({d, 3 * d}, in_std, rng));
  store.add(name("attn.qkv.bias"), Tensor<T>({3 * d}));
  // QK-Norm temperature: sqrt(head_dim) reproduces scaled dot-product logits
  // for q, k rescaled to unit RMS per component.
  store.add(name("attn.temperature"), Tensor<T>({dims.heads}, static_cast<T>(std::sqrt(head_dim))), true);
  store.add(name("attn.out.weight"), normal_tensor<T>({d, d}, in_std * residual_scale, rng));
  store.add(name("attn.out.bias"), Tensor<T>({d}));
  store.add(name("ln.gain"), Tensor<T>({d}, T(1)), true);
  store.add(name("ln.bias"), Tensor<T>({d}), true);
  store.add(name("ffn.fc1.weight"), normal_tensor<T>({d, hidden}, in_std, rng));
  store.add(name("ffn.fc1.bias"), Tensor<T>({hidden}));
  store.add(name("ffn.fc2.weight"),
            normal_tensor<T>({hidden, d}, residual_scale / std::sqrt(static_cast<double>(hidden)), rng));
  store.add(name("ffn.fc2.bias"), Tensor<T>({d}));

  for (ModSite site : kSites) {
    if (!variant_uses_site(variant, site)) continue;
    store.add(site_param(layer, site, "scale.weight"), Tensor<T>({dims.d_style, d}));
    store.add(site_param(layer, site, "scale.bias"), Tensor<T>({d}));
    if (site_has_shift(site)) {
      store.add(site_param(layer, site, "shift.weight"), Tensor<T>({dims.d_style, d}));
      store.add(site_param(layer, site, "shift.bias"), Tensor<T>({d}));
    }
  }
}

template <typename T>
Var<T> style_vectors(ParamBinder<T>& params) {
  return ops::linear(params("style.embed"), params("style.proj.weight"),
                     std::optional<Var<T>>(params("style.proj.bias")));
}

template <typename T>
ModulationTable<T> modulation_table(ParamBinder<T>& params, Var<T> style, std::size_t layer, ModSite site) {
  ModulationTable<T> table;
  table.sigma = ops::linear(style, params(site_param(layer, site, "scale.weight")),
                            std::optional<Var<T>>(params(site_param(layer, site, "scale.bias"))));
  if (site_has_shift(site)) {
    table.mu = ops::linear(style, params(site_param(layer, site, "shift.weight")),
                           std::optional<Var<T>>(params(site_param(layer, site, "shift.bias"))));
  }
  return table;
}

namespace {

template <typename T>
Var<T> attention_branch(Var<T> x, ParamBinder<T>& params, std::size_t layer, const BlockDims& dims) {
  auto name = [layer](std::string_view s) { return block_param_name(layer, s); };
  const AttentionWeights<T> w{params(name("attn.qkv.weight")), params(name("attn.qkv.bias")),
                              params(name("attn.temperature")), params(name("attn.out.weight")),
                              params(name("attn.out.bias"))};
  return ops::mhsa_qknorm(x, w, dims.heads);
}

template <typename T>
Var<T> ffn_branch(Var<T> x, ParamBinder<T>& params, std::size_t layer, const BlockDims& dims) {
  auto name = [layer](std::string_view s) { return block_param_name(layer, s); };
  Var<T> h = ops::layer_norm(x, params(name("ln.gain")), params(name("ln.bias")), static_cast<T>(dims.ln_eps));
  h = ops::gelu(ops::linear(h, params(name("ffn.fc1.weight")), std::optional<Var<T>>(params(name("ffn.fc1.bias")))));
  return ops::linear(h, params(name("ffn.fc2.weight")), std::optional<Var<T>>(params(name("ffn.fc2.bias"))));
}

template <typename T>
Var<T> apply_table(Var<T> x, const ModulationTable<T>& table, const std::vector<std::uint8_t>& delta) {
  return ops::modulate(x, table.sigma, table.mu, std::span<const std::uint8_t>(delta));
}

template <typename T>
TokenBatch<T> with_tokens(const TokenBatch<T>& x, Var<T> tokens) {
  return TokenBatch<T>{tokens, x.delta, x.view_index};
}

}  // namespace

template <typename T>
TokenBatch<T> plain_block(const TokenBatch<T>& x, ParamBinder<T>& params, std::size_t layer, const BlockDims& dims) {
  Var<T> h = ops::add(x.tokens, attention_branch(x.tokens, params, layer, dims));
  h = ops::add(h, ffn_branch(h, params, layer, dims));
  return with_tokens(x, h);
}

template <typename T>
TokenBatch<T> tokd_block(const TokenBatch<T>& x, Var<T> style, ParamBinder<T>& params, std::size_t layer,
                         const BlockDims& dims) {
  const auto attn_pre = modulation_table(params, style, layer, ModSite::AttnPre);
  const auto ffn_pre = modulation_table(params, style, layer, ModSite::FfnPre);
  Var<T> h = ops::add(x.tokens, attention_branch(apply_table(x.tokens, attn_pre, x.delta), params, layer, dims));
  h = ops::add(h, ffn_branch(apply_table(h, ffn_pre, x.delta), params, layer, dims));
  return with_tokens(x, h);
}

template <typename T>
TokenBatch<T> tokd_plus_block(const TokenBatch<T>& x, Var<T> style, ParamBinder<T>& params, std::size_t layer,
                              const BlockDims& dims) {
  const auto attn_pre = modulation_table(params, style, layer, ModSite::AttnPre);
  const auto ffn_pre = modulation_table(params, style, layer, ModSite::FfnPre);
  const auto attn_post = modulation_table(params, style, layer, ModSite::AttnPost);
  const auto ffn_post = modulation_table(params, style, layer, ModSite::FfnPost);
  Var<T> branch = attention_branch(apply_table(x.tokens, attn_pre, x.delta), params, layer, dims);
  Var<T> h = ops::add(x.tokens, apply_table(branch, attn_post, x.delta));
  branch = ffn_branch(apply_table(h, ffn_pre, x.delta), params, layer, dims);
  h = ops::add(h, apply_table(branch, ffn_post, x.delta));
  return with_tokens(x, h);
}

template <typename T>
TokenBatch<T> apply_block(BlockVariant variant, const TokenBatch<T>& x, std::optional<Var<T>> style,
                          ParamBinder<T>& params, std::size_t layer, const BlockDims& dims) {
  if (variant == BlockVariant::Plain) return plain_block(x, params, layer, dims);
  if (!style) throw ArgumentError("block: modulated variants need style vectors");
  if (variant == BlockVariant::TokD) return tokd_block(x, *style, params, layer, dims);
  return tokd_plus_block(x, *style, params, layer, dims);
}

#define TOKD_INSTANTIATE_BLOCKS(T)                                                                                \
  template void register_style_params(ParamStore<T>&, const BlockDims&, Rng&);                                    \
  template void register_block_params(ParamStore<T>&, std::size_t, const BlockDims&, BlockVariant, Rng&);         \
  template Var<T> style_vectors(ParamBinder<T>&);                                                                  \
  template ModulationTable<T> modulation_table(ParamBinder<T>&, Var<T>, std::size_t, ModSite);                    \
  template TokenBatch<T> plain_block(const TokenBatch<T>&, ParamBinder<T>&, std::size_t, const BlockDims&);       \
  template TokenBatch<T> tokd_block(const TokenBatch<T>&, Var<T>, ParamBinder<T>&, std::size_t, const BlockDims&); \
  template TokenBatch<T> tokd_plus_block(const TokenBatch<T>&, Var<T>, ParamBinder<T>&, std::size_t,              \
                                         const BlockDims&);                                                        \
  template TokenBatch<T> apply_block(BlockVariant, const TokenBatch<T>&, std::optional<Var<T>>, ParamBinder<T>&,  \
                                     std::size_t, const BlockDims&);

TOKD_INSTANTIATE_BLOCKS(float)
TOKD_INSTANTIATE_BLOCKS(double)

#undef TOKD_INSTANTIATE_BLOCKS

}  // namespace tokd
